"""Goal-scoped dispatch context and skill execution results."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class DispatchContext:
    """Mutable business state consulted by precondition predicates.

    ``business_state`` evolves only through postcondition effects (or
    goal-manager mediated writes); ``session_vars`` holds transient
    per-conversation values that never participate in replay.
    """

    goal_id: str
    business_state: dict[str, Any] = field(default_factory=dict)
    session_vars: dict[str, Any] = field(default_factory=dict)

    def clone(self) -> "DispatchContext":
        return DispatchContext(
            goal_id=self.goal_id,
            business_state=copy.deepcopy(self.business_state),
            session_vars=copy.deepcopy(self.session_vars),
        )


@dataclass(frozen=True)
class SkillResult:
    """Outcome of one executor call; postconditions apply only on ``ok``."""

    status: str  # "ok" | "failed"
    payload: Any = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def payload_digest(payload: Any) -> str:
    """Stable content hash of a canonicalized skill-result payload."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()

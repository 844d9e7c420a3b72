"""Exception hierarchy shared across the package.

Validation problems are reported through ValidationReport entries, not
exceptions; these classes cover faults that callers cannot reasonably
continue past (bad lookups, broken configs, corrupted logs).
"""

from __future__ import annotations


class StagegateError(Exception):
    """Base class for all package faults."""


class ConfigError(StagegateError):
    """A config file or declarative definition is unusable."""


class LookupFault(StagegateError):
    """A stage, intent, or goal id does not exist where one was required."""

    def __init__(self, kind: str, value: str):
        self.kind = kind
        self.value = value
        super().__init__(f"unknown {kind}: {value!r}")


class ConflictFault(StagegateError):
    """A write collided with existing state (duplicate id, stale stage)."""


class BindingFault(StagegateError):
    """A predicate reference does not resolve in the catalog."""

    def __init__(self, predicate: str):
        self.predicate = predicate
        super().__init__(f"unresolvable predicate: {predicate!r}")


class IntegrityFault(StagegateError):
    """An audit log violated its append-only/gapless guarantees."""

    def __init__(self, message: str, seq: int | None = None):
        self.seq = seq
        super().__init__(message)


class GenerationFault(StagegateError):
    """An adversarial variant could not be generated from the scenario."""

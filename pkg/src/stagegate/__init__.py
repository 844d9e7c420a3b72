"""Stage-constrained workflow dispatch with auditable execution control.

The package enforces two gates in front of every skill execution: the
intent must be legal at the workflow's current stage, and the skill's
preconditions must hold in the goal's business context.  Every dispatch
appends one immutable audit event, and any goal's state can be rebuilt by
replaying its event log.
"""

from .automaton import (
    IntentId,
    StageId,
    ValidationEntry,
    ValidationReport,
    WorkflowAutomaton,
    automaton_from_dict,
    automaton_to_dict,
    validate_definition,
)
from .context import DispatchContext, SkillResult, payload_digest
from .dispatcher import (
    FULL,
    DispatchDeps,
    DispatchResult,
    DispatchToggles,
    MockExecutor,
    dispatch,
    dispatch_with_config,
)
from .errors import (
    BindingFault,
    ConfigError,
    ConflictFault,
    GenerationFault,
    IntegrityFault,
    LookupFault,
    StagegateError,
)
from .evaluation import (
    ABLATION_CONFIGS,
    BlockingMetrics,
    ConfigComparison,
    Confusion,
    EvalReport,
    blocking_metrics,
    compare_configs,
    compute_blocking,
    compute_report,
    grade_traces,
)
from .memory import (
    CandidateRecord,
    FileEventStore,
    GoalManager,
    GoalRecord,
    InMemoryEventStore,
    PositionRecord,
    ProcessEvent,
    ReplayResult,
    load_trace,
    replay_events,
)
from .registry import (
    Effect,
    PreconditionReport,
    PredicateCatalog,
    PredicateRef,
    RiskLevel,
    SkillRegistry,
    SkillSpec,
    apply_postconditions,
    build_registry,
    skill_from_dict,
)
from .router import (
    UNKNOWN,
    IntentPattern,
    MatchExpr,
    RoutingDecision,
    TokenOverlapFallback,
    identify,
    normalize,
    table_from_list,
    validate_table,
)
from .runner import RunResult, StepRecord, run_suite
from .scenarios import (
    DomainBundle,
    LabeledMessage,
    LatentViolation,
    Scenario,
    bundle_from_dicts,
    convert_dialogues,
    detect_latent,
    inject_illegal,
    label_scenario,
    load_domain,
    load_suite,
    save_suite,
    simulate_scenario,
)

__version__ = "0.1.0"

"""Governance kernel for agent-generated operational artifacts.

Capabilities live under an explicit lifecycle, harness changes go through
six-field change contracts with staged validation and rollback, selection
is a weighted multi-objective score over feasible candidates, and every
state change is an event on a hash-chained audit log that replays to the
byte.
"""

from .canonical import canonical_text, derive_id, digest_hex, to_jsonable
from .errors import (
    DomainError,
    IntegrityError,
    KernelError,
    UsageError,
)
from .events import (
    GENESIS_HASH,
    EventKind,
    TraceEvent,
    VerificationReport,
    verify_chain,
)
from .graph import (
    CompositionProposal,
    GraphEdge,
    GraphNode,
    LineageView,
    NodeKind,
    RelationKind,
    RuntimeGraph,
)
from .kernel import (
    AuditReport,
    CycleReport,
    GovernanceKernel,
    Workload,
    WorkloadArtifact,
    WorkloadConfig,
    WorkloadEdge,
    WorkloadEvaluation,
    WorkloadNode,
    WorkloadProposal,
    WorkloadReview,
    WorkloadStage,
    WorkloadTransition,
    apply_event,
    replay_events,
    workload_from_jsonable,
)
from .lifecycle import (
    LEGAL_TRANSITIONS,
    EvidenceRequirement,
    LifecycleRecord,
    LifecycleState,
)
from .mutation import (
    ChangeContract,
    ExpectedImprovement,
    MutationComponent,
    MutationDelta,
    MutationRecord,
    MutationStatus,
    RollbackCondition,
    RollbackTrigger,
    TriggerDirection,
    ValidationResult,
)
from .policy import DEFAULT_POLICY, GovernancePolicy, load_policy, save_policy
from .records import (
    CapabilityKind,
    CapabilityRecord,
    CapabilityReview,
    GeneratedSkillSpec,
    HarnessConfig,
    HarnessState,
    QualityComponents,
    ReviewDecision,
    SkillParam,
)
from .registry import KernelState
from .selection import (
    CandidateMeasurement,
    ConstraintFlag,
    ObjectiveWeights,
    SelectionResult,
    rank,
    score,
    select,
)
from .simulation import (
    GeneratorModel,
    QualityModel,
    RegressionInjection,
    SimulationConfig,
    SimulationMetrics,
    compare_policies,
    run_scenario,
    scenario_normalizer,
)
from .store import EventStore, Snapshot

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "CandidateMeasurement",
    "CapabilityKind",
    "CapabilityRecord",
    "CapabilityReview",
    "ChangeContract",
    "CompositionProposal",
    "ConstraintFlag",
    "CycleReport",
    "DEFAULT_POLICY",
    "DomainError",
    "EventKind",
    "EventStore",
    "EvidenceRequirement",
    "ExpectedImprovement",
    "GENESIS_HASH",
    "GeneratedSkillSpec",
    "GeneratorModel",
    "GovernanceKernel",
    "GovernancePolicy",
    "GraphEdge",
    "GraphNode",
    "HarnessConfig",
    "HarnessState",
    "IntegrityError",
    "KernelError",
    "KernelState",
    "LEGAL_TRANSITIONS",
    "LifecycleRecord",
    "LifecycleState",
    "LineageView",
    "MutationComponent",
    "MutationDelta",
    "MutationRecord",
    "MutationStatus",
    "NodeKind",
    "ObjectiveWeights",
    "QualityComponents",
    "QualityModel",
    "RegressionInjection",
    "RelationKind",
    "ReviewDecision",
    "RollbackCondition",
    "RollbackTrigger",
    "RuntimeGraph",
    "SelectionResult",
    "SimulationConfig",
    "SimulationMetrics",
    "SkillParam",
    "Snapshot",
    "TraceEvent",
    "TriggerDirection",
    "UsageError",
    "ValidationResult",
    "VerificationReport",
    "Workload",
    "WorkloadArtifact",
    "WorkloadConfig",
    "WorkloadEdge",
    "WorkloadEvaluation",
    "WorkloadNode",
    "WorkloadProposal",
    "WorkloadReview",
    "WorkloadStage",
    "WorkloadTransition",
    "apply_event",
    "canonical_text",
    "compare_policies",
    "derive_id",
    "digest_hex",
    "load_policy",
    "rank",
    "replay_events",
    "run_scenario",
    "save_policy",
    "scenario_normalizer",
    "score",
    "select",
    "to_jsonable",
    "verify_chain",
    "workload_from_jsonable",
]

"""Domain records held in the kernel registries.

All records are frozen values: updates replace the registry entry with a
new record, and every replacement is caused by exactly one trace event.
Each type has a ``*_from_jsonable`` inverse so snapshots can be loaded
back from their canonical form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .lifecycle import LifecycleState


class CapabilityKind(str, enum.Enum):
    PROMPT = "prompt"
    EVALUATOR = "evaluator"
    WORKFLOW = "workflow"
    ROUTING_POLICY = "routing_policy"
    SKILL = "skill"
    TEST = "test"
    TOOL = "tool"
    BENCHMARK = "benchmark"


class ReviewDecision(str, enum.Enum):
    APPROVE = "approve"
    REJECT = "reject"
    DEFER = "defer"


def _clamp01(value: float) -> float:
    return 0.0 if value < 0.0 else (1.0 if value > 1.0 else float(value))


@dataclass(frozen=True)
class QualityComponents:
    """Evaluator-supplied quality measurements, each clamped to [0, 1].

    ``risk`` enters quality negatively and is the component promotion
    gates bound.
    """

    performance: float = 0.0
    robustness: float = 0.0
    stability: float = 0.0
    reusability: float = 0.0
    risk: float = 0.0

    def __post_init__(self) -> None:
        for name in ("performance", "robustness", "stability", "reusability", "risk"):
            object.__setattr__(self, name, _clamp01(getattr(self, name)))


@dataclass(frozen=True)
class CapabilityRecord:
    """A governed operational artifact (prompt, skill, evaluator, ...)."""

    capability_id: str
    kind: CapabilityKind
    content: str
    content_hash: str
    lifecycle: LifecycleState = LifecycleState.EXPERIMENTAL
    evidence: tuple[str, ...] = ()
    created_by: str = ""
    quality: QualityComponents = field(default_factory=QualityComponents)

    def with_lifecycle(self, state: LifecycleState,
                       evidence: tuple[str, ...]) -> "CapabilityRecord":
        return replace(self, lifecycle=state, evidence=evidence)

    def with_evaluation(self, quality: QualityComponents,
                        evidence_id: str) -> "CapabilityRecord":
        return replace(self, quality=quality,
                       evidence=self.evidence + (evidence_id,))


@dataclass(frozen=True)
class HarnessConfig:
    """One complete harness tuple; selection and mutation operate on these.

    ``artifacts`` references capability ids and is validated at
    registration; ``tools`` and ``evaluators`` are opaque references.
    ``graph_version`` pins the runtime-graph version the config was built
    against.
    """

    config_id: str
    prompt_policy: str
    tools: tuple[str, ...]
    evaluators: tuple[str, ...]
    memory: str
    governance: str
    artifacts: tuple[str, ...]
    graph_version: int

    COMPONENT_FIELDS = ("prompt_policy", "tools", "evaluators", "memory",
                        "governance", "artifacts", "graph_version")

    def components(self) -> dict:
        return {
            "prompt_policy": self.prompt_policy,
            "tools": list(self.tools),
            "evaluators": list(self.evaluators),
            "memory": self.memory,
            "governance": self.governance,
            "artifacts": list(self.artifacts),
            "graph_version": self.graph_version,
        }


@dataclass(frozen=True)
class SkillParam:
    name: str
    type: str


@dataclass(frozen=True)
class GeneratedSkillSpec:
    """Declared interface of a skill-kind capability."""

    skill_id: str
    capability_id: str
    inputs: tuple[SkillParam, ...]
    outputs: tuple[SkillParam, ...]
    declared_failure_modes: tuple[str, ...]


@dataclass(frozen=True)
class CapabilityReview:
    """A recorded review decision over a capability, mutation, or config."""

    review_id: str
    subject_id: str
    reviewer: str
    evidence_refs: tuple[str, ...]
    risk_assessment: float
    decision: ReviewDecision
    rationale: str


@dataclass(frozen=True)
class HarnessState:
    """Point-in-time view of the governing tuple and log position."""

    active_config: str | None
    graph_version: int
    log_head: str
    cycle_count: int


# -- canonical-form inverses -------------------------------------------------

def quality_from_jsonable(data: dict) -> QualityComponents:
    return QualityComponents(
        performance=data["performance"],
        robustness=data["robustness"],
        stability=data["stability"],
        reusability=data["reusability"],
        risk=data["risk"],
    )


def capability_from_jsonable(data: dict) -> CapabilityRecord:
    return CapabilityRecord(
        capability_id=data["capability_id"],
        kind=CapabilityKind(data["kind"]),
        content=data["content"],
        content_hash=data["content_hash"],
        lifecycle=LifecycleState(data["lifecycle"]),
        evidence=tuple(data["evidence"]),
        created_by=data["created_by"],
        quality=quality_from_jsonable(data["quality"]),
    )


def config_from_jsonable(data: dict) -> HarnessConfig:
    return HarnessConfig(
        config_id=data["config_id"],
        prompt_policy=data["prompt_policy"],
        tools=tuple(data["tools"]),
        evaluators=tuple(data["evaluators"]),
        memory=data["memory"],
        governance=data["governance"],
        artifacts=tuple(data["artifacts"]),
        graph_version=data["graph_version"],
    )


def skill_spec_from_jsonable(data: dict) -> GeneratedSkillSpec:
    return GeneratedSkillSpec(
        skill_id=data["skill_id"],
        capability_id=data["capability_id"],
        inputs=tuple(SkillParam(**p) for p in data["inputs"]),
        outputs=tuple(SkillParam(**p) for p in data["outputs"]),
        declared_failure_modes=tuple(data["declared_failure_modes"]),
    )


def review_from_jsonable(data: dict) -> CapabilityReview:
    return CapabilityReview(
        review_id=data["review_id"],
        subject_id=data["subject_id"],
        reviewer=data["reviewer"],
        evidence_refs=tuple(data["evidence_refs"]),
        risk_assessment=data["risk_assessment"],
        decision=ReviewDecision(data["decision"]),
        rationale=data["rationale"],
    )

"""Bounded harness mutations under explicit change contracts.

A mutation names one harness component, declares what failure it targets,
what improvement justifies it, which invariants it preserves, which
evaluation could falsify it, and when it must be rolled back.  Its result
config differs from the base config in exactly one tuple slot.  Status
walks ``proposed -> staged -> applied -> rolled_back`` with rejection
reachable from proposed and staged; rejections are recorded, never
silently dropped.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .errors import ComponentMismatch, ConditionNotMet, IncompleteContract
from .records import HarnessConfig


class MutationComponent(str, enum.Enum):
    PROMPTS = "prompts"
    EVALUATORS = "evaluators"
    WORKFLOWS = "workflows"
    ROUTING = "routing"
    RETRIEVAL = "retrieval"
    MEMORY_RULES = "memory_rules"
    SKILLS = "skills"
    BENCHMARKS = "benchmarks"
    GRAPH_RELATIONS = "graph_relations"


# Which tuple slot each contract component rewrites.  Governance refs are
# never mutated through contracts: a mutation must not rewrite its own
# gate.  graph_relations mutations insert edges and land in the
# graph-version slot.
COMPONENT_FIELD: dict[MutationComponent, str] = {
    MutationComponent.PROMPTS: "prompt_policy",
    MutationComponent.EVALUATORS: "evaluators",
    MutationComponent.BENCHMARKS: "evaluators",
    MutationComponent.WORKFLOWS: "artifacts",
    MutationComponent.SKILLS: "artifacts",
    MutationComponent.ROUTING: "tools",
    MutationComponent.RETRIEVAL: "memory",
    MutationComponent.MEMORY_RULES: "memory",
    MutationComponent.GRAPH_RELATIONS: "graph_version",
}

LIST_FIELDS = frozenset({"tools", "evaluators", "artifacts"})


class MutationStatus(str, enum.Enum):
    PROPOSED = "proposed"
    STAGED = "staged"
    APPLIED = "applied"
    REJECTED = "rejected"
    ROLLED_BACK = "rolled_back"


LEGAL_STATUS_MOVES: dict[MutationStatus, frozenset[MutationStatus]] = {
    MutationStatus.PROPOSED: frozenset(
        {MutationStatus.STAGED, MutationStatus.REJECTED}),
    MutationStatus.STAGED: frozenset(
        {MutationStatus.APPLIED, MutationStatus.REJECTED}),
    MutationStatus.APPLIED: frozenset({MutationStatus.ROLLED_BACK}),
    MutationStatus.REJECTED: frozenset(),
    MutationStatus.ROLLED_BACK: frozenset(),
}


class TriggerDirection(str, enum.Enum):
    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True)
class ExpectedImprovement:
    metric: str
    min_delta: float


@dataclass(frozen=True)
class RollbackCondition:
    """Roll back when ``metric`` crosses ``threshold`` in ``direction``."""

    metric: str
    threshold: float
    direction: TriggerDirection

    def matches(self, metric: str, observed: float) -> bool:
        if metric != self.metric:
            return False
        if self.direction is TriggerDirection.ABOVE:
            return observed > self.threshold
        return observed < self.threshold


@dataclass(frozen=True)
class ChangeContract:
    """The six declarations every mutation must make."""

    component: MutationComponent
    targeted_failure_mode: str
    expected_improvement: ExpectedImprovement
    invariants_preserved: tuple[str, ...]
    falsifying_evaluation: str
    rollback_conditions: tuple[RollbackCondition, ...]

    def to_payload(self) -> dict:
        return {
            "component": self.component.value,
            "targeted_failure_mode": self.targeted_failure_mode,
            "expected_improvement": {
                "metric": self.expected_improvement.metric,
                "min_delta": self.expected_improvement.min_delta,
            },
            "invariants_preserved": list(self.invariants_preserved),
            "falsifying_evaluation": self.falsifying_evaluation,
            "rollback_conditions": [
                {
                    "metric": c.metric,
                    "threshold": c.threshold,
                    "direction": c.direction.value,
                }
                for c in self.rollback_conditions
            ],
        }


def contract_from_payload(data: dict) -> ChangeContract:
    return ChangeContract(
        component=MutationComponent(data["component"]),
        targeted_failure_mode=data["targeted_failure_mode"],
        expected_improvement=ExpectedImprovement(
            metric=data["expected_improvement"]["metric"],
            min_delta=data["expected_improvement"]["min_delta"],
        ),
        invariants_preserved=tuple(data["invariants_preserved"]),
        falsifying_evaluation=data["falsifying_evaluation"],
        rollback_conditions=tuple(
            RollbackCondition(
                metric=c["metric"],
                threshold=c["threshold"],
                direction=TriggerDirection(c["direction"]),
            )
            for c in data["rollback_conditions"]
        ),
    )


def check_contract_complete(contract: ChangeContract) -> None:
    """Every contract field must be present and non-empty; name the gap."""
    if not contract.targeted_failure_mode:
        raise IncompleteContract("targeted_failure_mode is empty")
    improvement = contract.expected_improvement
    if not improvement.metric:
        raise IncompleteContract("expected_improvement.metric is empty")
    if not contract.invariants_preserved:
        raise IncompleteContract("invariants_preserved is empty")
    if not contract.falsifying_evaluation:
        raise IncompleteContract("falsifying_evaluation is empty")
    if not contract.rollback_conditions:
        raise IncompleteContract("rollback_conditions is empty")
    for condition in contract.rollback_conditions:
        if not condition.metric:
            raise IncompleteContract("rollback_conditions.metric is empty")


@dataclass(frozen=True)
class MutationDelta:
    """Replacement value for exactly one tuple slot.

    ``value`` is the new component value: a string for prompt/memory
    descriptors, a list of references for tools/evaluators/artifacts, or
    a list of edge dicts for graph_relations mutations.
    """

    component: MutationComponent
    value: object

    def to_payload(self) -> dict:
        return {"component": self.component.value, "value": self.value}


def delta_from_payload(data: dict) -> MutationDelta:
    return MutationDelta(component=MutationComponent(data["component"]),
                         value=data["value"])


def check_delta(contract: ChangeContract, delta: MutationDelta) -> None:
    if delta.component is not contract.component:
        raise ComponentMismatch(
            f"delta targets {delta.component.value}, "
            f"contract names {contract.component.value}")
    target_field = COMPONENT_FIELD[contract.component]
    value = delta.value
    if contract.component is MutationComponent.GRAPH_RELATIONS:
        if not isinstance(value, list) or not value:
            raise ComponentMismatch(
                "graph_relations delta must be a non-empty edge list")
        for item in value:
            if not isinstance(item, dict) \
                    or {"src", "relation", "dst"} - set(item):
                raise ComponentMismatch(
                    "graph_relations edges need src, relation, dst")
    elif target_field in LIST_FIELDS:
        if not isinstance(value, list) \
                or not all(isinstance(v, str) for v in value):
            raise ComponentMismatch(
                f"{contract.component.value} delta must be a list of refs")
    else:
        if not isinstance(value, str) or not value:
            raise ComponentMismatch(
                f"{contract.component.value} delta must be a non-empty string")


def mutated_components(base: HarnessConfig, result: HarnessConfig) -> list[str]:
    """Names of tuple slots whose canonical values differ."""
    differing = []
    for name in HarnessConfig.COMPONENT_FIELDS:
        if getattr(base, name) != getattr(result, name):
            differing.append(name)
    return differing


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of running the contract's falsifying evaluation."""

    evaluator_id: str
    metric: str
    delta: float

    def to_payload(self) -> dict:
        return {"evaluator_id": self.evaluator_id, "metric": self.metric,
                "delta": self.delta}


def validation_from_payload(data: dict) -> ValidationResult:
    return ValidationResult(evaluator_id=data["evaluator_id"],
                            metric=data["metric"], delta=data["delta"])


@dataclass(frozen=True)
class RollbackTrigger:
    """What fired a rollback: a crossed condition or an operator order."""

    metric: str | None
    observed: float | None
    operator_order: bool = False

    def to_payload(self) -> dict:
        return {"metric": self.metric, "observed": self.observed,
                "operator_order": self.operator_order}


def find_matching_condition(contract: ChangeContract,
                            trigger: RollbackTrigger) -> RollbackCondition | None:
    """The first declared condition the trigger satisfies, or None."""
    if trigger.operator_order:
        return None
    if trigger.metric is None or trigger.observed is None:
        raise ConditionNotMet("trigger carries neither metric nor order")
    for condition in contract.rollback_conditions:
        if condition.matches(trigger.metric, trigger.observed):
            return condition
    return None


@dataclass(frozen=True)
class MutationRecord:
    """One governed harness mutation and its full audit trail."""

    mutation_id: str
    base_config: str
    contract: ChangeContract
    delta: MutationDelta
    status: MutationStatus = MutationStatus.PROPOSED
    result_config: str | None = None
    evidence: tuple[str, ...] = field(default_factory=tuple)
    rejection_reason: str | None = None

    def with_status(self, status: MutationStatus, **changes) -> "MutationRecord":
        return replace(self, status=status, **changes)


def mutation_from_jsonable(data: dict) -> MutationRecord:
    return MutationRecord(
        mutation_id=data["mutation_id"],
        base_config=data["base_config"],
        contract=contract_from_payload(data["contract"]),
        delta=delta_from_payload(data["delta"]),
        status=MutationStatus(data["status"]),
        result_config=data["result_config"],
        evidence=tuple(data["evidence"]),
        rejection_reason=data["rejection_reason"],
    )

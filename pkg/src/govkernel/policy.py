"""Governance policy: the tunable gates of the whole kernel.

A policy bundles the selection weights, the quality weights, the per-edge
evidence requirements, and the review thresholds.  Policies live in TOML
files (``--policy`` on the CLI, ``store/policy`` once active).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .errors import PolicyViolation, UsageError
from .graph import QualityWeights
from .lifecycle import DEFAULT_EVIDENCE_TABLE, EvidenceRequirement, LifecycleState
from .selection import ObjectiveWeights

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

EdgeKey = tuple[LifecycleState, LifecycleState]


@dataclass(frozen=True)
class GovernancePolicy:
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    quality_weights: QualityWeights = field(default_factory=QualityWeights)
    evidence_table: dict[EdgeKey, EvidenceRequirement] = field(
        default_factory=lambda: dict(DEFAULT_EVIDENCE_TABLE))
    risk_gate: float = 0.6
    cost_budget: float = 1.0
    auto_approve_below_risk: float = 0.3
    reviewer_quorum: int = 2

    def __post_init__(self) -> None:
        if not 0.0 <= self.auto_approve_below_risk <= 1.0:
            raise PolicyViolation("auto_approve_below_risk must be in [0, 1]")
        if not 0.0 <= self.risk_gate <= 1.0:
            raise PolicyViolation("risk_gate must be in [0, 1]")
        if self.auto_approve_below_risk > self.risk_gate:
            raise PolicyViolation(
                "auto_approve_below_risk must not exceed risk_gate")
        if self.reviewer_quorum < 1:
            raise PolicyViolation("reviewer_quorum must be positive")


DEFAULT_POLICY = GovernancePolicy()


def _edge_key(text: str) -> EdgeKey:
    try:
        left, right = text.split("->", 1)
        return LifecycleState(left.strip()), LifecycleState(right.strip())
    except ValueError:
        raise UsageError(f"bad evidence edge key {text!r}") from None


def _edge_text(edge: EdgeKey) -> str:
    return f"{edge[0].value}->{edge[1].value}"


def policy_from_mapping(data: dict) -> GovernancePolicy:
    weights = ObjectiveWeights(**data.get("weights", {}))
    quality_weights = QualityWeights(**data.get("quality_weights", {}))
    table = dict(DEFAULT_EVIDENCE_TABLE)
    for key, fields in data.get("evidence", {}).items():
        table[_edge_key(key)] = EvidenceRequirement(
            min_evidence_events=fields.get("min_evidence_events", 0),
            min_distinct_evaluators=fields.get("min_distinct_evaluators", 0),
            max_risk=fields.get("max_risk", 1.0),
            requires_approved_review=fields.get("requires_approved_review", False),
        )
    return GovernancePolicy(
        weights=weights,
        quality_weights=quality_weights,
        evidence_table=table,
        risk_gate=data.get("risk_gate", DEFAULT_POLICY.risk_gate),
        cost_budget=data.get("cost_budget", DEFAULT_POLICY.cost_budget),
        auto_approve_below_risk=data.get(
            "auto_approve_below_risk", DEFAULT_POLICY.auto_approve_below_risk),
        reviewer_quorum=data.get("reviewer_quorum", DEFAULT_POLICY.reviewer_quorum),
    )


def load_policy_text(text: str) -> GovernancePolicy:
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise UsageError(f"policy file is not valid TOML: {exc}") from None
    return policy_from_mapping(data)


def load_policy(path: str) -> GovernancePolicy:
    with open(path, "rb") as handle:
        raw = handle.read()
    return load_policy_text(raw.decode("utf-8"))


def _toml_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def policy_to_toml(policy: GovernancePolicy) -> str:
    """Fixed-schema TOML emission, key order stable for golden diffs."""
    lines = [
        f"risk_gate = {_toml_value(policy.risk_gate)}",
        f"auto_approve_below_risk = {_toml_value(policy.auto_approve_below_risk)}",
        f"cost_budget = {_toml_value(policy.cost_budget)}",
        f"reviewer_quorum = {_toml_value(policy.reviewer_quorum)}",
        "",
        "[weights]",
    ]
    for name in ("alpha", "beta", "gamma", "delta", "lam"):
        lines.append(f"{name} = {_toml_value(getattr(policy.weights, name))}")
    lines.append("")
    lines.append("[quality_weights]")
    for name in ("performance", "robustness", "stability", "reusability", "risk"):
        lines.append(
            f"{name} = {_toml_value(getattr(policy.quality_weights, name))}")
    for edge in sorted(policy.evidence_table, key=_edge_text):
        requirement = policy.evidence_table[edge]
        lines.append("")
        lines.append(f'[evidence."{_edge_text(edge)}"]')
        lines.append(
            f"min_evidence_events = {_toml_value(requirement.min_evidence_events)}")
        lines.append("min_distinct_evaluators = "
                     f"{_toml_value(requirement.min_distinct_evaluators)}")
        lines.append(f"max_risk = {_toml_value(requirement.max_risk)}")
        lines.append("requires_approved_review = "
                     f"{_toml_value(requirement.requires_approved_review)}")
    return "\n".join(lines) + "\n"


def save_policy(policy: GovernancePolicy, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(policy_to_toml(policy))

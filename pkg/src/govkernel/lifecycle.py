"""Lifecycle states and promotion gates for governed capabilities.

A capability climbs ``experimental -> validated -> trusted -> canonical``
one step at a time, each step gated by an evidence requirement, and can
drop to ``deprecated`` from any live state with no threshold at all.
``deprecated`` is terminal: records never resurrect, they are re-proposed
as new content.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import IllegalTransition


class LifecycleState(str, enum.Enum):
    EXPERIMENTAL = "experimental"
    VALIDATED = "validated"
    TRUSTED = "trusted"
    CANONICAL = "canonical"
    DEPRECATED = "deprecated"


# Legal edges of the state machine.  Promotions advance exactly one rung;
# deprecation is reachable from every live state; deprecated has no exits.
LEGAL_TRANSITIONS: dict[LifecycleState, frozenset[LifecycleState]] = {
    LifecycleState.EXPERIMENTAL: frozenset(
        {LifecycleState.VALIDATED, LifecycleState.DEPRECATED}),
    LifecycleState.VALIDATED: frozenset(
        {LifecycleState.TRUSTED, LifecycleState.DEPRECATED}),
    LifecycleState.TRUSTED: frozenset(
        {LifecycleState.CANONICAL, LifecycleState.DEPRECATED}),
    LifecycleState.CANONICAL: frozenset({LifecycleState.DEPRECATED}),
    LifecycleState.DEPRECATED: frozenset(),
}

PROMOTION_ORDER = (
    LifecycleState.EXPERIMENTAL,
    LifecycleState.VALIDATED,
    LifecycleState.TRUSTED,
    LifecycleState.CANONICAL,
)


def is_legal(current: LifecycleState, target: LifecycleState) -> bool:
    return target in LEGAL_TRANSITIONS[current]


def next_promotion(current: LifecycleState) -> LifecycleState | None:
    """The single rung above ``current``, or None at the top / deprecated."""
    try:
        position = PROMOTION_ORDER.index(current)
    except ValueError:
        return None
    if position + 1 >= len(PROMOTION_ORDER):
        return None
    return PROMOTION_ORDER[position + 1]


@dataclass(frozen=True)
class EvidenceRequirement:
    """Thresholds a promotion edge demands before it may fire.

    ``max_risk`` bounds the capability's current risk component.  The
    deprecation escape hatch carries an all-zero requirement that is never
    consulted.
    """

    min_evidence_events: int = 0
    min_distinct_evaluators: int = 0
    max_risk: float = 1.0
    requires_approved_review: bool = False


DEPRECATION_REQUIREMENT = EvidenceRequirement(
    min_evidence_events=0,
    min_distinct_evaluators=0,
    max_risk=0.0,
    requires_approved_review=False,
)

DEFAULT_EVIDENCE_TABLE: dict[tuple[LifecycleState, LifecycleState], EvidenceRequirement] = {
    (LifecycleState.EXPERIMENTAL, LifecycleState.VALIDATED): EvidenceRequirement(
        min_evidence_events=1,
        min_distinct_evaluators=0,
        max_risk=1.0,
        requires_approved_review=False,
    ),
    (LifecycleState.VALIDATED, LifecycleState.TRUSTED): EvidenceRequirement(
        min_evidence_events=3,
        min_distinct_evaluators=2,
        max_risk=0.5,
        requires_approved_review=True,
    ),
    (LifecycleState.TRUSTED, LifecycleState.CANONICAL): EvidenceRequirement(
        min_evidence_events=5,
        min_distinct_evaluators=0,
        max_risk=0.25,
        requires_approved_review=True,
    ),
}


def required_evidence(
    edge: tuple[LifecycleState, LifecycleState],
    table: dict[tuple[LifecycleState, LifecycleState], EvidenceRequirement] | None = None,
) -> EvidenceRequirement:
    """The active requirement for a legal edge; IllegalTransition otherwise."""
    current, target = edge
    if not is_legal(current, target):
        raise IllegalTransition(f"{current.value} -> {target.value}")
    if target is LifecycleState.DEPRECATED:
        return DEPRECATION_REQUIREMENT
    active = DEFAULT_EVIDENCE_TABLE if table is None else table
    requirement = active.get(edge)
    if requirement is None:
        requirement = DEFAULT_EVIDENCE_TABLE[edge]
    return requirement


@dataclass(frozen=True)
class LifecycleRecord:
    """One executed transition, kept for the capability's history."""

    capability_id: str
    from_state: LifecycleState
    to_state: LifecycleState
    evidence: tuple[str, ...] = field(default_factory=tuple)
    review: str | None = None
    tick: int = 0
    event_id: str = ""

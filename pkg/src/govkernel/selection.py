"""Multi-objective candidate selection over harness configs.

Scoring is the linear form

    score = alpha*quality + beta*robustness + gamma*validation
            + delta*reuse - lam*cost

over measurements in [0, 1] (cost >= 0, unbounded).  Hard constraint flags
exclude a candidate before any scoring; among survivors the argmax wins,
with exact ties broken toward the lexicographically smallest config id.
Everything here is pure: no registry access, no randomness, no clock.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import DuplicateCandidate, EmptyCandidateSet


class ConstraintFlag(str, enum.Enum):
    COST_EXCEEDED = "cost_exceeded"
    SAFETY_VIOLATION = "safety_violation"
    IRREPRODUCIBLE = "irreproducible"
    GOVERNANCE_VIOLATION = "governance_violation"
    ROBUSTNESS_FLOOR = "robustness_floor"


@dataclass(frozen=True)
class ObjectiveWeights:
    """Non-negative weights of the selection objective."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    lam: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "delta", "lam"):
            value = getattr(self, name)
            if value < 0.0:
                raise ValueError(f"objective weight {name} must be >= 0, got {value}")
            object.__setattr__(self, name, float(value))
        if not any(getattr(self, n) > 0.0
                   for n in ("alpha", "beta", "gamma", "delta", "lam")):
            raise ValueError("at least one objective weight must be > 0")

    def scaled(self, kappa: float) -> "ObjectiveWeights":
        return ObjectiveWeights(alpha=self.alpha * kappa, beta=self.beta * kappa,
                                gamma=self.gamma * kappa, delta=self.delta * kappa,
                                lam=self.lam * kappa)


@dataclass(frozen=True)
class CandidateMeasurement:
    """Measured objectives for one config under the current workload."""

    config_id: str
    quality: float
    robustness: float
    validation: float
    reuse: float
    cost: float
    constraint_flags: frozenset[ConstraintFlag] = frozenset()

    def flagged(self) -> bool:
        return bool(self.constraint_flags)

    def with_flag(self, flag: ConstraintFlag) -> "CandidateMeasurement":
        return CandidateMeasurement(
            config_id=self.config_id, quality=self.quality,
            robustness=self.robustness, validation=self.validation,
            reuse=self.reuse, cost=self.cost,
            constraint_flags=self.constraint_flags | {flag})


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one selection round.

    ``scores`` covers survivors only; flagged candidates appear in
    ``excluded`` with their flags and are never scored.  ``winner`` is
    None when every candidate was excluded.  ``tie_broken`` is true when
    the winning score was shared by more than one survivor.
    """

    winner: str | None
    scores: dict[str, float] = field(default_factory=dict)
    excluded: dict[str, list[str]] = field(default_factory=dict)
    tie_broken: bool = False


def score(measurement: CandidateMeasurement, weights: ObjectiveWeights) -> float:
    """The scoring linear form, evaluated in declaration order."""
    return (weights.alpha * measurement.quality
            + weights.beta * measurement.robustness
            + weights.gamma * measurement.validation
            + weights.delta * measurement.reuse
            - weights.lam * measurement.cost)


def _check_candidates(candidates: list[CandidateMeasurement]) -> None:
    if not candidates:
        raise EmptyCandidateSet("no candidates to select from")
    seen: set[str] = set()
    for measurement in candidates:
        if measurement.config_id in seen:
            raise DuplicateCandidate(measurement.config_id)
        seen.add(measurement.config_id)


def select(candidates: list[CandidateMeasurement],
           weights: ObjectiveWeights) -> SelectionResult:
    """Argmax over unflagged candidates; exact ties go to the smallest id."""
    _check_candidates(candidates)
    excluded = {
        m.config_id: sorted(flag.value for flag in m.constraint_flags)
        for m in candidates if m.flagged()
    }
    survivors = [m for m in candidates if not m.flagged()]
    scores = {m.config_id: score(m, weights) for m in survivors}
    if not survivors:
        return SelectionResult(winner=None, scores={}, excluded=excluded)
    best = max(scores.values())
    top = sorted(cid for cid, value in scores.items() if value == best)
    return SelectionResult(winner=top[0], scores=scores, excluded=excluded,
                           tie_broken=len(top) > 1)


def rank(candidates: list[CandidateMeasurement],
         weights: ObjectiveWeights) -> list[tuple[str, float]]:
    """Survivors ordered by descending score, then ascending config id."""
    _check_candidates(candidates)
    survivors = [m for m in candidates if not m.flagged()]
    scored = [(m.config_id, score(m, weights)) for m in survivors]
    return sorted(scored, key=lambda pair: (-pair[1], pair[0]))

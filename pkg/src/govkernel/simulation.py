"""Deterministic simulated workload driver.

Runs seeded multi-cycle scenarios against a governance kernel: generator
actors emit artifacts, evaluator actors score them, reviewer actors gate
promotions and mutations, and an operations stream reports observed metrics
that can trip rollback conditions.  Every random draw comes from a substream
keyed by (master seed, actor, cycle, entity), so adding actors or entities
never perturbs the draws of the others and identical seeds reproduce
byte-identical audit logs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .canonical import canonical_bytes, canonical_text, to_jsonable
from .errors import KernelError, SeedMismatch, UsageError
from .events import EventKind, TraceEvent
from .graph import NodeKind, RelationKind
from .kernel import (
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
)
from .lifecycle import LifecycleState
from .mutation import (
    ChangeContract,
    ExpectedImprovement,
    MutationComponent,
    MutationDelta,
    MutationStatus,
    RollbackCondition,
    TriggerDirection,
    ValidationResult,
)
from .policy import DEFAULT_POLICY, GovernancePolicy, policy_from_mapping
from .records import (
    CapabilityKind,
    GeneratedSkillSpec,
    HarnessConfig,
    QualityComponents,
    SkillParam,
)
from .selection import CandidateMeasurement
from .store import EventStore

COMPONENT_NAMES = ("performance", "robustness", "stability",
                   "reusability", "risk")
MEASUREMENT_NAMES = ("quality", "robustness", "validation", "reuse", "cost")

LIVE_STATES = frozenset({LifecycleState.EXPERIMENTAL,
                         LifecycleState.VALIDATED,
                         LifecycleState.TRUSTED})
REVIEWABLE_STATES = frozenset({LifecycleState.VALIDATED,
                               LifecycleState.TRUSTED})

MUTATION_ROTATION = (MutationComponent.PROMPTS,
                     MutationComponent.ROUTING,
                     MutationComponent.MEMORY_RULES)


def substream(seed: int, *parts: object) -> random.Random:
    """A PRNG keyed by the master seed plus a structural path.

    Streams are derived by hashing, not by drawing from a shared sequence,
    so the draws for one (actor, cycle, entity) never depend on how many
    other draws happened first.
    """
    digest = hashlib.sha256(canonical_bytes([seed, *parts])).digest()
    return random.Random(int.from_bytes(digest, "big"))


def bounded_draw(rng: random.Random, mean: float, spread: float) -> float:
    """Uniform draw in [mean - spread, mean + spread], clamped to [0, 1]."""
    value = mean + (2.0 * rng.random() - 1.0) * spread
    return min(1.0, max(0.0, value))


def _finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise UsageError(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class GeneratorModel:
    """How many artifacts the generator actors emit per cycle.

    ``rates`` maps capability kind names to expected emissions per
    generator per cycle; fractional parts emit probabilistically.
    """

    count: int = 2
    rates: dict[str, float] = field(
        default_factory=lambda: {"skill": 0.6, "test": 0.3, "workflow": 0.2})

    def __post_init__(self) -> None:
        if self.count < 0:
            raise UsageError("generator count must be >= 0")
        for kind, rate in self.rates.items():
            CapabilityKind(kind)
            if _finite(f"rate[{kind}]", rate) < 0:
                raise UsageError(f"rate[{kind}] must be >= 0")


@dataclass(frozen=True)
class QualityModel:
    """Means and spreads for every stochastic draw in a scenario."""

    component_mean: dict[str, float] = field(
        default_factory=lambda: {"performance": 0.78, "robustness": 0.74,
                                 "stability": 0.8, "reusability": 0.6,
                                 "risk": 0.15})
    component_spread: float = 0.08
    kind_mean: dict[str, dict[str, float]] = field(default_factory=dict)
    measurement_mean: dict[str, float] = field(
        default_factory=lambda: {"quality": 0.75, "robustness": 0.7,
                                 "validation": 0.65, "reuse": 0.5,
                                 "cost": 0.4})
    measurement_spread: float = 0.1
    error_rate_mean: float = 0.05
    improvement_mean: float = 0.1
    improvement_spread: float = 0.08

    def __post_init__(self) -> None:
        for name in COMPONENT_NAMES:
            _finite(f"component_mean[{name}]", self.component_mean[name])
        for name in MEASUREMENT_NAMES:
            _finite(f"measurement_mean[{name}]", self.measurement_mean[name])
        for kind, means in self.kind_mean.items():
            CapabilityKind(kind)
            for name, value in means.items():
                if name not in COMPONENT_NAMES:
                    raise UsageError(f"unknown quality component {name!r}")
                _finite(f"kind_mean[{kind}][{name}]", value)
        for name, value in (("component_spread", self.component_spread),
                            ("measurement_spread", self.measurement_spread),
                            ("improvement_spread", self.improvement_spread)):
            if _finite(name, value) < 0:
                raise UsageError(f"{name} must be >= 0")
        _finite("error_rate_mean", self.error_rate_mean)
        _finite("improvement_mean", self.improvement_mean)

    def mean_for(self, kind: CapabilityKind, component: str) -> float:
        override = self.kind_mean.get(kind.value, {})
        return override.get(component, self.component_mean[component])


@dataclass(frozen=True)
class RegressionInjection:
    """A step change applied to one metric from ``cycle_index`` onward.

    ``cycle_index`` is zero-based into the run's cycle loop.  The magnitude
    is added to the metric's mean; use a negative value to depress a
    quality component.
    """

    cycle_index: int
    metric: str
    magnitude: float

    def __post_init__(self) -> None:
        if self.cycle_index < 0:
            raise UsageError("injection cycle_index must be >= 0")
        _finite("injection magnitude", self.magnitude)


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    cycles: int
    generators: GeneratorModel = field(default_factory=GeneratorModel)
    quality_model: QualityModel = field(default_factory=QualityModel)
    drift: dict[str, float] = field(default_factory=dict)
    regression_injection: tuple[RegressionInjection, ...] = ()
    policy: GovernancePolicy = field(default_factory=lambda: DEFAULT_POLICY)
    evaluator_count: int = 2
    reviewer_count: int = 2
    mutation_rate: float = 0.15
    deprecation_floor: float = 0.2
    rollback_threshold: float = 0.25

    def __post_init__(self) -> None:
        if self.cycles < 0:
            raise UsageError("cycles must be >= 0")
        if self.evaluator_count < 1:
            raise UsageError("evaluator_count must be >= 1")
        if self.reviewer_count < 1:
            raise UsageError("reviewer_count must be >= 1")
        if not 0.0 <= _finite("mutation_rate", self.mutation_rate) <= 1.0:
            raise UsageError("mutation_rate must be within [0, 1]")
        _finite("deprecation_floor", self.deprecation_floor)
        _finite("rollback_threshold", self.rollback_threshold)
        for name, rate in self.drift.items():
            _finite(f"drift[{name}]", rate)
        for injection in self.regression_injection:
            if injection.cycle_index >= self.cycles:
                raise UsageError(
                    f"injection at cycle {injection.cycle_index} is outside "
                    f"the {self.cycles}-cycle run")

    def workload_fingerprint(self) -> dict:
        """Everything that shapes the generated workload except the policy."""
        return {
            "seed": self.seed,
            "cycles": self.cycles,
            "generators": to_jsonable(self.generators),
            "quality_model": to_jsonable(self.quality_model),
            "drift": dict(sorted(self.drift.items())),
            "regression_injection": to_jsonable(self.regression_injection),
            "evaluator_count": self.evaluator_count,
            "reviewer_count": self.reviewer_count,
            "mutation_rate": self.mutation_rate,
            "deprecation_floor": self.deprecation_floor,
            "rollback_threshold": self.rollback_threshold,
        }


@dataclass(frozen=True)
class CycleMetrics:
    cycle_index: int
    registrations: int
    evaluations: int
    reviews: int
    proposed: int
    staged: int
    applied: int
    rejected: int
    rollbacks: int
    deprecations: int
    promotions: dict[str, int]
    winner: str | None


COUNT_FIELDS = ("registrations", "evaluations", "reviews", "proposed",
                "staged", "applied", "rejected", "rollbacks", "deprecations")


@dataclass
class SimulationMetrics:
    cycles: list[CycleMetrics] = field(default_factory=list)
    final_census: dict[str, int] = field(default_factory=dict)
    regression_detection_lag: list[dict] = field(default_factory=list)
    totals: dict[str, int] = field(default_factory=dict)
    scenario: dict | None = None

    def to_jsonable(self) -> dict:
        data = {
            "cycles": [to_jsonable(row) for row in self.cycles],
            "final_census": dict(sorted(self.final_census.items())),
            "regression_detection_lag": self.regression_detection_lag,
            "totals": dict(sorted(self.totals.items())),
        }
        if self.scenario is not None:
            data["scenario"] = self.scenario
        return data


def tally_cycle(cycle_index: int,
                events: Sequence[TraceEvent]) -> CycleMetrics:
    """Count what one cycle's event span recorded.

    Counts come from the events themselves so each metric equals the number
    of matching audit entries by construction.
    """
    counts = {kind: 0 for kind in EventKind}
    promotions: dict[str, int] = {}
    deprecations = 0
    registrations = 0
    winner = None
    for event in events:
        counts[EventKind(event.kind)] += 1
        if event.kind == EventKind.ARTIFACT_REGISTERED.value \
                and event.payload.get("entity") == "capability":
            registrations += 1
        elif event.kind == EventKind.LIFECYCLE_TRANSITION.value:
            edge = (f"{event.payload['from_state']}->"
                    f"{event.payload['to_state']}")
            if event.payload["to_state"] == LifecycleState.DEPRECATED.value:
                deprecations += 1
            else:
                promotions[edge] = promotions.get(edge, 0) + 1
        elif event.kind == EventKind.CYCLE_COMPLETED.value:
            selection = event.payload.get("selection")
            if selection is not None:
                winner = selection.get("winner")
    return CycleMetrics(
        cycle_index=cycle_index,
        registrations=registrations,
        evaluations=counts[EventKind.EVALUATION_RECORDED],
        reviews=counts[EventKind.REVIEW_RECORDED],
        proposed=counts[EventKind.MUTATION_PROPOSED],
        staged=counts[EventKind.MUTATION_STAGED],
        applied=counts[EventKind.MUTATION_APPLIED],
        rejected=counts[EventKind.MUTATION_REJECTED],
        rollbacks=counts[EventKind.ROLLBACK_EVENT],
        deprecations=deprecations,
        promotions=dict(sorted(promotions.items())),
        winner=winner,
    )


def census(kernel: GovernanceKernel) -> dict[str, int]:
    tally: dict[str, int] = {}
    for record in kernel.state.capabilities.values():
        key = record.lifecycle.value
        tally[key] = tally.get(key, 0) + 1
    return dict(sorted(tally.items()))


def detection_lags(rows: Sequence[CycleMetrics],
                   injections: Sequence[RegressionInjection]) -> list[dict]:
    rollback_cycles = [row.cycle_index for row in rows if row.rollbacks > 0]
    lags = []
    for injection in injections:
        observed_cycle = injection.cycle_index + 1
        detected = next((c for c in rollback_cycles if c >= observed_cycle),
                        None)
        lags.append({
            "cycle_index": injection.cycle_index,
            "metric": injection.metric,
            "magnitude": injection.magnitude,
            "observed_cycle": observed_cycle,
            "detected_cycle": detected,
            "lag": None if detected is None else detected - observed_cycle,
        })
    return lags


def sum_totals(rows: Sequence[CycleMetrics]) -> dict[str, int]:
    totals = {name: 0 for name in COUNT_FIELDS}
    totals["promotions"] = 0
    for row in rows:
        for name in COUNT_FIELDS:
            totals[name] += getattr(row, name)
        totals["promotions"] += sum(row.promotions.values())
    return totals


class ScenarioDriver:
    """Builds one workload per cycle from seeded substreams and kernel state."""

    def __init__(self, config: SimulationConfig,
                 kernel: GovernanceKernel) -> None:
        self.config = config
        self.kernel = kernel
        self.seed = config.seed
        self.base_config_registered = False
        self.mutation_serial = 0

    # -- draw helpers --------------------------------------------------------

    def injected(self, metric: str, cycle: int) -> float:
        return sum(inj.magnitude for inj in self.config.regression_injection
                   if inj.metric == metric and cycle >= inj.cycle_index + 1)

    def component_mean(self, kind: CapabilityKind, component: str,
                       cycle: int) -> float:
        model = self.config.quality_model
        mean = model.mean_for(kind, component)
        mean += self.config.drift.get(component, 0.0) * (cycle - 1)
        mean += self.injected(component, cycle)
        return mean

    def draw_quality(self, ordinal: int, cycle: int, capability_id: str,
                     kind: CapabilityKind) -> QualityComponents:
        rng = substream(self.seed, "eval", ordinal, cycle, capability_id)
        spread = self.config.quality_model.component_spread
        values = {name: bounded_draw(
            rng, self.component_mean(kind, name, cycle), spread)
            for name in COMPONENT_NAMES}
        return QualityComponents(**values)

    def draw_measurement(self, cycle: int,
                         config_id: str) -> CandidateMeasurement:
        model = self.config.quality_model
        rng = substream(self.seed, "measure", cycle, config_id)
        values = {name: bounded_draw(rng, model.measurement_mean[name],
                                     model.measurement_spread)
                  for name in MEASUREMENT_NAMES}
        return CandidateMeasurement(
            config_id=config_id, quality=values["quality"],
            robustness=values["robustness"], validation=values["validation"],
            reuse=values["reuse"], cost=values["cost"])

    def draw_risk(self, reviewer: str, cycle: int, subject: str,
                  mean: float) -> float:
        rng = substream(self.seed, "review", reviewer, cycle, subject)
        return bounded_draw(rng, mean, 0.2)

    # -- workload assembly ---------------------------------------------------

    def evaluator_ids(self) -> list[str]:
        return sorted(
            cid for cid, rec in self.kernel.state.capabilities.items()
            if rec.kind is CapabilityKind.EVALUATOR)

    def build_workload(self, cycle: int) -> Workload:
        state = self.kernel.state
        caps = state.capabilities
        artifacts = list(self._emitted_artifacts(cycle))
        configs: list[WorkloadConfig] = []
        nodes: list[WorkloadNode] = []
        edges: list[WorkloadEdge] = []
        transitions: list[WorkloadTransition] = []

        if cycle == 1:
            for ordinal in range(self.config.evaluator_count):
                artifacts.append(WorkloadArtifact(
                    kind=CapabilityKind.EVALUATOR,
                    content=f"scenario evaluator suite {ordinal}",
                    actor="bootstrap"))
        evaluators = self.evaluator_ids()

        if cycle >= 2 and not self.base_config_registered:
            configs.append(WorkloadConfig(
                config=HarnessConfig(
                    config_id="cfg-scenario-000",
                    prompt_policy="baseline prompt policy",
                    tools=("tool-core",),
                    evaluators=tuple(evaluators),
                    memory="short-term memory",
                    governance="default gates",
                    artifacts=(),
                    graph_version=state.graph.graph_version),
                activate=True, actor="bootstrap"))
            self.base_config_registered = True

        evaluations = []
        # Canonical capabilities stay under observation; only deprecated
        # ones drop out of the evaluation rota.
        targets = sorted(cid for cid, rec in caps.items()
                         if rec.lifecycle is not LifecycleState.DEPRECATED)
        for ordinal in range(min(self.config.evaluator_count,
                                 len(evaluators))):
            for target in targets:
                evaluations.append(WorkloadEvaluation(
                    capability_id=target,
                    evaluator_id=evaluators[ordinal],
                    quality=self.draw_quality(ordinal, cycle, target,
                                              caps[target].kind)))

        proposals = []
        stage_candidates = sorted(
            mid for mid, rec in state.mutations.items()
            if rec.status in (MutationStatus.PROPOSED, MutationStatus.STAGED))
        live_chain = bool(stage_candidates)
        if (cycle >= 3 and state.active_config and evaluators
                and not live_chain
                and substream(self.seed, "mutate", cycle).random()
                < self.config.mutation_rate):
            mutation_id = f"mut-{self.mutation_serial:03d}"
            self.mutation_serial += 1
            component = MUTATION_ROTATION[cycle % len(MUTATION_ROTATION)]
            proposals.append(WorkloadProposal(
                contract=self._contract(component, cycle, evaluators[0]),
                delta=MutationDelta(component=component,
                                    value=self._delta_value(component, cycle)),
                actor="mutator", mutation_id=mutation_id))
            stage_candidates.append(mutation_id)

        review_subjects = [cid for cid in targets
                           if caps[cid].lifecycle in REVIEWABLE_STATES]
        review_subjects += [mid for mid in stage_candidates
                            if mid not in state.mutations
                            or state.mutations[mid].status
                            is MutationStatus.PROPOSED]
        reviews = []
        for ordinal in range(self.config.reviewer_count):
            reviewer = f"gov-{ordinal}"
            for subject in review_subjects:
                mean = (caps[subject].quality.risk
                        if subject in caps else 0.15)
                reviews.append(WorkloadReview(
                    subject_id=subject, reviewer=reviewer,
                    risk=self.draw_risk(reviewer, cycle, subject, mean),
                    rationale=f"cycle {cycle} gate check"))

        stage_requests = []
        for mutation_id in stage_candidates:
            record = state.mutations.get(mutation_id)
            if record is not None and record.status \
                    is not MutationStatus.PROPOSED:
                continue
            model = self.config.quality_model
            rng = substream(self.seed, "validate", cycle, mutation_id)
            delta = bounded_draw(rng, model.improvement_mean,
                                 model.improvement_spread)
            stage_requests.append(WorkloadStage(
                mutation_id=mutation_id,
                validation=ValidationResult(evaluator_id=evaluators[0],
                                            metric="accuracy", delta=delta),
                actor="mutator"))

        measurements = []
        for config_id in sorted(state.configs):
            node = state.graph.nodes.get(config_id)
            if node is None or not state.graph.eligible_for_selection(
                    config_id):
                continue
            measurements.append(self.draw_measurement(cycle, config_id))

        floor = self.config.deprecation_floor
        doomed = sorted(
            cid for cid, rec in caps.items()
            if rec.lifecycle is not LifecycleState.DEPRECATED
            and rec.evidence and rec.quality.robustness < floor)
        if doomed:
            nodes.append(WorkloadNode(entity_id="ctx-degraded",
                                      kind=NodeKind.CONTEXT))
            for cid in doomed:
                transitions.append(WorkloadTransition(
                    capability_id=cid, to_state=LifecycleState.DEPRECATED))
                edges.append(WorkloadEdge(src=cid,
                                          relation=RelationKind.FAILS_UNDER,
                                          dst="ctx-degraded"))

        error_rate = bounded_draw(
            substream(self.seed, "ops", cycle),
            self.config.quality_model.error_rate_mean
            + self.injected("error_rate", cycle)
            + self.config.drift.get("error_rate", 0.0) * (cycle - 1),
            self.config.quality_model.measurement_spread * 0.5)

        return Workload(
            artifacts=tuple(artifacts),
            configs=tuple(configs),
            nodes=tuple(nodes),
            edges=tuple(edges),
            proposals=tuple(proposals),
            evaluations=tuple(evaluations),
            measurements=tuple(measurements),
            reviews=tuple(reviews),
            stage_requests=tuple(stage_requests),
            apply_requests=tuple(sorted(stage_candidates)),
            transition_requests=tuple(transitions),
            observed_metrics={"error_rate": error_rate},
        )

    def _emitted_artifacts(self, cycle: int) -> list[WorkloadArtifact]:
        emitted = []
        for ordinal in range(self.config.generators.count):
            actor = f"gen-{ordinal}"
            for kind_name in sorted(self.config.generators.rates):
                rate = self.config.generators.rates[kind_name]
                rng = substream(self.seed, "gen", ordinal, cycle, kind_name)
                count = int(rate) + (1 if rng.random() < rate - int(rate)
                                     else 0)
                for item in range(count):
                    emitted.append(WorkloadArtifact(
                        kind=CapabilityKind(kind_name),
                        content=(f"{kind_name} artifact from {actor} "
                                 f"cycle {cycle} item {item}"),
                        actor=actor))
        return emitted

    def _contract(self, component: MutationComponent, cycle: int,
                  falsifying: str) -> ChangeContract:
        return ChangeContract(
            component=component,
            targeted_failure_mode=f"observed drift in cycle {cycle}",
            expected_improvement=ExpectedImprovement(metric="accuracy",
                                                     min_delta=0.05),
            invariants_preserved=("io-contract",),
            falsifying_evaluation=falsifying,
            rollback_conditions=(RollbackCondition(
                metric="error_rate",
                threshold=self.config.rollback_threshold,
                direction=TriggerDirection.ABOVE),))

    @staticmethod
    def _delta_value(component: MutationComponent, cycle: int) -> object:
        if component is MutationComponent.PROMPTS:
            return f"prompt policy revision c{cycle:03d}"
        if component is MutationComponent.ROUTING:
            return ["tool-core", f"tool-c{cycle:03d}"]
        return f"memory rules revision c{cycle:03d}"

    # -- run loop ------------------------------------------------------------

    def run(self) -> SimulationMetrics:
        rows: list[CycleMetrics] = []
        for cycle in range(1, self.config.cycles + 1):
            workload = self.build_workload(cycle)
            before = len(self.kernel.events)
            try:
                self.kernel.run_cycle(workload, actor="sim")
            except KernelError as exc:
                detail = exc.args[0] if exc.args else str(exc)
                raise type(exc)(f"cycle {cycle}: {detail}") from exc
            rows.append(tally_cycle(cycle, self.kernel.events[before:]))
        return SimulationMetrics(
            cycles=rows,
            final_census=census(self.kernel),
            regression_detection_lag=detection_lags(
                rows, self.config.regression_injection),
            totals=sum_totals(rows),
        )


def run_scenario_detailed(config: SimulationConfig,
                          store: EventStore | None = None
                          ) -> tuple[SimulationMetrics, GovernanceKernel]:
    kernel = GovernanceKernel(store=store, policy=config.policy)
    metrics = ScenarioDriver(config, kernel).run()
    return metrics, kernel


def run_scenario(config: SimulationConfig,
                 store: EventStore | None = None) -> SimulationMetrics:
    metrics, _ = run_scenario_detailed(config, store)
    return metrics


# -- scripted normalizer scenario ----------------------------------------------

NORMALIZER_VARIANTS = ("no_drift", "drift_no_mutation", "drift_with_mutation")


def scenario_normalizer(seed: int, cycles: int, variant: str = "no_drift",
                        store: EventStore | None = None,
                        policy: GovernancePolicy | None = None
                        ) -> SimulationMetrics:
    """A scripted skill history: a payload normalizer under three futures.

    The normalizer is generated, evaluated, and promoted; depending on the
    variant it then stays canonical, degrades and is deprecated, or is
    replaced through a governed mutation whose successor inherits the
    lineage.
    """
    metrics, _ = scenario_normalizer_detailed(seed, cycles, variant,
                                              store=store, policy=policy)
    return metrics


def scenario_normalizer_detailed(seed: int, cycles: int,
                                 variant: str = "no_drift",
                                 store: EventStore | None = None,
                                 policy: GovernancePolicy | None = None
                                 ) -> tuple[SimulationMetrics,
                                            GovernanceKernel]:
    if variant not in NORMALIZER_VARIANTS:
        raise UsageError(f"unknown normalizer variant {variant!r}")
    if cycles < 12:
        raise UsageError("the normalizer scenario needs at least 12 cycles")
    kernel = GovernanceKernel(store=store, policy=policy)
    driver = _NormalizerDriver(seed, cycles, variant, kernel)
    return driver.run(), kernel


class _NormalizerDriver:
    """Hand-scripted cycle plan behind scenario_normalizer."""

    DETECT_BELOW = 0.55
    DRIFT_RATE = 0.12
    HEALTHY = {"performance": 0.85, "robustness": 0.85, "stability": 0.85,
               "reusability": 0.7, "risk": 0.12}

    def __init__(self, seed: int, cycles: int, variant: str,
                 kernel: GovernanceKernel) -> None:
        self.seed = seed
        self.cycles = cycles
        self.variant = variant
        self.kernel = kernel
        self.normalizer: str | None = None
        self.successor: str | None = None
        self.mutation_id: str | None = None
        self.trigger_cycle: int | None = None
        self.path: list[str] = []
        self.successor_path: list[str] = []
        if variant == "no_drift":
            self.drift_onset: int | None = None
        elif variant == "drift_no_mutation":
            self.drift_onset = max(8, cycles - 4)
        else:
            self.drift_onset = max(6, min(cycles - 6, 8))

    def evaluators(self) -> list[str]:
        return sorted(
            cid for cid, rec in self.kernel.state.capabilities.items()
            if rec.kind is CapabilityKind.EVALUATOR)

    def skill_ids(self) -> list[str]:
        return sorted(
            cid for cid, rec in self.kernel.state.capabilities.items()
            if rec.kind is CapabilityKind.SKILL)

    def robustness_mean(self, capability_id: str, cycle: int) -> float:
        """Healthy mean, decayed once drift is active for the original."""
        mean = self.HEALTHY["robustness"]
        if (self.drift_onset is not None and capability_id == self.normalizer
                and cycle >= self.drift_onset):
            mean -= self.DRIFT_RATE * (cycle - self.drift_onset + 1)
        return mean

    def draw_quality(self, ordinal: int, cycle: int,
                     capability_id: str) -> QualityComponents:
        rng = substream(self.seed, "norm-eval", ordinal, cycle, capability_id)
        values = {}
        for name in COMPONENT_NAMES:
            mean = self.HEALTHY[name]
            if name == "robustness":
                mean = self.robustness_mean(capability_id, cycle)
            values[name] = bounded_draw(rng, mean, 0.05)
        return QualityComponents(**values)

    def build_workload(self, cycle: int) -> Workload:
        state = self.kernel.state
        caps = state.capabilities
        artifacts: list[WorkloadArtifact] = []
        skill_specs: list[GeneratedSkillSpec] = []
        configs: list[WorkloadConfig] = []
        nodes: list[WorkloadNode] = []
        edges: list[WorkloadEdge] = []
        proposals: list[WorkloadProposal] = []
        reviews: list[WorkloadReview] = []
        stage_requests: list[WorkloadStage] = []
        apply_requests: list[str] = []
        transitions: list[WorkloadTransition] = []
        evaluators = self.evaluators()

        if cycle == 1:
            for ordinal in range(2):
                artifacts.append(WorkloadArtifact(
                    kind=CapabilityKind.EVALUATOR,
                    content=f"payload-shape scoring evaluator {ordinal}",
                    actor="bootstrap"))
            artifacts.append(WorkloadArtifact(
                kind=CapabilityKind.SKILL,
                content=("normalizer skill v1: coerce inconsistent payload "
                         "fields into one schema"),
                actor="gen-0"))

        if cycle == 2:
            skill_specs.append(GeneratedSkillSpec(
                skill_id="skill-normalizer",
                capability_id=self.normalizer,
                inputs=(SkillParam(name="payload", type="json"),),
                outputs=(SkillParam(name="normalized", type="json"),),
                declared_failure_modes=("schema-drift",)))
            configs.append(WorkloadConfig(
                config=HarnessConfig(
                    config_id="cfg-normalizer-000",
                    prompt_policy="baseline prompt policy",
                    tools=("tool-json",),
                    evaluators=tuple(evaluators),
                    memory="short-term memory",
                    governance="default gates",
                    artifacts=(self.normalizer,),
                    graph_version=state.graph.graph_version),
                activate=True, actor="bootstrap"))
            for evaluator in evaluators:
                edges.append(WorkloadEdge(src=self.normalizer,
                                          relation=RelationKind.VALIDATED_BY,
                                          dst=evaluator))

        drifted = (self.drift_onset is not None
                   and self.variant == "drift_no_mutation"
                   and self._detected(cycle))
        if drifted and caps[self.normalizer].lifecycle \
                is not LifecycleState.DEPRECATED:
            self.trigger_cycle = self.trigger_cycle or cycle
            nodes.append(WorkloadNode(entity_id="ctx-schema-drift",
                                      kind=NodeKind.CONTEXT))
            edges.append(WorkloadEdge(src=self.normalizer,
                                      relation=RelationKind.FAILS_UNDER,
                                      dst="ctx-schema-drift"))
            transitions.append(WorkloadTransition(
                capability_id=self.normalizer,
                to_state=LifecycleState.DEPRECATED))

        if (self.variant == "drift_with_mutation" and self._detected(cycle)
                and self.trigger_cycle is None):
            self.trigger_cycle = cycle
            artifacts.append(WorkloadArtifact(
                kind=CapabilityKind.SKILL,
                content=("normalizer skill v2: tolerant field mapping for "
                         "drifted payload schemas"),
                actor="gen-0"))

        if (self.variant == "drift_with_mutation" and self.successor
                and self.mutation_id is None):
            self.mutation_id = "mut-normalizer-000"
            proposals.append(WorkloadProposal(
                contract=ChangeContract(
                    component=MutationComponent.SKILLS,
                    targeted_failure_mode="schema drift breaks v1 coercion",
                    expected_improvement=ExpectedImprovement(
                        metric="schema_match_rate", min_delta=0.05),
                    invariants_preserved=("normalized-output-schema",),
                    falsifying_evaluation=evaluators[0],
                    rollback_conditions=(RollbackCondition(
                        metric="error_rate", threshold=0.3,
                        direction=TriggerDirection.ABOVE),)),
                delta=MutationDelta(component=MutationComponent.SKILLS,
                                    value=[self.successor]),
                actor="mutator", mutation_id=self.mutation_id))
            stage_requests.append(WorkloadStage(
                mutation_id=self.mutation_id,
                validation=ValidationResult(evaluator_id=evaluators[0],
                                            metric="schema_match_rate",
                                            delta=0.11),
                actor="mutator"))
            apply_requests.append(self.mutation_id)
            edges.append(WorkloadEdge(src=self.successor,
                                      relation=RelationKind.MUTATED_FROM,
                                      dst=self.normalizer))
            edges.append(WorkloadEdge(src=self.normalizer,
                                      relation=RelationKind.SUPERSEDES,
                                      dst=self.successor))
            for evaluator in evaluators:
                edges.append(WorkloadEdge(src=self.successor,
                                          relation=RelationKind.VALIDATED_BY,
                                          dst=evaluator))
            nodes.append(WorkloadNode(entity_id="ctx-schema-drift",
                                      kind=NodeKind.CONTEXT))
            edges.append(WorkloadEdge(src=self.normalizer,
                                      relation=RelationKind.FAILS_UNDER,
                                      dst="ctx-schema-drift"))
            transitions.append(WorkloadTransition(
                capability_id=self.normalizer,
                to_state=LifecycleState.DEPRECATED))

        evaluations = []
        for target in self.skill_ids():
            if caps[target].lifecycle is LifecycleState.DEPRECATED:
                continue
            if target == self.normalizer and any(
                    t.capability_id == target for t in transitions):
                continue
            for ordinal, evaluator in enumerate(evaluators):
                evaluations.append(WorkloadEvaluation(
                    capability_id=target, evaluator_id=evaluator,
                    quality=self.draw_quality(ordinal, cycle, target)))

        subjects = [cid for cid in self.skill_ids()
                    if caps[cid].lifecycle in REVIEWABLE_STATES]
        if self.mutation_id and (
                self.mutation_id not in state.mutations
                or state.mutations[self.mutation_id].status
                is MutationStatus.PROPOSED):
            subjects.append(self.mutation_id)
        for ordinal in range(2):
            reviewer = f"gov-{ordinal}"
            for subject in subjects:
                rng = substream(self.seed, "norm-review", reviewer, cycle,
                                subject)
                reviews.append(WorkloadReview(
                    subject_id=subject, reviewer=reviewer,
                    risk=bounded_draw(rng, 0.1, 0.05),
                    rationale=f"normalizer gate check cycle {cycle}"))

        measurements = []
        for config_id in sorted(state.configs):
            if state.graph.nodes.get(config_id) is None:
                continue
            if not state.graph.eligible_for_selection(config_id):
                continue
            rng = substream(self.seed, "norm-measure", cycle, config_id)
            measurements.append(CandidateMeasurement(
                config_id=config_id,
                quality=bounded_draw(rng, 0.8, 0.05),
                robustness=bounded_draw(rng, 0.75, 0.05),
                validation=bounded_draw(rng, 0.7, 0.05),
                reuse=bounded_draw(rng, 0.5, 0.05),
                cost=bounded_draw(rng, 0.4, 0.05)))

        return Workload(
            artifacts=tuple(artifacts),
            skill_specs=tuple(skill_specs),
            configs=tuple(configs),
            nodes=tuple(nodes),
            edges=tuple(edges),
            proposals=tuple(proposals),
            evaluations=tuple(evaluations),
            measurements=tuple(measurements),
            reviews=tuple(reviews),
            stage_requests=tuple(stage_requests),
            apply_requests=tuple(apply_requests),
            transition_requests=tuple(transitions),
            observed_metrics={"error_rate": bounded_draw(
                substream(self.seed, "norm-ops", cycle), 0.05, 0.02)},
        )

    def _detected(self, cycle: int) -> bool:
        """Pre-cycle robustness of the original has sunk below the bar."""
        if self.drift_onset is None or cycle <= self.drift_onset:
            return False
        record = self.kernel.state.capabilities.get(self.normalizer)
        if record is None or not record.evidence:
            return False
        return record.quality.robustness < self.DETECT_BELOW

    def _note_states(self) -> None:
        caps = self.kernel.state.capabilities
        state = caps[self.normalizer].lifecycle.value
        if not self.path or self.path[-1] != state:
            self.path.append(state)
        if self.successor:
            state = caps[self.successor].lifecycle.value
            if not self.successor_path or self.successor_path[-1] != state:
                self.successor_path.append(state)

    def run(self) -> SimulationMetrics:
        rows: list[CycleMetrics] = []
        for cycle in range(1, self.cycles + 1):
            workload = self.build_workload(cycle)
            before = len(self.kernel.events)
            try:
                self.kernel.run_cycle(workload, actor="sim")
            except KernelError as exc:
                detail = exc.args[0] if exc.args else str(exc)
                raise type(exc)(f"cycle {cycle}: {detail}") from exc
            rows.append(tally_cycle(cycle, self.kernel.events[before:]))
            if cycle == 1:
                skills = self.skill_ids()
                self.normalizer = skills[0]
            elif self.variant == "drift_with_mutation" \
                    and self.trigger_cycle == cycle:
                self.successor = next(s for s in self.skill_ids()
                                      if s != self.normalizer)
            self._note_states()
        final = self.kernel.state.capabilities[self.normalizer]
        lineage_root = self.successor or self.normalizer
        metrics = SimulationMetrics(
            cycles=rows,
            final_census=census(self.kernel),
            regression_detection_lag=[],
            totals=sum_totals(rows),
            scenario={
                "variant": self.variant,
                "normalizer_id": self.normalizer,
                "successor_id": self.successor,
                "mutation_id": self.mutation_id,
                "trigger_cycle": self.trigger_cycle,
                "lifecycle_path": self.path,
                "successor_path": self.successor_path,
                "final_state": final.lifecycle.value,
                "lineage": to_jsonable(
                    self.kernel.lineage(lineage_root)),
            })
        return metrics


# -- policy comparison ----------------------------------------------------------


def compare_policies(configs: Sequence[SimulationConfig]) -> dict:
    """Run the same seeded workload under each policy and tabulate outcomes.

    All configurations must share the seed and every workload-shaping
    parameter; only the governance policy may differ.
    """
    configs = list(configs)
    if len(configs) < 2:
        raise UsageError("compare_policies needs at least two configurations")
    fingerprint = configs[0].workload_fingerprint()
    for index, other in enumerate(configs[1:], start=1):
        if other.workload_fingerprint() != fingerprint:
            raise SeedMismatch(
                f"configuration {index} differs from configuration 0 in "
                "seed or workload parameters")
    labels = [f"policy-{index}" for index in range(len(configs))]
    runs = [run_scenario(config) for config in configs]
    rows = []
    totals: dict[str, dict] = {}
    for label, metrics in zip(labels, runs):
        for row in metrics.cycles:
            entry = {"policy": label}
            entry.update(to_jsonable(row))
            rows.append(entry)
        lag_values = [item["lag"] for item in metrics.regression_detection_lag
                      if item["lag"] is not None]
        totals[label] = dict(metrics.totals)
        totals[label]["mean_detection_lag"] = (
            sum(lag_values) / len(lag_values) if lag_values else None)
        totals[label]["final_census"] = metrics.final_census
    deltas = {}
    base = totals[labels[0]]
    for label in labels[1:]:
        deltas[label] = {
            name: totals[label][name] - base[name]
            for name in (*COUNT_FIELDS, "promotions")}
    return {
        "seed": configs[0].seed,
        "cycles": configs[0].cycles,
        "policies": labels,
        "rows": rows,
        "totals": totals,
        "deltas": deltas,
    }


# -- emission --------------------------------------------------------------------

CSV_COLUMNS = ("cycle_index", *COUNT_FIELDS, "promotions", "winner")


def metrics_table_text(metrics: SimulationMetrics) -> str:
    return canonical_text(metrics.to_jsonable()) + "\n"


def metrics_csv_text(metrics: SimulationMetrics) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in metrics.cycles:
        writer.writerow([
            row.cycle_index,
            *(getattr(row, name) for name in COUNT_FIELDS),
            sum(row.promotions.values()),
            row.winner if row.winner is not None else "",
        ])
    return buffer.getvalue()


def write_metrics(metrics: SimulationMetrics, table_path, csv_path) -> None:
    for path, text in ((table_path, metrics_table_text(metrics)),
                       (csv_path, metrics_csv_text(metrics))):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


# -- configuration documents ------------------------------------------------------


def sim_config_from_mapping(data: dict) -> SimulationConfig:
    """Build a SimulationConfig from a parsed TOML/JSON document."""
    known = {"seed", "cycles", "generators", "quality_model", "drift",
             "regression_injection", "policy", "evaluator_count",
             "reviewer_count", "mutation_rate", "deprecation_floor",
             "rollback_threshold"}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown simulation keys: {sorted(unknown)}")
    if "seed" not in data or "cycles" not in data:
        raise UsageError("simulation config needs 'seed' and 'cycles'")
    kwargs: dict = {"seed": int(data["seed"]), "cycles": int(data["cycles"])}
    if "generators" in data:
        kwargs["generators"] = GeneratorModel(**data["generators"])
    if "quality_model" in data:
        kwargs["quality_model"] = QualityModel(**data["quality_model"])
    if "drift" in data:
        kwargs["drift"] = {str(k): float(v) for k, v in data["drift"].items()}
    if "regression_injection" in data:
        kwargs["regression_injection"] = tuple(
            RegressionInjection(cycle_index=int(item["cycle_index"]),
                                metric=str(item["metric"]),
                                magnitude=float(item["magnitude"]))
            for item in data["regression_injection"])
    if "policy" in data:
        kwargs["policy"] = policy_from_mapping(data["policy"])
    for name in ("evaluator_count", "reviewer_count"):
        if name in data:
            kwargs[name] = int(data[name])
    for name in ("mutation_rate", "deprecation_floor", "rollback_threshold"):
        if name in data:
            kwargs[name] = float(data[name])
    return SimulationConfig(**kwargs)

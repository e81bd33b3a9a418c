"""The governance kernel: serialized commands over event-sourced state.

Every public operation runs as a command: it validates preconditions
against a cloned state, emits TraceEvents, and each event is immediately
folded into the clone by :func:`apply_event`, the only code path that
writes state.  When the handler returns, the batch is durably appended
and the clone atomically replaces the live state; any exception discards
both.  Replay folds the same events through the same appliers, so
replayed state equals live state by construction.

Appliers are pure functions of (state, event): anything that depends on
policy or randomness is computed at command time and embedded in the
event payload.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .canonical import canonical_text, derive_id, digest_hex, to_jsonable
from .errors import (
    ChainBroken,
    ConditionNotMet,
    DomainError,
    DuplicateContent,
    EmptyContent,
    IllegalTransition,
    ImprovementNotMet,
    InsufficientEvidence,
    KindMismatch,
    MissingApproval,
    NotFound,
    RiskOutOfRange,
    StagingConflict,
    UnknownCapability,
    UnknownConfig,
    UnknownEntity,
    UnknownEvent,
    UnknownEventKind,
    UnknownNode,
    UnknownSubject,
    UsageError,
    WrongEvaluator,
    WrongStatus,
)
from .events import (
    GENESIS_HASH,
    EventKind,
    TraceEvent,
    event_id_for_index,
    index_for_event_id,
    make_event,
    verify_chain,
)
from .graph import (
    GraphEdge,
    GraphNode,
    LineageView,
    NodeKind,
    RelationKind,
    quality_value,
)
from .lifecycle import (
    LifecycleRecord,
    LifecycleState,
    is_legal,
    next_promotion,
    required_evidence,
)
from .mutation import (
    COMPONENT_FIELD,
    ChangeContract,
    MutationDelta,
    MutationRecord,
    MutationStatus,
    RollbackTrigger,
    ValidationResult,
    check_contract_complete,
    check_delta,
    contract_from_payload,
    delta_from_payload,
    find_matching_condition,
    mutation_from_jsonable,
    validation_from_payload,
)
from .policy import DEFAULT_POLICY, GovernancePolicy
from .records import (
    CapabilityKind,
    CapabilityRecord,
    CapabilityReview,
    GeneratedSkillSpec,
    HarnessConfig,
    HarnessState,
    QualityComponents,
    ReviewDecision,
    capability_from_jsonable,
    config_from_jsonable,
    quality_from_jsonable,
    review_from_jsonable,
    skill_spec_from_jsonable,
)
from .registry import KernelState
from .selection import CandidateMeasurement, ConstraintFlag, SelectionResult, select
from .store import EventStore, Snapshot

KERNEL_ACTOR = "kernel"

CAPABILITY_KIND_TO_NODE = {kind.value: NodeKind(kind.value)
                           for kind in CapabilityKind}
CAPABILITY_NODE_KINDS = frozenset(CAPABILITY_KIND_TO_NODE.values())


# -- workload and report types -------------------------------------------

@dataclass(frozen=True)
class WorkloadArtifact:
    """One generated artifact to register during a cycle."""

    kind: CapabilityKind
    content: str
    actor: str


@dataclass(frozen=True)
class WorkloadConfig:
    config: HarnessConfig
    activate: bool = False
    actor: str = KERNEL_ACTOR


@dataclass(frozen=True)
class WorkloadEvaluation:
    capability_id: str
    evaluator_id: str
    quality: QualityComponents


@dataclass(frozen=True)
class WorkloadReview:
    subject_id: str
    reviewer: str
    risk: float
    evidence: tuple[str, ...] = ()
    rationale: str = ""


@dataclass(frozen=True)
class WorkloadProposal:
    contract: ChangeContract
    delta: MutationDelta
    actor: str
    base_config: str | None = None
    mutation_id: str | None = None


@dataclass(frozen=True)
class WorkloadStage:
    mutation_id: str
    validation: ValidationResult
    actor: str


@dataclass(frozen=True)
class WorkloadEdge:
    src: str
    relation: RelationKind
    dst: str


@dataclass(frozen=True)
class WorkloadNode:
    entity_id: str
    kind: NodeKind


@dataclass(frozen=True)
class WorkloadTransition:
    capability_id: str
    to_state: LifecycleState
    review: str | None = None


@dataclass(frozen=True)
class Workload:
    """Everything one governance cycle is asked to process."""

    artifacts: tuple[WorkloadArtifact, ...] = ()
    skill_specs: tuple[GeneratedSkillSpec, ...] = ()
    configs: tuple[WorkloadConfig, ...] = ()
    nodes: tuple[WorkloadNode, ...] = ()
    edges: tuple[WorkloadEdge, ...] = ()
    proposals: tuple[WorkloadProposal, ...] = ()
    evaluations: tuple[WorkloadEvaluation, ...] = ()
    measurements: tuple[CandidateMeasurement, ...] = ()
    reviews: tuple[WorkloadReview, ...] = ()
    stage_requests: tuple[WorkloadStage, ...] = ()
    apply_requests: tuple[str, ...] = ()
    transition_requests: tuple[WorkloadTransition, ...] = ()
    observed_metrics: dict[str, float] = field(default_factory=dict)
    auto_promote: bool = True

    def summary(self) -> dict:
        return {
            "artifacts": len(self.artifacts),
            "skill_specs": len(self.skill_specs),
            "configs": len(self.configs),
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "proposals": len(self.proposals),
            "evaluations": len(self.evaluations),
            "measurements": len(self.measurements),
            "reviews": len(self.reviews),
            "stage_requests": len(self.stage_requests),
            "apply_requests": len(self.apply_requests),
            "transition_requests": len(self.transition_requests),
        }


@dataclass(frozen=True)
class CycleReport:
    """What one governance cycle did; reconstructible from its events."""

    cycle_index: int
    generated: tuple[str, ...] = ()
    evaluated: tuple[tuple[str, float], ...] = ()
    reviews: tuple[str, ...] = ()
    staged_mutations: tuple[str, ...] = ()
    promotions: tuple[LifecycleRecord, ...] = ()
    deprecations: tuple[LifecycleRecord, ...] = ()
    rollbacks: tuple[str, ...] = ()


@dataclass
class AuditReport:
    """Full-log verification: chain integrity plus replay equivalence."""

    events_checked: int = 0
    violations: list = field(default_factory=list)
    replay_matches: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations and self.replay_matches


def workload_from_jsonable(data: dict) -> Workload:
    """Parse a workload document (already JSON-decoded) into a Workload."""
    known = {"artifacts", "skill_specs", "configs", "nodes", "edges",
             "proposals", "evaluations", "measurements", "reviews",
             "stage_requests", "apply_requests", "transition_requests",
             "observed_metrics", "auto_promote"}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown workload keys: {sorted(unknown)}")
    return Workload(
        artifacts=tuple(
            WorkloadArtifact(kind=CapabilityKind(item["kind"]),
                             content=item["content"],
                             actor=item.get("actor", KERNEL_ACTOR))
            for item in data.get("artifacts", ())),
        skill_specs=tuple(
            skill_spec_from_jsonable(item)
            for item in data.get("skill_specs", ())),
        configs=tuple(
            WorkloadConfig(config=config_from_jsonable(item["config"]),
                           activate=bool(item.get("activate", False)),
                           actor=item.get("actor", KERNEL_ACTOR))
            for item in data.get("configs", ())),
        nodes=tuple(
            WorkloadNode(entity_id=item["entity_id"],
                         kind=NodeKind(item["kind"]))
            for item in data.get("nodes", ())),
        edges=tuple(
            WorkloadEdge(src=item["src"],
                         relation=RelationKind(item["relation"]),
                         dst=item["dst"])
            for item in data.get("edges", ())),
        proposals=tuple(
            WorkloadProposal(contract=contract_from_payload(item["contract"]),
                             delta=delta_from_payload(item["delta"]),
                             actor=item.get("actor", KERNEL_ACTOR),
                             base_config=item.get("base_config"),
                             mutation_id=item.get("mutation_id"))
            for item in data.get("proposals", ())),
        evaluations=tuple(
            WorkloadEvaluation(capability_id=item["capability_id"],
                               evaluator_id=item["evaluator_id"],
                               quality=quality_from_jsonable(item["quality"]))
            for item in data.get("evaluations", ())),
        measurements=tuple(
            CandidateMeasurement(
                config_id=item["config_id"], quality=item["quality"],
                robustness=item["robustness"], validation=item["validation"],
                reuse=item["reuse"], cost=item["cost"])
            for item in data.get("measurements", ())),
        reviews=tuple(
            WorkloadReview(subject_id=item["subject_id"],
                           reviewer=item["reviewer"], risk=item["risk"],
                           evidence=tuple(item.get("evidence", ())),
                           rationale=item.get("rationale", ""))
            for item in data.get("reviews", ())),
        stage_requests=tuple(
            WorkloadStage(mutation_id=item["mutation_id"],
                          validation=validation_from_payload(
                              item["validation"]),
                          actor=item.get("actor", KERNEL_ACTOR))
            for item in data.get("stage_requests", ())),
        apply_requests=tuple(data.get("apply_requests", ())),
        transition_requests=tuple(
            WorkloadTransition(capability_id=item["capability_id"],
                               to_state=LifecycleState(item["to_state"]),
                               review=item.get("review"))
            for item in data.get("transition_requests", ())),
        observed_metrics={str(k): float(v) for k, v in
                          data.get("observed_metrics", {}).items()},
        auto_promote=bool(data.get("auto_promote", True)),
    )


# -- event application (the only state writer) ----------------------------

def apply_event(state: KernelState, event: TraceEvent) -> None:
    """Fold one event into state; shared by live execution and replay."""
    handler = _APPLIERS.get(event.kind)
    if handler is None:
        raise UnknownEventKind(str(event.kind))
    handler(state, event)
    state.tick = event.tick


def _apply_artifact_registered(state: KernelState, event: TraceEvent) -> None:
    payload = event.payload
    entity = payload["entity"]
    if entity == "capability":
        record = capability_from_jsonable(payload["record"])
        state.capabilities[record.capability_id] = record
    elif entity == "config":
        config = config_from_jsonable(payload["record"])
        state.configs[config.config_id] = config
        if payload.get("activate"):
            state.active_config = config.config_id
    elif entity == "skill_spec":
        spec = skill_spec_from_jsonable(payload["record"])
        state.skill_specs[spec.skill_id] = spec
    else:
        raise UnknownEventKind(f"artifact entity {entity!r}")


def _apply_evaluation_recorded(state: KernelState, event: TraceEvent) -> None:
    payload = event.payload
    capability_id = payload["capability_id"]
    record = state.capabilities[capability_id]
    quality = quality_from_jsonable(payload["quality"])
    state.capabilities[capability_id] = record.with_evaluation(
        quality, event.event_id)
    state.evaluation_log.append({
        "capability_id": capability_id,
        "evaluator_id": payload["evaluator_id"],
        "event_index": event.index,
    })
    node_quality = payload["node_quality"]
    if node_quality is not None and capability_id in state.graph.nodes:
        state.graph.update_node(capability_id, quality=node_quality)


def _apply_lifecycle_transition(state: KernelState, event: TraceEvent) -> None:
    payload = event.payload
    capability_id = payload["capability_id"]
    to_state = LifecycleState(payload["to_state"])
    record = state.capabilities[capability_id]
    state.capabilities[capability_id] = record.with_lifecycle(
        to_state, record.evidence)
    state.lifecycle_log.append(LifecycleRecord(
        capability_id=capability_id,
        from_state=LifecycleState(payload["from_state"]),
        to_state=to_state,
        evidence=tuple(payload["evidence"]),
        review=payload["review"],
        tick=event.tick,
        event_id=event.event_id,
    ))
    if capability_id in state.graph.nodes:
        state.graph.update_node(capability_id, lifecycle=to_state)


def _apply_mutation_proposed(state: KernelState, event: TraceEvent) -> None:
    record = mutation_from_jsonable(event.payload["record"])
    state.mutations[record.mutation_id] = record


def _apply_mutation_staged(state: KernelState, event: TraceEvent) -> None:
    mutation_id = event.payload["mutation_id"]
    record = state.mutations[mutation_id]
    state.mutations[mutation_id] = record.with_status(
        MutationStatus.STAGED, evidence=record.evidence + (event.event_id,))


def _apply_mutation_applied(state: KernelState, event: TraceEvent) -> None:
    payload = event.payload
    config = config_from_jsonable(payload["result_config"])
    state.configs[config.config_id] = config
    mutation_id = payload["mutation_id"]
    record = state.mutations[mutation_id]
    state.mutations[mutation_id] = record.with_status(
        MutationStatus.APPLIED, result_config=config.config_id,
        evidence=record.evidence + (event.event_id,))
    state.active_config = config.config_id


def _apply_mutation_rejected(state: KernelState, event: TraceEvent) -> None:
    payload = event.payload
    mutation_id = payload["mutation_id"]
    record = state.mutations[mutation_id]
    state.mutations[mutation_id] = record.with_status(
        MutationStatus.REJECTED, rejection_reason=payload["reason"])


def _apply_rollback_event(state: KernelState, event: TraceEvent) -> None:
    payload = event.payload
    mutation_id = payload["mutation_id"]
    record = state.mutations[mutation_id]
    state.mutations[mutation_id] = record.with_status(
        MutationStatus.ROLLED_BACK,
        evidence=record.evidence + (event.event_id,))
    state.active_config = payload["restored_config"]


def _apply_review_recorded(state: KernelState, event: TraceEvent) -> None:
    record = review_from_jsonable(event.payload["record"])
    state.reviews[record.review_id] = record


def _apply_graph_updated(state: KernelState, event: TraceEvent) -> None:
    payload = event.payload
    change = payload["change"]
    if change == "add_node":
        fields = payload["node"]
        state.graph.insert_node(GraphNode(
            node_id=fields["node_id"],
            node_kind=NodeKind(fields["node_kind"]),
            content_hash=fields["content_hash"],
            quality=fields["quality"],
            created_tick=fields["created_tick"],
            lifecycle=None if fields["lifecycle"] is None
            else LifecycleState(fields["lifecycle"]),
        ))
    elif change == "add_edge":
        fields = payload["edge"]
        state.graph.insert_edge(GraphEdge(
            src=fields["src"],
            relation=RelationKind(fields["relation"]),
            dst=fields["dst"],
            recorded_by=fields["recorded_by"],
        ))
    elif change == "set_node_lifecycle":
        state.graph.update_node(
            payload["node_id"],
            lifecycle=LifecycleState(payload["lifecycle"]))
    else:
        raise UnknownEventKind(f"graph change {change!r}")


def _apply_cycle_started(state: KernelState, event: TraceEvent) -> None:
    del state, event


def _apply_cycle_completed(state: KernelState, event: TraceEvent) -> None:
    state.cycle_count = event.payload["cycle_index"]


_APPLIERS = {
    EventKind.ARTIFACT_REGISTERED: _apply_artifact_registered,
    EventKind.EVALUATION_RECORDED: _apply_evaluation_recorded,
    EventKind.LIFECYCLE_TRANSITION: _apply_lifecycle_transition,
    EventKind.MUTATION_PROPOSED: _apply_mutation_proposed,
    EventKind.MUTATION_STAGED: _apply_mutation_staged,
    EventKind.MUTATION_APPLIED: _apply_mutation_applied,
    EventKind.MUTATION_REJECTED: _apply_mutation_rejected,
    EventKind.ROLLBACK_EVENT: _apply_rollback_event,
    EventKind.REVIEW_RECORDED: _apply_review_recorded,
    EventKind.GRAPH_UPDATED: _apply_graph_updated,
    EventKind.CYCLE_STARTED: _apply_cycle_started,
    EventKind.CYCLE_COMPLETED: _apply_cycle_completed,
}


def replay_events(events: list[TraceEvent]) -> KernelState:
    """Rebuild state purely from the log; requires an intact chain."""
    report = verify_chain(events)
    if not report.ok:
        first = report.violations[0]
        raise ChainBroken(f"{first.kind} at event {first.index}: {first.detail}")
    state = KernelState()
    for event in events:
        apply_event(state, event)
    return state


# -- command transaction ---------------------------------------------------

class Transaction:
    """Accumulates one command's events against a private state clone."""

    def __init__(self, state: KernelState, head_index: int,
                 head_hash: str) -> None:
        self.state = state.clone()
        self.next_index = head_index + 1
        self._prev_hash = head_hash
        self.tick = state.tick + 1
        self.events: list[TraceEvent] = []

    def next_event_id(self) -> str:
        return event_id_for_index(self.next_index)

    def emit(self, kind: EventKind, actor: str, payload: dict) -> TraceEvent:
        event = make_event(self.next_index, kind, actor, self.tick,
                           to_jsonable(payload), self._prev_hash)
        self.events.append(event)
        self.next_index += 1
        self._prev_hash = event.this_hash
        apply_event(self.state, event)
        return event


class GovernanceKernel:
    """Single-writer command kernel over the event-sourced registries."""

    def __init__(self, store: EventStore | None = None,
                 policy: GovernancePolicy | None = None) -> None:
        self.policy = policy if policy is not None else DEFAULT_POLICY
        self.store = store
        self.state = KernelState()
        self.events: list[TraceEvent] = []
        self._write_lock = threading.Lock()
        if store is not None:
            existing = store.read_events()
            if existing:
                report = verify_chain(existing)
                if not report.ok:
                    first = report.violations[0]
                    raise ChainBroken(
                        f"{first.kind} at event {first.index}: {first.detail}")
                for event in existing:
                    apply_event(self.state, event)
                self.events = existing

    # -- heads -------------------------------------------------------------

    @property
    def head_index(self) -> int:
        return len(self.events) - 1

    @property
    def head_hash(self) -> str:
        return self.events[-1].this_hash if self.events else GENESIS_HASH

    def _execute(self, handler):
        with self._write_lock:
            txn = Transaction(self.state, self.head_index, self.head_hash)
            result = handler(txn)
            if txn.events:
                if self.store is not None:
                    self.store.append_batch(txn.events)
                before = len(self.events)
                self.events.extend(txn.events)
                self.state = txn.state
                self._maybe_snapshot(before)
            return result

    def _maybe_snapshot(self, before: int) -> None:
        if self.store is None or self.store.snapshot_interval <= 0:
            return
        interval = self.store.snapshot_interval
        if len(self.events) // interval > before // interval:
            self.store.write_snapshot(
                Snapshot.of_state(self.state, as_of_event=self.head_index))

    # -- read access ---------------------------------------------------------

    def capability(self, capability_id: str) -> CapabilityRecord:
        record = self.state.capabilities.get(capability_id)
        if record is None:
            raise UnknownCapability(capability_id)
        return record

    def config(self, config_id: str) -> HarnessConfig:
        record = self.state.configs.get(config_id)
        if record is None:
            raise UnknownConfig(config_id)
        return record

    def mutation(self, mutation_id: str) -> MutationRecord:
        record = self.state.mutations.get(mutation_id)
        if record is None:
            raise NotFound(mutation_id)
        return record

    def resolve(self, entity_id: str):
        return self.state.resolve(entity_id)

    def snapshot_state(self) -> HarnessState:
        return HarnessState(
            active_config=self.state.active_config,
            graph_version=self.state.graph.graph_version,
            log_head=self.head_hash,
            cycle_count=self.state.cycle_count,
        )

    def lineage(self, node_id: str) -> LineageView:
        return self.state.graph.lineage(node_id)

    def compose(self, skills, context, bound: int = 12):
        return self.state.graph.compose(
            skills, context, self.policy.quality_weights,
            self._component_resolver(self.state), bound=bound)

    def verify_graph(self) -> list[str]:
        state = self.state

        def content_of(node_id: str) -> str | None:
            record = state.capabilities.get(node_id)
            return record.content_hash if record is not None else None

        def lifecycle_of(node_id: str) -> LifecycleState | None:
            record = state.capabilities.get(node_id)
            return record.lifecycle if record is not None else None

        return state.graph.verify(content_of, lifecycle_of)

    @staticmethod
    def _component_resolver(state: KernelState):
        def resolve(node_id: str) -> QualityComponents | None:
            record = state.capabilities.get(node_id)
            return record.quality if record is not None else None
        return resolve

    # -- registration ---------------------------------------------------------

    def register_capability(self, content: str, kind: CapabilityKind,
                            created_by: str | None = None,
                            actor: str = KERNEL_ACTOR) -> CapabilityRecord:
        return self._execute(
            lambda txn: self._register_capability(txn, content, kind,
                                                  created_by, actor))

    def _register_capability(self, txn: Transaction, content: str,
                             kind: CapabilityKind, created_by: str | None,
                             actor: str) -> CapabilityRecord:
        if not content:
            raise EmptyContent("capability content must be non-empty")
        if created_by is None:
            # Self-created: the registration event is the creation trace.
            created_by = txn.next_event_id()
        else:
            index = index_for_event_id(created_by)
            if index is None or index >= txn.next_index:
                raise UnknownEvent(created_by)
        content_hash = digest_hex(content)
        for record in txn.state.capabilities.values():
            if (record.content_hash == content_hash and record.kind is kind
                    and record.lifecycle is not LifecycleState.DEPRECATED):
                raise DuplicateContent(
                    f"{kind.value} content already registered as "
                    f"{record.capability_id}")
        capability_id = derive_id("capability", kind.value, content_hash,
                                  created_by)
        if capability_id in txn.state.capabilities:
            raise DuplicateContent(capability_id)
        record = CapabilityRecord(
            capability_id=capability_id, kind=kind, content=content,
            content_hash=content_hash, created_by=created_by)
        txn.emit(EventKind.ARTIFACT_REGISTERED, actor,
                 {"entity": "capability", "record": to_jsonable(record)})
        return txn.state.capabilities[capability_id]

    def register_artifact(self, content: str, kind: CapabilityKind,
                          created_by: str | None = None,
                          actor: str = KERNEL_ACTOR) -> CapabilityRecord:
        """Register a capability plus its graph node and creation edge.

        One transaction covering what a cycle does per generated artifact:
        the capability record, a trace node for the creating event, the
        capability node, and the generated_by edge between them.
        """
        return self._execute(
            lambda txn: self._register_artifact(txn, content, kind,
                                                created_by, actor))

    def _register_artifact(self, txn: Transaction, content: str,
                           kind: CapabilityKind, created_by: str | None,
                           actor: str) -> CapabilityRecord:
        record = self._register_capability(txn, content, kind, created_by,
                                           actor)
        if record.created_by not in txn.state.graph.nodes:
            self._add_node(txn, record.created_by, NodeKind.TRACE, actor)
        self._add_node(txn, record.capability_id,
                       CAPABILITY_KIND_TO_NODE[record.kind.value], actor)
        self._add_edge(txn, record.capability_id, RelationKind.GENERATED_BY,
                       record.created_by, actor)
        return txn.state.capabilities[record.capability_id]

    def register_config(self, config: HarnessConfig, activate: bool = False,
                        actor: str = KERNEL_ACTOR) -> HarnessConfig:
        return self._execute(
            lambda txn: self._register_config(txn, config, activate, actor))

    def _register_config(self, txn: Transaction, config: HarnessConfig,
                         activate: bool, actor: str) -> HarnessConfig:
        if config.config_id in txn.state.configs:
            raise DuplicateContent(f"config {config.config_id} already exists")
        for artifact_id in config.artifacts:
            if artifact_id not in txn.state.capabilities:
                raise UnknownCapability(artifact_id)
        txn.emit(EventKind.ARTIFACT_REGISTERED, actor,
                 {"entity": "config", "record": to_jsonable(config),
                  "activate": bool(activate)})
        return txn.state.configs[config.config_id]

    def register_skill_spec(self, spec: GeneratedSkillSpec,
                            actor: str = KERNEL_ACTOR) -> GeneratedSkillSpec:
        return self._execute(
            lambda txn: self._register_skill_spec(txn, spec, actor))

    def _register_skill_spec(self, txn: Transaction, spec: GeneratedSkillSpec,
                             actor: str) -> GeneratedSkillSpec:
        record = txn.state.capabilities.get(spec.capability_id)
        if record is None:
            raise UnknownCapability(spec.capability_id)
        if record.kind is not CapabilityKind.SKILL:
            raise KindMismatch(
                f"{spec.capability_id} is {record.kind.value}, not skill")
        if spec.skill_id in txn.state.skill_specs:
            raise DuplicateContent(spec.skill_id)
        for params in (spec.inputs, spec.outputs):
            names = [p.name for p in params]
            if len(names) != len(set(names)):
                raise DuplicateContent("skill parameter names must be unique")
        txn.emit(EventKind.ARTIFACT_REGISTERED, actor,
                 {"entity": "skill_spec", "record": to_jsonable(spec)})
        return txn.state.skill_specs[spec.skill_id]

    # -- evaluation ------------------------------------------------------------

    def record_evaluation(self, capability_id: str, evaluator_id: str,
                          quality: QualityComponents,
                          actor: str | None = None) -> CapabilityRecord:
        return self._execute(
            lambda txn: self._record_evaluation(txn, capability_id,
                                                evaluator_id, quality, actor))

    def _record_evaluation(self, txn: Transaction, capability_id: str,
                           evaluator_id: str, quality: QualityComponents,
                           actor: str | None) -> CapabilityRecord:
        if capability_id not in txn.state.capabilities:
            raise UnknownCapability(capability_id)
        node_quality = None
        if capability_id in txn.state.graph.nodes:
            node_quality = quality_value(quality, self.policy.quality_weights)
        txn.emit(EventKind.EVALUATION_RECORDED,
                 actor if actor is not None else evaluator_id,
                 {"capability_id": capability_id,
                  "evaluator_id": evaluator_id,
                  "quality": to_jsonable(quality),
                  "node_quality": node_quality})
        return txn.state.capabilities[capability_id]

    # -- graph commands ----------------------------------------------------------

    def add_node(self, entity_id: str, kind: NodeKind,
                 actor: str = KERNEL_ACTOR) -> GraphNode:
        return self._execute(
            lambda txn: self._add_node(txn, entity_id, kind, actor))

    def _node_fields(self, txn: Transaction, entity_id: str,
                     kind: NodeKind) -> dict:
        """Populate node metadata from the entity's registry record."""
        state = txn.state
        if kind in CAPABILITY_NODE_KINDS:
            record = state.capabilities.get(entity_id)
            if record is None:
                raise UnknownEntity(entity_id)
            if record.kind.value != kind.value:
                raise KindMismatch(
                    f"{entity_id} is {record.kind.value}, not {kind.value}")
            return {"content_hash": record.content_hash,
                    "quality": quality_value(record.quality,
                                             self.policy.quality_weights),
                    "lifecycle": record.lifecycle.value}
        if kind is NodeKind.CONFIG:
            record = state.configs.get(entity_id)
            if record is None:
                raise UnknownEntity(entity_id)
            return {"content_hash": digest_hex(to_jsonable(record)),
                    "quality": 0.0, "lifecycle": None}
        if kind is NodeKind.MUTATION:
            record = state.mutations.get(entity_id)
            if record is None:
                raise UnknownEntity(entity_id)
            return {"content_hash": digest_hex(to_jsonable(record.contract)),
                    "quality": 0.0, "lifecycle": None}
        if kind is NodeKind.TRACE:
            index = index_for_event_id(entity_id)
            if index is None or index >= txn.next_index:
                raise UnknownEntity(entity_id)
            if index <= self.head_index:
                content_hash = self.events[index].this_hash
            else:
                content_hash = txn.events[index - self.head_index - 1].this_hash
            return {"content_hash": content_hash,
                    "quality": 0.0, "lifecycle": None}
        # Context tags and policy labels carry no registry record.
        return {"content_hash": digest_hex(entity_id),
                "quality": 0.0, "lifecycle": None}

    def _add_node(self, txn: Transaction, entity_id: str, kind: NodeKind,
                  actor: str) -> GraphNode:
        txn.state.graph.check_node_new(entity_id)
        fields = self._node_fields(txn, entity_id, kind)
        txn.emit(EventKind.GRAPH_UPDATED, actor,
                 {"change": "add_node",
                  "node": {"node_id": entity_id,
                           "node_kind": kind.value,
                           "content_hash": fields["content_hash"],
                           "quality": fields["quality"],
                           "created_tick": txn.tick,
                           "lifecycle": fields["lifecycle"],
                           "lineage": []}})
        return txn.state.graph.node(entity_id)

    def add_edge(self, src: str, relation: RelationKind, dst: str,
                 actor: str = KERNEL_ACTOR) -> GraphEdge:
        return self._execute(
            lambda txn: self._add_edge(txn, src, relation, dst, actor))

    def _add_edge(self, txn: Transaction, src: str, relation: RelationKind,
                  dst: str, actor: str) -> GraphEdge:
        graph = txn.state.graph
        src, dst = graph.normalize_endpoints(src, relation, dst)
        if graph.has_edge(src, relation, dst):
            for edge in graph.out_edges(src, relation):
                if edge.dst == dst:
                    return edge
        graph.check_edge(src, relation, dst)
        txn.emit(EventKind.GRAPH_UPDATED, actor,
                 {"change": "add_edge",
                  "edge": {"src": src, "relation": relation.value, "dst": dst,
                           "recorded_by": txn.next_event_id()}})
        return txn.state.graph.edges[-1]

    # -- lifecycle ---------------------------------------------------------------

    def transition(self, capability_id: str, target: LifecycleState,
                   evidence: tuple[str, ...] = (), review: str | None = None,
                   actor: str = KERNEL_ACTOR) -> LifecycleRecord:
        return self._execute(
            lambda txn: self._transition(txn, capability_id, target,
                                         tuple(evidence), review, actor))

    def _valid_evidence(self, state: KernelState, capability_id: str,
                        evidence: tuple[str, ...]) -> tuple[list[str], int]:
        """Filter to ids of real evaluation events for this capability."""
        entries = {event_id_for_index(e["event_index"]): e["evaluator_id"]
                   for e in state.evaluation_log
                   if e["capability_id"] == capability_id}
        valid: list[str] = []
        evaluators: set[str] = set()
        for event_id in evidence:
            if event_id in entries and event_id not in valid:
                valid.append(event_id)
                evaluators.add(entries[event_id])
        return valid, len(evaluators)

    def _check_transition(self, txn: Transaction, capability_id: str,
                          target: LifecycleState, evidence: tuple[str, ...],
                          review: str | None
                          ) -> tuple[CapabilityRecord, list[str], str | None]:
        state = txn.state
        record = state.capabilities.get(capability_id)
        if record is None:
            raise UnknownCapability(capability_id)
        if not is_legal(record.lifecycle, target):
            raise IllegalTransition(
                f"{record.lifecycle.value} -> {target.value}")
        valid, distinct = self._valid_evidence(state, capability_id, evidence)
        if target is LifecycleState.DEPRECATED:
            # Escape hatch: deprecation never checks thresholds or review.
            return record, valid, review
        requirement = required_evidence((record.lifecycle, target),
                                        self.policy.evidence_table)
        if len(valid) < requirement.min_evidence_events:
            raise InsufficientEvidence(
                f"{len(valid)} evidence events, "
                f"{requirement.min_evidence_events} required")
        if distinct < requirement.min_distinct_evaluators:
            raise InsufficientEvidence(
                f"{distinct} distinct evaluators, "
                f"{requirement.min_distinct_evaluators} required")
        if record.quality.risk > requirement.max_risk:
            raise InsufficientEvidence(
                f"risk {record.quality.risk} exceeds "
                f"ceiling {requirement.max_risk}")
        if requirement.requires_approved_review:
            review = review if review is not None \
                else self._latest_approval(state, capability_id)
            if review is None:
                raise MissingApproval(
                    f"{record.lifecycle.value} -> {target.value} requires "
                    "an approved review")
            approval = state.reviews.get(review)
            if approval is None or approval.subject_id != capability_id \
                    or approval.decision is not ReviewDecision.APPROVE:
                raise MissingApproval(review)
        return record, valid, review

    @staticmethod
    def _latest_approval(state: KernelState, subject_id: str) -> str | None:
        approved = [r.review_id for r in state.reviews.values()
                    if r.subject_id == subject_id
                    and r.decision is ReviewDecision.APPROVE]
        return max(approved) if approved else None

    def _transition(self, txn: Transaction, capability_id: str,
                    target: LifecycleState, evidence: tuple[str, ...],
                    review: str | None, actor: str) -> LifecycleRecord:
        record, valid, review = self._check_transition(
            txn, capability_id, target, evidence, review)
        txn.emit(EventKind.LIFECYCLE_TRANSITION, actor,
                 {"capability_id": capability_id,
                  "from_state": record.lifecycle.value,
                  "to_state": target.value,
                  "evidence": valid,
                  "review": review})
        return txn.state.lifecycle_log[-1]

    # -- reviews -------------------------------------------------------------------

    def review(self, subject_id: str, reviewer: str, risk: float,
               evidence: tuple[str, ...] = (), rationale: str = "",
               actor: str | None = None) -> CapabilityReview:
        return self._execute(
            lambda txn: self._review(txn, subject_id, reviewer, risk,
                                     tuple(evidence), rationale, actor))

    def _review_subject_evidence(self, state: KernelState,
                                 subject_id: str) -> tuple[str, ...]:
        record = state.capabilities.get(subject_id)
        if record is not None:
            return record.evidence
        mutation = state.mutations.get(subject_id)
        if mutation is not None:
            return mutation.evidence
        return ()

    def _review(self, txn: Transaction, subject_id: str, reviewer: str,
                risk: float, evidence: tuple[str, ...], rationale: str,
                actor: str | None) -> CapabilityReview:
        state = txn.state
        if subject_id not in state.capabilities \
                and subject_id not in state.mutations \
                and subject_id not in state.configs:
            raise UnknownSubject(subject_id)
        if not 0.0 <= risk <= 1.0:
            raise RiskOutOfRange(f"risk {risk} outside [0, 1]")
        if not evidence:
            evidence = self._review_subject_evidence(state, subject_id)
        converted = False
        if risk > self.policy.risk_gate:
            decision = ReviewDecision.REJECT
        elif risk < self.policy.auto_approve_below_risk and evidence:
            decision = ReviewDecision.APPROVE
        else:
            decision = ReviewDecision.DEFER
            deferring = {r.reviewer for r in state.reviews.values()
                         if r.subject_id == subject_id
                         and r.decision is ReviewDecision.DEFER}
            deferring.add(reviewer)
            if len(deferring) >= self.policy.reviewer_quorum and evidence:
                decision = ReviewDecision.APPROVE
                converted = True
        record = CapabilityReview(
            review_id=f"rev-{txn.next_index:06d}",
            subject_id=subject_id,
            reviewer=reviewer,
            evidence_refs=evidence,
            risk_assessment=float(risk),
            decision=decision,
            rationale=rationale,
        )
        txn.emit(EventKind.REVIEW_RECORDED,
                 actor if actor is not None else reviewer,
                 {"record": to_jsonable(record),
                  "converted_by_quorum": converted})
        return txn.state.reviews[record.review_id]

    # -- mutations ------------------------------------------------------------------

    def propose_mutation(self, base_config: str, contract: ChangeContract,
                         delta: MutationDelta, actor: str = KERNEL_ACTOR,
                         mutation_id: str | None = None) -> MutationRecord:
        return self._execute(
            lambda txn: self._propose_mutation(txn, base_config, contract,
                                               delta, actor, mutation_id))

    def _propose_mutation(self, txn: Transaction, base_config: str,
                          contract: ChangeContract, delta: MutationDelta,
                          actor: str,
                          mutation_id: str | None) -> MutationRecord:
        state = txn.state
        if base_config not in state.configs:
            raise UnknownConfig(base_config)
        check_contract_complete(contract)
        check_delta(contract, delta)
        evaluation_node = state.graph.nodes.get(contract.falsifying_evaluation)
        if evaluation_node is None:
            raise UnknownNode(contract.falsifying_evaluation)
        if evaluation_node.node_kind not in (NodeKind.EVALUATOR,
                                             NodeKind.BENCHMARK):
            raise KindMismatch(
                f"falsifying evaluation {contract.falsifying_evaluation} is "
                f"{evaluation_node.node_kind.value}, not evaluator/benchmark")
        if mutation_id is None:
            mutation_id = derive_id("mutation", base_config,
                                    contract.component.value,
                                    txn.next_event_id())
        if mutation_id in state.mutations:
            raise DuplicateContent(mutation_id)
        record = MutationRecord(
            mutation_id=mutation_id,
            base_config=base_config,
            contract=contract,
            delta=delta,
            status=MutationStatus.PROPOSED,
            evidence=(txn.next_event_id(),),
        )
        txn.emit(EventKind.MUTATION_PROPOSED, actor,
                 {"record": to_jsonable(record)})
        self._add_node(txn, mutation_id, NodeKind.MUTATION, actor)
        return txn.state.mutations[mutation_id]

    def stage_mutation(self, mutation_id: str, validation: ValidationResult,
                       actor: str = KERNEL_ACTOR) -> MutationRecord:
        record, rejected = self._execute(
            lambda txn: self._stage_mutation(txn, mutation_id, validation,
                                             actor))
        if rejected is not None:
            raise rejected
        return record

    def _stage_mutation(self, txn: Transaction, mutation_id: str,
                        validation: ValidationResult, actor: str
                        ) -> tuple[MutationRecord, Exception | None]:
        state = txn.state
        record = state.mutations.get(mutation_id)
        if record is None:
            raise NotFound(mutation_id)
        if record.status is not MutationStatus.PROPOSED:
            raise WrongStatus(
                f"{mutation_id} is {record.status.value}, not proposed")
        for other in state.mutations.values():
            if other.status is MutationStatus.STAGED \
                    and other.base_config == record.base_config:
                raise StagingConflict(
                    f"{other.mutation_id} is already staged on "
                    f"{record.base_config}")
        contract = record.contract
        if validation.evaluator_id != contract.falsifying_evaluation:
            raise WrongEvaluator(
                f"validation from {validation.evaluator_id}, contract "
                f"requires {contract.falsifying_evaluation}")
        if validation.metric != contract.expected_improvement.metric:
            raise WrongEvaluator(
                f"validation measured {validation.metric}, contract "
                f"expects {contract.expected_improvement.metric}")
        if validation.delta < contract.expected_improvement.min_delta:
            reason = (f"improvement {validation.delta} below required "
                      f"{contract.expected_improvement.min_delta}")
            txn.emit(EventKind.MUTATION_REJECTED, actor,
                     {"mutation_id": mutation_id, "reason": reason,
                      "validation": to_jsonable(validation)})
            self._add_edge(txn, mutation_id, RelationKind.FAILS_UNDER,
                           contract.falsifying_evaluation, actor)
            return (txn.state.mutations[mutation_id],
                    ImprovementNotMet(reason))
        txn.emit(EventKind.MUTATION_STAGED, actor,
                 {"mutation_id": mutation_id,
                  "validation": to_jsonable(validation)})
        return txn.state.mutations[mutation_id], None

    def apply_mutation(self, mutation_id: str,
                       actor: str = KERNEL_ACTOR) -> HarnessConfig:
        return self._execute(
            lambda txn: self._apply_mutation(txn, mutation_id, actor))

    def _result_config(self, txn: Transaction,
                       record: MutationRecord) -> HarnessConfig:
        """Build h' = base with exactly the contract's component replaced."""
        state = txn.state
        base = state.configs[record.base_config]
        config_id = derive_id("config", record.base_config,
                              record.mutation_id)
        values = base.components()
        delta = record.delta
        field_name = COMPONENT_FIELD[delta.component]
        if field_name == "graph_version":
            for item in delta.value:
                try:
                    relation = RelationKind(item["relation"])
                except ValueError:
                    raise KindMismatch(item["relation"]) from None
                self._add_edge(txn, item["src"], relation, item["dst"],
                               KERNEL_ACTOR)
            values["graph_version"] = txn.state.graph.graph_version
        elif field_name == "artifacts":
            for artifact_id in delta.value:
                if artifact_id not in state.capabilities:
                    raise UnknownCapability(artifact_id)
            values["artifacts"] = list(delta.value)
        else:
            values[field_name] = delta.value
        return HarnessConfig(
            config_id=config_id,
            prompt_policy=values["prompt_policy"],
            tools=tuple(values["tools"]),
            evaluators=tuple(values["evaluators"]),
            memory=values["memory"],
            governance=values["governance"],
            artifacts=tuple(values["artifacts"]),
            graph_version=values["graph_version"],
        )

    def _apply_mutation(self, txn: Transaction, mutation_id: str,
                        actor: str) -> HarnessConfig:
        state = txn.state
        record = state.mutations.get(mutation_id)
        if record is None:
            raise NotFound(mutation_id)
        if record.status is not MutationStatus.STAGED:
            raise WrongStatus(
                f"{mutation_id} is {record.status.value}, not staged")
        if self._latest_approval(state, mutation_id) is None:
            raise MissingApproval(
                f"no approved review recorded for {mutation_id}")
        result = self._result_config(txn, record)
        txn.emit(EventKind.MUTATION_APPLIED, actor,
                 {"mutation_id": mutation_id,
                  "result_config": to_jsonable(result),
                  "previous_active": state.active_config})
        graph = txn.state.graph
        if record.base_config not in graph.nodes:
            self._add_node(txn, record.base_config, NodeKind.CONFIG, actor)
        self._add_node(txn, result.config_id, NodeKind.CONFIG, actor)
        self._add_edge(txn, result.config_id, RelationKind.MUTATED_FROM,
                       record.base_config, actor)
        return txn.state.configs[result.config_id]

    def rollback_mutation(self, mutation_id: str, trigger: RollbackTrigger,
                          actor: str = KERNEL_ACTOR) -> HarnessConfig:
        return self._execute(
            lambda txn: self._rollback_mutation(txn, mutation_id, trigger,
                                                actor))

    def _rollback_mutation(self, txn: Transaction, mutation_id: str,
                           trigger: RollbackTrigger,
                           actor: str) -> HarnessConfig:
        state = txn.state
        record = state.mutations.get(mutation_id)
        if record is None:
            raise NotFound(mutation_id)
        if record.status is not MutationStatus.APPLIED:
            raise WrongStatus(
                f"{mutation_id} is {record.status.value}, not applied")
        condition = find_matching_condition(record.contract, trigger)
        if condition is None and not trigger.operator_order:
            raise ConditionNotMet(
                f"trigger {trigger.metric}={trigger.observed} matches no "
                "rollback condition")
        txn.emit(EventKind.ROLLBACK_EVENT, actor,
                 {"mutation_id": mutation_id,
                  "restored_config": record.base_config,
                  "rolled_back_config": record.result_config,
                  "trigger": to_jsonable(trigger),
                  "condition": None if condition is None
                  else to_jsonable(condition)})
        if record.result_config in txn.state.graph.nodes:
            txn.emit(EventKind.GRAPH_UPDATED, actor,
                     {"change": "set_node_lifecycle",
                      "node_id": record.result_config,
                      "lifecycle": LifecycleState.DEPRECATED.value})
        return txn.state.configs[record.base_config]

    # -- audit ------------------------------------------------------------------------

    def audit_verify(self) -> AuditReport:
        """Chain integrity plus replay-equality over the full log."""
        if self.store is not None:
            chain = self.store.verify_file()
        else:
            chain = verify_chain(self.events)
        report = AuditReport(events_checked=chain.events_checked,
                             violations=list(chain.violations))
        if report.violations:
            report.replay_matches = False
            return report
        replayed = KernelState()
        for event in self.events:
            apply_event(replayed, event)
        report.replay_matches = (
            canonical_text(replayed.to_jsonable())
            == canonical_text(self.state.to_jsonable()))
        return report

    def replay(self) -> KernelState:
        return replay_events(self.events)

    def write_snapshot(self) -> str:
        if self.store is None:
            raise UsageError("kernel has no persistence store")
        return self.store.write_snapshot(
            Snapshot.of_state(self.state, as_of_event=self.head_index))

    # -- governance cycle ---------------------------------------------------------------

    def run_cycle(self, workload: Workload,
                  actor: str = KERNEL_ACTOR) -> CycleReport:
        return self._execute(
            lambda txn: self._run_cycle(txn, workload, actor))

    def _run_cycle(self, txn: Transaction, workload: Workload,
                   actor: str) -> CycleReport:
        cycle_index = txn.state.cycle_count + 1
        started = txn.emit(EventKind.CYCLE_STARTED, actor,
                           {"cycle_index": cycle_index,
                            "workload": workload.summary()})
        generated = self._cycle_register(txn, workload, started)
        self._cycle_propose(txn, workload)
        self._cycle_evaluate(txn, workload)
        selection = self._cycle_select(txn, workload)
        review_ids = self._cycle_review(txn, workload)
        staged = self._cycle_stage(txn, workload)
        self._cycle_apply(txn, workload)
        promotions, deprecations = self._cycle_lifecycle(txn, workload)
        rollbacks = self._cycle_rollbacks(txn, workload)
        evaluated = ()
        if selection is not None:
            evaluated = tuple(sorted(selection.scores.items()))
        report = CycleReport(
            cycle_index=cycle_index,
            generated=tuple(generated),
            evaluated=evaluated,
            reviews=tuple(review_ids),
            staged_mutations=tuple(staged),
            promotions=tuple(promotions),
            deprecations=tuple(deprecations),
            rollbacks=tuple(rollbacks),
        )
        txn.emit(EventKind.CYCLE_COMPLETED, actor,
                 {"cycle_index": cycle_index,
                  "report": to_jsonable(report),
                  "selection": None if selection is None
                  else self._selection_payload(workload, selection)})
        return report

    @staticmethod
    def _selection_payload(workload: Workload,
                           selection: SelectionResult) -> dict:
        return {
            "winner": selection.winner,
            "tie_broken": selection.tie_broken,
            "scores": dict(sorted(selection.scores.items())),
            "excluded": dict(sorted(selection.excluded.items())),
            "measurements": [to_jsonable(m) for m in workload.measurements],
        }

    def _cycle_register(self, txn: Transaction, workload: Workload,
                        started: TraceEvent) -> list[str]:
        generated: list[str] = []
        trace_id = started.event_id
        for item in workload.artifacts:
            record = self._register_capability(txn, item.content, item.kind,
                                               trace_id, item.actor)
            generated.append(record.capability_id)
            if trace_id not in txn.state.graph.nodes:
                self._add_node(txn, trace_id, NodeKind.TRACE, item.actor)
            self._add_node(txn, record.capability_id,
                           CAPABILITY_KIND_TO_NODE[record.kind.value],
                           item.actor)
            self._add_edge(txn, record.capability_id,
                           RelationKind.GENERATED_BY, trace_id, item.actor)
        for spec in workload.skill_specs:
            self._register_skill_spec(txn, spec, actor="cycle")
        for entry in workload.configs:
            self._register_config(txn, entry.config, entry.activate,
                                  entry.actor)
            if entry.config.config_id not in txn.state.graph.nodes:
                self._add_node(txn, entry.config.config_id, NodeKind.CONFIG,
                               entry.actor)
        for node in workload.nodes:
            if node.entity_id not in txn.state.graph.nodes:
                self._add_node(txn, node.entity_id, node.kind, actor="cycle")
        for edge in workload.edges:
            self._add_edge(txn, edge.src, edge.relation, edge.dst,
                           actor="cycle")
        return generated

    def _cycle_propose(self, txn: Transaction, workload: Workload) -> None:
        for proposal in workload.proposals:
            base = proposal.base_config
            if base is None:
                base = txn.state.active_config
            if base is None:
                raise UnknownConfig("no active config to mutate")
            self._propose_mutation(txn, base, proposal.contract,
                                   proposal.delta, proposal.actor,
                                   proposal.mutation_id)

    def _cycle_evaluate(self, txn: Transaction, workload: Workload) -> None:
        for evaluation in workload.evaluations:
            self._record_evaluation(txn, evaluation.capability_id,
                                    evaluation.evaluator_id,
                                    evaluation.quality,
                                    evaluation.evaluator_id)

    def _cycle_select(self, txn: Transaction,
                      workload: Workload) -> SelectionResult | None:
        if not workload.measurements:
            return None
        budget = self.policy.cost_budget
        candidates = []
        for measurement in workload.measurements:
            if measurement.cost > budget:
                measurement = measurement.with_flag(
                    ConstraintFlag.COST_EXCEEDED)
            candidates.append(measurement)
        return select(candidates, self.policy.weights)

    def _cycle_review(self, txn: Transaction,
                      workload: Workload) -> list[str]:
        review_ids: list[str] = []
        for request in workload.reviews:
            record = self._review(txn, request.subject_id, request.reviewer,
                                  request.risk, tuple(request.evidence),
                                  request.rationale, request.reviewer)
            review_ids.append(record.review_id)
        return review_ids

    def _cycle_stage(self, txn: Transaction, workload: Workload) -> list[str]:
        staged: list[str] = []
        for request in workload.stage_requests:
            record = txn.state.mutations.get(request.mutation_id)
            if record is None or record.status is not MutationStatus.PROPOSED:
                continue
            if self._latest_approval(txn.state, request.mutation_id) is None:
                continue
            record, rejected = self._stage_mutation(
                txn, request.mutation_id, request.validation, request.actor)
            if rejected is None:
                staged.append(request.mutation_id)
        return staged

    def _cycle_apply(self, txn: Transaction, workload: Workload) -> None:
        for mutation_id in workload.apply_requests:
            record = txn.state.mutations.get(mutation_id)
            if record is None or record.status is not MutationStatus.STAGED:
                continue
            if self._latest_approval(txn.state, mutation_id) is None:
                continue
            self._apply_mutation(txn, mutation_id, KERNEL_ACTOR)

    def _cycle_lifecycle(self, txn: Transaction, workload: Workload
                         ) -> tuple[list[LifecycleRecord],
                                    list[LifecycleRecord]]:
        promotions: list[LifecycleRecord] = []
        deprecations: list[LifecycleRecord] = []
        if workload.auto_promote:
            for capability_id in sorted(txn.state.capabilities):
                record = txn.state.capabilities[capability_id]
                target = next_promotion(record.lifecycle)
                if target is None:
                    continue
                fresh = tuple(
                    event_id_for_index(entry["event_index"])
                    for entry in txn.state.fresh_evidence(capability_id))
                try:
                    promoted = self._transition(txn, capability_id, target,
                                                fresh, None, KERNEL_ACTOR)
                except DomainError:
                    continue
                promotions.append(promoted)
        for request in workload.transition_requests:
            evidence = tuple(
                event_id_for_index(entry["event_index"])
                for entry in txn.state.fresh_evidence(request.capability_id))
            record = self._transition(txn, request.capability_id,
                                      request.to_state, evidence,
                                      request.review, KERNEL_ACTOR)
            if request.to_state is LifecycleState.DEPRECATED:
                deprecations.append(record)
            else:
                promotions.append(record)
        return promotions, deprecations

    def _cycle_rollbacks(self, txn: Transaction,
                         workload: Workload) -> list[str]:
        if not workload.observed_metrics:
            return []
        rollbacks: list[str] = []
        for mutation_id in sorted(txn.state.mutations):
            record = txn.state.mutations[mutation_id]
            if record.status is not MutationStatus.APPLIED:
                continue
            # Automatic checks undo one step at a time: only the mutation
            # whose result is live can fire; its base becomes live and is
            # itself checked on the next cycle.
            if record.result_config != txn.state.active_config:
                continue
            fired = None
            for condition in record.contract.rollback_conditions:
                observed = workload.observed_metrics.get(condition.metric)
                if observed is not None \
                        and condition.matches(condition.metric, observed):
                    fired = RollbackTrigger(metric=condition.metric,
                                            observed=observed)
                    break
            if fired is None:
                continue
            self._rollback_mutation(txn, mutation_id, fired, KERNEL_ACTOR)
            rollbacks.append(mutation_id)
        return rollbacks

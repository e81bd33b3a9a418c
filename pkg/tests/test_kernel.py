"""Kernel commands: registration, lifecycle, reviews, mutations, cycles,
replay, and persistence."""

from __future__ import annotations

import threading

import pytest

from govkernel import (
    CapabilityKind,
    GovernanceKernel,
    LifecycleState,
    MutationComponent,
    MutationDelta,
    MutationStatus,
    NodeKind,
    QualityComponents,
    RelationKind,
    ReviewDecision,
    RollbackTrigger,
    ValidationResult,
    Workload,
)
from govkernel.canonical import canonical_text, derive_id, digest_hex
from govkernel.errors import (
    ChainBroken,
    ConditionNotMet,
    DuplicateContent,
    EmptyContent,
    IllegalTransition,
    ImprovementNotMet,
    InsufficientEvidence,
    KindMismatch,
    MissingApproval,
    RiskOutOfRange,
    StagingConflict,
    UnknownCapability,
    UnknownConfig,
    UnknownEvent,
    UnknownNode,
    UnknownSubject,
    UsageError,
    WrongEvaluator,
    WrongStatus,
)
from govkernel.events import EventKind
from govkernel.kernel import (
    WorkloadArtifact,
    WorkloadConfig,
    WorkloadEvaluation,
    WorkloadReview,
    WorkloadStage,
    WorkloadTransition,
    workload_from_jsonable,
)
from govkernel.records import GeneratedSkillSpec, SkillParam
from govkernel.selection import CandidateMeasurement
from govkernel.store import EventStore

from .conftest import (
    approve_mutation,
    evaluate,
    make_config,
    make_contract,
    passing_validation,
    register_evaluator,
)

S = LifecycleState


# -- registration -------------------------------------------------------------


def test_register_capability_self_reference(kernel):
    record = kernel.register_capability("summarize ticket", CapabilityKind.SKILL)
    assert record.created_by == "ev-000000"
    assert record.content_hash == digest_hex("summarize ticket")
    assert record.capability_id == derive_id(
        "capability", "skill", record.content_hash, "ev-000000")
    assert record.lifecycle is S.EXPERIMENTAL
    assert kernel.events[-1].kind is EventKind.ARTIFACT_REGISTERED


def test_register_capability_rejects_duplicates_and_bad_refs(kernel):
    kernel.register_capability("content", CapabilityKind.PROMPT)
    with pytest.raises(DuplicateContent):
        kernel.register_capability("content", CapabilityKind.PROMPT)
    # same content under a different kind is a different capability
    kernel.register_capability("content", CapabilityKind.TEST)
    with pytest.raises(EmptyContent):
        kernel.register_capability("", CapabilityKind.PROMPT)
    with pytest.raises(UnknownEvent):
        kernel.register_capability("x", CapabilityKind.PROMPT,
                                   created_by="ev-999999")
    with pytest.raises(UnknownEvent):
        kernel.register_capability("x", CapabilityKind.PROMPT,
                                   created_by="not-an-event")


def test_deprecated_content_may_be_reregistered(kernel):
    first = kernel.register_capability("v1", CapabilityKind.PROMPT)
    kernel.transition(first.capability_id, S.DEPRECATED)
    second = kernel.register_capability("v1", CapabilityKind.PROMPT)
    assert second.capability_id != first.capability_id


def test_register_artifact_builds_lineage(kernel):
    record = kernel.register_artifact("normalizer v1", CapabilityKind.SKILL)
    graph = kernel.state.graph
    assert graph.node(record.capability_id).node_kind is NodeKind.SKILL
    assert graph.node(record.created_by).node_kind is NodeKind.TRACE
    assert graph.has_edge(record.capability_id, RelationKind.GENERATED_BY,
                          record.created_by)
    view = kernel.lineage(record.capability_id)
    assert record.created_by in view.node_ids()
    assert kernel.verify_graph() == []


def test_register_config_checks_artifacts(kernel):
    cap = kernel.register_capability("artifact", CapabilityKind.WORKFLOW)
    with pytest.raises(UnknownCapability):
        kernel.register_config(make_config(artifacts=("missing",)))
    config = kernel.register_config(
        make_config(artifacts=(cap.capability_id,)), activate=True)
    assert kernel.state.active_config == config.config_id
    with pytest.raises(DuplicateContent):
        kernel.register_config(make_config())


def test_register_skill_spec_requires_skill_kind(kernel):
    tool = kernel.register_capability("a tool", CapabilityKind.TOOL)
    spec = GeneratedSkillSpec(
        skill_id="spec-1", capability_id=tool.capability_id,
        inputs=(SkillParam("x", "str"),), outputs=(SkillParam("y", "str"),),
        declared_failure_modes=("timeout",))
    with pytest.raises(KindMismatch):
        kernel.register_skill_spec(spec)
    with pytest.raises(UnknownCapability):
        kernel.register_skill_spec(
            GeneratedSkillSpec("spec-2", "missing", (), (), ()))
    skill = kernel.register_capability("a skill", CapabilityKind.SKILL)
    good = GeneratedSkillSpec(
        skill_id="spec-3", capability_id=skill.capability_id,
        inputs=(SkillParam("x", "str"), SkillParam("y", "int")),
        outputs=(SkillParam("out", "json"),),
        declared_failure_modes=())
    assert kernel.register_skill_spec(good) == good
    dup_params = GeneratedSkillSpec(
        skill_id="spec-4", capability_id=skill.capability_id,
        inputs=(SkillParam("x", "str"), SkillParam("x", "int")),
        outputs=(), declared_failure_modes=())
    with pytest.raises(DuplicateContent):
        kernel.register_skill_spec(dup_params)


# -- evaluations ---------------------------------------------------------------


def test_record_evaluation_updates_record_and_node(kernel):
    cap = kernel.register_artifact("skill body", CapabilityKind.SKILL)
    with pytest.raises(UnknownCapability):
        kernel.record_evaluation("missing", "eval-1", QualityComponents())
    evidence = evaluate(kernel, cap.capability_id, "eval-1",
                        performance=0.9, risk=0.1)
    record = kernel.capability(cap.capability_id)
    assert record.quality.performance == 0.9
    assert record.evidence == (evidence,)
    assert kernel.state.graph.node(cap.capability_id).quality > 0
    assert kernel.events[-1].actor == "eval-1"


# -- lifecycle transitions -------------------------------------------------------


def promote_to_trusted(kernel, capability_id):
    """Drive a capability to trusted under the default policy."""
    evidence = [evaluate(kernel, capability_id, f"eval-{i % 2}", risk=0.1)
                for i in range(3)]
    kernel.transition(capability_id, S.VALIDATED, evidence=(evidence[0],))
    review = kernel.review(capability_id, "gov-1", risk=0.1)
    assert review.decision is ReviewDecision.APPROVE
    return kernel.transition(capability_id, S.TRUSTED,
                             evidence=tuple(evidence),
                             review=review.review_id)


def test_promotion_requires_evidence(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    with pytest.raises(InsufficientEvidence):
        kernel.transition(cap.capability_id, S.VALIDATED)
    evidence = evaluate(kernel, cap.capability_id, "eval-1")
    record = kernel.transition(cap.capability_id, S.VALIDATED,
                               evidence=(evidence,))
    assert record.from_state is S.EXPERIMENTAL
    assert record.to_state is S.VALIDATED
    assert record.evidence == (evidence,)
    assert kernel.capability(cap.capability_id).lifecycle is S.VALIDATED


def test_bogus_evidence_ids_are_filtered_out(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    other = kernel.register_capability("other", CapabilityKind.SKILL)
    foreign = evaluate(kernel, other.capability_id, "eval-1")
    with pytest.raises(InsufficientEvidence):
        kernel.transition(cap.capability_id, S.VALIDATED,
                          evidence=("ev-999999", "rubbish", foreign))
    mine = evaluate(kernel, cap.capability_id, "eval-1")
    record = kernel.transition(cap.capability_id, S.VALIDATED,
                               evidence=("rubbish", mine, mine))
    assert record.evidence == (mine,)  # deduplicated, bogus dropped


def test_trusted_needs_distinct_evaluators_and_review(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    same = [evaluate(kernel, cap.capability_id, "eval-solo", risk=0.1)
            for _ in range(3)]
    kernel.transition(cap.capability_id, S.VALIDATED, evidence=(same[0],))
    with pytest.raises(InsufficientEvidence):
        kernel.transition(cap.capability_id, S.TRUSTED, evidence=tuple(same))
    mixed = same[:2] + [evaluate(kernel, cap.capability_id, "eval-2",
                                 risk=0.1)]
    with pytest.raises(MissingApproval):
        kernel.transition(cap.capability_id, S.TRUSTED, evidence=tuple(mixed))
    kernel.review(cap.capability_id, "gov-1", risk=0.1)
    record = kernel.transition(cap.capability_id, S.TRUSTED,
                               evidence=tuple(mixed))
    assert record.review is not None  # latest approval picked up


def test_risk_ceiling_blocks_promotion(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    evidence = [evaluate(kernel, cap.capability_id, f"eval-{i}", risk=0.1)
                for i in range(2)]
    kernel.transition(cap.capability_id, S.VALIDATED, evidence=(evidence[0],))
    risky = evaluate(kernel, cap.capability_id, "eval-3", risk=0.9)
    kernel.review(cap.capability_id, "gov-1", risk=0.1)
    with pytest.raises(InsufficientEvidence):
        kernel.transition(cap.capability_id, S.TRUSTED,
                          evidence=tuple(evidence + [risky]))


def test_deprecation_needs_nothing_and_is_terminal(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    kernel.transition(cap.capability_id, S.DEPRECATED)
    assert kernel.capability(cap.capability_id).lifecycle is S.DEPRECATED
    with pytest.raises(IllegalTransition):
        kernel.transition(cap.capability_id, S.VALIDATED)


def test_rung_skipping_is_illegal(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    evaluate(kernel, cap.capability_id, "eval-1")
    with pytest.raises(IllegalTransition):
        kernel.transition(cap.capability_id, S.TRUSTED)
    with pytest.raises(IllegalTransition):
        kernel.transition(cap.capability_id, S.CANONICAL)


def test_graph_node_lifecycle_stays_in_sync(kernel):
    cap = kernel.register_artifact("body", CapabilityKind.SKILL)
    promote_to_trusted(kernel, cap.capability_id)
    node = kernel.state.graph.node(cap.capability_id)
    assert node.lifecycle is S.TRUSTED
    assert kernel.verify_graph() == []


# -- reviews ---------------------------------------------------------------------


def test_review_decision_rules(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    with pytest.raises(UnknownSubject):
        kernel.review("missing", "gov-1", risk=0.1)
    with pytest.raises(RiskOutOfRange):
        kernel.review(cap.capability_id, "gov-1", risk=1.5)

    # high risk rejects regardless of evidence
    rejected = kernel.review(cap.capability_id, "gov-1", risk=0.9)
    assert rejected.decision is ReviewDecision.REJECT

    # low risk without evidence still defers
    deferred = kernel.review(cap.capability_id, "gov-2", risk=0.1)
    assert deferred.decision is ReviewDecision.DEFER

    evidence = evaluate(kernel, cap.capability_id, "eval-1")
    approved = kernel.review(cap.capability_id, "gov-3", risk=0.1)
    assert approved.decision is ReviewDecision.APPROVE
    assert approved.evidence_refs == (evidence,)


def test_reviewer_quorum_converts_deferrals(kernel):
    cap = kernel.register_capability("body", CapabilityKind.SKILL)
    evaluate(kernel, cap.capability_id, "eval-1")
    first = kernel.review(cap.capability_id, "gov-1", risk=0.45)
    assert first.decision is ReviewDecision.DEFER
    # same reviewer deferring again does not reach quorum
    again = kernel.review(cap.capability_id, "gov-1", risk=0.45)
    assert again.decision is ReviewDecision.DEFER
    second = kernel.review(cap.capability_id, "gov-2", risk=0.45)
    assert second.decision is ReviewDecision.APPROVE
    assert kernel.events[-1].payload["converted_by_quorum"] is True


# -- mutations ---------------------------------------------------------------------


def mutation_fixture(kernel):
    """Evaluator node, active base config; returns (evaluator_id, config)."""
    evaluator = register_evaluator(kernel, "m1")
    config = kernel.register_config(make_config("cfg-base"), activate=True)
    return evaluator, config


def test_propose_mutation_validations(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    delta = MutationDelta(MutationComponent.PROMPTS, "tightened prompt")
    with pytest.raises(UnknownConfig):
        kernel.propose_mutation("missing", contract, delta)
    with pytest.raises(UnknownNode):
        kernel.propose_mutation(config.config_id,
                                make_contract("not-a-node"), delta)
    trace_node = kernel.capability(evaluator).created_by
    with pytest.raises(KindMismatch):
        kernel.propose_mutation(config.config_id, make_contract(trace_node),
                                delta)
    record = kernel.propose_mutation(config.config_id, contract, delta)
    assert record.status is MutationStatus.PROPOSED
    assert record.evidence  # proposal event is the first evidence
    assert kernel.state.graph.node(record.mutation_id).node_kind \
        is NodeKind.MUTATION
    with pytest.raises(DuplicateContent):
        kernel.propose_mutation(config.config_id, contract, delta,
                                mutation_id=record.mutation_id)


def test_stage_requires_matching_validation(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    record = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"))
    with pytest.raises(WrongEvaluator):
        kernel.stage_mutation(record.mutation_id, ValidationResult(
            "someone-else", "task_success", 0.2))
    with pytest.raises(WrongEvaluator):
        kernel.stage_mutation(record.mutation_id, ValidationResult(
            evaluator, "latency", 0.2))
    staged = kernel.stage_mutation(record.mutation_id,
                                   passing_validation(contract))
    assert staged.status is MutationStatus.STAGED
    with pytest.raises(WrongStatus):
        kernel.stage_mutation(record.mutation_id,
                              passing_validation(contract))


def test_failed_validation_rejects_and_records_failure(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator, min_delta=0.1)
    record = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"))
    before = len(kernel.events)
    with pytest.raises(ImprovementNotMet):
        kernel.stage_mutation(record.mutation_id,
                              passing_validation(contract, delta=0.01))
    # the rejection is durable: events were appended despite the raise
    assert len(kernel.events) > before
    rejected = kernel.mutation(record.mutation_id)
    assert rejected.status is MutationStatus.REJECTED
    assert rejected.rejection_reason
    assert kernel.state.graph.has_edge(record.mutation_id,
                                       RelationKind.FAILS_UNDER, evaluator)
    with pytest.raises(WrongStatus):
        kernel.stage_mutation(record.mutation_id,
                              passing_validation(contract))


def test_staging_conflict_on_same_base(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    first = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"))
    second = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v3"))
    kernel.stage_mutation(first.mutation_id, passing_validation(contract))
    with pytest.raises(StagingConflict):
        kernel.stage_mutation(second.mutation_id,
                              passing_validation(contract))


def test_apply_needs_staged_status_and_approval(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    record = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"))
    with pytest.raises(WrongStatus):
        kernel.apply_mutation(record.mutation_id)
    kernel.stage_mutation(record.mutation_id, passing_validation(contract))
    with pytest.raises(MissingApproval):
        kernel.apply_mutation(record.mutation_id)
    approve_mutation(kernel, record.mutation_id)
    result = kernel.apply_mutation(record.mutation_id)
    assert result.config_id == derive_id("config", config.config_id,
                                         record.mutation_id)
    assert result.prompt_policy == "v2"
    assert kernel.state.active_config == result.config_id
    assert kernel.mutation(record.mutation_id).status \
        is MutationStatus.APPLIED
    assert kernel.state.graph.has_edge(result.config_id,
                                       RelationKind.MUTATED_FROM,
                                       config.config_id)
    # exactly one tuple component differs
    changed = [name for name in type(config).COMPONENT_FIELDS
               if getattr(config, name) != getattr(result, name)]
    assert changed == ["prompt_policy"]


def test_rollback_restores_base_and_marks_result(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    record = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"))
    with pytest.raises(WrongStatus):
        kernel.rollback_mutation(record.mutation_id,
                                 RollbackTrigger("error_rate", 0.9))
    kernel.stage_mutation(record.mutation_id, passing_validation(contract))
    approve_mutation(kernel, record.mutation_id)
    result = kernel.apply_mutation(record.mutation_id)

    with pytest.raises(ConditionNotMet):
        kernel.rollback_mutation(record.mutation_id,
                                 RollbackTrigger("error_rate", 0.1))
    before = canonical_text(kernel.config(config.config_id))
    restored = kernel.rollback_mutation(record.mutation_id,
                                        RollbackTrigger("error_rate", 0.3))
    assert restored.config_id == config.config_id
    assert canonical_text(restored) == before
    assert kernel.state.active_config == config.config_id
    assert kernel.mutation(record.mutation_id).status \
        is MutationStatus.ROLLED_BACK
    assert kernel.state.graph.node(result.config_id).lifecycle \
        is S.DEPRECATED


def test_operator_order_rollback_bypasses_conditions(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    record = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"))
    kernel.stage_mutation(record.mutation_id, passing_validation(contract))
    approve_mutation(kernel, record.mutation_id)
    kernel.apply_mutation(record.mutation_id)
    restored = kernel.rollback_mutation(
        record.mutation_id,
        RollbackTrigger(metric=None, observed=None, operator_order=True),
        actor="operator")
    assert restored.config_id == config.config_id


def test_graph_relations_mutation_pins_new_version(kernel):
    evaluator, config = mutation_fixture(kernel)
    a = kernel.register_artifact("skill a", CapabilityKind.SKILL)
    b = kernel.register_artifact("skill b", CapabilityKind.SKILL)
    contract = make_contract(evaluator,
                             component=MutationComponent.GRAPH_RELATIONS)
    delta = MutationDelta(MutationComponent.GRAPH_RELATIONS, [
        {"src": a.capability_id, "relation": "depends_on",
         "dst": b.capability_id}])
    record = kernel.propose_mutation(config.config_id, contract, delta)
    kernel.stage_mutation(record.mutation_id, passing_validation(contract))
    approve_mutation(kernel, record.mutation_id)
    version_before = kernel.state.graph.graph_version
    result = kernel.apply_mutation(record.mutation_id)
    assert kernel.state.graph.has_edge(a.capability_id,
                                       RelationKind.DEPENDS_ON,
                                       b.capability_id)
    assert result.graph_version > version_before
    changed = [name for name in type(config).COMPONENT_FIELDS
               if getattr(config, name) != getattr(result, name)]
    assert changed == ["graph_version"]


# -- governance cycles ----------------------------------------------------------


def test_run_cycle_full_workload(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    proposal = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"), mutation_id="mut-000")
    approve_mutation(kernel, "mut-000")
    start = len(kernel.events)
    report = kernel.run_cycle(Workload(
        artifacts=(WorkloadArtifact(CapabilityKind.SKILL, "cycle skill",
                                    "gen-1"),),
        configs=(WorkloadConfig(make_config("cfg-alt")),),
        evaluations=(),
        measurements=(
            CandidateMeasurement("cfg-base", 0.8, 0.8, 0.8, 0.8, 0.2),
            CandidateMeasurement("cfg-alt", 0.9, 0.9, 0.9, 0.9, 5.0),
        ),
        reviews=(WorkloadReview(proposal.mutation_id, "gov-2", 0.1),),
        stage_requests=(WorkloadStage("mut-000", passing_validation(contract),
                                      "gen-1"),),
        apply_requests=("mut-000",),
    ))
    assert report.cycle_index == 1
    assert len(report.generated) == 1
    assert report.staged_mutations == ("mut-000",)
    assert kernel.mutation("mut-000").status is MutationStatus.APPLIED
    assert kernel.state.cycle_count == 1

    events = kernel.events[start:]
    assert events[0].kind is EventKind.CYCLE_STARTED
    assert events[-1].kind is EventKind.CYCLE_COMPLETED
    assert len({e.tick for e in events}) == 1  # one tick per command

    selection = events[-1].payload["selection"]
    assert selection["winner"] == "cfg-base"
    assert selection["excluded"] == {"cfg-alt": ["cost_exceeded"]}

    generated = report.generated[0]
    assert kernel.capability(generated).created_by == events[0].event_id


def test_cycle_auto_promotes_with_fresh_evidence(kernel):
    cap = kernel.register_artifact("steady skill", CapabilityKind.SKILL)
    report = kernel.run_cycle(Workload(
        evaluations=(WorkloadEvaluation(cap.capability_id, "eval-1",
                                        QualityComponents(performance=0.8,
                                                          risk=0.1)),)))
    assert [(r.capability_id, r.to_state) for r in report.promotions] \
        == [(cap.capability_id, S.VALIDATED)]
    # next cycle: evidence was consumed by the transition, none fresh
    report2 = kernel.run_cycle(Workload(auto_promote=True))
    assert report2.promotions == ()


def test_cycle_transition_requests_and_silent_skips(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)
    kernel.propose_mutation(config.config_id, contract,
                            MutationDelta(MutationComponent.PROMPTS, "v2"),
                            mutation_id="mut-unapproved")
    cap = kernel.register_capability("deprecate me", CapabilityKind.TEST)
    report = kernel.run_cycle(Workload(
        stage_requests=(WorkloadStage("mut-unapproved",
                                      passing_validation(contract), "x"),
                        WorkloadStage("mut-missing",
                                      passing_validation(contract), "x")),
        apply_requests=("mut-unapproved", "mut-missing"),
        transition_requests=(WorkloadTransition(cap.capability_id,
                                                S.DEPRECATED),),
        auto_promote=False,
    ))
    # unapproved and unknown mutations are skipped without failing the cycle
    assert report.staged_mutations == ()
    assert kernel.mutation("mut-unapproved").status is MutationStatus.PROPOSED
    assert [r.capability_id for r in report.deprecations] \
        == [cap.capability_id]


def test_cycle_rollbacks_unwind_one_step_per_cycle(kernel):
    evaluator, config = mutation_fixture(kernel)
    contract = make_contract(evaluator)

    first = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v2"), mutation_id="mut-000")
    kernel.stage_mutation("mut-000", passing_validation(contract))
    approve_mutation(kernel, "mut-000")
    mid = kernel.apply_mutation("mut-000")

    second = kernel.propose_mutation(
        mid.config_id, contract,
        MutationDelta(MutationComponent.PROMPTS, "v3"), mutation_id="mut-001")
    kernel.stage_mutation("mut-001", passing_validation(contract))
    approve_mutation(kernel, "mut-001")
    top = kernel.apply_mutation("mut-001")
    assert kernel.state.active_config == top.config_id

    report1 = kernel.run_cycle(Workload(observed_metrics={"error_rate": 0.9},
                                        auto_promote=False))
    assert report1.rollbacks == ("mut-001",)
    assert kernel.state.active_config == mid.config_id

    report2 = kernel.run_cycle(Workload(observed_metrics={"error_rate": 0.9},
                                        auto_promote=False))
    assert report2.rollbacks == ("mut-000",)
    assert kernel.state.active_config == config.config_id

    report3 = kernel.run_cycle(Workload(observed_metrics={"error_rate": 0.9},
                                        auto_promote=False))
    assert report3.rollbacks == ()
    del first, second


def test_failed_cycle_leaves_no_trace(kernel):
    before_events = len(kernel.events)
    before_state = canonical_text(kernel.state.to_jsonable())
    with pytest.raises(DuplicateContent):
        kernel.run_cycle(Workload(artifacts=(
            WorkloadArtifact(CapabilityKind.SKILL, "same body", "g"),
            WorkloadArtifact(CapabilityKind.SKILL, "same body", "g"),
        )))
    assert len(kernel.events) == before_events
    assert canonical_text(kernel.state.to_jsonable()) == before_state
    assert kernel.state.cycle_count == 0


def test_workload_from_jsonable_rejects_unknown_keys(kernel):
    with pytest.raises(UsageError):
        workload_from_jsonable({"artifcats": []})
    workload = workload_from_jsonable({
        "artifacts": [{"kind": "skill", "content": "doc skill"}],
        "observed_metrics": {"error_rate": 0.1},
        "auto_promote": False,
    })
    report = kernel.run_cycle(workload)
    assert len(report.generated) == 1
    assert workload.auto_promote is False


# -- audit, replay, persistence ----------------------------------------------------


def busy_session(kernel):
    evaluator, config = mutation_fixture(kernel)
    cap = kernel.register_artifact("busy skill", CapabilityKind.SKILL)
    promote_to_trusted(kernel, cap.capability_id)
    contract = make_contract(evaluator, component=MutationComponent.MEMORY_RULES)
    record = kernel.propose_mutation(
        config.config_id, contract,
        MutationDelta(MutationComponent.MEMORY_RULES, "windowed"))
    kernel.stage_mutation(record.mutation_id, passing_validation(contract))
    approve_mutation(kernel, record.mutation_id)
    kernel.apply_mutation(record.mutation_id)
    kernel.rollback_mutation(record.mutation_id,
                             RollbackTrigger("error_rate", 0.5))
    kernel.run_cycle(Workload())
    return kernel


def test_audit_verify_and_replay_equality(kernel):
    busy_session(kernel)
    report = kernel.audit_verify()
    assert report.ok
    assert report.events_checked == len(kernel.events)
    assert report.replay_matches
    replayed = kernel.replay()
    assert canonical_text(replayed.to_jsonable()) \
        == canonical_text(kernel.state.to_jsonable())


def test_audit_verify_flags_in_memory_tampering(kernel):
    busy_session(kernel)
    k = len(kernel.events) // 2
    object.__setattr__(kernel.events[k], "payload",
                       {"entity": "capability", "forged": True})
    report = kernel.audit_verify()
    assert not report.ok
    assert any(v.index == k and v.kind == "hash_mismatch"
               for v in report.violations)


def test_store_restart_reconstructs_state(tmp_path):
    store = EventStore(str(tmp_path / "store"))
    kernel = GovernanceKernel(store=store)
    busy_session(kernel)
    reopened = GovernanceKernel(store=EventStore(str(tmp_path / "store")))
    assert canonical_text(reopened.state.to_jsonable()) \
        == canonical_text(kernel.state.to_jsonable())
    assert reopened.head_hash == kernel.head_hash


def test_store_tamper_detected_at_restart(tmp_path):
    store = EventStore(str(tmp_path / "store"))
    kernel = GovernanceKernel(store=store)
    busy_session(kernel)
    with open(store.log_path, "r", encoding="utf-8") as handle:
        lines = handle.readlines()
    lines[3] = lines[3].replace('"actor":"', '"actor":"x', 1)
    with open(store.log_path, "w", encoding="utf-8") as handle:
        handle.writelines(lines)
    with pytest.raises(ChainBroken):
        GovernanceKernel(store=EventStore(str(tmp_path / "store")))


def test_snapshots_written_on_interval_crossings(tmp_path):
    store = EventStore(str(tmp_path / "store"), snapshot_interval=10)
    kernel = GovernanceKernel(store=store)
    for i in range(12):
        kernel.register_capability(f"cap {i}", CapabilityKind.TEST)
    latest = store.latest_snapshot()
    assert latest is not None
    assert latest.as_of_event >= 9
    assert latest.verify()
    path = kernel.write_snapshot()
    explicit = store.load_snapshot(path)
    assert canonical_text(explicit.to_state().to_jsonable()) \
        == canonical_text(kernel.state.to_jsonable())


def test_write_snapshot_requires_store(kernel):
    with pytest.raises(UsageError):
        kernel.write_snapshot()


def test_concurrent_commands_serialize_cleanly(kernel):
    def worker(tag):
        for i in range(10):
            kernel.register_capability(f"cap {tag} {i}", CapabilityKind.TEST)

    threads = [threading.Thread(target=worker, args=(t,)) for t in range(8)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert len(kernel.state.capabilities) == 80
    assert [e.index for e in kernel.events] == list(range(len(kernel.events)))
    assert kernel.audit_verify().ok

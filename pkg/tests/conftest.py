"""Shared fixtures and builders for the govkernel test suite."""

from __future__ import annotations

import random

import pytest

from govkernel import (
    CapabilityKind,
    ChangeContract,
    ExpectedImprovement,
    GovernanceKernel,
    HarnessConfig,
    MutationComponent,
    QualityComponents,
    RollbackCondition,
    TriggerDirection,
    ValidationResult,
)
from govkernel.selection import CandidateMeasurement, ConstraintFlag
from govkernel.store import EventStore


@pytest.fixture
def kernel() -> GovernanceKernel:
    """In-memory kernel under the default policy."""
    return GovernanceKernel()


@pytest.fixture
def stored_kernel(tmp_path):
    """Store-backed kernel writing to a per-test directory."""
    store = EventStore(str(tmp_path / "store"))
    return GovernanceKernel(store=store)


def make_config(config_id: str = "cfg-base", **overrides) -> HarnessConfig:
    fields = {
        "config_id": config_id,
        "prompt_policy": "baseline prompt policy",
        "tools": ("tool-a", "tool-b"),
        "evaluators": ("eval-suite",),
        "memory": "episodic summary window",
        "governance": "default gates",
        "artifacts": (),
        "graph_version": 0,
    }
    fields.update(overrides)
    return HarnessConfig(**fields)


def register_evaluator(kernel: GovernanceKernel, label: str) -> str:
    """An evaluator capability with a graph node; returns its id."""
    record = kernel.register_artifact(f"evaluator {label}",
                                      CapabilityKind.EVALUATOR)
    return record.capability_id


def evaluate(kernel: GovernanceKernel, capability_id: str, evaluator_id: str,
             risk: float = 0.1, **components) -> str:
    """Record one evaluation; returns the evidence event id."""
    quality = QualityComponents(
        performance=components.get("performance", 0.8),
        robustness=components.get("robustness", 0.7),
        stability=components.get("stability", 0.75),
        reusability=components.get("reusability", 0.6),
        risk=risk,
    )
    kernel.record_evaluation(capability_id, evaluator_id, quality)
    return kernel.events[-1].event_id


def make_contract(evaluator_node: str,
                  component: MutationComponent = MutationComponent.PROMPTS,
                  metric: str = "task_success",
                  min_delta: float = 0.05) -> ChangeContract:
    return ChangeContract(
        component=component,
        targeted_failure_mode="summary drops required fields",
        expected_improvement=ExpectedImprovement(metric=metric,
                                                 min_delta=min_delta),
        invariants_preserved=("output schema", "latency budget"),
        falsifying_evaluation=evaluator_node,
        rollback_conditions=(
            RollbackCondition(metric="error_rate", threshold=0.25,
                              direction=TriggerDirection.ABOVE),
        ),
    )


def passing_validation(contract: ChangeContract,
                       delta: float = 0.1) -> ValidationResult:
    return ValidationResult(evaluator_id=contract.falsifying_evaluation,
                            metric=contract.expected_improvement.metric,
                            delta=delta)


def approve_mutation(kernel: GovernanceKernel, mutation_id: str,
                     reviewer: str = "gov-1") -> str:
    """Low-risk review that auto-approves; returns the review id."""
    record = kernel.review(mutation_id, reviewer, risk=0.1)
    assert record.decision.value == "approve"
    return record.review_id


def random_measurements(rng: random.Random, size: int,
                        flag_rate: float = 0.0) -> list[CandidateMeasurement]:
    flags = list(ConstraintFlag)
    candidates = []
    for i in range(size):
        flagged = frozenset()
        if flag_rate and rng.random() < flag_rate:
            flagged = frozenset({rng.choice(flags)})
        candidates.append(CandidateMeasurement(
            config_id=f"cand-{i:03d}",
            quality=rng.random(),
            robustness=rng.random(),
            validation=rng.random(),
            reuse=rng.random(),
            cost=rng.random() * 2.0,
            constraint_flags=flagged,
        ))
    return candidates

"""Registries bundled into one cloneable, canonically-dumpable state.

The kernel owns exactly one live :class:`KernelState`; commands run
against a clone that replaces the live state only when the whole command
batch has been durably logged.  Records are frozen values, so clones are
shallow dict copies and cloning is cheap.

The canonical dump is total: two states are behaviorally identical iff
their dumps are byte-identical, which is what replay equivalence tests
compare.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .canonical import to_jsonable
from .errors import NotFound
from .graph import RuntimeGraph
from .lifecycle import LifecycleRecord, LifecycleState
from .mutation import MutationRecord, mutation_from_jsonable
from .records import (
    CapabilityRecord,
    CapabilityReview,
    GeneratedSkillSpec,
    HarnessConfig,
    capability_from_jsonable,
    config_from_jsonable,
    review_from_jsonable,
    skill_spec_from_jsonable,
)


@dataclass
class KernelState:
    capabilities: dict[str, CapabilityRecord] = field(default_factory=dict)
    configs: dict[str, HarnessConfig] = field(default_factory=dict)
    skill_specs: dict[str, GeneratedSkillSpec] = field(default_factory=dict)
    reviews: dict[str, CapabilityReview] = field(default_factory=dict)
    mutations: dict[str, MutationRecord] = field(default_factory=dict)
    lifecycle_log: list[LifecycleRecord] = field(default_factory=list)
    evaluation_log: list[dict] = field(default_factory=list)
    graph: RuntimeGraph = field(default_factory=RuntimeGraph)
    active_config: str | None = None
    cycle_count: int = 0
    tick: int = 0

    def clone(self) -> "KernelState":
        return KernelState(
            capabilities=dict(self.capabilities),
            configs=dict(self.configs),
            skill_specs=dict(self.skill_specs),
            reviews=dict(self.reviews),
            mutations=dict(self.mutations),
            lifecycle_log=list(self.lifecycle_log),
            evaluation_log=list(self.evaluation_log),
            graph=self.graph.clone(),
            active_config=self.active_config,
            cycle_count=self.cycle_count,
            tick=self.tick,
        )

    def resolve(self, entity_id: str):
        """Find a record by id across all registries; never fabricates."""
        for registry in (self.capabilities, self.configs, self.skill_specs,
                         self.reviews, self.mutations):
            record = registry.get(entity_id)
            if record is not None:
                return record
        raise NotFound(entity_id)

    def last_transition_index(self, capability_id: str) -> int:
        """Log index of the capability's most recent transition, -1 if none."""
        latest = -1
        for record in self.lifecycle_log:
            if record.capability_id == capability_id and record.event_id:
                index = int(record.event_id[3:], 10)
                if index > latest:
                    latest = index
        return latest

    def fresh_evidence(self, capability_id: str) -> list[dict]:
        """Evaluations recorded after the capability's latest transition."""
        floor = self.last_transition_index(capability_id)
        return [entry for entry in self.evaluation_log
                if entry["capability_id"] == capability_id
                and entry["event_index"] > floor]

    def to_jsonable(self) -> dict:
        return {
            "capabilities": {k: to_jsonable(v)
                             for k, v in sorted(self.capabilities.items())},
            "configs": {k: to_jsonable(v)
                        for k, v in sorted(self.configs.items())},
            "skill_specs": {k: to_jsonable(v)
                            for k, v in sorted(self.skill_specs.items())},
            "reviews": {k: to_jsonable(v)
                        for k, v in sorted(self.reviews.items())},
            "mutations": {k: to_jsonable(v)
                          for k, v in sorted(self.mutations.items())},
            "lifecycle_log": [to_jsonable(r) for r in self.lifecycle_log],
            "evaluation_log": [dict(e) for e in self.evaluation_log],
            "graph": self.graph.to_jsonable(),
            "active_config": self.active_config,
            "cycle_count": self.cycle_count,
            "tick": self.tick,
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "KernelState":
        state = cls()
        state.capabilities = {
            k: capability_from_jsonable(v)
            for k, v in data["capabilities"].items()
        }
        state.configs = {
            k: config_from_jsonable(v) for k, v in data["configs"].items()
        }
        state.skill_specs = {
            k: skill_spec_from_jsonable(v)
            for k, v in data["skill_specs"].items()
        }
        state.reviews = {
            k: review_from_jsonable(v) for k, v in data["reviews"].items()
        }
        state.mutations = {
            k: mutation_from_jsonable(v) for k, v in data["mutations"].items()
        }
        state.lifecycle_log = [
            LifecycleRecord(
                capability_id=r["capability_id"],
                from_state=LifecycleState(r["from_state"]),
                to_state=LifecycleState(r["to_state"]),
                evidence=tuple(r["evidence"]),
                review=r["review"],
                tick=r["tick"],
                event_id=r["event_id"],
            )
            for r in data["lifecycle_log"]
        ]
        state.evaluation_log = [dict(e) for e in data["evaluation_log"]]
        state.graph = RuntimeGraph.from_jsonable(data["graph"])
        state.active_config = data["active_config"]
        state.cycle_count = data["cycle_count"]
        state.tick = data["tick"]
        return state

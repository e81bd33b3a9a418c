"""Typed runtime graph over registered entities.

Nodes wrap registry entities (capabilities by their kind, configs,
mutations, trace events) plus declared context and policy markers.  Edges
carry one of eight relation kinds, each with an endpoint-kind table, and
the three ancestry relations (``depends_on``, ``supersedes``,
``mutated_from``) must stay acyclic.

``supersedes`` edges point from the superseded entity to its successor:
``src superseded-by dst``.  That is the direction the eligibility rule
reads - a node drops out of selection once its successor is trusted or
canonical.

The graph is a passive value owned by the kernel: ``check_*`` methods
validate a prospective insertion (command time), ``insert_*`` methods
perform it (event apply time).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, Iterable

from .errors import (
    CycleViolation,
    DuplicateNode,
    KindMismatch,
    NoQualityComponents,
    NotASkill,
    SelfEdge,
    TooManySkills,
    UnknownNode,
)
from .lifecycle import LifecycleState
from .records import QualityComponents


class RelationKind(str, enum.Enum):
    DEPENDS_ON = "depends_on"
    GENERATED_BY = "generated_by"
    VALIDATED_BY = "validated_by"
    IMPROVES = "improves"
    SUPERSEDES = "supersedes"
    MUTATED_FROM = "mutated_from"
    COMPOSED_WITH = "composed_with"
    FAILS_UNDER = "fails_under"


class NodeKind(str, enum.Enum):
    PROMPT = "prompt"
    EVALUATOR = "evaluator"
    WORKFLOW = "workflow"
    ROUTING_POLICY = "routing_policy"
    SKILL = "skill"
    TEST = "test"
    TOOL = "tool"
    BENCHMARK = "benchmark"
    CONFIG = "config"
    MUTATION = "mutation"
    TRACE = "trace"
    POLICY = "policy"
    CONTEXT = "context"


CAPABILITY_NODE_KINDS = frozenset({
    NodeKind.PROMPT, NodeKind.EVALUATOR, NodeKind.WORKFLOW,
    NodeKind.ROUTING_POLICY, NodeKind.SKILL, NodeKind.TEST,
    NodeKind.TOOL, NodeKind.BENCHMARK,
})

ACYCLIC_RELATIONS = frozenset({
    RelationKind.DEPENDS_ON, RelationKind.SUPERSEDES, RelationKind.MUTATED_FROM,
})

LINEAGE_RELATIONS = (
    RelationKind.GENERATED_BY, RelationKind.MUTATED_FROM, RelationKind.SUPERSEDES,
)


@dataclass(frozen=True)
class GraphNode:
    """A graph vertex and its metadata.

    ``quality`` is the cached scalar under the active policy's quality
    weights, maintained by evaluation events.  ``lifecycle`` snapshots the
    entity's lifecycle; for config nodes it is graph-local (None until a
    rollback marks the config deprecated).  ``lineage`` summarizes direct
    ancestors reached by generated_by / mutated_from edges.
    """

    node_id: str
    node_kind: NodeKind
    content_hash: str
    quality: float = 0.0
    created_tick: int = 0
    lifecycle: LifecycleState | None = None
    inserted_version: int = 0
    lineage: tuple[str, ...] = ()


@dataclass(frozen=True)
class GraphEdge:
    src: str
    relation: RelationKind
    dst: str
    recorded_by: str = ""


@dataclass(frozen=True)
class LineageEntry:
    node_id: str
    relation: RelationKind | None
    depth: int


@dataclass(frozen=True)
class LineageView:
    """BFS ancestry of a node plus every edge leaving a visited node."""

    entries: tuple[LineageEntry, ...]
    edges: tuple[GraphEdge, ...]

    def node_ids(self) -> set[str]:
        return {entry.node_id for entry in self.entries}


@dataclass(frozen=True)
class CompositionProposal:
    """Outcome of a composition search; empty ``chosen`` means infeasible."""

    chosen: tuple[str, ...]
    total_quality: float
    exhaustive: bool


def quality_value(components: QualityComponents, weights: "QualityWeights") -> float:
    """Weighted quality scalar; risk enters negatively."""
    return (weights.performance * components.performance
            + weights.robustness * components.robustness
            + weights.stability * components.stability
            + weights.reusability * components.reusability
            - weights.risk * components.risk)


@dataclass(frozen=True)
class QualityWeights:
    """Non-negative weights of the quality scalar."""

    performance: float = 1.0
    robustness: float = 1.0
    stability: float = 1.0
    reusability: float = 1.0
    risk: float = 1.0

    def __post_init__(self) -> None:
        for name in ("performance", "robustness", "stability", "reusability", "risk"):
            value = getattr(self, name)
            if value < 0.0:
                raise ValueError(f"quality weight {name} must be >= 0, got {value}")
            object.__setattr__(self, name, float(value))


ComponentResolver = Callable[[str], QualityComponents | None]


class RuntimeGraph:
    """Mutable container with validating reads; writes come from appliers."""

    def __init__(self) -> None:
        self.nodes: dict[str, GraphNode] = {}
        self.edges: list[GraphEdge] = []
        self.graph_version: int = 0

    def clone(self) -> "RuntimeGraph":
        other = RuntimeGraph()
        other.nodes = dict(self.nodes)
        other.edges = list(self.edges)
        other.graph_version = self.graph_version
        return other

    # -- nodes ---------------------------------------------------------

    def node(self, node_id: str) -> GraphNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def check_node_new(self, node_id: str) -> None:
        if node_id in self.nodes:
            raise DuplicateNode(node_id)

    def insert_node(self, node: GraphNode) -> GraphNode:
        self.check_node_new(node.node_id)
        node = replace(node, inserted_version=self.graph_version + 1)
        self.nodes[node.node_id] = node
        self.graph_version += 1
        return node

    def update_node(self, node_id: str, **changes) -> GraphNode:
        node = replace(self.node(node_id), **changes)
        self.nodes[node_id] = node
        return node

    # -- edges ---------------------------------------------------------

    def normalize_endpoints(self, src: str, relation: RelationKind,
                            dst: str) -> tuple[str, str]:
        """Composition edges are symmetric and stored once, ordered."""
        if relation is RelationKind.COMPOSED_WITH and dst < src:
            return dst, src
        return src, dst

    def check_edge(self, src: str, relation: RelationKind, dst: str) -> None:
        """Full edge validation: endpoints, kinds, acyclicity."""
        src, dst = self.normalize_endpoints(src, relation, dst)
        if src == dst:
            raise SelfEdge(f"{src} -[{relation.value}]-> {dst}")
        src_node = self.node(src)
        dst_node = self.node(dst)
        self._check_kinds(src_node, relation, dst_node)
        if relation in ACYCLIC_RELATIONS and self._reaches(dst, src, relation):
            raise CycleViolation(
                f"{src} -[{relation.value}]-> {dst} closes a cycle")

    def _check_kinds(self, src: GraphNode, relation: RelationKind,
                     dst: GraphNode) -> None:
        sk, dk = src.node_kind, dst.node_kind
        ok = False
        if relation is RelationKind.DEPENDS_ON:
            ok = sk in CAPABILITY_NODE_KINDS and dk in CAPABILITY_NODE_KINDS
        elif relation is RelationKind.GENERATED_BY:
            ok = dk is NodeKind.TRACE
        elif relation is RelationKind.VALIDATED_BY:
            ok = (sk in CAPABILITY_NODE_KINDS or sk is NodeKind.CONFIG) \
                and dk in (NodeKind.EVALUATOR, NodeKind.BENCHMARK)
        elif relation in (RelationKind.IMPROVES, RelationKind.SUPERSEDES):
            ok = sk is dk
        elif relation is RelationKind.MUTATED_FROM:
            ok = (sk in CAPABILITY_NODE_KINDS or sk is NodeKind.CONFIG) \
                and (dk in CAPABILITY_NODE_KINDS or dk is NodeKind.CONFIG)
        elif relation is RelationKind.COMPOSED_WITH:
            ok = sk is NodeKind.SKILL and dk is NodeKind.SKILL
        elif relation is RelationKind.FAILS_UNDER:
            ok = (sk in CAPABILITY_NODE_KINDS or sk is NodeKind.MUTATION) \
                and dk in (NodeKind.EVALUATOR, NodeKind.BENCHMARK, NodeKind.CONTEXT)
        if not ok:
            raise KindMismatch(
                f"{relation.value} forbids {sk.value} -> {dk.value}")

    def _reaches(self, start: str, goal: str, relation: RelationKind) -> bool:
        """DFS along one relation; used for the acyclicity guard."""
        adjacency: dict[str, list[str]] = {}
        for edge in self.edges:
            if edge.relation is relation:
                adjacency.setdefault(edge.src, []).append(edge.dst)
        stack = [start]
        seen: set[str] = set()
        while stack:
            current = stack.pop()
            if current == goal:
                return True
            if current in seen:
                continue
            seen.add(current)
            stack.extend(adjacency.get(current, ()))
        return False

    def insert_edge(self, edge: GraphEdge) -> GraphEdge:
        src, dst = self.normalize_endpoints(edge.src, edge.relation, edge.dst)
        edge = replace(edge, src=src, dst=dst)
        self.edges.append(edge)
        self.graph_version += 1
        if edge.relation in (RelationKind.GENERATED_BY, RelationKind.MUTATED_FROM):
            node = self.nodes.get(edge.src)
            if node is not None and edge.dst not in node.lineage:
                self.update_node(edge.src, lineage=node.lineage + (edge.dst,))
        return edge

    def has_edge(self, src: str, relation: RelationKind, dst: str) -> bool:
        src, dst = self.normalize_endpoints(src, relation, dst)
        return any(e.src == src and e.relation is relation and e.dst == dst
                   for e in self.edges)

    def out_edges(self, src: str,
                  relation: RelationKind | None = None) -> list[GraphEdge]:
        return [e for e in self.edges
                if e.src == src and (relation is None or e.relation is relation)]

    # -- queries -------------------------------------------------------

    def quality(self, node_id: str, weights: QualityWeights,
                resolver: ComponentResolver) -> float:
        """Quality scalar of a node's entity; caches onto the node."""
        node = self.node(node_id)
        components = resolver(node_id)
        if components is None:
            raise NoQualityComponents(node_id)
        value = quality_value(components, weights)
        self.nodes[node_id] = replace(node, quality=value)
        return value

    def lineage(self, node_id: str) -> LineageView:
        """Ancestry BFS over generated_by / mutated_from / supersedes."""
        self.node(node_id)
        entries: list[LineageEntry] = [LineageEntry(node_id, None, 0)]
        visited: set[str] = {node_id}
        frontier: list[str] = [node_id]
        depth = 0
        while frontier:
            depth += 1
            found: list[tuple[str, RelationKind]] = []
            for current in frontier:
                for edge in self.out_edges(current):
                    if edge.relation in LINEAGE_RELATIONS \
                            and edge.dst not in visited:
                        visited.add(edge.dst)
                        found.append((edge.dst, edge.relation))
            found.sort(key=lambda pair: pair[0])
            entries.extend(LineageEntry(n, r, depth) for n, r in found)
            frontier = [n for n, _ in found]
        edges = tuple(e for e in self.edges if e.src in visited)
        return LineageView(entries=tuple(entries), edges=edges)

    def eligible_for_selection(self, node_id: str) -> bool:
        """Deprecated or effectively-superseded nodes drop out."""
        node = self.node(node_id)
        if node.lifecycle is LifecycleState.DEPRECATED:
            return False
        for edge in self.out_edges(node_id, RelationKind.SUPERSEDES):
            successor = self.nodes.get(edge.dst)
            if successor is not None and successor.lifecycle in (
                    LifecycleState.TRUSTED, LifecycleState.CANONICAL):
                return False
        return True

    # -- composition -----------------------------------------------------

    def compose(self, skills: Iterable[str], context: Iterable[str],
                weights: QualityWeights, resolver: ComponentResolver,
                bound: int = 12) -> CompositionProposal:
        """Best feasible skill subset by total quality.

        Feasible means: every depends_on target of a chosen skill is
        itself chosen or already canonical; no chosen skill fails under a
        context tag; every chosen skill has at least one validated_by
        edge.  Exhaustive up to 12 skills, greedy above (reachable only
        when the bound is raised past 12).  Ties break toward the
        lexicographically smallest sorted id tuple.
        """
        ordered = sorted(set(skills))
        if not ordered:
            raise NotASkill("composition requires at least one skill id")
        if len(ordered) > bound:
            raise TooManySkills(f"{len(ordered)} skills exceeds bound {bound}")
        context_set = set(context)
        for skill_id in ordered:
            if self.node(skill_id).node_kind is not NodeKind.SKILL:
                raise NotASkill(skill_id)

        def skill_quality(skill_id: str) -> float:
            components = resolver(skill_id)
            if components is None:
                raise NoQualityComponents(skill_id)
            return quality_value(components, weights)

        qualities = {s: skill_quality(s) for s in ordered}
        deps = {s: [e.dst for e in self.out_edges(s, RelationKind.DEPENDS_ON)]
                for s in ordered}
        fails = {
            s: any(e.dst in context_set
                   for e in self.out_edges(s, RelationKind.FAILS_UNDER))
            for s in ordered
        }
        validated = {
            s: bool(self.out_edges(s, RelationKind.VALIDATED_BY))
            for s in ordered
        }

        def dep_satisfied(target: str, chosen: set[str]) -> bool:
            if target in chosen:
                return True
            target_node = self.nodes.get(target)
            return target_node is not None \
                and target_node.lifecycle is LifecycleState.CANONICAL

        def feasible(chosen: set[str]) -> bool:
            for skill_id in chosen:
                if fails[skill_id] or not validated[skill_id]:
                    return False
                for target in deps[skill_id]:
                    if not dep_satisfied(target, chosen):
                        return False
            return True

        def total(chosen: Iterable[str]) -> float:
            return sum(qualities[s] for s in sorted(chosen))

        if len(ordered) <= 12:
            best: tuple[str, ...] | None = None
            best_total = 0.0
            for mask in range(1, 1 << len(ordered)):
                subset = {ordered[i] for i in range(len(ordered))
                          if mask & (1 << i)}
                if not feasible(subset):
                    continue
                subset_total = total(subset)
                key = tuple(sorted(subset))
                if best is None or subset_total > best_total \
                        or (subset_total == best_total and key < best):
                    best, best_total = key, subset_total
            if best is None:
                return CompositionProposal((), 0.0, exhaustive=True)
            return CompositionProposal(best, best_total, exhaustive=True)

        chosen: set[str] = set()
        for skill_id in sorted(ordered, key=lambda s: (-qualities[s], s)):
            candidate = chosen | {skill_id}
            for target in deps[skill_id]:
                if target in ordered and not dep_satisfied(target, candidate):
                    candidate.add(target)
            if feasible(candidate) and (not chosen
                                        or total(candidate) >= total(chosen)):
                chosen = candidate
        if not chosen:
            return CompositionProposal((), 0.0, exhaustive=False)
        return CompositionProposal(tuple(sorted(chosen)), total(chosen),
                                   exhaustive=False)

    # -- integrity -------------------------------------------------------

    def verify(self, content_resolver: Callable[[str], str | None],
               lifecycle_resolver: Callable[[str], LifecycleState | None],
               ) -> list[str]:
        """Recheck structural invariants; returns violation strings."""
        violations: list[str] = []
        for edge in self.edges:
            if edge.src not in self.nodes or edge.dst not in self.nodes:
                violations.append(
                    f"edge {edge.src}-[{edge.relation.value}]->{edge.dst}: "
                    "dangling endpoint")
                continue
            try:
                self._check_kinds(self.nodes[edge.src], edge.relation,
                                  self.nodes[edge.dst])
            except KindMismatch as exc:
                violations.append(
                    f"edge {edge.src}-[{edge.relation.value}]->{edge.dst}: {exc}")
        for relation in sorted(ACYCLIC_RELATIONS, key=lambda r: r.value):
            cycle = self._find_cycle(relation)
            if cycle:
                violations.append(
                    f"relation {relation.value} contains a cycle through {cycle}")
        for node in self.nodes.values():
            if node.node_kind in CAPABILITY_NODE_KINDS:
                expected_hash = content_resolver(node.node_id)
                if expected_hash is not None \
                        and expected_hash != node.content_hash:
                    violations.append(
                        f"node {node.node_id}: content hash out of sync")
                expected_state = lifecycle_resolver(node.node_id)
                if expected_state is not None \
                        and expected_state is not node.lifecycle:
                    violations.append(
                        f"node {node.node_id}: lifecycle out of sync")
        return sorted(violations)

    def _find_cycle(self, relation: RelationKind) -> str | None:
        """Iterative three-color DFS; returns a node on a cycle, if any."""
        adjacency: dict[str, list[str]] = {}
        for edge in self.edges:
            if edge.relation is relation:
                adjacency.setdefault(edge.src, []).append(edge.dst)
        colors: dict[str, int] = {}
        for start in sorted(adjacency):
            if colors.get(start, 0) != 0:
                continue
            stack: list[tuple[str, bool]] = [(start, False)]
            while stack:
                node_id, done = stack.pop()
                if done:
                    colors[node_id] = 2
                    continue
                if colors.get(node_id, 0) == 2:
                    continue
                colors[node_id] = 1
                stack.append((node_id, True))
                for nxt in adjacency.get(node_id, ()):
                    state = colors.get(nxt, 0)
                    if state == 1:
                        return nxt
                    if state == 0:
                        stack.append((nxt, False))
        return None

    # -- serialization ---------------------------------------------------

    def to_jsonable(self) -> dict:
        return {
            "graph_version": self.graph_version,
            "nodes": {
                node_id: {
                    "node_id": node.node_id,
                    "node_kind": node.node_kind.value,
                    "content_hash": node.content_hash,
                    "quality": node.quality,
                    "created_tick": node.created_tick,
                    "lifecycle": None if node.lifecycle is None
                    else node.lifecycle.value,
                    "inserted_version": node.inserted_version,
                    "lineage": list(node.lineage),
                }
                for node_id, node in sorted(self.nodes.items())
            },
            "edges": [
                {
                    "src": edge.src,
                    "relation": edge.relation.value,
                    "dst": edge.dst,
                    "recorded_by": edge.recorded_by,
                }
                for edge in self.edges
            ],
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "RuntimeGraph":
        graph = cls()
        graph.graph_version = data["graph_version"]
        for node_id, fields in data["nodes"].items():
            graph.nodes[node_id] = GraphNode(
                node_id=fields["node_id"],
                node_kind=NodeKind(fields["node_kind"]),
                content_hash=fields["content_hash"],
                quality=fields["quality"],
                created_tick=fields["created_tick"],
                lifecycle=None if fields["lifecycle"] is None
                else LifecycleState(fields["lifecycle"]),
                inserted_version=fields["inserted_version"],
                lineage=tuple(fields["lineage"]),
            )
        for fields in data["edges"]:
            graph.edges.append(GraphEdge(
                src=fields["src"],
                relation=RelationKind(fields["relation"]),
                dst=fields["dst"],
                recorded_by=fields["recorded_by"],
            ))
        return graph

"""Command-line front end.

Every command prints its result as one canonical JSON document, so output
can be diffed and piped.  Exit codes: 0 success, 1 domain rule violation,
2 usage error, 3 storage or integrity failure.  Commands that write events
take the store's lock file for the duration of the invocation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

try:
    import tomllib as _toml
except ImportError:  # Python < 3.11
    import tomli as _toml

from .canonical import canonical_text, to_jsonable
from .errors import (
    DomainError,
    IntegrityError,
    KernelError,
    UsageError,
)
from .kernel import GovernanceKernel, workload_from_jsonable
from .lifecycle import LifecycleState
from .mutation import (
    RollbackTrigger,
    ValidationResult,
    contract_from_payload,
    delta_from_payload,
)
from .policy import load_policy
from .records import CapabilityKind
from .simulation import (
    NORMALIZER_VARIANTS,
    compare_policies,
    metrics_table_text,
    run_scenario_detailed,
    scenario_normalizer_detailed,
    sim_config_from_mapping,
    write_metrics,
)
from .store import EventStore

DEFAULT_STORE = "./store"


def load_document(path: str) -> dict:
    """Read a JSON or TOML document; the extension picks the parser."""
    try:
        with open(path, "rb") as handle:
            raw = handle.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if path.endswith(".toml"):
        try:
            return _toml.loads(raw.decode("utf-8"))
        except _toml.TOMLDecodeError as exc:
            raise UsageError(f"{path} is not valid TOML: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path} must contain a JSON object")
    return data


def emit(value: object) -> None:
    sys.stdout.write(canonical_text(to_jsonable(value)) + "\n")


class Session:
    """Store plus kernel for one invocation; locks only when writing."""

    def __init__(self, args: argparse.Namespace, write: bool) -> None:
        self.store = EventStore(args.store)
        self.write = write
        policy = None
        if getattr(args, "policy", None):
            policy = load_policy(args.policy)
        elif os.path.exists(self.store.policy_path):
            policy = load_policy(self.store.policy_path)
        self._locked = False
        if write:
            self.store.acquire_lock()
            self._locked = True
        try:
            self.kernel = GovernanceKernel(store=self.store, policy=policy)
        except BaseException:
            self.close()
            raise

    def close(self) -> None:
        if self._locked:
            self.store.release_lock()
            self._locked = False

    def __enter__(self) -> "Session":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


# -- capability ------------------------------------------------------------


def cmd_capability_register(args: argparse.Namespace) -> int:
    content = args.content
    if args.content_file is not None:
        try:
            with open(args.content_file, "r", encoding="utf-8") as handle:
                content = handle.read()
        except OSError as exc:
            raise UsageError(
                f"cannot read {args.content_file}: {exc}") from None
    if content is None:
        raise UsageError("provide --content or --content-file")
    with Session(args, write=True) as session:
        record = session.kernel.register_artifact(
            content, CapabilityKind(args.kind),
            created_by=args.created_by, actor=args.actor)
        emit(record)
    return 0


def cmd_capability_show(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        emit(session.kernel.capability(args.capability_id))
    return 0


def cmd_capability_transition(args: argparse.Namespace) -> int:
    with Session(args, write=True) as session:
        record = session.kernel.transition(
            args.capability_id, LifecycleState(args.to),
            evidence=tuple(args.evidence), review=args.review,
            actor=args.actor)
        emit(record)
    return 0


# -- mutation ----------------------------------------------------------------


def cmd_mutation_propose(args: argparse.Namespace) -> int:
    document = load_document(args.document)
    contract = contract_from_payload(document["contract"])
    delta = delta_from_payload(document["delta"])
    with Session(args, write=True) as session:
        base = args.base or document.get("base_config") \
            or session.kernel.state.active_config
        if base is None:
            raise UsageError("no base config: pass --base or set an "
                             "active config first")
        record = session.kernel.propose_mutation(
            base, contract, delta, actor=args.actor,
            mutation_id=args.id or document.get("mutation_id"))
        emit(record)
    return 0


def cmd_mutation_stage(args: argparse.Namespace) -> int:
    validation = ValidationResult(evaluator_id=args.evaluator,
                                  metric=args.metric, delta=args.delta)
    with Session(args, write=True) as session:
        record = session.kernel.stage_mutation(args.mutation_id, validation,
                                               actor=args.actor)
        emit(record)
    return 0


def cmd_mutation_apply(args: argparse.Namespace) -> int:
    with Session(args, write=True) as session:
        config = session.kernel.apply_mutation(args.mutation_id,
                                               actor=args.actor)
        emit(config)
    return 0


def cmd_mutation_rollback(args: argparse.Namespace) -> int:
    trigger = RollbackTrigger(metric=args.metric, observed=args.observed)
    with Session(args, write=True) as session:
        config = session.kernel.rollback_mutation(args.mutation_id, trigger,
                                                  actor=args.actor)
        emit(config)
    return 0


def cmd_mutation_show(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        emit(session.kernel.mutation(args.mutation_id))
    return 0


# -- review --------------------------------------------------------------------


def cmd_review_submit(args: argparse.Namespace) -> int:
    with Session(args, write=True) as session:
        record = session.kernel.review(
            args.subject_id, reviewer=args.reviewer, risk=args.risk,
            evidence=tuple(args.evidence), rationale=args.rationale,
            actor=args.actor)
        emit(record)
    return 0


# -- graph ------------------------------------------------------------------------


def cmd_graph_lineage(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        emit(session.kernel.lineage(args.node_id))
    return 0


def cmd_graph_compose(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        proposal = session.kernel.compose(args.skill, args.context,
                                          bound=args.bound)
        emit(proposal)
    return 0


def cmd_graph_verify(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        violations = session.kernel.verify_graph()
        emit({"ok": not violations, "violations": violations})
    return 0 if not violations else 1


# -- audit ---------------------------------------------------------------------------


def cmd_audit_verify(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        report = session.kernel.audit_verify()
        emit({"ok": report.ok,
              "events_checked": report.events_checked,
              "replay_matches": report.replay_matches,
              "violations": to_jsonable(report.violations)})
    return 0 if report.ok else 3


def cmd_audit_replay(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        kernel = session.kernel
        replayed = kernel.replay()
        matches = (canonical_text(replayed.to_jsonable())
                   == canonical_text(kernel.state.to_jsonable()))
        emit({"replay_matches": matches,
              "events": len(kernel.events),
              "log_head": kernel.head_hash})
    return 0 if matches else 3


# -- cycle ------------------------------------------------------------------------------


def cmd_cycle_run(args: argparse.Namespace) -> int:
    workload = workload_from_jsonable(load_document(args.workload))
    with Session(args, write=True) as session:
        report = session.kernel.run_cycle(workload, actor=args.actor)
        emit(report)
    return 0


# -- state ------------------------------------------------------------------------------


def cmd_state_show(args: argparse.Namespace) -> int:
    with Session(args, write=False) as session:
        kernel = session.kernel
        state = kernel.snapshot_state()
        emit({"harness": to_jsonable(state),
              "counts": {
                  "capabilities": len(kernel.state.capabilities),
                  "configs": len(kernel.state.configs),
                  "skill_specs": len(kernel.state.skill_specs),
                  "mutations": len(kernel.state.mutations),
                  "reviews": len(kernel.state.reviews),
                  "events": len(kernel.events),
                  "graph_nodes": len(kernel.state.graph.nodes),
                  "graph_edges": len(kernel.state.graph.edges)}})
    return 0


# -- sim ---------------------------------------------------------------------------------


def _emit_metrics(metrics, args: argparse.Namespace) -> None:
    if args.table or args.csv:
        if not (args.table and args.csv):
            raise UsageError("pass both --table and --csv, or neither")
        write_metrics(metrics, args.table, args.csv)
    sys.stdout.write(metrics_table_text(metrics))


def cmd_sim_run(args: argparse.Namespace) -> int:
    config = sim_config_from_mapping(load_document(args.config))
    store = None
    if args.persist:
        store = EventStore(args.store)
        store.acquire_lock()
    try:
        metrics, _ = run_scenario_detailed(config, store=store)
    finally:
        if store is not None:
            store.release_lock()
    _emit_metrics(metrics, args)
    return 0


def cmd_sim_normalizer(args: argparse.Namespace) -> int:
    policy = load_policy(args.policy) if args.policy else None
    store = None
    if args.persist:
        store = EventStore(args.store)
        store.acquire_lock()
    try:
        metrics, _ = scenario_normalizer_detailed(
            args.seed, args.cycles, args.variant, store=store, policy=policy)
    finally:
        if store is not None:
            store.release_lock()
    _emit_metrics(metrics, args)
    return 0


def cmd_sim_compare(args: argparse.Namespace) -> int:
    if len(args.config) < 2:
        raise UsageError("pass --config at least twice")
    configs = [sim_config_from_mapping(load_document(path))
               for path in args.config]
    table = compare_policies(configs)
    text = canonical_text(table) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    sys.stdout.write(text)
    return 0


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="govkernel",
        description="Governance kernel for agent-generated artifacts.")
    parser.add_argument("--store", default=os.environ.get(
        "GOVKERNEL_STORE", DEFAULT_STORE),
        help="store directory (default ./store or $GOVKERNEL_STORE)")
    parser.add_argument("--policy", default=None,
                        help="policy TOML overriding the store's policy")
    parser.add_argument("--actor", default="cli",
                        help="actor recorded on emitted events")
    sub = parser.add_subparsers(dest="command", required=True)

    capability = sub.add_parser("capability",
                                help="register, inspect, transition")
    cap_sub = capability.add_subparsers(dest="subcommand", required=True)
    cap_register = cap_sub.add_parser("register")
    cap_register.add_argument("--kind", required=True,
                              choices=[k.value for k in CapabilityKind])
    cap_register.add_argument("--content")
    cap_register.add_argument("--content-file")
    cap_register.add_argument("--created-by", dest="created_by")
    cap_register.set_defaults(func=cmd_capability_register)
    cap_show = cap_sub.add_parser("show")
    cap_show.add_argument("capability_id")
    cap_show.set_defaults(func=cmd_capability_show)
    cap_transition = cap_sub.add_parser("transition")
    cap_transition.add_argument("capability_id")
    cap_transition.add_argument("--to", required=True,
                                choices=[s.value for s in LifecycleState])
    cap_transition.add_argument("--evidence", action="append", default=[])
    cap_transition.add_argument("--review")
    cap_transition.set_defaults(func=cmd_capability_transition)

    mutation = sub.add_parser("mutation", help="the governed mutation loop")
    mut_sub = mutation.add_subparsers(dest="subcommand", required=True)
    mut_propose = mut_sub.add_parser("propose")
    mut_propose.add_argument("--document", required=True,
                             help="JSON/TOML file with contract and delta")
    mut_propose.add_argument("--base")
    mut_propose.add_argument("--id")
    mut_propose.set_defaults(func=cmd_mutation_propose)
    mut_stage = mut_sub.add_parser("stage")
    mut_stage.add_argument("mutation_id")
    mut_stage.add_argument("--evaluator", required=True)
    mut_stage.add_argument("--metric", required=True)
    mut_stage.add_argument("--delta", required=True, type=float)
    mut_stage.set_defaults(func=cmd_mutation_stage)
    mut_apply = mut_sub.add_parser("apply")
    mut_apply.add_argument("mutation_id")
    mut_apply.set_defaults(func=cmd_mutation_apply)
    mut_rollback = mut_sub.add_parser("rollback")
    mut_rollback.add_argument("mutation_id")
    mut_rollback.add_argument("--metric", required=True)
    mut_rollback.add_argument("--observed", required=True, type=float)
    mut_rollback.set_defaults(func=cmd_mutation_rollback)
    mut_show = mut_sub.add_parser("show")
    mut_show.add_argument("mutation_id")
    mut_show.set_defaults(func=cmd_mutation_show)

    review = sub.add_parser("review", help="submit review decisions")
    rev_sub = review.add_subparsers(dest="subcommand", required=True)
    rev_submit = rev_sub.add_parser("submit")
    rev_submit.add_argument("subject_id")
    rev_submit.add_argument("--reviewer", required=True)
    rev_submit.add_argument("--risk", required=True, type=float)
    rev_submit.add_argument("--evidence", action="append", default=[])
    rev_submit.add_argument("--rationale", default="")
    rev_submit.set_defaults(func=cmd_review_submit)

    graph = sub.add_parser("graph", help="lineage, composition, invariants")
    graph_sub = graph.add_subparsers(dest="subcommand", required=True)
    graph_lineage = graph_sub.add_parser("lineage")
    graph_lineage.add_argument("node_id")
    graph_lineage.set_defaults(func=cmd_graph_lineage)
    graph_compose = graph_sub.add_parser("compose")
    graph_compose.add_argument("--skill", action="append", default=[],
                               required=True)
    graph_compose.add_argument("--context", action="append", default=[])
    graph_compose.add_argument("--bound", type=int, default=12)
    graph_compose.set_defaults(func=cmd_graph_compose)
    graph_verify = graph_sub.add_parser("verify")
    graph_verify.set_defaults(func=cmd_graph_verify)

    audit = sub.add_parser("audit", help="verify the chain, replay the log")
    audit_sub = audit.add_subparsers(dest="subcommand", required=True)
    audit_sub.add_parser("verify").set_defaults(func=cmd_audit_verify)
    audit_sub.add_parser("replay").set_defaults(func=cmd_audit_replay)

    cycle = sub.add_parser("cycle", help="run one governance cycle")
    cycle_sub = cycle.add_subparsers(dest="subcommand", required=True)
    cycle_run = cycle_sub.add_parser("run")
    cycle_run.add_argument("--workload", required=True,
                           help="JSON/TOML workload document")
    cycle_run.set_defaults(func=cmd_cycle_run)

    state = sub.add_parser("state", help="current harness state")
    state_sub = state.add_subparsers(dest="subcommand", required=True)
    state_sub.add_parser("show").set_defaults(func=cmd_state_show)

    sim = sub.add_parser("sim", help="deterministic simulated workloads")
    sim_sub = sim.add_subparsers(dest="subcommand", required=True)
    sim_run = sim_sub.add_parser("run")
    sim_run.add_argument("--config", required=True)
    sim_run.add_argument("--table")
    sim_run.add_argument("--csv")
    sim_run.add_argument("--persist", action="store_true",
                         help="write events into --store instead of memory")
    sim_run.set_defaults(func=cmd_sim_run)
    sim_norm = sim_sub.add_parser("normalizer")
    sim_norm.add_argument("--seed", required=True, type=int)
    sim_norm.add_argument("--cycles", required=True, type=int)
    sim_norm.add_argument("--variant", default="no_drift",
                          choices=list(NORMALIZER_VARIANTS))
    sim_norm.add_argument("--table")
    sim_norm.add_argument("--csv")
    sim_norm.add_argument("--persist", action="store_true")
    sim_norm.set_defaults(func=cmd_sim_normalizer)
    sim_compare = sim_sub.add_parser("compare")
    sim_compare.add_argument("--config", action="append", default=[],
                             required=True)
    sim_compare.add_argument("--out")
    sim_compare.set_defaults(func=cmd_sim_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Durable store: append-only audit log, snapshots, policy, write lock.

Layout under the store root:

    audit.log            one canonical event per line, hash-chained
    snapshots/N*.snap    periodic full-state snapshots (every 1,000 events)
    policy               the active governance policy (TOML)
    .lock                write-lock file while a process owns the store

Events are fsynced before the command that caused them is acknowledged,
so an acknowledged command never lacks its events after a crash.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .canonical import canonical_text, digest_hex, parse_text
from .errors import LockHeld, StorageFailure
from .events import TraceEvent, VerificationReport, event_from_line, verify_lines
from .registry import KernelState

SNAPSHOT_INTERVAL = 1000

AUDIT_LOG = "audit.log"
SNAPSHOT_DIR = "snapshots"
POLICY_FILE = "policy"
LOCK_FILE = ".lock"


@dataclass(frozen=True)
class Snapshot:
    """Full-state checkpoint; replaying events 0..as_of_event equals it."""

    as_of_event: int
    graph_version: int
    registries: dict
    graph: dict
    checksum: str

    @classmethod
    def of_state(cls, state: KernelState, as_of_event: int) -> "Snapshot":
        dump = state.to_jsonable()
        graph = dump.pop("graph")
        checksum = digest_hex([as_of_event, graph["graph_version"], dump, graph])
        return cls(as_of_event=as_of_event,
                   graph_version=graph["graph_version"],
                   registries=dump, graph=graph, checksum=checksum)

    def to_state(self) -> KernelState:
        dump = dict(self.registries)
        dump["graph"] = self.graph
        return KernelState.from_jsonable(dump)

    def verify(self) -> bool:
        return self.checksum == digest_hex(
            [self.as_of_event, self.graph_version, self.registries, self.graph])


class EventStore:
    """Filesystem-backed store; all methods raise StorageFailure on I/O."""

    def __init__(self, root: str,
                 snapshot_interval: int = SNAPSHOT_INTERVAL) -> None:
        self.root = root
        self.snapshot_interval = snapshot_interval
        try:
            os.makedirs(os.path.join(root, SNAPSHOT_DIR), exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create store at {root}: {exc}") from None

    # -- paths -----------------------------------------------------------

    @property
    def log_path(self) -> str:
        return os.path.join(self.root, AUDIT_LOG)

    @property
    def policy_path(self) -> str:
        return os.path.join(self.root, POLICY_FILE)

    def snapshot_path(self, as_of_event: int) -> str:
        return os.path.join(self.root, SNAPSHOT_DIR, f"{as_of_event:08d}.snap")

    # -- events ----------------------------------------------------------

    def read_events(self) -> list[TraceEvent]:
        if not os.path.exists(self.log_path):
            return []
        events: list[TraceEvent] = []
        try:
            with open(self.log_path, "r", encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        events.append(event_from_line(line))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise StorageFailure(f"cannot read audit log: {exc}") from None
        return events

    def append_batch(self, events: list[TraceEvent]) -> None:
        """Write and fsync the batch; callers commit state only after this."""
        if not events:
            return
        try:
            with open(self.log_path, "a", encoding="utf-8") as handle:
                for event in events:
                    handle.write(event.to_line() + "\n")
                handle.flush()
                os.fsync(handle.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot append to audit log: {exc}") from None

    def verify_file(self) -> VerificationReport:
        """Line-level chain verification straight off the disk."""
        if not os.path.exists(self.log_path):
            return VerificationReport()
        try:
            with open(self.log_path, "r", encoding="utf-8") as handle:
                lines = handle.readlines()
        except OSError as exc:
            raise StorageFailure(f"cannot read audit log: {exc}") from None
        return verify_lines(lines)

    # -- snapshots ---------------------------------------------------------

    def write_snapshot(self, snapshot: Snapshot) -> str:
        path = self.snapshot_path(snapshot.as_of_event)
        payload = canonical_text({
            "as_of_event": snapshot.as_of_event,
            "graph_version": snapshot.graph_version,
            "registries": snapshot.registries,
            "graph": snapshot.graph,
            "checksum": snapshot.checksum,
        })
        try:
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(payload + "\n")
                handle.flush()
                os.fsync(handle.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot write snapshot: {exc}") from None
        return path

    def load_snapshot(self, path: str) -> Snapshot:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = parse_text(handle.read())
        except (OSError, ValueError) as exc:
            raise StorageFailure(f"cannot load snapshot: {exc}") from None
        snapshot = Snapshot(
            as_of_event=data["as_of_event"],
            graph_version=data["graph_version"],
            registries=data["registries"],
            graph=data["graph"],
            checksum=data["checksum"],
        )
        if not snapshot.verify():
            raise StorageFailure(f"snapshot checksum mismatch: {path}")
        return snapshot

    def latest_snapshot(self) -> Snapshot | None:
        directory = os.path.join(self.root, SNAPSHOT_DIR)
        try:
            names = sorted(n for n in os.listdir(directory)
                           if n.endswith(".snap"))
        except OSError:
            return None
        if not names:
            return None
        return self.load_snapshot(os.path.join(directory, names[-1]))

    # -- locking -----------------------------------------------------------

    def acquire_lock(self) -> None:
        path = os.path.join(self.root, LOCK_FILE)
        try:
            descriptor = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockHeld(f"store {self.root} is locked by another process") \
                from None
        except OSError as exc:
            raise StorageFailure(f"cannot create lock: {exc}") from None
        with os.fdopen(descriptor, "w") as handle:
            handle.write(str(os.getpid()))

    def release_lock(self) -> None:
        path = os.path.join(self.root, LOCK_FILE)
        try:
            os.unlink(path)
        except FileNotFoundError:
            pass
        except OSError as exc:
            raise StorageFailure(f"cannot release lock: {exc}") from None

"""Trace events and the tamper-evident hash chain.

Every state change in the kernel is caused by exactly one
:class:`TraceEvent`.  Events are chained: each one's ``this_hash`` is the
SHA-256 of the previous event's hash (raw 32 bytes) concatenated with the
canonical bytes of the event body ``{actor, index, kind, payload, tick}``.
The first event chains from 32 zero bytes.  Flipping any byte of any event
therefore breaks verification at that event's index.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Any, Iterable

from .canonical import canonical_bytes, canonical_text, parse_text

GENESIS_HASH = "0" * 64


class EventKind(str, enum.Enum):
    ARTIFACT_REGISTERED = "artifact_registered"
    LIFECYCLE_TRANSITION = "lifecycle_transition"
    MUTATION_PROPOSED = "mutation_proposed"
    MUTATION_STAGED = "mutation_staged"
    MUTATION_APPLIED = "mutation_applied"
    MUTATION_REJECTED = "mutation_rejected"
    ROLLBACK_EVENT = "rollback_event"
    REVIEW_RECORDED = "review_recorded"
    GRAPH_UPDATED = "graph_updated"
    EVALUATION_RECORDED = "evaluation_recorded"
    CYCLE_STARTED = "cycle_started"
    CYCLE_COMPLETED = "cycle_completed"


def event_id_for_index(index: int) -> str:
    """Stable id for the event at a given log index."""
    return f"ev-{index:06d}"


def index_for_event_id(event_id: str) -> int | None:
    if not event_id.startswith("ev-"):
        return None
    try:
        return int(event_id[3:], 10)
    except ValueError:
        return None


def compute_hash(prev_hash: str, index: int, kind: str, actor: str,
                 tick: int, payload: Any) -> str:
    """Chain hash over the event body; ``prev_hash`` enters as raw bytes."""
    body = {
        "actor": actor,
        "index": index,
        "kind": kind,
        "payload": payload,
        "tick": tick,
    }
    return hashlib.sha256(bytes.fromhex(prev_hash) + canonical_bytes(body)).hexdigest()


@dataclass(frozen=True)
class TraceEvent:
    """One link of the append-only audit chain."""

    index: int
    kind: EventKind
    actor: str
    tick: int
    payload: dict
    prev_hash: str
    this_hash: str

    @property
    def event_id(self) -> str:
        return event_id_for_index(self.index)

    def to_line(self) -> str:
        """One canonical JSON line, the on-disk form."""
        return canonical_text({
            "actor": self.actor,
            "index": self.index,
            "kind": self.kind.value,
            "payload": self.payload,
            "prev_hash": self.prev_hash,
            "this_hash": self.this_hash,
            "tick": self.tick,
        })


def make_event(index: int, kind: EventKind, actor: str, tick: int,
               payload: dict, prev_hash: str) -> TraceEvent:
    this_hash = compute_hash(prev_hash, index, kind.value, actor, tick, payload)
    return TraceEvent(index=index, kind=kind, actor=actor, tick=tick,
                      payload=payload, prev_hash=prev_hash, this_hash=this_hash)


def event_from_fields(fields: dict) -> TraceEvent:
    return TraceEvent(
        index=fields["index"],
        kind=EventKind(fields["kind"]),
        actor=fields["actor"],
        tick=fields["tick"],
        payload=fields["payload"],
        prev_hash=fields["prev_hash"],
        this_hash=fields["this_hash"],
    )


def event_from_line(line: str) -> TraceEvent:
    return event_from_fields(parse_text(line))


@dataclass(frozen=True)
class ChainViolation:
    """One verification failure, anchored to a log index."""

    index: int
    kind: str
    detail: str


@dataclass
class VerificationReport:
    """Outcome of walking the chain; empty violations means the log verifies."""

    events_checked: int = 0
    violations: list[ChainViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_chain(events: Iterable[TraceEvent]) -> VerificationReport:
    """Recompute every hash and link; report all violations, throw nothing.

    A content tamper in event k surfaces as a single ``hash_mismatch`` at
    index k: the stored ``this_hash`` no longer matches the hash recomputed
    from the event's own fields.  Link checks compare each ``prev_hash``
    against the predecessor's *stored* hash so one tampered event does not
    implicate its untouched neighbour.
    """
    report = VerificationReport()
    prev_stored: str | None = None
    prev_index: int | None = None
    for event in events:
        report.events_checked += 1
        if prev_index is None:
            if event.prev_hash != GENESIS_HASH:
                report.violations.append(ChainViolation(
                    event.index, "genesis_mismatch",
                    f"first event prev_hash {event.prev_hash} != genesis"))
        else:
            if event.index != prev_index + 1:
                report.violations.append(ChainViolation(
                    event.index, "index_gap",
                    f"index {event.index} follows {prev_index}"))
            if event.prev_hash != prev_stored:
                report.violations.append(ChainViolation(
                    event.index, "chain_mismatch",
                    "prev_hash does not match predecessor's this_hash"))
        try:
            recomputed = compute_hash(event.prev_hash, event.index,
                                      event.kind.value, event.actor,
                                      event.tick, event.payload)
        except ValueError:
            recomputed = None
        if recomputed != event.this_hash:
            report.violations.append(ChainViolation(
                event.index, "hash_mismatch",
                "this_hash does not match recomputed content hash"))
        prev_stored = event.this_hash
        prev_index = event.index
    return report


def verify_lines(lines: Iterable[str]) -> VerificationReport:
    """Verify the on-disk line form; unparseable lines are violations too.

    Line numbers coincide with event indices in an untampered log, so a
    parse failure on line n is anchored at index n.
    """
    report = VerificationReport()
    events: list[TraceEvent] = []
    line_no = 0
    for line in lines:
        if not line.strip():
            continue
        try:
            event = event_from_line(line)
        except (ValueError, KeyError, TypeError):
            report.violations.append(ChainViolation(
                line_no, "parse_error", "line is not a canonical event"))
            line_no += 1
            continue
        events.append(event)
        line_no += 1
    inner = verify_chain(events)
    report.events_checked = inner.events_checked + len(report.violations)
    report.violations.extend(inner.violations)
    report.violations.sort(key=lambda v: (v.index, v.kind))
    return report

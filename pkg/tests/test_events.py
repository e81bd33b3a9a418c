"""Hash-chained trace events and chain verification.

EV0_HASH / EV1_HASH were computed with an independent hashlib+json
script over the documented body form, then frozen here.
"""

from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from govkernel.events import (
    GENESIS_HASH,
    EventKind,
    event_from_line,
    event_id_for_index,
    index_for_event_id,
    make_event,
    verify_chain,
    verify_lines,
)

EV0_HASH = "f63440cc1fe179257b2f25bf54c6b923becf0ab94877e2d99136b2dc82e949cf"
EV1_HASH = "63b9d5865debc0f5d50b9161ebcb2db03e532056dfd00c1bccee025c8a3ff48c"


def fixed_pair():
    ev0 = make_event(0, EventKind.ARTIFACT_REGISTERED, "alice", 1,
                     {"entity": "capability", "note": "n1"}, GENESIS_HASH)
    ev1 = make_event(1, EventKind.REVIEW_RECORDED, "bob", 2,
                     {"x": [1, 2.5, "ü"]}, ev0.this_hash)
    return ev0, ev1


def chain_of(payloads, kind=EventKind.GRAPH_UPDATED):
    events = []
    prev = GENESIS_HASH
    for i, payload in enumerate(payloads):
        event = make_event(i, kind, "t", i + 1, payload, prev)
        events.append(event)
        prev = event.this_hash
    return events


def test_frozen_chain_hashes():
    ev0, ev1 = fixed_pair()
    assert ev0.this_hash == EV0_HASH
    assert ev1.prev_hash == EV0_HASH
    assert ev1.this_hash == EV1_HASH


def test_event_id_round_trip():
    assert event_id_for_index(0) == "ev-000000"
    assert event_id_for_index(123456) == "ev-123456"
    assert index_for_event_id("ev-000123") == 123
    assert index_for_event_id("rev-000123") is None
    assert index_for_event_id("ev-xyz") is None
    ev0, _ = fixed_pair()
    assert ev0.event_id == "ev-000000"


def test_line_round_trip():
    for event in fixed_pair():
        parsed = event_from_line(event.to_line())
        assert parsed == event


def test_intact_chain_verifies():
    events = chain_of([{"n": i} for i in range(10)])
    report = verify_chain(events)
    assert report.ok
    assert report.events_checked == 10
    assert verify_chain([]).ok


def test_genesis_mismatch_detected():
    events = chain_of([{"n": 0}, {"n": 1}])
    report = verify_chain(events[1:])
    kinds = {(v.index, v.kind) for v in report.violations}
    assert (1, "genesis_mismatch") in kinds


def test_payload_tamper_detected_at_exact_index():
    events = chain_of([{"n": i} for i in range(8)])
    for k in range(8):
        tampered = list(events)
        bad = make_event(k, tampered[k].kind, tampered[k].actor,
                         tampered[k].tick, {"n": 999}, tampered[k].prev_hash)
        # keep the stored hash: content changed underneath it
        object.__setattr__(bad, "this_hash", events[k].this_hash)
        tampered[k] = bad
        report = verify_chain(tampered)
        assert {v.index for v in report.violations} == {k}
        assert all(v.kind == "hash_mismatch" for v in report.violations)


def test_stored_hash_tamper_implicates_successor_link():
    events = chain_of([{"n": i} for i in range(4)])
    bad = events[1]
    object.__setattr__(bad, "this_hash", "f" * 64)
    report = verify_chain(events)
    found = {(v.index, v.kind) for v in report.violations}
    assert (1, "hash_mismatch") in found
    assert (2, "chain_mismatch") in found


def test_index_gap_detected():
    events = chain_of([{"n": i} for i in range(5)])
    report = verify_chain(events[:2] + events[3:])
    kinds = {(v.index, v.kind) for v in report.violations}
    assert (3, "index_gap") in kinds
    assert (3, "chain_mismatch") in kinds


def test_verify_lines_matches_verify_chain_on_clean_log():
    events = chain_of([{"n": i} for i in range(6)])
    lines = [e.to_line() for e in events]
    lines.insert(3, "")  # blank lines are skipped
    report = verify_lines(lines)
    assert report.ok
    assert report.events_checked == 6


def test_verify_lines_anchors_parse_errors():
    events = chain_of([{"n": i} for i in range(4)])
    lines = [e.to_line() for e in events]
    lines[2] = lines[2][:-1]  # truncate: no longer valid JSON
    report = verify_lines(lines)
    kinds = {(v.index, v.kind) for v in report.violations}
    assert (2, "parse_error") in kinds


@given(st.lists(st.dictionaries(st.sampled_from("abcd"),
                                st.integers(0, 9), max_size=3),
                min_size=1, max_size=12))
def test_any_chain_verifies_and_single_tamper_localizes(payloads):
    events = chain_of([{"p": p} for p in payloads])
    assert verify_chain(events).ok
    k = len(events) // 2
    bad = make_event(k, events[k].kind, "intruder", events[k].tick,
                     events[k].payload, events[k].prev_hash)
    object.__setattr__(bad, "this_hash", events[k].this_hash)
    tampered = list(events)
    tampered[k] = bad
    assert {v.index for v in verify_chain(tampered).violations} == {k}

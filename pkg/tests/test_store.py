"""Filesystem store: log round trips, snapshots, locking, failure wrapping."""

from __future__ import annotations

import os

import pytest

from govkernel import CapabilityKind, GovernanceKernel
from govkernel.canonical import canonical_text
from govkernel.errors import LockHeld, StorageFailure
from govkernel.store import EventStore, Snapshot

from .test_events import chain_of


@pytest.fixture
def store(tmp_path):
    return EventStore(str(tmp_path / "store"))


def test_append_and_read_round_trip(store):
    events = chain_of([{"n": i} for i in range(5)])
    store.append_batch(events[:3])
    store.append_batch(events[3:])
    assert store.read_events() == events
    with open(store.log_path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    assert lines == [e.to_line() for e in events]


def test_read_missing_log_is_empty(store):
    assert store.read_events() == []
    assert not os.path.exists(store.log_path)


def test_empty_batch_writes_nothing(store):
    store.append_batch([])
    assert not os.path.exists(store.log_path)


def test_verify_file_clean_and_tampered(store):
    report = store.verify_file()
    assert report.ok and report.events_checked == 0

    store.append_batch(chain_of([{"n": i} for i in range(6)]))
    report = store.verify_file()
    assert report.ok and report.events_checked == 6

    with open(store.log_path, "r", encoding="utf-8") as handle:
        lines = handle.readlines()
    lines[4] = lines[4].replace('"actor":"t"', '"actor":"x"', 1)
    with open(store.log_path, "w", encoding="utf-8") as handle:
        handle.writelines(lines)
    report = store.verify_file()
    assert not report.ok
    assert [(v.index, v.kind) for v in report.violations] \
        == [(4, "hash_mismatch")]


def test_unparseable_log_raises_storage_failure(store):
    with open(store.log_path, "w", encoding="utf-8") as handle:
        handle.write("not json\n")
    with pytest.raises(StorageFailure):
        store.read_events()


def test_log_path_collision_raises_storage_failure(store):
    os.makedirs(store.log_path)  # a directory where the log should live
    with pytest.raises(StorageFailure):
        store.append_batch(chain_of([{"n": 0}]))


def test_unwritable_root_raises_storage_failure(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not directory")
    with pytest.raises(StorageFailure):
        EventStore(str(blocker / "store"))


def test_snapshot_round_trip(store):
    kernel = GovernanceKernel()
    kernel.register_artifact("snapshot skill", CapabilityKind.SKILL)
    kernel.register_capability("snapshot prompt", CapabilityKind.PROMPT)
    snapshot = Snapshot.of_state(kernel.state, as_of_event=len(kernel.events) - 1)
    assert snapshot.verify()
    path = store.write_snapshot(snapshot)
    assert path.endswith(f"{snapshot.as_of_event:08d}.snap")
    loaded = store.load_snapshot(path)
    assert loaded == snapshot
    assert canonical_text(loaded.to_state().to_jsonable()) \
        == canonical_text(kernel.state.to_jsonable())


def test_snapshot_checksum_tamper_detected(store):
    kernel = GovernanceKernel()
    kernel.register_capability("body", CapabilityKind.SKILL)
    snapshot = Snapshot.of_state(kernel.state, as_of_event=0)
    path = store.write_snapshot(snapshot)
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text.replace('"graph_version":0', '"graph_version":7'))
    with pytest.raises(StorageFailure):
        store.load_snapshot(path)


def test_latest_snapshot_orders_numerically(store):
    kernel = GovernanceKernel()
    kernel.register_capability("body", CapabilityKind.SKILL)
    for index in (5, 12, 9):
        store.write_snapshot(Snapshot.of_state(kernel.state, as_of_event=index))
    latest = store.latest_snapshot()
    assert latest is not None
    assert latest.as_of_event == 12


def test_latest_snapshot_when_none_exist(store):
    assert store.latest_snapshot() is None


def test_lock_lifecycle(store):
    store.acquire_lock()
    with pytest.raises(LockHeld):
        store.acquire_lock()
    store.release_lock()
    store.acquire_lock()
    store.release_lock()
    store.release_lock()  # releasing an absent lock is harmless

"""Canonical serialization and deterministic id derivation.

One byte form per value: UTF-8 JSON with keys in lexicographic order, no
insignificant whitespace, base-10 integers, floats as the shortest decimal
that round-trips (Python's ``repr``).  Everything that is hashed, signed,
diffed, or compared across a replay goes through this module, so two states
are equal iff their canonical bytes are equal.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from typing import Any

__all__ = [
    "to_jsonable",
    "canonical_text",
    "canonical_bytes",
    "parse_text",
    "digest_hex",
    "derive_id",
]


def to_jsonable(value: Any) -> Any:
    """Reduce a domain value to plain JSON types.

    Dataclasses become dicts of their fields, enums their values, tuples
    become lists, and sets become sorted lists (set order is never
    semantic here).  Mapping keys must already be strings.
    """
    if isinstance(value, enum.Enum):
        return to_jsonable(value.value)
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite float has no canonical form")
        return value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: to_jsonable(getattr(value, f.name))
            for f in dataclasses.fields(value)
        }
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise TypeError(f"canonical mapping keys must be str, got {key!r}")
            out[key] = to_jsonable(item)
        return out
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, (set, frozenset)):
        return sorted(to_jsonable(item) for item in value)
    raise TypeError(f"no canonical form for {type(value).__name__}")


def canonical_text(value: Any) -> str:
    return json.dumps(
        to_jsonable(value),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonical_bytes(value: Any) -> bytes:
    return canonical_text(value).encode("utf-8")


def parse_text(text: str | bytes) -> Any:
    """Inverse of :func:`canonical_text` up to JSON's value model."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return json.loads(text)


def digest_hex(value: Any) -> str:
    """SHA-256 of the canonical bytes, hex-encoded (64 chars)."""
    return hashlib.sha256(canonical_bytes(value)).hexdigest()


def derive_id(tag: str, *parts: Any) -> str:
    """Deterministic 16-byte id for a new record.

    The digest covers a tag naming the record family plus the parts that
    pin the record to its creation point (content hash, creating event),
    so ids are a pure function of the audit log.
    """
    digest = hashlib.sha256(canonical_bytes([tag, *parts])).digest()
    return digest[:16].hex()

"""Episode trace files: newline-delimited JSON records, optional gzip.

Each line is one canonical-form record (sorted keys, compact separators).
The last line is a hash record carrying the 64-bit blake2b digest of all
preceding lines; replay validation recomputes it and re-checks the physical
invariants (time ordering, no teleportation, envelope respect) against the
header's parameters.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .episode import EpisodeTrace, canonical_record


class TraceIntegrityError(ValueError):
    def __init__(self, message: str, record_index: int):
        super().__init__(f"record {record_index}: {message}")
        self.record_index = record_index


def write_trace(trace: EpisodeTrace, path: str | Path, compress: bool = False) -> Path:
    if not trace.records:
        raise ValueError("trace was produced without recording enabled")
    path = Path(path)
    opener = gzip.open if compress or path.suffix == ".gz" else open
    with opener(path, "wt", encoding="utf-8") as fh:
        for record in trace.records:
            fh.write(canonical_record(record))
            fh.write("\n")
        fh.write(canonical_record({"k": "hash", "value": trace.trace_hash}))
        fh.write("\n")
    return path


def read_records(path: str | Path) -> list[dict]:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    records = []
    try:
        with opener(path, "rt", encoding="utf-8") as fh:
            for index, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise TraceIntegrityError(f"malformed JSON: {exc}", index) from None
    except (OSError, EOFError) as exc:
        raise TraceIntegrityError(f"unreadable trace: {exc}", len(records)) from None
    if not records:
        raise TraceIntegrityError("empty trace", 0)
    return records


@dataclass
class Violation:
    record_index: int
    kind: str
    detail: str


def validate_records(records: list[dict]) -> list[Violation]:
    """Re-check trace invariants; returns violations (empty list = OK)."""
    violations: list[Violation] = []
    if records and records[-1].get("k") == "hash":
        stored = records[-1].get("value")
        h = hashlib.blake2b(digest_size=8)
        for r in records[:-1]:
            h.update(canonical_record(r).encode())
            h.update(b"\n")
        if h.hexdigest() != stored:
            violations.append(Violation(len(records) - 1, "hash", "stored hash does not match content"))
        body = records[:-1]
    else:
        violations.append(Violation(len(records) - 1, "hash", "missing trailing hash record"))
        body = records

    if not body or body[0].get("k") != "hdr":
        violations.append(Violation(0, "header", "first record is not a header"))
        return violations
    hdr = body[0]
    dt = float(hdr.get("dt", 0.1))
    a_bound = float(hdr.get("a_bound", 10.0))
    max_accel = float(hdr.get("max_accel", 2.5))
    max_decel = float(hdr.get("max_decel", 6.0))
    dbw_faulted = bool(hdr.get("q_dbw", 0.0))
    eps = 1e-6

    last_t = -math.inf
    last_veh: dict[str, tuple[float, float]] = {}  # id -> (pos, speed)
    for index, r in enumerate(body):
        t = r.get("t")
        if t is not None:
            if t < last_t - 1e-9:
                violations.append(Violation(index, "time-order", f"t={t} after t={last_t}"))
            last_t = max(last_t, t)
        if r.get("k") != "veh":
            continue
        vid = r["id"]
        pos, speed, accel = float(r["pos"]), float(r["v"]), float(r["a"])
        if vid in last_veh:
            prev_pos, prev_speed = last_veh[vid]
            limit = (prev_speed + a_bound * dt) * dt + eps
            if abs(pos - prev_pos) > limit:
                violations.append(
                    Violation(
                        index,
                        "no-teleportation",
                        f"{vid} moved {abs(pos - prev_pos):.3f} m in one tick (limit {limit:.3f})",
                    )
                )
        if r.get("mode") == "engaged" and not dbw_faulted:
            if accel > max_accel + eps or accel < -max_decel - eps:
                violations.append(
                    Violation(index, "envelope", f"{vid} accel {accel:.3f} outside envelope")
                )
        last_veh[vid] = (pos, speed)
    return violations

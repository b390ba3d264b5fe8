"""MSSP-side registration: slot bookkeeping, eviction, handoff advisories.

The registry is immutable; handlers return an updated copy plus responses
addressed to SCs. Slot assignments are disjoint integers, lowest free slot
first. Sessions silent for longer than the eviction window are dropped by
expire_sessions, which the surrounding simulation calls every tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .messages import (
    ControlMessage,
    Deregister,
    HandoffComplete,
    HandoffInitiate,
    RegisterAccept,
    RegisterReject,
    RegisterRequest,
    SeaReport,
)
from .sc_fsm import Emit, ProtocolParams

REASON_CAPACITY = "capacity"
REASON_NOT_REGISTERED = "not-registered"


@dataclass(frozen=True)
class SessionInfo:
    slot: int
    last_seen: float


@dataclass(frozen=True)
class MsspRegistry:
    mssp_id: str
    capacity: int
    cell_start: float
    cell_end: float
    sessions: Mapping[str, SessionInfo] = field(default_factory=dict)
    # when set, SCs nearing the cell edge get a HandoffInitiate advisory
    advise_next: str | None = None
    advise_margin: float = 50.0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("registry capacity must be at least 1")
        if not self.cell_end > self.cell_start:
            raise ValueError("cell extent must be a non-empty interval")

    def has(self, sc_id: str) -> bool:
        return sc_id in self.sessions


def _lowest_free_slot(sessions: Mapping[str, SessionInfo]) -> int:
    used = {info.slot for info in sessions.values()}
    slot = 0
    while slot in used:
        slot += 1
    return slot


def mssp_handle(
    registry: MsspRegistry,
    msg: ControlMessage | SeaReport,
    now: float,
    params: ProtocolParams = ProtocolParams(),
) -> tuple[MsspRegistry, list[Emit]]:
    """Process one inbound message; returns (updated registry, responses)."""

    if isinstance(msg, RegisterRequest):
        sessions = dict(registry.sessions)
        existing = sessions.get(msg.sc_id)
        if existing is not None:
            # duplicate request (retry): re-accept with the same slot
            sessions[msg.sc_id] = SessionInfo(existing.slot, now)
            accept = RegisterAccept(registry.mssp_id, existing.slot, registry.cell_start, registry.cell_end)
            return replace(registry, sessions=sessions), [Emit(msg.sc_id, accept)]
        if len(sessions) >= registry.capacity:
            return registry, [Emit(msg.sc_id, RegisterReject(registry.mssp_id, REASON_CAPACITY))]
        slot = _lowest_free_slot(sessions)
        sessions[msg.sc_id] = SessionInfo(slot, now)
        accept = RegisterAccept(registry.mssp_id, slot, registry.cell_start, registry.cell_end)
        return replace(registry, sessions=sessions), [Emit(msg.sc_id, accept)]

    if isinstance(msg, SeaReport):
        if not registry.has(msg.sc_id):
            return registry, [Emit(msg.sc_id, RegisterReject(registry.mssp_id, REASON_NOT_REGISTERED))]
        sessions = dict(registry.sessions)
        sessions[msg.sc_id] = SessionInfo(sessions[msg.sc_id].slot, now)
        out: list[Emit] = []
        if (
            registry.advise_next is not None
            and msg.position >= registry.cell_end - registry.advise_margin
        ):
            out.append(Emit(msg.sc_id, HandoffInitiate(registry.advise_next)))
        return replace(registry, sessions=sessions), out

    if isinstance(msg, Deregister):
        if not registry.has(msg.sc_id):
            return registry, []
        sessions = dict(registry.sessions)
        del sessions[msg.sc_id]
        return replace(registry, sessions=sessions), []

    if isinstance(msg, HandoffComplete):
        return registry, []

    # Level-2/3 traffic and anything else is not registry business
    return registry, []


def expire_sessions(
    registry: MsspRegistry,
    now: float,
    params: ProtocolParams = ProtocolParams(),
) -> tuple[MsspRegistry, list[str]]:
    """Drop sessions silent beyond the eviction window; returns evicted ids."""
    evicted = [
        sc_id
        for sc_id, info in registry.sessions.items()
        if now - info.last_seen > params.evict_after
    ]
    if not evicted:
        return registry, []
    sessions = {k: v for k, v in registry.sessions.items() if k not in evicted}
    return replace(registry, sessions=sessions), evicted

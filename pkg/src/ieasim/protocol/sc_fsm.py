"""SmartConnect session state machine.

Each MSSP acts like a cell tower; the SC registers with the cell it is in,
streams SeA, consumes SA, and hands off make-before-break: it registers
with the next cell first and only then deregisters from the old one, so a
usable SA source exists throughout. The machine is a pure, total function
(state, event) -> (state, emissions): unexpected pairs are defined no-ops,
which keeps it fuzzable, and Registered is only ever entered through an
accept from the named MSSP (or by falling back to the still-live old
session when a handoff attempt fails).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from .messages import ControlMessage, Deregister, HandoffComplete, RegisterRequest, SaFrame

# --- session states ---


@dataclass(frozen=True)
class Unregistered:
    retries: int = 0


@dataclass(frozen=True)
class Registering:
    target: str
    deadline: float
    attempt: int = 1


@dataclass(frozen=True)
class Registered:
    mssp_id: str
    last_sa_time: float


@dataclass(frozen=True)
class HandingOff:
    old: str
    new: str
    deadline: float
    old_last_sa_time: float

    def __post_init__(self):
        if self.old == self.new:
            raise ValueError("handoff requires two distinct MSSPs")


@dataclass(frozen=True)
class Disengaged:
    pass


ScSessionState = Union[Unregistered, Registering, Registered, HandingOff, Disengaged]

# --- events ---


@dataclass(frozen=True)
class EnterCell:
    target: str


@dataclass(frozen=True)
class SaReceived:
    frame: SaFrame


@dataclass(frozen=True)
class Timeout:
    pass


@dataclass(frozen=True)
class HandoffNeeded:
    target: str


@dataclass(frozen=True)
class Accepted:
    mssp_id: str
    slot: int = 0


@dataclass(frozen=True)
class Rejected:
    mssp_id: str
    reason: str = ""


@dataclass(frozen=True)
class ExitCorridor:
    pass


ScEvent = Union[EnterCell, SaReceived, Timeout, HandoffNeeded, Accepted, Rejected, ExitCorridor]


@dataclass(frozen=True)
class Emit:
    """An outbound message addressed to one peer."""

    dest: str
    msg: ControlMessage


@dataclass(frozen=True)
class ProtocolParams:
    registration_timeout: float = 0.5  # s of sim time per register attempt
    sea_period: float = 0.1
    evict_missed: int = 3  # silent SeA periods before the MSSP drops a session
    retry_backoff_base: float = 0.2
    retry_backoff_cap: float = 2.0

    @property
    def evict_after(self) -> float:
        return self.evict_missed * self.sea_period


def backoff_delay(retries: int, params: ProtocolParams) -> float:
    """Exponential backoff before the next registration attempt."""
    return min(params.retry_backoff_cap, params.retry_backoff_base * (2.0 ** max(retries - 1, 0)))


def sa_usable(state: ScSessionState, source_mssp: str) -> bool:
    """May SA from this MSSP feed decision making right now?

    Only the registered peer qualifies; during a handoff the old session
    stays usable until the switch to the new cell completes.
    """
    if isinstance(state, Registered):
        return state.mssp_id == source_mssp
    if isinstance(state, HandingOff):
        return state.old == source_mssp
    return False


def sc_step(
    state: ScSessionState,
    event: ScEvent,
    now: float,
    sc_id: str,
    position: float,
    params: ProtocolParams = ProtocolParams(),
) -> tuple[ScSessionState, list[Emit]]:
    """One deterministic transition; emits at most two messages."""

    if isinstance(state, Disengaged):
        return state, []

    if isinstance(event, ExitCorridor):
        emits: list[Emit] = []
        if isinstance(state, Registered):
            emits.append(Emit(state.mssp_id, Deregister(sc_id)))
        elif isinstance(state, HandingOff):
            emits.append(Emit(state.old, Deregister(sc_id)))
            emits.append(Emit(state.new, Deregister(sc_id)))
        return Disengaged(), emits

    if isinstance(state, Unregistered):
        if isinstance(event, EnterCell):
            nxt = Registering(
                target=event.target,
                deadline=now + params.registration_timeout,
                attempt=state.retries + 1,
            )
            return nxt, [Emit(event.target, RegisterRequest(sc_id, position))]
        return state, []

    if isinstance(state, Registering):
        if isinstance(event, Accepted) and event.mssp_id == state.target:
            return Registered(mssp_id=state.target, last_sa_time=now), []
        if isinstance(event, Timeout):
            return Unregistered(retries=state.attempt), []
        if isinstance(event, Rejected) and event.mssp_id == state.target:
            return Unregistered(retries=state.attempt), []
        return state, []

    if isinstance(state, Registered):
        if isinstance(event, SaReceived) and event.frame.mssp_id == state.mssp_id:
            ts = max(state.last_sa_time, event.frame.timestamp)
            return replace(state, last_sa_time=ts), []
        if isinstance(event, HandoffNeeded) and event.target != state.mssp_id:
            nxt = HandingOff(
                old=state.mssp_id,
                new=event.target,
                deadline=now + params.registration_timeout,
                old_last_sa_time=state.last_sa_time,
            )
            return nxt, [Emit(event.target, RegisterRequest(sc_id, position))]
        if isinstance(event, Rejected) and event.mssp_id == state.mssp_id:
            # serving MSSP no longer recognizes us (evicted): start over
            return Unregistered(retries=0), []
        return state, []

    if isinstance(state, HandingOff):
        if isinstance(event, Accepted) and event.mssp_id == state.new:
            nxt = Registered(mssp_id=state.new, last_sa_time=now)
            return nxt, [
                Emit(state.old, Deregister(sc_id)),
                Emit(state.new, HandoffComplete(sc_id)),
            ]
        if isinstance(event, (Timeout,)):
            # make-before-break: the old session was never torn down
            return Registered(mssp_id=state.old, last_sa_time=state.old_last_sa_time), []
        if isinstance(event, Rejected) and event.mssp_id == state.new:
            return Registered(mssp_id=state.old, last_sa_time=state.old_last_sa_time), []
        if isinstance(event, SaReceived) and event.frame.mssp_id == state.old:
            ts = max(state.old_last_sa_time, event.frame.timestamp)
            return replace(state, old_last_sa_time=ts), []
        return state, []

    return state, []  # pragma: no cover - union is exhaustive

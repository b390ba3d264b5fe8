"""Minimal message-passing harness around the protocol state machines.

Drives one SC through a corridor of overlapping cells with a latency/loss
transport, using only protocol-module pieces (no perception, no vehicle
dynamics). Used by the handoff-continuity and registration-liveness tests.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from ieasim.protocol import (
    Accepted,
    Cell,
    Disengaged,
    EnterCell,
    ExitCorridor,
    HandingOff,
    HandoffInitiate,
    MsspRegistry,
    ProtocolParams,
    RegisterAccept,
    RegisterReject,
    Registered,
    Registering,
    Rejected,
    SaFrame,
    SaReceived,
    SeaReport,
    Timeout,
    Unregistered,
    backoff_delay,
    expire_sessions,
    mssp_handle,
    plan_handoff,
    sc_step,
    validate_cell_map,
)


@dataclass
class CrossingResult:
    reached_registered: bool
    first_registered_time: float | None
    attempts_to_register: int
    handoffs_completed: int
    gap_ticks_after_first_registration: int
    single_peer_violations: int
    exited: bool


def run_crossing(
    cells: list[Cell],
    speed: float = 20.0,
    latency: float = 0.02,
    loss: float = 0.0,
    seed: int = 0,
    dt: float = 0.01,
    lead_time: float = 2.0,
    params: ProtocolParams = ProtocolParams(),
    hold_position: float | None = None,
    max_time: float | None = None,
) -> CrossingResult:
    """Move one SC through the cells; returns session-continuity statistics.

    With hold_position set, the SC stays put (used for liveness tests) and
    the run ends at max_time.
    """
    validate_cell_map(cells)
    rng = random.Random(seed)
    registries = {
        c.mssp_id: MsspRegistry(mssp_id=c.mssp_id, capacity=8, cell_start=c.start, cell_end=c.end)
        for c in cells
    }
    sa_seq = {c.mssp_id: 0 for c in cells}

    queue: list[tuple[float, int, str, object]] = []  # (time, tiebreak, dest, msg)
    counter = 0

    def send(t_now: float, dest: str, msg) -> None:
        nonlocal counter
        if loss > 0.0 and rng.random() < loss:
            return
        counter += 1
        heapq.heappush(queue, (t_now + latency, counter, dest, msg))

    sc_id = "sc1"
    state = Unregistered()
    pos = hold_position if hold_position is not None else cells[0].start
    end_pos = cells[-1].end
    now = 0.0
    next_attempt = 0.0
    next_sea = 0.0
    attempts = 0
    first_reg_time: float | None = None
    gap_ticks = 0
    handoffs = 0
    violations = 0
    exited = False
    if max_time is None:
        max_time = (end_pos - pos) / speed + 30.0 if hold_position is None else 10.0

    def apply(event) -> None:
        nonlocal state, handoffs, violations
        prev = state
        state, emits = sc_step(prev, event, now, sc_id, pos, params)
        if isinstance(state, Registered) and (
            not isinstance(prev, (Registered, HandingOff))
            or (isinstance(prev, Registered) and prev.mssp_id != state.mssp_id)
            or (isinstance(prev, HandingOff) and state.mssp_id not in (prev.old, prev.new))
        ):
            if not isinstance(event, Accepted):
                violations += 1
        if isinstance(prev, HandingOff) and isinstance(state, Registered) and state.mssp_id == prev.new:
            handoffs += 1
        for emit in emits:
            send(now, emit.dest, emit.msg)

    while now <= max_time:
        # deliver due messages
        while queue and queue[0][0] <= now:
            _, _, dest, msg = heapq.heappop(queue)
            if dest == sc_id:
                if isinstance(msg, RegisterAccept):
                    apply(Accepted(msg.mssp_id, msg.slot))
                elif isinstance(msg, RegisterReject):
                    apply(Rejected(msg.mssp_id, msg.reason))
                elif isinstance(msg, SaFrame):
                    apply(SaReceived(msg))
                elif isinstance(msg, HandoffInitiate):
                    apply(HandoffNeededFromAdvisory(msg.target_mssp_id))
            else:
                reg, responses = mssp_handle(registries[dest], msg, now, params)
                registries[dest] = reg
                for emit in responses:
                    send(now, emit.dest, emit.msg)

        # SC housekeeping
        if isinstance(state, (Registering, HandingOff)) and now >= state.deadline:
            apply(Timeout())
        if isinstance(state, Unregistered) and now >= next_attempt:
            covering = [c for c in cells if c.covers(pos)]
            if covering:
                target = max(covering, key=lambda c: c.end)
                attempts += 1
                apply(EnterCell(target.mssp_id))
                next_attempt = now + params.registration_timeout + backoff_delay(state.retries if isinstance(state, Unregistered) else 0, params)
        if isinstance(state, Registered):
            if first_reg_time is None:
                first_reg_time = now
            target = plan_handoff(cells, pos, speed if hold_position is None else 0.0, lead_time, state.mssp_id)
            if target is not None and target != state.mssp_id:
                apply(HandoffNeededFromAdvisory(target))
        if now >= next_sea:
            peer = None
            if isinstance(state, Registered):
                peer = state.mssp_id
            elif isinstance(state, HandingOff):
                peer = state.old
            if peer is not None:
                send(now, peer, SeaReport(sc_id, now, pos, 0, speed))
            next_sea = now + params.sea_period

        # MSSP housekeeping: eviction + SA broadcast
        for mssp_id, reg in registries.items():
            if not reg.sessions:
                continue
            reg, _ = expire_sessions(reg, now, params)
            registries[mssp_id] = reg
            sa_seq[mssp_id] += 1
            frame = SaFrame(frame_seq=sa_seq[mssp_id], mssp_id=mssp_id, timestamp=now)
            for peer_sc in reg.sessions:
                send(now, peer_sc, frame)

        if first_reg_time is not None and not isinstance(state, (Registered, HandingOff, Disengaged)):
            gap_ticks += 1

        # advance
        if hold_position is None:
            pos += speed * dt
            if pos >= end_pos and not exited:
                apply(ExitCorridor())
                exited = True
                break
        if isinstance(state, Registered) and hold_position is not None:
            break  # liveness run: stop once registered
        now = round(now + dt, 9)

    return CrossingResult(
        reached_registered=first_reg_time is not None,
        first_registered_time=first_reg_time,
        attempts_to_register=attempts,
        handoffs_completed=handoffs,
        gap_ticks_after_first_registration=gap_ticks,
        single_peer_violations=violations,
        exited=exited,
    )


def HandoffNeededFromAdvisory(target: str):
    from ieasim.protocol import HandoffNeeded

    return HandoffNeeded(target)


def chain_of_cells(n: int, length: float = 160.0, stride: float = 100.0) -> list[Cell]:
    return [Cell(mssp_id=f"m{i}", start=i * stride, end=i * stride + length) for i in range(n)]

"""Deterministic fixed-step episode: sense, fuse, SA, decide, drive, classify.

One episode binds the whole pipeline for one (scenario, fault assignment,
seed) triple: MSSP perception over ground truth, Level-1 message delivery
with latency and loss, SC registration/handoff state machines, the decision
policy, drive-by-wire execution with fault injection, vehicle kinematics,
and hazard classification. Every random draw comes from one of four named
streams (sense, loss, faults, arrivals) derived from the episode seed, so
subsystems do not perturb each other's sequences and the trace is a pure
function of the inputs.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import random
from dataclasses import dataclass, field, replace

from ..perception.pipeline import MsspPerception
from ..perception.sensors import TruthObject
from ..protocol.codec import to_debug_json
from ..protocol.handoff import Cell, plan_handoff
from ..protocol.messages import (
    DbwStatus,
    HandoffInitiate,
    NeighborTrackShare,
    ObjectClass,
    RegisterAccept,
    RegisterReject,
    SaFrame,
    SeaReport,
)
from ..protocol.registry import MsspRegistry, expire_sessions, mssp_handle
from ..protocol.sc_fsm import (
    Accepted,
    Disengaged,
    EnterCell,
    ExitCorridor,
    HandingOff,
    HandoffNeeded,
    Registered,
    Registering,
    Rejected,
    SaReceived,
    ScSessionState,
    Timeout,
    Unregistered,
    backoff_delay,
    sa_usable,
    sc_step,
)
from .driver import idm_accel
from .faults import FaultAssignment, corrupt_decision, corrupt_sa_frame
from .outcomes import HazardMonitor, classify_outcome
from .policy import Decision, sc_decide
from .scenario import ScenarioConfig, VehicleSpawn
from .vehicle import (
    Actuation,
    DriveMode,
    EmergencyStop,
    SetSpeed,
    VehicleKind,
    VehicleState,
    execute_dbw,
    step_vehicle,
)

_CLASS_BY_KIND = {
    VehicleKind.IEA: ObjectClass.VEHICLE,
    VehicleKind.MANUAL: ObjectClass.VEHICLE,
    VehicleKind.BICYCLE: ObjectClass.BICYCLE,
    VehicleKind.PEDESTRIAN: ObjectClass.PEDESTRIAN,
}

STREAM_NAMES = ("sense", "loss", "faults", "arrivals")


def rng_stream(seed: int, name: str) -> random.Random:
    digest = hashlib.blake2b(f"{seed}/{name}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def canonical_record(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class EpisodeTrace:
    scenario_name: str
    scenario_digest: str
    seed: int
    fault_bits: tuple[int, int, int]
    outcome: str
    min_ttc: float
    collisions: list[dict]
    end_reason: str
    ticks: int
    records: list[dict] = field(default_factory=list)
    trace_hash: str | None = None


class _Transport:
    """Latency/loss delivery queue; FIFO-stable among equal delivery times."""

    def __init__(self, loss_rng: random.Random, loss: float):
        self._loss_rng = loss_rng
        self._loss = loss
        self._queue: list[tuple[float, int, str, str, object]] = []
        self._seq = 0

    def send(self, now: float, src: str, dst: str, msg, latency: float, lossy: bool) -> None:
        if lossy and self._loss > 0.0 and self._loss_rng.random() < self._loss:
            return
        self._seq += 1
        heapq.heappush(self._queue, (now + latency, self._seq, src, dst, msg))

    def due(self, now: float) -> list[tuple[str, str, object]]:
        out = []
        while self._queue and self._queue[0][0] <= now + 1e-12:
            _, _, src, dst, msg = heapq.heappop(self._queue)
            out.append((src, dst, msg))
        return out


@dataclass
class _ScAgent:
    sc_id: str
    session: ScSessionState = field(default_factory=Unregistered)
    next_attempt: float = 0.0
    next_sea: float = 0.0
    last_frame: SaFrame | None = None
    last_frame_time: float = -math.inf  # receipt time of last usable frame
    prev_actuation: Actuation = Actuation()


@dataclass
class _Vehicle:
    state: VehicleState
    spawn: VehicleSpawn
    sc: _ScAgent | None
    exited: bool = False


class _Mssp:
    def __init__(self, placement, scenario: ScenarioConfig, advise_next: str | None):
        self.placement = placement
        self.registry = MsspRegistry(
            mssp_id=placement.mssp_id,
            capacity=placement.capacity,
            cell_start=placement.coverage[0],
            cell_end=placement.coverage[1],
            advise_next=advise_next,
            advise_margin=placement.advise_margin,
        )
        self.perception = MsspPerception(
            placement.mssp_id, placement.coverage, placement.sensors, scenario.perception
        )
        self.sea_inbox: list[SeaReport] = []
        self.neighbor_inbox: list = []
        self.failed = False
        self.uploaded_onsets: set[float] = set()


def run_episode(
    scenario: ScenarioConfig,
    fault: FaultAssignment,
    seed: int,
    record: bool = False,
) -> EpisodeTrace:
    sense_rng = rng_stream(seed, "sense")
    loss_rng = rng_stream(seed, "loss")
    faults_rng = rng_stream(seed, "faults")
    arrivals_rng = rng_stream(seed, "arrivals")

    cor = scenario.corridor
    cells = [Cell(p.mssp_id, p.coverage[0], p.coverage[1]) for p in cor.placements]
    transport = _Transport(loss_rng, scenario.comm.loss)

    mssps: dict[str, _Mssp] = {}
    for i, placement in enumerate(cor.placements):
        advise_next = cor.placements[i + 1].mssp_id if i + 1 < len(cor.placements) else None
        mssps[placement.mssp_id] = _Mssp(placement, scenario, advise_next)
    neighbor_ids = {
        p.mssp_id: [
            q.mssp_id
            for q in (cor.placements[i - 1 : i] + cor.placements[i + 1 : i + 2])
        ]
        for i, p in enumerate(cor.placements)
    }

    vehicles: dict[str, _Vehicle] = {}
    pending_spawns = sorted(scenario.vehicles, key=lambda s: (s.entry_time, s.vehicle_id))
    next_arrival = (
        arrivals_rng.expovariate(scenario.arrival_rate) if scenario.arrival_rate > 0 else math.inf
    )
    arrival_count = 0

    lengths: dict[str, float] = {}
    hazards = HazardMonitor(lengths)

    records: list[dict] = []

    def rec(obj: dict) -> None:
        if record:
            records.append(obj)

    rec(
        {
            "k": "hdr",
            "v": 1,
            "scenario": scenario.name,
            "digest": scenario.source_digest,
            "seed": seed,
            "fault": list(fault.bits()),
            "dt": scenario.dt,
            "lanes": cor.lanes,
            "length": cor.length,
            "max_accel": scenario.envelope.max_accel,
            "max_decel": scenario.envelope.max_decel,
            "a_bound": max(
                scenario.envelope.max_accel,
                scenario.envelope.max_decel,
                scenario.idm.max_accel,
                scenario.idm.hard_decel,
            ),
            "q_dbw": scenario.faults.q_dbw if fault.dbw else 0.0,
        }
    )

    dt = scenario.dt
    n_ticks = int(round(scenario.horizon / dt))
    end_reason = "horizon"
    tick = 0

    def spawn_vehicle(spawn: VehicleSpawn, now: float) -> None:
        state = VehicleState(
            vehicle_id=spawn.vehicle_id,
            kind=spawn.kind,
            position=spawn.position,
            lane=spawn.lane,
            speed=spawn.speed,
        )
        sc = _ScAgent(sc_id=spawn.vehicle_id) if spawn.kind == VehicleKind.IEA else None
        vehicles[spawn.vehicle_id] = _Vehicle(state=state, spawn=spawn, sc=sc)
        lengths[spawn.vehicle_id] = scenario.vehicle_length(spawn.kind)
        rec(
            {
                "k": "spawn",
                "t": round(now, 6),
                "id": spawn.vehicle_id,
                "kind": spawn.kind.value,
                "pos": spawn.position,
                "lane": spawn.lane,
                "v": spawn.speed,
            }
        )

    def sc_apply(veh: _Vehicle, event, now: float) -> None:
        sc = veh.sc
        sc.session, emits = sc_step(
            sc.session, event, now, sc.sc_id, veh.state.position, scenario.protocol
        )
        for emit in emits:
            transport.send(now, sc.sc_id, emit.dest, emit.msg, scenario.comm.latency, lossy=True)

    for tick in range(n_ticks):
        t = tick * dt

        # --- arrivals ---
        while pending_spawns and pending_spawns[0].entry_time <= t:
            spawn_vehicle(pending_spawns.pop(0), t)
        while next_arrival <= t:
            arrival_count += 1
            speed = arrivals_rng.uniform(10.0, 20.0)
            spawn_vehicle(
                VehicleSpawn(
                    vehicle_id=f"arr{arrival_count}",
                    kind=VehicleKind.MANUAL,
                    entry_time=t,
                    position=cor.entry,
                    lane=arrivals_rng.randrange(cor.lanes),
                    speed=speed,
                    target_speed=speed,
                ),
                t,
            )
            next_arrival = t + arrivals_rng.expovariate(scenario.arrival_rate)

        # --- message delivery ---
        for src, dst, msg in transport.due(t):
            rec({"k": "msg", "t": round(t, 6), "src": src, "dst": dst, "m": to_debug_json(msg)})
            if dst in mssps:
                agent = mssps[dst]
                if agent.failed:
                    continue
                if isinstance(msg, NeighborTrackShare):
                    agent.neighbor_inbox.extend(msg.tracks)
                    continue
                if isinstance(msg, SeaReport):
                    agent.sea_inbox.append(msg)
                agent.registry, responses = mssp_handle(agent.registry, msg, t, scenario.protocol)
                for emit in responses:
                    transport.send(t, dst, emit.dest, emit.msg, scenario.comm.latency, lossy=True)
            elif dst in vehicles:
                veh = vehicles[dst]
                if veh.sc is None or veh.exited:
                    continue
                if isinstance(msg, RegisterAccept):
                    sc_apply(veh, Accepted(msg.mssp_id, msg.slot), t)
                elif isinstance(msg, RegisterReject):
                    sc_apply(veh, Rejected(msg.mssp_id, msg.reason), t)
                elif isinstance(msg, HandoffInitiate):
                    if msg.target_mssp_id:
                        sc_apply(veh, HandoffNeeded(msg.target_mssp_id), t)
                elif isinstance(msg, SaFrame):
                    usable = sa_usable(veh.sc.session, msg.mssp_id)
                    sc_apply(veh, SaReceived(msg), t)
                    if usable:
                        veh.sc.last_frame = msg
                        veh.sc.last_frame_time = t

        # --- ground truth for sensing ---
        truth = [
            TruthObject(
                object_id=v.state.vehicle_id,
                object_class=_CLASS_BY_KIND[v.state.kind],
                position=v.state.position,
                lane=v.state.lane,
                speed=v.state.speed,
            )
            for v in vehicles.values()
            if not v.exited
        ]

        # --- MSSP tick: perceive, report incidents, broadcast SA, share ---
        for mssp_id, agent in mssps.items():
            placement = agent.placement
            if placement.fail_at is not None and t >= placement.fail_at:
                if not agent.failed:
                    agent.failed = True
                    rec({"k": "mssp_fail", "t": round(t, 6), "mssp": mssp_id})
                agent.sea_inbox.clear()
                agent.neighbor_inbox.clear()
                continue
            if agent.registry.sessions:
                agent.registry, evicted = expire_sessions(agent.registry, t, scenario.protocol)
                for sc_id in evicted:
                    rec({"k": "evict", "t": round(t, 6), "mssp": mssp_id, "sc": sc_id})
            agent.perception.step(
                t,
                dt,
                truth,
                sense_rng,
                sea_reports=agent.sea_inbox,
                neighbor_tracks=agent.neighbor_inbox,
            )
            agent.sea_inbox = []
            agent.neighbor_inbox = []
            for incident in agent.perception.last_incidents:
                if incident.onset not in agent.uploaded_onsets:
                    agent.uploaded_onsets.add(incident.onset)
                    rec(
                        {
                            "k": "msg",
                            "t": round(t, 6),
                            "src": mssp_id,
                            "dst": "cloud",
                            "m": to_debug_json(incident),
                        }
                    )
            frame = agent.perception.compose_frame(t)
            if fault.sa:
                frame = corrupt_sa_frame(frame, faults_rng, scenario.faults)
            if record and (frame.tracks or frame.incidents):
                rec(
                    {
                        "k": "trk",
                        "t": round(t, 6),
                        "mssp": mssp_id,
                        "tracks": [
                            [
                                s.track_id,
                                s.object_class.value,
                                round(s.position, 4),
                                s.lane,
                                round(s.velocity, 4),
                                round(s.position_var, 6),
                            ]
                            for s in frame.tracks
                        ],
                        "incidents": len(frame.incidents),
                    }
                )
            for sc_id in agent.registry.sessions:
                transport.send(t, mssp_id, sc_id, frame, scenario.comm.latency, lossy=True)
            share = agent.perception.share_tracks()
            if share:
                for nb in neighbor_ids[mssp_id]:
                    transport.send(
                        t,
                        mssp_id,
                        nb,
                        NeighborTrackShare(mssp_id=mssp_id, tracks=share),
                        scenario.comm.level2_latency,
                        lossy=False,
                    )

        # --- SC housekeeping: timeouts, registration, handoff, SeA, engage ---
        for veh in vehicles.values():
            if veh.sc is None or veh.exited:
                continue
            sc = veh.sc
            state = veh.state
            session = sc.session
            if isinstance(session, (Registering, HandingOff)) and t >= session.deadline:
                sc_apply(veh, Timeout(), t)
            session = sc.session
            if isinstance(session, Unregistered) and t >= sc.next_attempt:
                covering = [c for c in cells if c.covers(state.position)]
                if covering:
                    target = max(covering, key=lambda c: c.end)
                    sc_apply(veh, EnterCell(target.mssp_id), t)
                    sc.next_attempt = (
                        t
                        + scenario.protocol.registration_timeout
                        + backoff_delay(session.retries + 1, scenario.protocol)
                    )
            session = sc.session
            if isinstance(session, Registered):
                try:
                    target = plan_handoff(
                        cells,
                        state.position,
                        state.speed,
                        scenario.handoff_lead_time,
                        current_mssp=session.mssp_id,
                    )
                except Exception:
                    target = None
                if target is not None and target != session.mssp_id:
                    sc_apply(veh, HandoffNeeded(target), t)
            if t >= sc.next_sea:
                session = sc.session
                peer = None
                if isinstance(session, Registered):
                    peer = session.mssp_id
                elif isinstance(session, HandingOff):
                    peer = session.old
                if peer is not None:
                    status = DbwStatus.DEGRADED if fault.dbw else DbwStatus.OK
                    sea = SeaReport(
                        sc_id=sc.sc_id,
                        timestamp=t,
                        position=state.position,
                        lane=state.lane,
                        speed=state.speed,
                        dbw_status=status,
                    )
                    transport.send(t, sc.sc_id, peer, sea, scenario.comm.latency, lossy=True)
                sc.next_sea = t + scenario.protocol.sea_period

            frame_age = t - sc.last_frame_time
            if state.mode == DriveMode.MANUAL_DRIVE and scenario.engage_on_register:
                if (
                    isinstance(sc.session, Registered)
                    and sc.last_frame is not None
                    and frame_age <= scenario.policy.sa_stale_after
                ):
                    veh.state = replace(state, mode=DriveMode.ENGAGED)
                    rec({"k": "engage", "t": round(t, 6), "id": sc.sc_id})
            elif state.mode == DriveMode.ENGAGED and frame_age > scenario.disengage_after_stale:
                veh.state = replace(veh.state, mode=DriveMode.TAKE_OVER_PENDING)
                rec({"k": "takeover", "t": round(t, 6), "id": sc.sc_id})

        # --- decisions and actuation (two-phase with the vehicle step) ---
        actuations: dict[str, Actuation] = {}
        ordered = [v for v in vehicles.values() if not v.exited]
        by_lane: dict[int, list[_Vehicle]] = {}
        for v in ordered:
            by_lane.setdefault(v.state.lane, []).append(v)
        for group in by_lane.values():
            group.sort(key=lambda v: (v.state.position, v.state.vehicle_id))

        def leader_of(veh: _Vehicle) -> tuple[float, float | None]:
            group = by_lane[veh.state.lane]
            idx = group.index(veh)
            if idx + 1 >= len(group):
                return math.inf, None
            front = group[idx + 1]
            gap = (
                front.state.position
                - veh.state.position
                - 0.5 * (lengths[front.state.vehicle_id] + lengths[veh.state.vehicle_id])
            )
            return gap, front.state.speed

        for veh in ordered:
            state = veh.state
            kind = state.kind
            if state.mode == DriveMode.PARKED:
                actuations[state.vehicle_id] = Actuation()
            elif kind in (VehicleKind.BICYCLE, VehicleKind.PEDESTRIAN):
                actuations[state.vehicle_id] = Actuation()
            elif state.mode == DriveMode.ENGAGED and veh.sc is not None:
                sc = veh.sc
                sea = SeaReport(
                    sc_id=sc.sc_id,
                    timestamp=t,
                    position=state.position,
                    lane=state.lane,
                    speed=state.speed,
                )
                if sc.last_frame is None:
                    decision = Decision(EmergencyStop(), stale=True, reason="no-sa")
                else:
                    age_adjusted = replace(sc.last_frame, timestamp=sc.last_frame_time)
                    decision = sc_decide(age_adjusted, sea, scenario.policy, t)
                inverted = False
                if fault.decision:
                    decision, inverted = corrupt_decision(
                        decision, faults_rng, scenario.faults, scenario.policy
                    )
                act = execute_dbw(
                    state,
                    decision.command,
                    scenario.envelope,
                    cor.lanes,
                    scenario.v_max(kind),
                    dbw_fault=fault.dbw,
                    ignore_prob=scenario.faults.q_dbw,
                    rng=faults_rng,
                    prev=sc.prev_actuation,
                )
                sc.prev_actuation = act
                cmd = decision.command
                rec(
                    {
                        "k": "cmd",
                        "t": round(t, 6),
                        "id": sc.sc_id,
                        "c": type(cmd).__name__,
                        "arg": getattr(cmd, "target", getattr(cmd, "direction", None)),
                        "stale": int(decision.stale),
                        "inv": int(inverted),
                        "rej": act.rejected,
                        "a": round(act.accel, 6),
                    }
                )
                actuations[state.vehicle_id] = act
            elif state.mode == DriveMode.TAKE_OVER_PENDING:
                spots = [s for s in cor.take_over_spots if s >= state.position - 1.0]
                target_pos = min(spots) if spots else cor.exit
                dist = target_pos - state.position
                if dist <= 1.0 and state.speed <= 0.2:
                    veh.state = replace(state, mode=DriveMode.PARKED, speed=0.0)
                    rec({"k": "parked", "t": round(t, 6), "id": state.vehicle_id, "pos": round(state.position, 3)})
                    actuations[state.vehicle_id] = Actuation()
                else:
                    allow = math.sqrt(max(2.0 * 2.0 * max(dist - 1.0, 0.0), 0.0))
                    a = (min(allow, 8.0) - state.speed) / scenario.envelope.speed_time_constant
                    a = min(max(a, -scenario.envelope.max_decel), scenario.envelope.max_accel)
                    actuations[state.vehicle_id] = Actuation(accel=a)
            else:
                # manual drive: car following on true gaps
                gap, leader_speed = leader_of(veh)
                a = idm_accel(state.speed, veh.spawn.target_speed, gap, leader_speed, scenario.idm)
                actuations[state.vehicle_id] = Actuation(accel=a)

        # --- step vehicles ---
        for veh in ordered:
            state = veh.state
            act = actuations[state.vehicle_id]
            new_state = step_vehicle(
                state,
                act,
                dt,
                scenario.v_max(state.kind),
                scenario.envelope.lane_change_duration,
            )
            veh.state = new_state
            rec(
                {
                    "k": "veh",
                    "t": round(t + dt, 6),
                    "id": state.vehicle_id,
                    "pos": round(new_state.position, 6),
                    "lane": new_state.lane,
                    "v": round(new_state.speed, 6),
                    "a": round(new_state.accel, 6),
                    "mode": new_state.mode.value,
                    "lc": round(new_state.lane_change[1], 4) if new_state.lane_change else None,
                }
            )
            if not veh.exited and new_state.position >= cor.exit:
                veh.exited = True
                rec({"k": "exit", "t": round(t + dt, 6), "id": state.vehicle_id})
                if veh.sc is not None:
                    sc_apply(veh, ExitCorridor(), t + dt)

        # --- hazards ---
        prev_collisions = len(hazards.summary.collisions)
        hazards.step([v.state for v in vehicles.values() if not v.exited], t + dt)
        for col in hazards.summary.collisions[prev_collisions:]:
            rec(
                {
                    "k": "hazard",
                    "t": round(col.time, 6),
                    "ev": "collision",
                    "a": col.vehicle_a,
                    "b": col.vehicle_b,
                    "dv": round(col.delta_v, 6),
                }
            )

        if hazards.severe_collision(scenario.classifier):
            end_reason = "severe-collision"
            tick += 1
            break
        iea = [v for v in vehicles.values() if v.state.kind == VehicleKind.IEA]
        if iea and all(v.exited or v.state.mode == DriveMode.PARKED for v in iea) and not pending_spawns:
            end_reason = "iea-complete"
            tick += 1
            break
    else:
        tick = n_ticks

    outcome = classify_outcome(hazards.summary, scenario.classifier)
    min_ttc = hazards.summary.min_ttc
    rec({"k": "end", "t": round(tick * dt, 6), "reason": end_reason})
    rec(
        {
            "k": "outcome",
            "label": outcome,
            "min_ttc": round(min_ttc, 6) if math.isfinite(min_ttc) else None,
            "ncol": len(hazards.summary.collisions),
        }
    )

    trace_hash = None
    if record:
        h = hashlib.blake2b(digest_size=8)
        for r in records:
            h.update(canonical_record(r).encode())
            h.update(b"\n")
        trace_hash = h.hexdigest()

    return EpisodeTrace(
        scenario_name=scenario.name,
        scenario_digest=scenario.source_digest,
        seed=seed,
        fault_bits=fault.bits(),
        outcome=outcome,
        min_ttc=min_ttc,
        collisions=[
            {"t": c.time, "a": c.vehicle_a, "b": c.vehicle_b, "dv": c.delta_v}
            for c in hazards.summary.collisions
        ],
        end_reason=end_reason,
        ticks=tick,
        records=records,
        trace_hash=trace_hash,
    )

"""SmartConnect tactical decision policy.

Deterministic mapping from the current SA frame and own SeA to one DBW
command: keep target speed on a free lane, match or evade a slow leader,
route around stalled-vehicle incidents, and fall back to a braking-biased
degraded command when the SA is stale.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..protocol.messages import IncidentKind, SaFrame, SeaReport
from .vehicle import DbwCommand, EmergencyStop, LaneChange, SetSpeed

AHEAD_EPS = 1.0  # m: tracks closer than this are treated as ourselves


@dataclass(frozen=True)
class PolicyParams:
    target_speed: float = 24.0
    safe_gap: float = 15.0  # m
    gap_hysteresis: float = 5.0  # extra clearance a target lane must offer
    rear_gap: float = 10.0  # m clearance needed behind us in the target lane
    prediction_horizon: float = 1.0  # s, for the predicted leader gap
    sa_stale_after: float = 0.5  # s
    lane_count: int = 2
    incident_gate: float = 5.0  # m, to match an incident to a track's lane
    comfort_decel: float = 2.0  # m/s^2 assumed for stopping-distance planning


@dataclass(frozen=True)
class Decision:
    command: DbwCommand
    stale: bool = False
    reason: str = ""


def _lane_of_incident(sa: SaFrame, position: float, own_lane: int, gate: float) -> int:
    for t in sa.tracks:
        if abs(t.position - position) <= gate:
            return t.lane
    return own_lane  # unmatched incidents are assumed to block our lane


def _forward_gap(sa: SaFrame, sea: SeaReport, lane: int) -> tuple[float, float | None]:
    """(gap to nearest forward track in lane, its speed), inf when clear."""
    best_gap, best_speed = float("inf"), None
    for t in sa.tracks:
        if t.lane != lane:
            continue
        gap = t.position - sea.position
        if gap > AHEAD_EPS and gap < best_gap:
            best_gap, best_speed = gap, t.velocity
    return best_gap, best_speed


def _predicted_gap(gap: float, own_speed: float, other_speed: float, params: PolicyParams) -> float:
    """Gap projected forward: closing traffic is projected to the moment the
    speeds match under comfortable braking (so a stopped leader is seen at
    stopping-distance range); opening traffic over the fixed horizon."""
    if gap == float("inf"):
        return gap
    closing = own_speed - other_speed
    if closing > 0.0:
        return gap - closing * closing / (2.0 * params.comfort_decel)
    return gap - closing * params.prediction_horizon


def _rear_clear(sa: SaFrame, sea: SeaReport, lane: int, rear_gap: float) -> bool:
    for t in sa.tracks:
        if t.lane != lane:
            continue
        gap = sea.position - t.position
        if AHEAD_EPS < gap <= rear_gap:
            return False
    return True


def _lane_change_candidate(
    sa: SaFrame, sea: SeaReport, params: PolicyParams, need: float
) -> int | None:
    """Direction of an adjacent lane offering at least `need` predicted gap."""
    for direction in (1, -1):
        lane = sea.lane + direction
        if not 0 <= lane < params.lane_count:
            continue
        gap, leader_speed = _forward_gap(sa, sea, lane)
        predicted = _predicted_gap(gap, sea.speed, leader_speed if leader_speed is not None else sea.speed, params)
        if predicted > need and _rear_clear(sa, sea, lane, params.rear_gap):
            return direction
    return None


def sc_decide(
    sa: SaFrame,
    sea: SeaReport,
    params: PolicyParams,
    now: float,
) -> Decision:
    if now - sa.timestamp > params.sa_stale_after:
        return Decision(EmergencyStop(), stale=True, reason="stale-sa")

    need = params.safe_gap + params.gap_hysteresis

    # stalled traffic ahead in our lane: go around it if a lane is open,
    # otherwise slow to a stop on approach
    stop_distance = sea.speed * sea.speed / (2.0 * params.comfort_decel)
    react_range = stop_distance + params.safe_gap * 2.0
    for inc in sa.incidents:
        if inc.kind not in (IncidentKind.STALLED_VEHICLE, IncidentKind.OBSTRUCTION):
            continue
        ahead = inc.position - sea.position
        if not AHEAD_EPS < ahead <= react_range:
            continue
        if _lane_of_incident(sa, inc.position, sea.lane, params.incident_gate) != sea.lane:
            continue
        direction = _lane_change_candidate(sa, sea, params, need)
        if direction is not None:
            return Decision(LaneChange(direction), reason="incident-evade")
        return Decision(SetSpeed(0.0), reason="incident-stop")

    gap, leader_speed = _forward_gap(sa, sea, sea.lane)
    if leader_speed is not None:
        predicted = gap + (leader_speed - sea.speed) * params.prediction_horizon
        if predicted < params.safe_gap:
            direction = _lane_change_candidate(sa, sea, params, need)
            if direction is not None:
                return Decision(LaneChange(direction), reason="leader-evade")
            return Decision(SetSpeed(max(leader_speed, 0.0)), reason="leader-match")

    return Decision(SetSpeed(params.target_speed), reason="cruise")

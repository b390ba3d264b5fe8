"""Vehicle plant: point-mass longitudinal kinematics, timed lane changes,
and the drive-by-wire layer that turns commands into bounded actuation."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Union

LEFT = 1
RIGHT = -1


class VehicleKind(enum.Enum):
    IEA = "iea"
    MANUAL = "manual"
    BICYCLE = "bicycle"
    PEDESTRIAN = "pedestrian"


class DriveMode(enum.Enum):
    MANUAL_DRIVE = "manual_drive"
    ENGAGED = "engaged"
    TAKE_OVER_PENDING = "take_over_pending"
    PARKED = "parked"


DEFAULT_V_MAX = {
    VehicleKind.IEA: 35.0,
    VehicleKind.MANUAL: 35.0,
    VehicleKind.BICYCLE: 8.0,
    VehicleKind.PEDESTRIAN: 2.5,
}

DEFAULT_LENGTH = {
    VehicleKind.IEA: 4.5,
    VehicleKind.MANUAL: 4.5,
    VehicleKind.BICYCLE: 2.0,
    VehicleKind.PEDESTRIAN: 0.6,
}


@dataclass(frozen=True, slots=True)
class VehicleState:
    vehicle_id: str
    kind: VehicleKind
    position: float
    lane: int
    speed: float
    accel: float = 0.0
    mode: DriveMode = DriveMode.MANUAL_DRIVE
    lane_change: tuple[int, float] | None = None  # (direction, progress in [0,1))


@dataclass(frozen=True)
class DbwEnvelope:
    max_accel: float = 2.5  # m/s^2
    max_decel: float = 6.0  # m/s^2, positive magnitude
    lane_change_duration: float = 3.0  # s
    speed_time_constant: float = 1.0  # s, gap-closing gain for SetSpeed

    def __post_init__(self):
        if min(self.max_accel, self.max_decel, self.lane_change_duration, self.speed_time_constant) <= 0:
            raise ValueError("envelope parameters must be positive")


@dataclass(frozen=True)
class SetSpeed:
    target: float


@dataclass(frozen=True)
class LaneChange:
    direction: int  # LEFT (+1) or RIGHT (-1)


@dataclass(frozen=True)
class HoldLane:
    pass


@dataclass(frozen=True)
class EmergencyStop:
    pass


DbwCommand = Union[SetSpeed, LaneChange, HoldLane, EmergencyStop]


@dataclass(frozen=True, slots=True)
class Actuation:
    accel: float = 0.0
    start_lane_change: int | None = None
    rejected: str | None = None


def step_vehicle(
    state: VehicleState,
    act: Actuation,
    dt: float,
    v_max: float,
    lane_change_duration: float,
) -> VehicleState:
    """Advance one tick: clamp accel so speed stays in [0, v_max], integrate
    position, and advance any lane change, flipping the lane index exactly
    once when progress crosses 1."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    speed = state.speed
    a = act.accel
    if a < -speed / dt:
        a = -speed / dt  # at rest stays at rest
    elif a > (v_max - speed) / dt:
        a = (v_max - speed) / dt
    position = state.position + speed * dt + 0.5 * a * dt * dt
    new_speed = speed + a * dt
    if new_speed < 0.0:
        new_speed = 0.0
    elif new_speed > v_max:
        new_speed = v_max

    lane = state.lane
    lane_change = state.lane_change
    if lane_change is not None:
        direction, progress = lane_change
        progress += dt / lane_change_duration
        if progress >= 1.0:
            lane += direction
            lane_change = None
        else:
            lane_change = (direction, progress)
    if lane_change is None and act.start_lane_change is not None:
        lane_change = (act.start_lane_change, 0.0)

    return replace(
        state, position=position, speed=new_speed, accel=a, lane=lane, lane_change=lane_change
    )


def execute_dbw(
    state: VehicleState,
    cmd: DbwCommand,
    envelope: DbwEnvelope,
    lane_count: int,
    v_max: float,
    dbw_fault: bool = False,
    ignore_prob: float = 0.0,
    rng: random.Random | None = None,
    prev: Actuation = Actuation(),
) -> Actuation:
    """Convert a command into bounded actuation.

    A faulted DBW ignores the incoming command with ignore_prob per tick,
    holding the previous actuation instead. Lane changes beyond an edge
    lane (or while one is in progress) are rejected and the vehicle holds
    its lane.
    """
    if dbw_fault and ignore_prob > 0.0 and rng is not None and rng.random() < ignore_prob:
        return replace(prev, rejected=None, start_lane_change=None) if prev.start_lane_change else prev

    if isinstance(cmd, SetSpeed):
        target = min(max(cmd.target, 0.0), v_max)
        a = (target - state.speed) / envelope.speed_time_constant
        a = min(max(a, -envelope.max_decel), envelope.max_accel)
        return Actuation(accel=a)
    if isinstance(cmd, EmergencyStop):
        return Actuation(accel=-envelope.max_decel)
    if isinstance(cmd, HoldLane):
        return Actuation(accel=0.0)
    if isinstance(cmd, LaneChange):
        target_lane = state.lane + cmd.direction
        if state.lane_change is not None:
            return Actuation(accel=0.0, rejected="change-in-progress")
        if not 0 <= target_lane < lane_count:
            return Actuation(accel=0.0, rejected="edge-lane")
        return Actuation(accel=0.0, start_lane_change=cmd.direction)
    raise TypeError(f"unknown command {cmd!r}")

"""Hazard monitoring and severity classification of an episode.

Severity bands over the episode's contact and time-to-collision history,
most severe first: s4 for any contact at relative speed >= severe_dv, s3
for contact at >= minor_dv, s2 for sub-threshold contact or a near miss
(TTC under the threshold without contact), s1 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .vehicle import VehicleState

OUTCOME_LABELS = ("s1", "s2", "s3", "s4")


@dataclass(frozen=True)
class OutcomeClassifierConfig:
    ttc_near_miss: float = 1.0  # s
    minor_dv: float = 1.0  # m/s
    severe_dv: float = 8.0  # m/s

    def __post_init__(self):
        if not 0.0 < self.minor_dv < self.severe_dv:
            raise ValueError("severity thresholds must satisfy 0 < minor_dv < severe_dv")
        if self.ttc_near_miss <= 0.0:
            raise ValueError("ttc_near_miss must be positive")


@dataclass(frozen=True)
class Collision:
    time: float
    vehicle_a: str
    vehicle_b: str
    delta_v: float


@dataclass
class HazardSummary:
    collisions: list[Collision] = field(default_factory=list)
    min_ttc: float = math.inf

    def max_delta_v(self) -> float:
        return max((c.delta_v for c in self.collisions), default=0.0)


class HazardMonitor:
    """Per-tick contact and TTC bookkeeping over same-lane neighbor pairs.

    Contacts are recorded once per vehicle pair at first touch, with the
    relative speed at that tick; ordering of the vehicle list is irrelevant.
    """

    def __init__(self, lengths: dict[str, float]):
        self.lengths = lengths
        self.summary = HazardSummary()
        self._in_contact: set[tuple[str, str]] = set()

    def step(self, vehicles: list[VehicleState], now: float) -> None:
        by_lane: dict[int, list[VehicleState]] = {}
        for v in vehicles:
            by_lane.setdefault(v.lane, []).append(v)
        touching: set[tuple[str, str]] = set()
        for lane_vehicles in by_lane.values():
            lane_vehicles.sort(key=lambda v: (v.position, v.vehicle_id))
            for rear, front in zip(lane_vehicles, lane_vehicles[1:]):
                clearance = (
                    front.position
                    - rear.position
                    - 0.5 * (self.lengths[front.vehicle_id] + self.lengths[rear.vehicle_id])
                )
                pair = tuple(sorted((rear.vehicle_id, front.vehicle_id)))
                if clearance <= 0.0:
                    touching.add(pair)
                    if pair not in self._in_contact:
                        self._in_contact.add(pair)
                        self.summary.collisions.append(
                            Collision(
                                time=now,
                                vehicle_a=pair[0],
                                vehicle_b=pair[1],
                                delta_v=abs(rear.speed - front.speed),
                            )
                        )
                else:
                    closing = rear.speed - front.speed
                    if closing > 0.0:
                        ttc = clearance / closing
                        if ttc < self.summary.min_ttc:
                            self.summary.min_ttc = ttc
        # pairs that separated may collide again later as a new event
        self._in_contact &= touching

    def severe_collision(self, config: OutcomeClassifierConfig) -> bool:
        return self.summary.max_delta_v() >= config.severe_dv


def classify_outcome(summary: HazardSummary, config: OutcomeClassifierConfig) -> str:
    max_dv = summary.max_delta_v()
    if summary.collisions and max_dv >= config.severe_dv:
        return "s4"
    if summary.collisions and max_dv >= config.minor_dv:
        return "s3"
    if summary.collisions or summary.min_ttc < config.ttc_near_miss:
        return "s2"
    return "s1"

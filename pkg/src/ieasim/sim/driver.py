"""Car-following controller for manually driven vehicles.

Intelligent-Driver-Model shape: free-flow term pulls toward the desired
speed, interaction term brakes on the desired dynamic gap. Collision-averse
given an adequate initial gap; deceleration is cut at hard_decel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class IdmParams:
    time_headway: float = 1.2  # s
    min_gap: float = 2.0  # m standstill gap
    max_accel: float = 2.0  # m/s^2
    comfort_decel: float = 2.5  # m/s^2
    hard_decel: float = 8.0  # m/s^2 physical braking limit
    exponent: float = 4.0


def idm_accel(
    speed: float,
    target_speed: float,
    gap: float,
    leader_speed: float | None,
    p: IdmParams = IdmParams(),
) -> float:
    """Acceleration toward target_speed given the bumper gap to the leader.

    Pass leader_speed None (or an infinite gap) for a free road.
    """
    v0 = max(target_speed, 0.1)
    free = p.max_accel * (1.0 - (speed / v0) ** p.exponent)
    if leader_speed is None or math.isinf(gap):
        return max(free, -p.hard_decel)
    if gap <= 1e-6:
        return -p.hard_decel
    dv = speed - leader_speed
    s_star = p.min_gap + max(
        0.0, speed * p.time_headway + speed * dv / (2.0 * math.sqrt(p.max_accel * p.comfort_decel))
    )
    accel = p.max_accel * (1.0 - (speed / v0) ** p.exponent - (s_star / gap) ** 2)
    return min(max(accel, -p.hard_decel), p.max_accel)

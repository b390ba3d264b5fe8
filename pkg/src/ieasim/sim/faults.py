"""Fault injection over the three responsibility components.

Behavioral realizations (all rates per tick, all configurable):
  - dbw: the actuation layer ignores the incoming command with q_dbw,
    holding its previous actuation.
  - sa: each track is dropped from an outgoing SA frame with q_sa, and the
    surviving tracks are reported sa_bias meters off.
  - decision: with q_dec the chosen command is inverted (lane changes flip
    direction, braking decisions revert to cruising).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from ..protocol.messages import SaFrame
from .policy import Decision, PolicyParams
from .vehicle import EmergencyStop, HoldLane, LaneChange, SetSpeed


@dataclass(frozen=True)
class FaultAssignment:
    dbw: bool = False
    sa: bool = False
    decision: bool = False

    @classmethod
    def from_bits(cls, bits) -> "FaultAssignment":
        if isinstance(bits, str):
            if len(bits) != 3 or any(c not in "01" for c in bits):
                raise ValueError(f"fault bits must be three binary digits, got {bits!r}")
            bits = tuple(int(c) for c in bits)
        bits = tuple(bits)
        if len(bits) != 3 or any(b not in (0, 1) for b in bits):
            raise ValueError(f"fault bits must be three 0/1 values, got {bits!r}")
        return cls(dbw=bool(bits[0]), sa=bool(bits[1]), decision=bool(bits[2]))

    def bits(self) -> tuple[int, int, int]:
        return (int(self.dbw), int(self.sa), int(self.decision))

    def label(self) -> str:
        return "".join(str(b) for b in self.bits())


@dataclass(frozen=True)
class FaultParams:
    q_dbw: float = 0.3
    q_sa: float = 0.3
    sa_bias: float = 2.0  # m position offset on surviving tracks
    q_dec: float = 0.3


def corrupt_sa_frame(frame: SaFrame, rng: random.Random, params: FaultParams) -> SaFrame:
    """Apply the situational-awareness fault to one outgoing frame."""
    kept = []
    for t in frame.tracks:
        if rng.random() < params.q_sa:
            continue
        kept.append(replace(t, position=t.position + params.sa_bias))
    return replace(frame, tracks=tuple(kept))


def corrupt_decision(
    decision: Decision,
    rng: random.Random,
    params: FaultParams,
    policy: PolicyParams,
) -> tuple[Decision, bool]:
    """Apply the decision fault; returns (decision, whether it fired)."""
    if rng.random() >= params.q_dec:
        return decision, False
    cmd = decision.command
    if isinstance(cmd, LaneChange):
        flipped = LaneChange(-cmd.direction)
        return replace(decision, command=flipped, reason="fault-inverted"), True
    if isinstance(cmd, (SetSpeed, EmergencyStop, HoldLane)):
        # wrong call: press on at cruise speed instead of slowing or holding
        return replace(decision, command=SetSpeed(policy.target_speed), reason="fault-inverted"), True
    return decision, False

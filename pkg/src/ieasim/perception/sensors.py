"""Simulated roadside sensors: coverage-gated, noisy, probabilistic detection."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from ..protocol.messages import ObjectClass


class SensorKind(enum.Enum):
    LIDAR = "lidar"
    RADAR = "radar"
    OPTICAL = "optical"
    THERMAL = "thermal"


@dataclass(frozen=True)
class SensorSpec:
    sensor_id: str
    kind: SensorKind
    coverage_start: float
    coverage_end: float
    noise_std: float  # m, on measured position
    detect_prob: float  # per tick, per in-coverage object
    latency: float = 0.0  # s, delivery delay into the fusion pipeline
    confusion_prob: float = 0.0  # chance the class hint reads as unknown

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise std must be nonnegative")
        if not 0.0 <= self.detect_prob <= 1.0:
            raise ValueError("detection probability must be in [0, 1]")
        if not self.coverage_end > self.coverage_start:
            raise ValueError("sensor coverage must be a non-empty interval")

    def covers(self, position: float) -> bool:
        return self.coverage_start <= position <= self.coverage_end


@dataclass(frozen=True)
class Detection:
    sensor_id: str
    timestamp: float
    position: float
    lane: int
    class_hint: ObjectClass


@dataclass(frozen=True)
class TruthObject:
    """Ground-truth view of one dynamic object, as the simulator knows it."""

    object_id: str
    object_class: ObjectClass
    position: float
    lane: int
    speed: float


def sense(
    objects: list[TruthObject],
    spec: SensorSpec,
    rng: random.Random,
    now: float,
) -> list[Detection]:
    """Detect each in-coverage object independently with the spec's probability.

    Measured position is truth plus Gaussian noise; objects outside coverage
    are never seen. Draw order is fixed by the object list order, so a given
    rng stream yields identical detections across runs.
    """
    out: list[Detection] = []
    for obj in objects:
        if not spec.covers(obj.position):
            continue
        if spec.detect_prob < 1.0 and rng.random() >= spec.detect_prob:
            continue
        measured = obj.position + (rng.gauss(0.0, spec.noise_std) if spec.noise_std > 0 else 0.0)
        hint = obj.object_class
        if spec.confusion_prob > 0.0 and rng.random() < spec.confusion_prob:
            hint = ObjectClass.UNKNOWN
        out.append(
            Detection(
                sensor_id=spec.sensor_id,
                timestamp=now,
                position=measured,
                lane=obj.lane,
                class_hint=hint,
            )
        )
    return out

"""Stalled-vehicle and obstruction identification from track history."""

from __future__ import annotations

from dataclasses import dataclass

from ..protocol.messages import Incident, IncidentKind, ObjectClass
from .tracking import Track


@dataclass(frozen=True)
class IncidentThresholds:
    v_stall: float = 0.5  # m/s: below this a track counts as stopped
    t_stall: float = 5.0  # s: how long before it becomes an incident


class IncidentMonitor:
    """Stateful hysteresis: a track must stay stopped for t_stall before an
    incident is raised; recovery before that clears it without emitting.
    Confidence ramps linearly, reaching 1 at twice the stall time."""

    def __init__(self, thresholds: IncidentThresholds = IncidentThresholds()):
        self.thresholds = thresholds
        self._stopped_since: dict[str, float] = {}

    def step(self, tracks: list[Track], now: float) -> list[Incident]:
        th = self.thresholds
        incidents: list[Incident] = []
        live_ids = set()
        for t in tracks:
            if abs(t.v) >= th.v_stall:
                continue
            live_ids.add(t.track_id)
            onset = self._stopped_since.setdefault(t.track_id, now)
            elapsed = now - onset
            if elapsed >= th.t_stall:
                kind = (
                    IncidentKind.STALLED_VEHICLE
                    if t.object_class == ObjectClass.VEHICLE
                    else IncidentKind.OBSTRUCTION
                )
                confidence = min(1.0, elapsed / (2.0 * th.t_stall))
                incidents.append(
                    Incident(kind=kind, position=t.x, onset=onset, confidence=confidence)
                )
        # moving again or track gone: forget the stall clock
        for track_id in list(self._stopped_since):
            if track_id not in live_ids:
                del self._stopped_since[track_id]
        return incidents

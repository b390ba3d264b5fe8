"""Per-MSSP perception actor: sense, associate, update, reconcile, report.

One instance owns the track store for one roadside unit. Each tick it
predicts all tracks, folds in every sensor's detections (sequential
per-sensor correction rounds, so two sensors seeing the same vehicle
refine one track instead of spawning two), reconciles self-reports and
neighbor shares, prunes, and can then compose the SA frame. All
randomness comes from the rng stream handed in by the simulator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Sequence

from ..protocol.messages import Incident, SaFrame, SeaReport, TrackSnapshot
from .fusion import FusionParams, reconcile
from .incidents import IncidentMonitor, IncidentThresholds
from .sensors import Detection, SensorSpec, TruthObject, sense
from .tracking import ObserverParams, Track, associate, correct_track, predict_track, spawn_track


def compose_sa(
    tracks: Sequence[Track],
    incidents: Sequence[Incident],
    mssp_id: str,
    seq: int,
    now: float,
    coverage: tuple[float, float] | None = None,
) -> SaFrame:
    """Assemble the SA frame: every live in-coverage track plus incidents."""
    snaps: list[TrackSnapshot] = []
    for t in tracks:
        if coverage is not None and not coverage[0] <= t.x <= coverage[1]:
            continue
        snaps.append(t.snapshot())
    return SaFrame(
        frame_seq=seq,
        mssp_id=mssp_id,
        timestamp=now,
        tracks=tuple(snaps),
        incidents=tuple(incidents),
    )


@dataclass(frozen=True)
class PerceptionParams:
    observer: ObserverParams = ObserverParams()
    fusion: FusionParams = FusionParams()
    incidents: IncidentThresholds = IncidentThresholds()
    coverage_margin: float = 1.0  # m slack before an out-of-coverage track drops


class MsspPerception:
    def __init__(
        self,
        mssp_id: str,
        coverage: tuple[float, float],
        sensors: Sequence[SensorSpec],
        params: PerceptionParams = PerceptionParams(),
    ):
        for spec in sensors:
            if spec.coverage_start < coverage[0] or spec.coverage_end > coverage[1]:
                raise ValueError(
                    f"sensor {spec.sensor_id} coverage exceeds MSSP {mssp_id} coverage"
                )
        self.mssp_id = mssp_id
        self.coverage = coverage
        self.sensors = list(sensors)
        self.params = params
        self.tracks: dict[str, Track] = {}
        self.monitor = IncidentMonitor(params.incidents)
        self.frame_seq = 0
        self._next_track = 0
        self._pending: list[tuple[float, list[Detection]]] = []  # latency buffer
        self.last_incidents: tuple[Incident, ...] = ()

    def _alloc_id(self) -> str:
        self._next_track += 1
        return f"{self.mssp_id}:{self._next_track}"

    def step(
        self,
        now: float,
        dt: float,
        truth: Sequence[TruthObject],
        rng: random.Random,
        sea_reports: Sequence[SeaReport] = (),
        neighbor_tracks: Sequence[TrackSnapshot] = (),
    ) -> list[Track]:
        obs = self.params.observer

        # predict every track once per tick
        for tid, t in self.tracks.items():
            self.tracks[tid] = predict_track(t, dt, obs)

        # sense; sensor latency delays detections by whole ticks
        matched_ids: set[str] = set()
        rounds: list[tuple[SensorSpec, list[Detection]]] = []
        for spec in self.sensors:
            dets = sense(list(truth), spec, rng, now)
            if spec.latency > 0.0:
                self._pending.append((now + spec.latency, dets))
            else:
                rounds.append((spec, dets))
        if self._pending:
            due = [entry for entry in self._pending if entry[0] <= now]
            self._pending = [entry for entry in self._pending if entry[0] > now]
            for _, dets in due:
                spec = self.sensors[0]
                rounds.append((spec, dets))

        for spec, dets in rounds:
            if not dets:
                continue
            assigned, unmatched, _ = associate(list(self.tracks.values()), dets, obs.gate)
            meas_var = spec.noise_std * spec.noise_std + obs.meas_var_floor
            for tid, det in assigned.items():
                t = correct_track(self.tracks[tid], det.position, meas_var, now)
                if det.class_hint != t.object_class and t.object_class.name == "UNKNOWN":
                    t = replace(t, object_class=det.class_hint)
                self.tracks[tid] = replace(t, lane=det.lane)
                matched_ids.add(tid)
            for det in unmatched:
                t = spawn_track(self._alloc_id(), det, obs, meas_var)
                self.tracks[t.track_id] = t
                matched_ids.add(t.track_id)

        for tid, t in self.tracks.items():
            if tid not in matched_ids:
                self.tracks[tid] = replace(t, miss_count=t.miss_count + 1)

        merged = reconcile(
            list(self.tracks.values()),
            neighbor_tracks,
            sea_reports,
            obs,
            self.params.fusion,
            self.coverage,
            now,
        )
        self.tracks = {t.track_id: t for t in merged}

        # prune: too many misses, or drifted past coverage plus margin
        lo = self.coverage[0] - self.params.coverage_margin
        hi = self.coverage[1] + self.params.coverage_margin
        self.tracks = {
            tid: t
            for tid, t in self.tracks.items()
            if not t.should_drop(obs) and lo <= t.x <= hi
        }

        self.last_incidents = tuple(self.monitor.step(list(self.tracks.values()), now))
        return list(self.tracks.values())

    def compose_frame(self, now: float) -> SaFrame:
        self.frame_seq += 1
        return compose_sa(
            list(self.tracks.values()),
            self.last_incidents,
            self.mssp_id,
            self.frame_seq,
            now,
            coverage=self.coverage,
        )

    def share_tracks(self) -> tuple[TrackSnapshot, ...]:
        return tuple(t.snapshot() for t in self.tracks.values())

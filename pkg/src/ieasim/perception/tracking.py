"""Track store, gated nearest-neighbor association, observer update."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..protocol.messages import ObjectClass, TrackSnapshot
from . import observer
from .sensors import Detection


@dataclass(frozen=True)
class ObserverParams:
    accel_std: float = 0.5  # m/s^2 process noise
    n_miss: int = 5  # consecutive misses before a track is dropped
    gate: float = 3.0  # m association gate
    init_vel: float = 0.0
    init_vel_std: float = 15.0
    meas_var_floor: float = 1e-12

    @property
    def accel_var(self) -> float:
        return self.accel_std * self.accel_std


@dataclass(frozen=True, slots=True)
class Track:
    """One dynamic-object estimate: (position, velocity) plus 2x2 covariance."""

    track_id: str
    object_class: ObjectClass
    x: float
    v: float
    p00: float
    p01: float
    p11: float
    lane: int
    last_update: float
    miss_count: int = 0

    def should_drop(self, params: ObserverParams) -> bool:
        return self.miss_count >= params.n_miss

    def snapshot(self) -> TrackSnapshot:
        return TrackSnapshot(
            track_id=self.track_id,
            object_class=self.object_class,
            position=self.x,
            lane=self.lane,
            velocity=self.v,
            position_var=self.p00,
        )


def spawn_track(
    track_id: str, det: Detection, params: ObserverParams, meas_var: float
) -> Track:
    return Track(
        track_id=track_id,
        object_class=det.class_hint,
        x=det.position,
        v=params.init_vel,
        p00=meas_var + params.meas_var_floor,
        p01=0.0,
        p11=params.init_vel_std * params.init_vel_std,
        lane=det.lane,
        last_update=det.timestamp,
        miss_count=0,
    )


def associate(
    tracks: list[Track],
    detections: list[Detection],
    gate: float,
) -> tuple[dict[str, Detection], list[Detection], list[Track]]:
    """Greedy nearest-neighbor within the gate.

    Pairs are taken in increasing distance; distance ties break toward the
    lower track_id (string order), then the earlier detection. Each track
    gets at most one detection and vice versa. Returns (assignment by
    track_id, unmatched detections, unmatched tracks).
    """
    if gate <= 0:
        raise ValueError("association gate must be positive")
    candidates = []
    for t in tracks:
        for j, d in enumerate(detections):
            dist = abs(t.x - d.position)
            if dist <= gate:
                candidates.append((dist, t.track_id, j))
    candidates.sort()
    assigned: dict[str, Detection] = {}
    used_dets: set[int] = set()
    for _, track_id, j in candidates:
        if track_id in assigned or j in used_dets:
            continue
        assigned[track_id] = detections[j]
        used_dets.add(j)
    unmatched_dets = [d for j, d in enumerate(detections) if j not in used_dets]
    unmatched_tracks = [t for t in tracks if t.track_id not in assigned]
    return assigned, unmatched_dets, unmatched_tracks


def predict_track(track: Track, dt: float, params: ObserverParams) -> Track:
    x, v, p00, p01, p11 = observer.predict(
        track.x, track.v, track.p00, track.p01, track.p11, dt, params.accel_var
    )
    return replace(track, x=x, v=v, p00=p00, p01=p01, p11=p11)


def correct_track(track: Track, z: float, meas_var: float, now: float) -> Track:
    x, v, p00, p01, p11 = observer.update_position(
        track.x, track.v, track.p00, track.p01, track.p11, z, meas_var
    )
    return replace(track, x=x, v=v, p00=p00, p01=p01, p11=p11, last_update=now, miss_count=0)


def observer_update(
    track: Track,
    detection: Detection | None,
    dt: float,
    params: ObserverParams,
    meas_var: float | None = None,
) -> Track:
    """Predict over dt, then correct with the detection if one is present.

    Without a detection the track coasts and its miss count grows; the
    caller drops it once should_drop() reports true.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    track = predict_track(track, dt, params)
    if detection is None:
        return replace(track, miss_count=track.miss_count + 1)
    var = params.meas_var_floor if meas_var is None else meas_var + params.meas_var_floor
    return correct_track(track, detection.position, var, detection.timestamp)

"""Reconciling own tracks with SC self-reports and neighbor MSSP tracks.

SC self-reports are high-confidence measurements (vehicles know their own
pose): matched tracks get a position and a speed correction with the small
self-report variances. Neighbor tracks arriving over the Level-2 link are
deduplicated by track identity; an unknown-id neighbor track that gates
with an own track is fused as an inverse-variance position estimate, and
one that matches nothing is adopted as-is, preserving its identity so a
vehicle keeps one track id while moving down the corridor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

from ..protocol.messages import ObjectClass, SeaReport, TrackSnapshot
from . import observer
from .tracking import ObserverParams, Track


@dataclass(frozen=True)
class FusionParams:
    sea_pos_std: float = 0.1  # m, self-reported position
    sea_speed_std: float = 0.1  # m/s, self-reported speed
    merge_gate: float = 2.0  # m, neighbor-track to own-track merge distance


def reconcile(
    tracks: list[Track],
    neighbor_tracks: Sequence[TrackSnapshot],
    sea_reports: Sequence[SeaReport],
    params: ObserverParams,
    fusion: FusionParams,
    coverage: tuple[float, float],
    now: float,
) -> list[Track]:
    """Fuse self-reports and neighbor shares into the track list."""
    by_id = {t.track_id: t for t in tracks}

    for sea in sea_reports:
        best_id, best_dist = None, fusion.merge_gate + params.gate
        for t in by_id.values():
            dist = abs(t.x - sea.position)
            if dist <= params.gate and dist < best_dist:
                best_id, best_dist = t.track_id, dist
        pos_var = fusion.sea_pos_std**2
        speed_var = fusion.sea_speed_std**2
        if best_id is None:
            # a registered vehicle we have not picked up yet: trust its report
            by_id[f"sea:{sea.sc_id}"] = Track(
                track_id=f"sea:{sea.sc_id}",
                object_class=ObjectClass.VEHICLE,
                x=sea.position,
                v=sea.speed,
                p00=pos_var,
                p01=0.0,
                p11=speed_var,
                lane=sea.lane,
                last_update=now,
                miss_count=0,
            )
            continue
        t = by_id[best_id]
        x, v, p00, p01, p11 = observer.update_position(
            t.x, t.v, t.p00, t.p01, t.p11, sea.position, pos_var
        )
        x, v, p00, p01, p11 = observer.update_velocity(x, v, p00, p01, p11, sea.speed, speed_var)
        by_id[best_id] = replace(
            t,
            x=x,
            v=v,
            p00=p00,
            p01=p01,
            p11=p11,
            lane=sea.lane,
            object_class=ObjectClass.VEHICLE,
            last_update=now,
            miss_count=0,
        )

    lo, hi = coverage
    for nb in neighbor_tracks:
        if not lo <= nb.position <= hi:
            continue
        if nb.track_id in by_id:
            continue  # duplicate of a track we already carry
        merged = False
        for t in sorted(by_id.values(), key=lambda t: t.track_id):
            if abs(t.x - nb.position) <= fusion.merge_gate:
                x, v, p00, p01, p11 = observer.fuse_position_estimate(
                    t.x, t.v, t.p00, t.p01, t.p11, nb.position, max(nb.position_var, 1e-9)
                )
                by_id[t.track_id] = replace(t, x=x, v=v, p00=p00, p01=p01, p11=p11)
                merged = True
                break
        if not merged:
            by_id[nb.track_id] = Track(
                track_id=nb.track_id,
                object_class=nb.object_class,
                x=nb.position,
                v=nb.velocity,
                p00=max(nb.position_var, 1e-9),
                p01=0.0,
                p11=params.init_vel_std**2,
                lane=nb.lane,
                last_update=now,
                miss_count=0,
            )

    return list(by_id.values())

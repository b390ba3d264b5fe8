"""Sensing, association, observer behavior, reconciliation, incidents."""

import math
import random
import statistics

import pytest

from ieasim.perception import (
    Detection,
    FusionParams,
    IncidentMonitor,
    IncidentThresholds,
    MsspPerception,
    ObserverParams,
    PerceptionParams,
    SensorKind,
    SensorSpec,
    Track,
    TruthObject,
    associate,
    compose_sa,
    correct_track,
    observer_update,
    predict_track,
    reconcile,
    sense,
)
from ieasim.protocol import ObjectClass, SeaReport, TrackSnapshot, decode, encode

from filter_experiments import nees_mean, noiseless_convergence


def spec(noise=0.5, p=1.0, start=0.0, end=500.0, sensor_id="s1"):
    return SensorSpec(
        sensor_id=sensor_id,
        kind=SensorKind.LIDAR,
        coverage_start=start,
        coverage_end=end,
        noise_std=noise,
        detect_prob=p,
    )


def truth(pos, lane=0, speed=20.0, oid="v1", cls=ObjectClass.VEHICLE):
    return TruthObject(object_id=oid, object_class=cls, position=pos, lane=lane, speed=speed)


def track(x, tid="t1", v=0.0, p00=1.0, p01=0.0, p11=1.0, lane=0, cls=ObjectClass.VEHICLE):
    return Track(
        track_id=tid, object_class=cls, x=x, v=v, p00=p00, p01=p01, p11=p11,
        lane=lane, last_update=0.0,
    )


class TestSense:
    def test_noiseless_exact(self):
        rng = random.Random(1)
        dets = sense([truth(100.0), truth(250.0, oid="v2")], spec(noise=0.0), rng, 1.0)
        assert [d.position for d in dets] == [100.0, 250.0]

    def test_zero_probability_empty(self):
        rng = random.Random(1)
        assert sense([truth(100.0)], spec(p=0.0), rng, 1.0) == []

    def test_out_of_coverage_never_detected(self):
        rng = random.Random(1)
        dets = sense([truth(600.0), truth(-5.0, oid="v2")], spec(), rng, 1.0)
        assert dets == []

    def test_noise_std_matches_configuration(self):
        rng = random.Random(7)
        s = spec(noise=0.5)
        errors = []
        for _ in range(10_000):
            dets = sense([truth(100.0)], s, rng, 0.0)
            errors.append(dets[0].position - 100.0)
        sample_std = statistics.stdev(errors)
        assert abs(sample_std - 0.5) <= 0.05 * 0.5

    def test_deterministic_given_stream(self):
        a = sense([truth(100.0)], spec(), random.Random(3), 0.0)
        b = sense([truth(100.0)], spec(), random.Random(3), 0.0)
        assert a == b


class TestAssociate:
    def det(self, pos, ts=0.0):
        return Detection(sensor_id="s1", timestamp=ts, position=pos, lane=0,
                         class_hint=ObjectClass.VEHICLE)

    def test_match_within_gate(self):
        assigned, unmatched_d, unmatched_t = associate([track(100.0)], [self.det(100.2)], 5.0)
        assert "t1" in assigned and unmatched_d == [] and unmatched_t == []

    def test_far_detection_unmatched(self):
        assigned, unmatched_d, _ = associate([track(100.0)], [self.det(200.0)], 5.0)
        assert assigned == {} and len(unmatched_d) == 1

    def test_tie_breaks_to_lower_track_id(self):
        t_a, t_b = track(99.0, tid="a"), track(101.0, tid="b")
        assigned, _, unmatched_t = associate([t_b, t_a], [self.det(100.0)], 5.0)
        assert list(assigned) == ["a"]
        assert [t.track_id for t in unmatched_t] == ["b"]

    def test_one_detection_per_track(self):
        assigned, unmatched_d, _ = associate([track(100.0)], [self.det(100.1), self.det(100.2)], 5.0)
        assert len(assigned) == 1 and len(unmatched_d) == 1


class TestObserver:
    def test_noiseless_convergence(self):
        pos_err, vel_err = noiseless_convergence(n_updates=20, dt=0.1)
        assert pos_err < 1e-3
        assert vel_err < 1e-2

    def test_coasting_flags_drop(self):
        params = ObserverParams()
        t = track(100.0)
        for _ in range(params.n_miss):
            t = observer_update(t, None, 0.1, params)
        assert t.should_drop(params)
        assert t.miss_count == params.n_miss

    def test_detection_resets_miss_count(self):
        params = ObserverParams()
        t = track(100.0)
        t = observer_update(t, None, 0.1, params)
        assert t.miss_count == 1
        det = Detection("s1", 0.2, 100.05, 0, ObjectClass.VEHICLE)
        t = observer_update(t, det, 0.1, params, meas_var=0.25)
        assert t.miss_count == 0

    def test_covariance_trace_monotone_for_static_repeat(self):
        params = ObserverParams(accel_std=0.0)
        t = track(50.0, p00=1.0, p11=4.0)
        prev = t.p00 + t.p11
        for k in range(30):
            t = predict_track(t, 0.1, params)
            t = correct_track(t, 50.0, 0.25, 0.1 * (k + 1))
            cur = t.p00 + t.p11
            assert cur <= prev + 1e-12
            prev = cur

    def test_nees_consistency_quick(self):
        mean = nees_mean(n_runs=300, seed=5)
        assert 1.5 <= mean <= 2.5

    def test_dt_must_be_positive(self):
        with pytest.raises(ValueError):
            observer_update(track(0.0), None, 0.0, ObserverParams())


class TestReconcile:
    PARAMS = ObserverParams()
    FUSION = FusionParams()

    def test_sea_fusion_inverse_variance(self):
        t = track(100.0, p00=1.0)
        sea = SeaReport(sc_id="sc1", timestamp=1.0, position=100.1, lane=0, speed=0.0)
        out = reconcile([t], [], [sea], self.PARAMS, self.FUSION, (0.0, 500.0), 1.0)
        fused = out[0]
        # inverse-variance arithmetic: (100/1 + 100.1/0.01) / (1/1 + 1/0.01)
        assert 100.05 <= fused.x <= 100.11
        assert fused.x == pytest.approx(10110.0 / 101.0, abs=1e-9)
        assert fused.p00 <= min(1.0, 0.01)

    def test_identity_without_inputs(self):
        t = track(100.0)
        out = reconcile([t], [], [], self.PARAMS, self.FUSION, (0.0, 500.0), 1.0)
        assert out == [t]

    def test_duplicate_neighbor_track_suppressed(self):
        t = track(100.0, tid="m1:1")
        echo = TrackSnapshot("m1:1", ObjectClass.VEHICLE, 100.4, 0, 20.0, 0.3)
        out = reconcile([t], [echo], [], self.PARAMS, self.FUSION, (0.0, 500.0), 1.0)
        assert len(out) == 1
        assert out[0].x == t.x  # kept ours untouched

    def test_unknown_neighbor_track_adopted_with_identity(self):
        nb = TrackSnapshot("m0:7", ObjectClass.VEHICLE, 120.0, 1, 19.0, 0.4)
        out = reconcile([], [nb], [], self.PARAMS, self.FUSION, (100.0, 600.0), 1.0)
        assert len(out) == 1
        assert out[0].track_id == "m0:7"
        assert out[0].lane == 1

    def test_neighbor_outside_coverage_ignored(self):
        nb = TrackSnapshot("m0:7", ObjectClass.VEHICLE, 50.0, 0, 19.0, 0.4)
        out = reconcile([], [nb], [], self.PARAMS, self.FUSION, (100.0, 600.0), 1.0)
        assert out == []

    def test_gating_neighbor_merge_reduces_variance(self):
        t = track(100.0, tid="m1:1", p00=1.0)
        nb = TrackSnapshot("m0:3", ObjectClass.VEHICLE, 100.5, 0, 20.0, 1.0)
        out = reconcile([t], [nb], [], self.PARAMS, self.FUSION, (0.0, 500.0), 1.0)
        assert len(out) == 1
        assert out[0].p00 <= min(1.0, 1.0)
        assert out[0].p00 == pytest.approx(0.5, abs=1e-9)


class TestIncidents:
    TH = IncidentThresholds(v_stall=0.5, t_stall=5.0)

    def run_timeline(self, speeds, dt=1.0):
        monitor = IncidentMonitor(self.TH)
        out = []
        for k, v in enumerate(speeds):
            tracks = [track(200.0, v=v)]
            out.append(monitor.step(tracks, now=k * dt))
        return out

    def test_full_stall_reaches_confidence_one(self):
        frames = self.run_timeline([0.0] * 11)  # 10 s = 2 * t_stall
        assert frames[-1][0].confidence == pytest.approx(1.0)
        assert frames[-1][0].kind.name == "STALLED_VEHICLE"

    def test_moving_track_no_incident(self):
        frames = self.run_timeline([10.0] * 8)
        assert all(f == [] for f in frames)

    def test_recovery_before_threshold_emits_nothing(self):
        # stalls for 4 s (< t_stall), recovers, stalls again briefly
        frames = self.run_timeline([0.0, 0.0, 0.0, 0.0, 10.0, 0.0, 0.0])
        assert all(f == [] for f in frames)

    def test_confidence_nondecreasing_while_stalled(self):
        frames = self.run_timeline([0.0] * 15)
        confs = [f[0].confidence for f in frames if f]
        assert confs == sorted(confs)

    def test_obstruction_for_non_vehicle(self):
        monitor = IncidentMonitor(self.TH)
        for k in range(7):
            out = monitor.step([track(150.0, v=0.0, cls=ObjectClass.UNKNOWN)], now=float(k))
        assert out[0].kind.name == "OBSTRUCTION"


class TestComposeSa:
    def test_empty_tracks(self):
        frame = compose_sa([], [], "m1", 4, 2.5)
        assert frame.tracks == () and frame.frame_seq == 4

    def test_lists_exactly_given_tracks(self):
        tracks = [track(10.0, tid="a"), track(20.0, tid="b"), track(30.0, tid="c")]
        frame = compose_sa(tracks, [], "m1", 1, 0.0)
        assert len(frame.tracks) == 3
        assert {t.track_id for t in frame.tracks} == {"a", "b", "c"}

    def test_round_trips_through_codec(self):
        tracks = [track(10.0, tid="a", v=21.5)]
        frame = compose_sa(tracks, [], "m1", 1, 0.0)
        assert decode(encode(frame)) == frame

    def test_coverage_filter(self):
        tracks = [track(10.0, tid="a"), track(510.0, tid="b")]
        frame = compose_sa(tracks, [], "m1", 1, 0.0, coverage=(0.0, 500.0))
        assert [t.track_id for t in frame.tracks] == ["a"]


class TestPipeline:
    def make(self, n_sensors=1, noise=0.3, p=1.0):
        sensors = [spec(noise=noise, p=p, sensor_id=f"s{i}") for i in range(n_sensors)]
        return MsspPerception("m1", (0.0, 500.0), sensors)

    def test_track_count_stability(self):
        for seed in range(5):
            mssp = self.make()
            rng = random.Random(seed)
            objs = [truth(50.0 + 40 * i, oid=f"v{i}") for i in range(3)]
            for k in range(30):
                now = 0.1 * (k + 1)
                objs = [
                    TruthObject(o.object_id, o.object_class, o.position + o.speed * 0.1, o.lane, o.speed)
                    for o in objs
                ]
                tracks = mssp.step(now, 0.1, objs, rng)
                if k >= 5:
                    assert len(tracks) == 3, f"seed {seed} tick {k}: {len(tracks)} tracks"

    def test_two_sensors_do_not_duplicate_tracks(self):
        mssp = self.make(n_sensors=2)
        rng = random.Random(0)
        objs = [truth(100.0), truth(200.0, oid="v2")]
        for k in range(10):
            tracks = mssp.step(0.1 * (k + 1), 0.1, objs, rng)
        assert len(tracks) == 2

    def test_coverage_soundness(self):
        mssp = self.make()
        rng = random.Random(0)
        objs = [truth(490.0, speed=30.0)]
        for k in range(20):
            now = 0.1 * (k + 1)
            objs = [
                TruthObject(o.object_id, o.object_class, o.position + o.speed * 0.1, o.lane, o.speed)
                for o in objs
            ]
            mssp.step(now, 0.1, objs, rng)
            frame = mssp.compose_frame(now)
            for t in frame.tracks:
                assert 0.0 <= t.position <= 500.0

    def test_sensor_outside_mssp_coverage_rejected(self):
        with pytest.raises(ValueError):
            MsspPerception("m1", (0.0, 100.0), [spec(start=0.0, end=200.0)])

    def test_frame_seq_increments(self):
        mssp = self.make()
        rng = random.Random(0)
        mssp.step(0.1, 0.1, [], rng)
        a = mssp.compose_frame(0.1)
        b = mssp.compose_frame(0.2)
        assert (a.frame_seq, b.frame_seq) == (1, 2)

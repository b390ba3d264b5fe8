"""Scenario configuration: corridor geometry, agents, channels, fault knobs.

Scenario files use the shared sectioned text format. Required sections are
[corridor], at least one [mssp <id>], and [vehicles]; everything else has
defaults. See the bundled .scn files for complete examples.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from ..configfmt import Entry, ParseError, Section, parse_sections
from ..perception.incidents import IncidentThresholds
from ..perception.fusion import FusionParams
from ..perception.pipeline import PerceptionParams
from ..perception.sensors import SensorKind, SensorSpec
from ..perception.tracking import ObserverParams
from ..protocol.sc_fsm import ProtocolParams
from .driver import IdmParams
from .faults import FaultParams
from .outcomes import OutcomeClassifierConfig
from .policy import PolicyParams
from .vehicle import DEFAULT_LENGTH, DEFAULT_V_MAX, DbwEnvelope, VehicleKind


class ScenarioError(ValueError):
    """Invalid scenario content (geometry, coverage, references)."""


@dataclass(frozen=True)
class MsspPlacement:
    mssp_id: str
    position: float
    coverage: tuple[float, float]
    sensors: tuple[SensorSpec, ...]
    capacity: int = 8
    advise_margin: float = 50.0
    fail_at: float | None = None  # unit dies at this sim time (infra failure)


@dataclass(frozen=True)
class Corridor:
    length: float
    lanes: int
    placements: tuple[MsspPlacement, ...]
    take_over_spots: tuple[float, ...] = ()
    entry: float = 0.0
    exit: float | None = None
    min_overlap: float = 40.0

    def __post_init__(self):
        if self.exit is None:
            object.__setattr__(self, "exit", self.length)
        if self.length <= 0 or self.lanes < 1:
            raise ScenarioError("corridor needs positive length and at least one lane")
        if not self.placements:
            raise ScenarioError("corridor needs at least one MSSP placement")
        ordered = sorted(self.placements, key=lambda m: m.coverage[0])
        if ordered[0].coverage[0] > self.entry:
            raise ScenarioError("coverage does not reach the corridor entry")
        reach = ordered[0].coverage[1]
        for prev, nxt in zip(ordered, ordered[1:]):
            overlap = prev.coverage[1] - nxt.coverage[0]
            if overlap < self.min_overlap:
                raise ScenarioError(
                    f"cells {prev.mssp_id}/{nxt.mssp_id} overlap {overlap:.1f} m "
                    f"< required {self.min_overlap:.1f} m"
                )
            reach = max(reach, nxt.coverage[1])
        if reach < self.length:
            raise ScenarioError(f"coverage ends at {reach:.1f} m, corridor is {self.length:.1f} m")
        for spot in self.take_over_spots:
            if not self.entry <= spot <= self.length:
                raise ScenarioError(f"take-over spot {spot:.1f} m outside corridor")
        object.__setattr__(self, "placements", tuple(ordered))


@dataclass(frozen=True)
class VehicleSpawn:
    vehicle_id: str
    kind: VehicleKind
    entry_time: float
    position: float
    lane: int
    speed: float
    target_speed: float


@dataclass(frozen=True)
class CommParams:
    latency: float = 0.02  # s, level-1 one-way
    loss: float = 0.0  # level-1 drop probability per message
    level2_latency: float = 0.01

    @property
    def rtt(self) -> float:
        return 2.0 * self.latency


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    corridor: Corridor
    vehicles: tuple[VehicleSpawn, ...]
    comm: CommParams = CommParams()
    protocol: ProtocolParams = ProtocolParams()
    policy: PolicyParams = PolicyParams()
    envelope: DbwEnvelope = DbwEnvelope()
    perception: PerceptionParams = PerceptionParams()
    idm: IdmParams = IdmParams()
    faults: FaultParams = FaultParams()
    classifier: OutcomeClassifierConfig = OutcomeClassifierConfig()
    dt: float = 0.1
    horizon: float = 60.0
    handoff_lead_time: float = 2.0
    engage_on_register: bool = True
    disengage_after_stale: float = 3.0
    arrival_rate: float = 0.0  # manual vehicles per second at the entry
    source_digest: str = ""

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0:
            raise ScenarioError("dt and horizon must be positive")
        lanes = self.corridor.lanes
        for v in self.vehicles:
            if not 0 <= v.lane < lanes:
                raise ScenarioError(f"vehicle {v.vehicle_id} lane {v.lane} outside 0..{lanes - 1}")
        if len({v.vehicle_id for v in self.vehicles}) != len(self.vehicles):
            raise ScenarioError("vehicle ids must be unique")
        if self.policy.lane_count != lanes:
            object.__setattr__(self, "policy", _with(self.policy, lane_count=lanes))

    def v_max(self, kind: VehicleKind) -> float:
        return DEFAULT_V_MAX[kind]

    def vehicle_length(self, kind: VehicleKind) -> float:
        return DEFAULT_LENGTH[kind]


def _with(obj, **kw):
    from dataclasses import replace

    return replace(obj, **kw)


def _parse_sensor(entry: Entry, mssp_id: str, index: int) -> SensorSpec:
    tokens = entry.split()
    if len(tokens) < 5:
        raise ParseError(
            "sensor = KIND START END NOISE_STD DETECT_PROB [LATENCY] [CONFUSION]",
            entry.line,
            entry.col,
        )
    try:
        kind = SensorKind(tokens[0])
    except ValueError:
        raise ParseError(f"unknown sensor kind {tokens[0]!r}", entry.line, entry.col) from None
    try:
        nums = [float(t) for t in tokens[1:]]
    except ValueError:
        raise ParseError("bad number in sensor line", entry.line, entry.col) from None
    latency = nums[4] if len(nums) > 4 else 0.0
    confusion = nums[5] if len(nums) > 5 else 0.0
    return SensorSpec(
        sensor_id=f"{mssp_id}/{kind.value}{index}",
        kind=kind,
        coverage_start=nums[0],
        coverage_end=nums[1],
        noise_std=nums[2],
        detect_prob=nums[3],
        latency=latency,
        confusion_prob=confusion,
    )


def _parse_vehicles(section: Section) -> tuple[VehicleSpawn, ...]:
    spawns = []
    for entry in section.get_all("vehicle"):
        tokens = entry.split()
        if len(tokens) != 7:
            raise ParseError(
                "vehicle = ID KIND ENTRY_TIME POSITION LANE SPEED TARGET_SPEED",
                entry.line,
                entry.col,
            )
        try:
            kind = VehicleKind(tokens[1])
        except ValueError:
            raise ParseError(f"unknown vehicle kind {tokens[1]!r}", entry.line, entry.col) from None
        try:
            spawns.append(
                VehicleSpawn(
                    vehicle_id=tokens[0],
                    kind=kind,
                    entry_time=float(tokens[2]),
                    position=float(tokens[3]),
                    lane=int(tokens[4]),
                    speed=float(tokens[5]),
                    target_speed=float(tokens[6]),
                )
            )
        except ValueError:
            raise ParseError("bad number in vehicle line", entry.line, entry.col) from None
    return tuple(spawns)


def parse_scenario_text(text: str, name: str = "<inline>") -> ScenarioConfig:
    sections = parse_sections(text)
    by_name: dict[str, Section] = {}
    mssp_sections: list[Section] = []
    for s in sections:
        if s.name.startswith("mssp"):
            mssp_sections.append(s)
        else:
            by_name.setdefault(s.name, s)

    if "corridor" not in by_name:
        raise ParseError("missing required section [corridor]", 1)
    if not mssp_sections:
        raise ParseError("at least one [mssp <id>] section required", 1)

    cor = by_name["corridor"]
    placements = []
    for s in mssp_sections:
        parts = s.name.split()
        if len(parts) != 2:
            raise ParseError("mssp sections are named '[mssp <id>]'", s.line)
        mssp_id = parts[1]
        cov_tokens = s.expect("coverage").split()
        if len(cov_tokens) != 2:
            raise ParseError("coverage = START END", s.expect("coverage").line)
        coverage = (float(cov_tokens[0]), float(cov_tokens[1]))
        sensors = tuple(
            _parse_sensor(e, mssp_id, i) for i, e in enumerate(s.get_all("sensor"))
        )
        if not sensors:
            raise ParseError(f"[{s.name}] needs at least one sensor line", s.line)
        fail_entry = s.get("fail_at")
        placements.append(
            MsspPlacement(
                mssp_id=mssp_id,
                position=s.float_or("position", 0.5 * (coverage[0] + coverage[1])),
                coverage=coverage,
                sensors=sensors,
                capacity=s.int_or("capacity", 8),
                advise_margin=s.float_or("advise_margin", 50.0),
                fail_at=fail_entry.as_float() if fail_entry is not None else None,
            )
        )

    length = cor.expect("length").as_float()
    corridor = Corridor(
        length=length,
        lanes=cor.int_or("lanes", 1),
        placements=tuple(placements),
        take_over_spots=tuple(e.as_float() for e in cor.get_all("take_over_spot")),
        entry=cor.float_or("entry", 0.0),
        exit=cor.float_or("exit", length),
        min_overlap=cor.float_or("min_overlap", 40.0),
    )

    vehicles = ()
    if "vehicles" in by_name:
        vehicles = _parse_vehicles(by_name["vehicles"])

    def sec(name: str) -> Section:
        return by_name.get(name) or Section(name=name, line=0)

    comm_s = sec("comm")
    comm = CommParams(
        latency=comm_s.float_or("latency", 0.02),
        loss=comm_s.float_or("loss", 0.0),
        level2_latency=comm_s.float_or("level2_latency", 0.01),
    )
    proto_s = sec("protocol")
    protocol = ProtocolParams(
        registration_timeout=proto_s.float_or("registration_timeout", 0.5),
        sea_period=proto_s.float_or("sea_period", 0.1),
        evict_missed=proto_s.int_or("evict_missed", 3),
        retry_backoff_base=proto_s.float_or("retry_backoff_base", 0.2),
        retry_backoff_cap=proto_s.float_or("retry_backoff_cap", 2.0),
    )
    pol_s = sec("policy")
    policy = PolicyParams(
        target_speed=pol_s.float_or("target_speed", 24.0),
        safe_gap=pol_s.float_or("safe_gap", 15.0),
        gap_hysteresis=pol_s.float_or("gap_hysteresis", 5.0),
        rear_gap=pol_s.float_or("rear_gap", 10.0),
        prediction_horizon=pol_s.float_or("prediction_horizon", 1.0),
        sa_stale_after=pol_s.float_or("sa_stale_after", 0.5),
        lane_count=corridor.lanes,
        incident_gate=pol_s.float_or("incident_gate", 5.0),
        comfort_decel=pol_s.float_or("comfort_decel", 2.0),
    )
    env_s = sec("envelope")
    envelope = DbwEnvelope(
        max_accel=env_s.float_or("max_accel", 2.5),
        max_decel=env_s.float_or("max_decel", 6.0),
        lane_change_duration=env_s.float_or("lane_change_duration", 3.0),
        speed_time_constant=env_s.float_or("speed_time_constant", 1.0),
    )
    obs_s = sec("observer")
    observer = ObserverParams(
        accel_std=obs_s.float_or("accel_std", 0.5),
        n_miss=obs_s.int_or("n_miss", 5),
        gate=obs_s.float_or("gate", 3.0),
        init_vel=obs_s.float_or("init_vel", 0.0),
        init_vel_std=obs_s.float_or("init_vel_std", 15.0),
    )
    inc_s = sec("incidents")
    thresholds = IncidentThresholds(
        v_stall=inc_s.float_or("v_stall", 0.5),
        t_stall=inc_s.float_or("t_stall", 5.0),
    )
    fus_s = sec("fusion")
    fusion = FusionParams(
        sea_pos_std=fus_s.float_or("sea_pos_std", 0.1),
        sea_speed_std=fus_s.float_or("sea_speed_std", 0.1),
        merge_gate=fus_s.float_or("merge_gate", 2.0),
    )
    perception = PerceptionParams(observer=observer, fusion=fusion, incidents=thresholds)

    idm_s = sec("idm")
    idm = IdmParams(
        time_headway=idm_s.float_or("time_headway", 1.2),
        min_gap=idm_s.float_or("min_gap", 2.0),
        max_accel=idm_s.float_or("max_accel", 2.0),
        comfort_decel=idm_s.float_or("comfort_decel", 2.5),
        hard_decel=idm_s.float_or("hard_decel", 8.0),
    )
    fault_s = sec("faults")
    faults = FaultParams(
        q_dbw=fault_s.float_or("q_dbw", 0.3),
        q_sa=fault_s.float_or("q_sa", 0.3),
        sa_bias=fault_s.float_or("sa_bias", 2.0),
        q_dec=fault_s.float_or("q_dec", 0.3),
    )
    cls_s = sec("classifier")
    classifier = OutcomeClassifierConfig(
        ttc_near_miss=cls_s.float_or("ttc_near_miss", 1.0),
        minor_dv=cls_s.float_or("minor_dv", 1.0),
        severe_dv=cls_s.float_or("severe_dv", 8.0),
    )
    sim_s = sec("sim")
    try:
        return ScenarioConfig(
            name=name,
            corridor=corridor,
            vehicles=vehicles,
            comm=comm,
            protocol=protocol,
            policy=policy,
            envelope=envelope,
            perception=perception,
            idm=idm,
            faults=faults,
            classifier=classifier,
            dt=sim_s.float_or("dt", 0.1),
            horizon=sim_s.float_or("horizon", 60.0),
            handoff_lead_time=sim_s.float_or("handoff_lead_time", 2.0),
            engage_on_register=sim_s.int_or("engage_on_register", 1) != 0,
            disengage_after_stale=sim_s.float_or("disengage_after_stale", 3.0),
            arrival_rate=sim_s.float_or("arrival_rate", 0.0),
            source_digest=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        )
    except ScenarioError:
        raise


def load_scenario_file(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    return parse_scenario_text(path.read_text(encoding="utf-8"), name=path.stem)

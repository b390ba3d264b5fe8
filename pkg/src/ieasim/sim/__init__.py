"""Deterministic corridor simulation with fault injection."""

from .driver import IdmParams, idm_accel
from .episode import EpisodeTrace, rng_stream, run_episode
from .estimate import (
    ALL_CONFIGS,
    EmpiricalLikelihood,
    episode_seed,
    estimate_outcome_likelihood,
    wilson_halfwidth,
)
from .faults import FaultAssignment, FaultParams, corrupt_decision, corrupt_sa_frame
from .outcomes import (
    OUTCOME_LABELS,
    Collision,
    HazardMonitor,
    HazardSummary,
    OutcomeClassifierConfig,
    classify_outcome,
)
from .policy import Decision, PolicyParams, sc_decide
from .scenario import (
    CommParams,
    Corridor,
    MsspPlacement,
    ScenarioConfig,
    ScenarioError,
    VehicleSpawn,
    load_scenario_file,
    parse_scenario_text,
)
from .traceio import TraceIntegrityError, Violation, read_records, validate_records, write_trace
from .vehicle import (
    LEFT,
    RIGHT,
    Actuation,
    DbwCommand,
    DbwEnvelope,
    DriveMode,
    EmergencyStop,
    HoldLane,
    LaneChange,
    SetSpeed,
    VehicleKind,
    VehicleState,
    execute_dbw,
    step_vehicle,
)

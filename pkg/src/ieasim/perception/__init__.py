"""MSSP-side situational awareness: sensing, tracking, fusion, incidents."""

from .observer import NumericalConditioningError, nees, predict, update_position, update_velocity
from .sensors import Detection, SensorKind, SensorSpec, TruthObject, sense
from .tracking import (
    ObserverParams,
    Track,
    associate,
    correct_track,
    observer_update,
    predict_track,
    spawn_track,
)
from .fusion import FusionParams, reconcile
from .incidents import IncidentMonitor, IncidentThresholds
from .pipeline import MsspPerception, PerceptionParams, compose_sa

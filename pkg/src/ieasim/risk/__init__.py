"""Exact blame attribution over independent component faults."""

from .model import (
    MAX_COMPONENTS,
    SUM_TOL,
    BlameFunction,
    CustomBlame,
    DegenerateProportionsError,
    EnumerationLimitError,
    FaultConfig,
    FaultModel,
    NullOutcomeError,
    OutcomeLikelihood,
    OutcomeSpace,
    ProportionalShare,
    RiskModelError,
    centralized_cost,
    enumerate_fault_configs,
    expected_blame,
    fault_config_probability,
    outcome_marginal,
    responsibility_proportions,
)
from .report import RiskReport, build_risk_report
from .modelfile import load_model_file, parse_model_text

__all__ = [
    "MAX_COMPONENTS",
    "SUM_TOL",
    "BlameFunction",
    "CustomBlame",
    "DegenerateProportionsError",
    "EnumerationLimitError",
    "FaultConfig",
    "FaultModel",
    "NullOutcomeError",
    "OutcomeLikelihood",
    "OutcomeSpace",
    "ProportionalShare",
    "RiskModelError",
    "RiskReport",
    "build_risk_report",
    "centralized_cost",
    "enumerate_fault_configs",
    "expected_blame",
    "fault_config_probability",
    "load_model_file",
    "outcome_marginal",
    "parse_model_text",
    "responsibility_proportions",
]

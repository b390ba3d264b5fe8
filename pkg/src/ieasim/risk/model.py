"""Fault enumeration, outcome marginals and conditional expected blame.

The model is a three-layer Bayesian network: independent per-component
fault bits F_i with P(F_i=1) = p_i, a mutually exclusive outcome S whose
conditional table P(S=s | F=f) is supplied (or estimated by simulation),
and a blame value B_i determined by (f, s). Everything here is computed
by exhaustive enumeration of the 2^n fault configurations, so results
are exact up to float rounding. Enumeration is hard-capped at n = 20;
anything larger is an error rather than a silent approximation.

Conditional expected blame for component i given outcome s:

    Exp(B_i | S=s) = (1 / P(S=s)) * sum_f  B_i(f, s) * P(S=s|F=f) * P(F=f)

with P(F=f) = prod_i p_i^f_i (1-p_i)^(1-f_i). Conditioning on an outcome
with zero marginal probability raises, never divides.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

FaultConfig = tuple[int, ...]

MAX_COMPONENTS = 20
SUM_TOL = 1e-9


class RiskModelError(ValueError):
    """Invalid model input: shape mismatch, bad probability, missing entry."""


class EnumerationLimitError(RiskModelError):
    """Component count outside the exact-enumeration bound."""


class NullOutcomeError(RiskModelError):
    """Conditioning on an outcome with zero probability."""


class DegenerateProportionsError(RiskModelError):
    """Proportions requested at an outcome where every expected blame is zero."""


def enumerate_fault_configs(n: int) -> list[FaultConfig]:
    """All 2^n fault bit vectors in lexicographic order."""
    if not 1 <= n <= MAX_COMPONENTS:
        raise EnumerationLimitError(
            f"component count {n} outside exact enumeration bound [1, {MAX_COMPONENTS}]"
        )
    return list(itertools.product((0, 1), repeat=n))


@dataclass(frozen=True)
class FaultModel:
    """Component labels plus independent per-component fault probabilities."""

    components: tuple[str, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        n = len(self.components)
        if not 1 <= n <= MAX_COMPONENTS:
            raise EnumerationLimitError(
                f"component count {n} outside exact enumeration bound [1, {MAX_COMPONENTS}]"
            )
        if len(set(self.components)) != n:
            raise RiskModelError("component labels must be unique")
        if len(self.p) != n:
            raise RiskModelError(f"{n} components but {len(self.p)} fault probabilities")
        for label, pi in zip(self.components, self.p):
            if not 0.0 <= pi <= 1.0 or math.isnan(pi):
                raise RiskModelError(f"fault probability for {label!r} is {pi}, not in [0, 1]")

    @property
    def n(self) -> int:
        return len(self.components)

    def configs(self) -> list[FaultConfig]:
        return enumerate_fault_configs(self.n)


@dataclass(frozen=True)
class OutcomeSpace:
    """Outcome labels ordered by ascending severity rank."""

    labels: tuple[str, ...]
    ranks: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise RiskModelError("outcome space must contain at least one outcome")
        if len(set(self.labels)) != len(self.labels):
            raise RiskModelError("outcome labels must be unique")
        ranks = tuple(self.ranks) if self.ranks else tuple(range(len(self.labels)))
        if len(ranks) != len(self.labels):
            raise RiskModelError("one severity rank per outcome label required")
        if any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise RiskModelError("severity ranks must be strictly increasing")
        object.__setattr__(self, "ranks", ranks)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise RiskModelError(f"unknown outcome label {label!r}") from None


@dataclass(frozen=True)
class OutcomeLikelihood:
    """Dense table P(S=s | F=f) over every fault config and outcome.

    Rows are validated to be proper distributions (sum to 1 within 1e-9).
    Construct via from_rows (dense-fills unspecified outcomes with 0) or
    the exactly_k_faults shorthand.
    """

    outcomes: OutcomeSpace
    rows: Mapping[FaultConfig, Mapping[str, float]]

    @classmethod
    def from_rows(
        cls,
        outcomes: OutcomeSpace,
        rows: Mapping[FaultConfig, Mapping[str, float]],
        n: int,
    ) -> "OutcomeLikelihood":
        dense: dict[FaultConfig, dict[str, float]] = {}
        for f in enumerate_fault_configs(n):
            row = rows.get(f)
            if row is None:
                raise RiskModelError(f"likelihood table missing fault config {f}")
            for s in row:
                if s not in outcomes:
                    raise RiskModelError(f"likelihood row for {f} names unknown outcome {s!r}")
            filled = {s: float(row.get(s, 0.0)) for s in outcomes.labels}
            total = math.fsum(filled.values())
            if abs(total - 1.0) > SUM_TOL:
                raise RiskModelError(f"likelihood row for {f} sums to {total!r}, expected 1")
            for s, v in filled.items():
                if not 0.0 <= v <= 1.0 or math.isnan(v):
                    raise RiskModelError(f"P({s}|{f}) = {v}, not in [0, 1]")
            dense[f] = filled
        return cls(outcomes=outcomes, rows=dense)

    @classmethod
    def exactly_k_faults(cls, n: int, outcomes: OutcomeSpace) -> "OutcomeLikelihood":
        """Deterministic map: a config with k fault bits yields outcome index k.

        Requires at least n+1 outcomes; outcomes beyond index n get zero
        mass everywhere and show up as zero-probability in reports.
        """
        if len(outcomes) < n + 1:
            raise RiskModelError(
                f"exactly-k-faults needs at least {n + 1} outcomes, got {len(outcomes)}"
            )
        rows = {f: {outcomes.labels[sum(f)]: 1.0} for f in enumerate_fault_configs(n)}
        return cls.from_rows(outcomes, rows, n)

    def prob(self, f: FaultConfig, s: str) -> float:
        row = self.rows.get(tuple(f))
        if row is None:
            raise RiskModelError(f"likelihood table missing fault config {tuple(f)}")
        if s not in row:
            raise RiskModelError(f"unknown outcome label {s!r}")
        return row[s]


class ProportionalShare:
    """Equal split of blame across the components at fault: f_i / sum(f).

    The all-zero config carries no blame for anyone (the raw ratio would
    be 0/0; zero is the only convention preserving "no fault, no blame").
    """

    def value(self, f: FaultConfig, s: str, i: int) -> float:
        k = sum(f)
        return 0.0 if k == 0 else f[i] / k

    def __repr__(self) -> str:
        return "ProportionalShare()"

    def __eq__(self, other) -> bool:
        return isinstance(other, ProportionalShare)

    def __hash__(self) -> int:
        return hash(ProportionalShare)


@dataclass(frozen=True)
class CustomBlame:
    """Explicit blame table: (fault config, outcome) -> per-component values."""

    table: Mapping[tuple[FaultConfig, str], tuple[float, ...]]

    def value(self, f: FaultConfig, s: str, i: int) -> float:
        try:
            return self.table[(tuple(f), s)][i]
        except KeyError:
            raise RiskModelError(f"custom blame table missing entry for ({tuple(f)}, {s!r})") from None


BlameFunction = ProportionalShare | CustomBlame


def fault_config_probability(model: FaultModel, f: FaultConfig) -> float:
    """P(F=f) under mutual independence: prod p_i^f_i (1-p_i)^(1-f_i)."""
    f = tuple(f)
    if len(f) != model.n:
        raise RiskModelError(f"config length {len(f)} does not match model n={model.n}")
    prob = 1.0
    for bit, pi in zip(f, model.p):
        if bit == 1:
            prob *= pi
        elif bit == 0:
            prob *= 1.0 - pi
        else:
            raise RiskModelError(f"fault indicator must be 0 or 1, got {bit!r}")
    return prob


def outcome_marginal(model: FaultModel, lik: OutcomeLikelihood, s: str) -> float:
    """P(S=s) = sum_f P(S=s|F=f) P(F=f), exact over all configs."""
    if s not in lik.outcomes:
        raise RiskModelError(f"unknown outcome label {s!r}")
    return math.fsum(
        lik.prob(f, s) * fault_config_probability(model, f) for f in model.configs()
    )


def expected_blame(
    model: FaultModel,
    lik: OutcomeLikelihood,
    blame: BlameFunction,
    i: int,
    s: str,
) -> float:
    """Exp(B_i | S=s) by full enumeration; raises on a zero-probability outcome."""
    if not 0 <= i < model.n:
        raise RiskModelError(f"component index {i} out of range for n={model.n}")
    marginal = outcome_marginal(model, lik, s)
    if marginal == 0.0:
        raise NullOutcomeError(f"outcome {s!r} has zero probability; expected blame undefined")
    numer = math.fsum(
        blame.value(f, s, i) * lik.prob(f, s) * fault_config_probability(model, f)
        for f in model.configs()
    )
    return numer / marginal


def responsibility_proportions(
    model: FaultModel,
    lik: OutcomeLikelihood,
    blame: BlameFunction,
    s: str,
) -> tuple[float, ...]:
    """Per-component percentages 100 * Exp(B_i|s) / sum_j Exp(B_j|s)."""
    blames = [expected_blame(model, lik, blame, i, s) for i in range(model.n)]
    total = math.fsum(blames)
    if total == 0.0:
        raise DegenerateProportionsError(
            f"every expected blame is zero at outcome {s!r}; proportions undefined"
        )
    return tuple(100.0 * b / total for b in blames)


def centralized_cost(
    model: FaultModel,
    lik: OutcomeLikelihood,
    blame: BlameFunction,
    s: str,
) -> float:
    """Aggregate expected blame sum_i Exp(B_i|s): the cost if one entity owned all components."""
    return math.fsum(expected_blame(model, lik, blame, i, s) for i in range(model.n))

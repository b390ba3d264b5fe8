"""Risk report assembly and its fixed-key-order JSON form.

A report aggregates the per-element operations over every component and
outcome in one enumeration pass. Outcomes with zero marginal probability
are listed separately rather than zero-filled; outcomes whose total
expected blame is zero (for example a no-accident outcome reachable only
with no faults under proportional blame) carry no proportions row and are
listed as unattributed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .model import (
    SUM_TOL,
    BlameFunction,
    FaultModel,
    OutcomeLikelihood,
    RiskModelError,
    fault_config_probability,
)


@dataclass(frozen=True)
class RiskReport:
    components: tuple[str, ...]
    p: tuple[float, ...]
    outcomes: tuple[str, ...]
    outcome_marginals: dict[str, float]
    # component label -> outcome label -> Exp(B_i | s); only outcomes with P(s) > 0
    expected_blame: dict[str, dict[str, float]]
    # outcome label -> component label -> percent share; only attributable outcomes
    proportions_pct: dict[str, dict[str, float]]
    # outcome label -> sum_i Exp(B_i | s); only outcomes with P(s) > 0
    centralized_total: dict[str, float]
    zero_probability_outcomes: tuple[str, ...]
    unattributed_outcomes: tuple[str, ...]

    def to_json(self) -> str:
        doc = {
            "components": list(self.components),
            "p": list(self.p),
            "outcomes": list(self.outcomes),
            "outcome_marginals": self.outcome_marginals,
            "expected_blame": self.expected_blame,
            "proportions_pct": self.proportions_pct,
            "centralized_total": self.centralized_total,
            "zero_probability_outcomes": list(self.zero_probability_outcomes),
            "unattributed_outcomes": list(self.unattributed_outcomes),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RiskReport":
        doc = json.loads(text)
        return cls(
            components=tuple(doc["components"]),
            p=tuple(doc["p"]),
            outcomes=tuple(doc["outcomes"]),
            outcome_marginals=doc["outcome_marginals"],
            expected_blame=doc["expected_blame"],
            proportions_pct=doc["proportions_pct"],
            centralized_total=doc["centralized_total"],
            zero_probability_outcomes=tuple(doc["zero_probability_outcomes"]),
            unattributed_outcomes=tuple(doc["unattributed_outcomes"]),
        )


def build_risk_report(
    model: FaultModel,
    lik: OutcomeLikelihood,
    blame: BlameFunction,
) -> RiskReport:
    """Aggregate marginals, expected blame, proportions and centralized totals."""
    labels = lik.outcomes.labels
    if not labels:
        raise RiskModelError("empty outcome likelihood")
    n = model.n

    marg = {s: 0.0 for s in labels}
    numer = {s: [0.0] * n for s in labels}
    for f in model.configs():
        pf = fault_config_probability(model, f)
        row = lik.rows.get(f)
        if row is None:
            raise RiskModelError(f"likelihood table missing fault config {f}")
        for s in labels:
            w = row[s] * pf
            if w == 0.0:
                continue
            marg[s] += w
            for i in range(n):
                b = blame.value(f, s, i)
                if b != 0.0:
                    numer[s][i] += b * w

    total_mass = math.fsum(marg.values())
    if abs(total_mass - 1.0) > SUM_TOL:
        raise RiskModelError(f"outcome marginals sum to {total_mass!r}, expected 1")

    expected: dict[str, dict[str, float]] = {c: {} for c in model.components}
    proportions: dict[str, dict[str, float]] = {}
    centralized: dict[str, float] = {}
    zero_prob: list[str] = []
    unattributed: list[str] = []
    for s in labels:
        if marg[s] == 0.0:
            zero_prob.append(s)
            continue
        blames = [numer[s][i] / marg[s] for i in range(n)]
        for c, b in zip(model.components, blames):
            expected[c][s] = b
        total = math.fsum(blames)
        centralized[s] = total
        if total == 0.0:
            unattributed.append(s)
        else:
            proportions[s] = {
                c: 100.0 * b / total for c, b in zip(model.components, blames)
            }

    return RiskReport(
        components=model.components,
        p=model.p,
        outcomes=labels,
        outcome_marginals=marg,
        expected_blame=expected,
        proportions_pct=proportions,
        centralized_total=centralized,
        zero_probability_outcomes=tuple(zero_prob),
        unattributed_outcomes=tuple(unattributed),
    )

"""Forward-sampling Monte Carlo oracle for the exact blame computations.

Samples fault bits from the component probabilities, an outcome from the
likelihood row of the sampled config, then evaluates the blame function on
each sample. Estimates must agree with exact enumeration within sampling
error. Deliberately independent of the enumeration code paths: it reads
the model/table data and builds its own dense arrays with numpy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OutcomeEstimate:
    count: int
    marginal: float
    marginal_se: float
    blame_mean: tuple[float, ...]
    blame_se: tuple[float, ...]


def sample_blame_estimates(model, lik, blame, n_samples: int, rng: np.random.Generator):
    """Estimate P(S=s) and Exp(B_i|S=s) for every outcome by forward sampling.

    Returns {outcome label: OutcomeEstimate}; outcomes never sampled are
    present with count 0 and NaN blame estimates.
    """
    n = model.n
    labels = lik.outcomes.labels
    m = len(labels)
    p = np.asarray(model.p, dtype=float)

    bits = (rng.random((n_samples, n)) < p).astype(np.int64)
    weights = 1 << np.arange(n - 1, -1, -1)
    config_idx = bits @ weights

    all_configs = list(itertools.product((0, 1), repeat=n))
    lik_matrix = np.empty((2**n, m), dtype=float)
    blame_tensor = np.empty((2**n, m, n), dtype=float)
    for f in all_configs:
        row = int("".join(str(b) for b in f), 2)
        for j, s in enumerate(labels):
            lik_matrix[row, j] = lik.prob(f, s)
            for i in range(n):
                blame_tensor[row, j, i] = blame.value(f, s, i)

    cumulative = np.cumsum(lik_matrix, axis=1)
    u = rng.random(n_samples)
    outcome_idx = (u[:, None] > cumulative[config_idx]).sum(axis=1)
    outcome_idx = np.minimum(outcome_idx, m - 1)  # guard rows summing to 1-1e-16

    blame_samples = blame_tensor[config_idx, outcome_idx, :]

    out: dict[str, OutcomeEstimate] = {}
    for j, s in enumerate(labels):
        mask = outcome_idx == j
        count = int(mask.sum())
        marginal = count / n_samples
        marginal_se = math.sqrt(max(marginal * (1.0 - marginal), 0.0) / n_samples)
        if count == 0:
            out[s] = OutcomeEstimate(0, 0.0, marginal_se, (math.nan,) * n, (math.nan,) * n)
            continue
        vals = blame_samples[mask]
        mean = vals.mean(axis=0)
        if count > 1:
            se = vals.std(axis=0, ddof=1) / math.sqrt(count)
        else:
            se = np.full(n, math.inf)
        out[s] = OutcomeEstimate(count, marginal, marginal_se, tuple(mean), tuple(se))
    return out

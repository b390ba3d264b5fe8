"""Empirical outcome likelihood: Monte Carlo over all fault configurations.

Runs N episodes per fault config (all 2^3 for the three-component split),
counts outcomes, and reports P-hat rows with Wilson confidence half-widths.
Episode seeds are derived from (root seed, config, episode index), so the
result is independent of scheduling and worker count, and the counts merge
associatively across workers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from multiprocessing import get_context

from ..risk.model import FaultConfig, OutcomeLikelihood, OutcomeSpace
from .episode import run_episode
from .faults import FaultAssignment
from .outcomes import OUTCOME_LABELS
from .scenario import ScenarioConfig

ALL_CONFIGS: tuple[FaultConfig, ...] = tuple(
    (a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)
)


def episode_seed(root_seed: int, config: FaultConfig, index: int) -> int:
    bits = "".join(str(b) for b in config)
    digest = hashlib.blake2b(f"{root_seed}/{bits}/{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def wilson_halfwidth(k: int, n: int, z: float = 1.96) -> float:
    """Half-width of the Wilson score interval for k successes in n trials."""
    if n == 0:
        return 1.0
    p = k / n
    z2 = z * z
    return (z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))) / (1.0 + z2 / n)


@dataclass(frozen=True)
class EmpiricalLikelihood:
    likelihood: OutcomeLikelihood
    counts: dict[FaultConfig, dict[str, int]]
    halfwidth: dict[FaultConfig, dict[str, float]]
    episodes_per_config: int
    root_seed: int
    outcomes_by_episode: dict[FaultConfig, list[str]]


_WORKER_SCENARIO: ScenarioConfig | None = None


def _init_worker(scenario: ScenarioConfig) -> None:
    global _WORKER_SCENARIO
    _WORKER_SCENARIO = scenario


def _run_chunk(args) -> tuple[FaultConfig, int, list[str]]:
    config, start, count, root_seed = args
    fault = FaultAssignment.from_bits(config)
    outcomes = []
    for i in range(start, start + count):
        trace = run_episode(_WORKER_SCENARIO, fault, episode_seed(root_seed, config, i))
        outcomes.append(trace.outcome)
    return config, start, outcomes


def estimate_outcome_likelihood(
    scenario: ScenarioConfig,
    n_episodes: int,
    seed: int,
    configs: tuple[FaultConfig, ...] = ALL_CONFIGS,
    workers: int = 1,
    labels: tuple[str, ...] = OUTCOME_LABELS,
) -> EmpiricalLikelihood:
    if n_episodes < 1:
        raise ValueError("need at least one episode per fault config")

    per_config: dict[FaultConfig, list[str]] = {}
    if workers <= 1:
        for config in configs:
            fault = FaultAssignment.from_bits(config)
            per_config[config] = [
                run_episode(scenario, fault, episode_seed(seed, config, i)).outcome
                for i in range(n_episodes)
            ]
    else:
        chunk = max(1, math.ceil(n_episodes / (workers * 4)))
        tasks = []
        for config in configs:
            for start in range(0, n_episodes, chunk):
                tasks.append((config, start, min(chunk, n_episodes - start), seed))
        ctx = get_context("fork")
        with ctx.Pool(processes=workers, initializer=_init_worker, initargs=(scenario,)) as pool:
            results = pool.map(_run_chunk, tasks)
        collected: dict[FaultConfig, dict[int, list[str]]] = {c: {} for c in configs}
        for config, start, outcomes in results:
            collected[config][start] = outcomes
        for config in configs:
            ordered: list[str] = []
            for start in sorted(collected[config]):
                ordered.extend(collected[config][start])
            per_config[config] = ordered

    counts: dict[FaultConfig, dict[str, int]] = {}
    halfwidth: dict[FaultConfig, dict[str, float]] = {}
    rows: dict[FaultConfig, dict[str, float]] = {}
    for config in configs:
        outcome_list = per_config[config]
        row_counts = {s: 0 for s in labels}
        for outcome in outcome_list:
            row_counts[outcome] += 1
        counts[config] = row_counts
        rows[config] = {s: row_counts[s] / n_episodes for s in labels}
        halfwidth[config] = {s: wilson_halfwidth(row_counts[s], n_episodes) for s in labels}

    outcome_space = OutcomeSpace(labels=labels)
    likelihood = OutcomeLikelihood.from_rows(outcome_space, rows, n=len(configs[0]))
    return EmpiricalLikelihood(
        likelihood=likelihood,
        counts=counts,
        halfwidth=halfwidth,
        episodes_per_config=n_episodes,
        root_seed=seed,
        outcomes_by_episode=per_config,
    )

"""Estimators of the minimum value ``f(x*)`` built on the optimizer's queries."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .optimizer import RunConfig, Trajectory, run_batch
from .problems import NoiseModel, Objective


@dataclass
class MinValueResult:
    m_hat: float
    queries_used: int
    per_step_y2: np.ndarray | None = None


def _from_third_query(traj: Trajectory) -> MinValueResult:
    return MinValueResult(traj.y2_sum / traj.T, traj.queries_used, traj.y2)


def estimate_min_batch(config: RunConfig, objective: Objective, noise: NoiseModel,
                       noise3: NoiseModel, stream_ids: Sequence[int],
                       frozen: bool = False) -> list[MinValueResult]:
    """Mean of the extra queries ``y''_t = f(x_t) + xi''_t`` for each replication."""
    if not noise3.zero_mean:
        raise ValueError("third-query noise must be zero mean")
    trajs = run_batch(config, objective, noise, stream_ids, noise3=noise3, frozen=frozen)
    return [_from_third_query(t) for t in trajs]


def estimate_min(config: RunConfig, objective: Objective, noise: NoiseModel,
                 noise3: NoiseModel, frozen: bool = False) -> MinValueResult:
    """Run the optimizer with a third query at ``x_t`` each step; ``M = mean(y'')``.

    ``frozen=True`` keeps every iterate at ``x_1`` so the result isolates
    the noise-averaging term.
    """
    return estimate_min_batch(config, objective, noise, noise3, [config.stream_id], frozen)[0]


def estimate_min_beta2_batch(config: RunConfig, objective: Objective, noise: NoiseModel,
                             stream_ids: Sequence[int], which: str = "plus",
                             frozen: bool = False) -> list[MinValueResult]:
    if config.schedule.beta != 2 or config.estimator != "plain":
        raise ValueError("the two-query estimator needs beta = 2 and the plain estimator")
    if not noise.zero_mean:
        raise ValueError("query noise must be zero mean")
    if which not in ("plus", "minus"):
        raise ValueError("which must be 'plus' or 'minus'")
    trajs = run_batch(config, objective, noise, stream_ids, frozen=frozen)
    out = []
    for t in trajs:
        s = t.y_plus_sum if which == "plus" else t.y_minus_sum
        out.append(MinValueResult(s / t.T, t.queries_used))
    return out


def estimate_min_beta2(config: RunConfig, objective: Objective, noise: NoiseModel,
                       which: str = "plus", frozen: bool = False) -> MinValueResult:
    """``M = mean(y_t)`` (or ``mean(y'_t)``) reusing the two optimizer queries."""
    return estimate_min_beta2_batch(config, objective, noise, [config.stream_id], which, frozen)[0]

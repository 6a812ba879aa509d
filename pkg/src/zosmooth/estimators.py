"""Two-point randomized gradient estimators and Monte-Carlo diagnostics.

Estimators only ever call ``objective(x)``; ``objective.grad`` is used by the
diagnostics (bias measurement, control variates) and nowhere else.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import SmoothingKernel, evaluate
from .problems import NoiseModel, Objective
from .randomness import RandomSource, sample_ball, sample_r, sample_sphere


@dataclass
class GradientSample:
    ghat: np.ndarray
    query_plus: np.ndarray
    query_minus: np.ndarray
    y_plus: float
    y_minus: float
    h: float
    zeta: np.ndarray
    r: float


def _check_h(h):
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")


def _two_point(objective, noise, x, h, kernel, src, t):
    _check_h(h)
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    zeta = sample_sphere(d, src)
    if kernel is None:
        r, weight = 1.0, 1.0
    else:
        r = float(sample_r(src))
        weight = evaluate(kernel, r)
    step = h * r * zeta
    qp, qm = x + step, x - step
    xi, xi2 = noise.draw(src.noise, t, 1)[0]
    yp = float(objective(qp)) + xi
    ym = float(objective(qm)) + xi2
    ghat = (d / (2.0 * h)) * (yp - ym) * weight * zeta
    return GradientSample(ghat, qp, qm, yp, ym, float(h), zeta, r)


def estimate_kernel(objective: Objective, noise: NoiseModel, x, h: float,
                    kernel: SmoothingKernel, src: RandomSource, t: int = 1) -> GradientSample:
    """``ghat = d/(2h) (y - y') zeta K(r)`` from queries at ``x +/- h r zeta``."""
    return _two_point(objective, noise, x, h, kernel, src, t)


def estimate_plain(objective: Objective, noise: NoiseModel, x, h: float,
                   src: RandomSource, t: int = 1) -> GradientSample:
    """Kernel-free variant: ``ghat = d/(2h) (y - y') zeta`` with queries at ``x +/- h zeta``."""
    return _two_point(objective, noise, x, h, None, src, t)


def batch_estimates(objective, noise, x, h, kernel, n: int, src: RandomSource,
                    t_start: int = 1, return_linear: bool = False):
    """``n`` independent estimates at the same point, shape ``(n, d)``.

    Consumes the same substreams as ``n`` sequential calls to the scalar
    estimators.  With ``return_linear`` also returns the linear-part
    estimates ``d <grad f(x), r zeta> zeta K(r)`` whose mean is exactly
    ``grad f(x)``.
    """
    _check_h(h)
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    zeta = sample_sphere(d, src, size=n)
    if kernel is None:
        r = np.ones(n)
        weight = np.ones(n)
    else:
        r = sample_r(src, size=n)
        weight = evaluate(kernel, r)
    step = (h * r)[:, None] * zeta
    xi = noise.draw(src.noise, t_start, n)
    diff = objective(x + step) - objective(x - step) + xi[:, 0] - xi[:, 1]
    g = ((d / (2.0 * h)) * diff * weight)[:, None] * zeta
    if not return_linear:
        return g
    proj = zeta @ objective.grad(x)
    lin = (d * r * proj * weight)[:, None] * zeta
    return g, lin


def _mean_se(samples: np.ndarray):
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(n)
    return mean, se


def mc_bias(objective: Objective, x, h: float, kernel: SmoothingKernel | None,
            n: int, src: RandomSource, control_variate: bool = True):
    """Monte-Carlo estimate of ``E[ghat | x] - grad f(x)`` under zero noise.

    With ``control_variate`` the linear part of each estimate (whose
    expectation is exactly ``grad f(x)``) is subtracted sample by sample;
    this leaves the expectation unchanged and removes the O(1) spread that
    would otherwise swamp an O(h^(beta-1)) bias.  Returns
    ``(bias, stderr)`` componentwise.  ``kernel=None`` selects the plain
    estimator.
    """
    if n < 1000:
        raise ValueError("n must be at least 1000")
    quiet = NoiseModel("none")
    if control_variate:
        g, lin = batch_estimates(objective, quiet, x, h, kernel, n, src, return_linear=True)
        return _mean_se(g - lin)
    g = batch_estimates(objective, quiet, x, h, kernel, n, src)
    mean, se = _mean_se(g)
    return mean - objective.grad(x), se


def mc_second_moment(objective: Objective, noise: NoiseModel, x, h: float,
                     kernel: SmoothingKernel | None, n: int, src: RandomSource):
    """Monte-Carlo ``E||ghat||^2`` and its standard error."""
    if n < 1000:
        raise ValueError("n must be at least 1000")
    g = batch_estimates(objective, noise, x, h, kernel, n, src)
    sq = np.einsum("ij,ij->i", g, g)
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(n))


def mc_mean_estimate(objective, noise, x, h, kernel, n, src):
    """Componentwise mean and standard error of ``n`` estimates."""
    return _mean_se(batch_estimates(objective, noise, x, h, kernel, n, src))


def surrogate_value(objective: Objective, x, h: float, n: int, src: RandomSource):
    """``E f(x + h u)``, u uniform in the unit ball, as ``(estimate, stderr)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float)
    if h == 0:
        return float(objective(x)), 0.0
    u = sample_ball(x.shape[-1], src, size=n)
    vals = objective(x + h * u)
    se = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return float(vals.mean()), se


def surrogate_gradient_fd(objective: Objective, x, h: float, n: int, src: RandomSource,
                          step: float = 1e-4):
    """Central finite-difference gradient of the ball-smoothed surrogate.

    The same ball samples are reused for every shifted point (common random
    numbers), so the result is an unbiased estimate of the finite difference
    of the exact surrogate.  Returns ``(grad, stderr)``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    u = h * sample_ball(d, src, size=n)
    grad = np.empty(d)
    se = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        diff = (objective(x + e + u) - objective(x - e + u)) / (2.0 * step)
        grad[i] = diff.mean()
        se[i] = diff.std(ddof=1) / np.sqrt(n)
    return grad, se

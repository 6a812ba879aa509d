"""Monte-Carlo checks of the estimator's bias, second moment and surrogate,
and of the min-value estimator's rate.  Outputs are JSON-ready dicts."""
from __future__ import annotations

import math

import numpy as np

from .estimators import mc_bias, mc_mean_estimate, mc_second_moment, surrogate_gradient_fd, surrogate_value
from .harness import SweepSpec, fit_loglog
from .kernels import SmoothingKernel
from .minvalue import estimate_min_batch, estimate_min_beta2_batch
from .problems import NoiseModel, Objective, make_noise
from .randomness import RandomSource


def holder_constant(objective: Objective, beta: float) -> float:
    """Constant of ``objective`` in the smoothness class of order ``beta``."""
    if beta == objective.beta:
        return objective.L
    if beta == 2.0:
        return objective.lipschitz_f2()
    raise ValueError(f"no certified constant of order {beta} for {objective.name}")


def _kernel_constants(kernel: SmoothingKernel | None):
    """(beta, kappa, kappa_beta); the plain estimator behaves like K = 1, r = 1."""
    if kernel is None:
        return 2.0, 1.0, 1.0
    return kernel.beta, kernel.kappa, kernel.kappa_beta


def bias_report(objective: Objective, x, hs, kernel: SmoothingKernel | None,
                n: int = 100_000, seed: int = 0) -> dict:
    """Zero-noise bias at each ``h`` against ``kappa_beta L d h^(beta-1)``.

    Every ``h`` reuses the same random stream, so the per-h estimates are
    paired and the slope fit is much less noisy than with fresh draws.
    """
    x = np.asarray(x, dtype=float)
    beta, _, kappa_beta = _kernel_constants(kernel)
    L = holder_constant(objective, beta)
    d = objective.dim
    rows = []
    for h in hs:
        bias, se = mc_bias(objective, x, h, kernel, n, RandomSource(seed, 0))
        norm = float(np.linalg.norm(bias))
        se_norm = float(np.sqrt(np.sum((bias * se) ** 2)) / norm) if norm > 0 else float(np.linalg.norm(se))
        bound = kappa_beta * L * d * h ** (beta - 1)
        rows.append({"h": float(h), "bias_norm": norm, "se_norm": se_norm,
                     "bound": bound, "within_bound": norm <= bound})
    out = {"objective": objective.name, "d": d, "beta": beta, "n": n, "seed": seed,
           "rows": rows, "all_within_bound": all(r["within_bound"] for r in rows)}
    if len(rows) >= 3 and all(r["bias_norm"] > 0 for r in rows):
        fit = fit_loglog([(r["h"], r["bias_norm"]) for r in rows])
        out["slope"] = fit.slope
        out["expected_slope"] = beta - 1
    return out


def second_moment_bounds(objective: Objective, x, h: float, sigma: float,
                         kernel: SmoothingKernel | None) -> tuple[float, float]:
    """The two closed-form bounds on ``E||ghat||^2``: distance form and ``G`` form."""
    beta, kappa, _ = _kernel_constants(kernel)
    L = holder_constant(objective, beta)
    d = objective.dim
    dist2 = float(np.sum((np.asarray(x, dtype=float) - objective.minimizer) ** 2))
    noise_term = 3.0 * kappa * d**2 * sigma**2 / (2.0 * h**2)
    b_dist = 9.0 * kappa * objective.lbar**2 * (d * dist2 + d**2 * h**2 / 8.0) + noise_term
    b_grad = 9.0 * kappa * (objective.G**2 * d + L**2 * d**2 * h**2 / 2.0) + noise_term
    return b_dist, b_grad


def variance_report(objective: Objective, points, hs, sigmas, kernel: SmoothingKernel | None,
                    n: int = 20_000, seed: int = 0) -> dict:
    """``E||ghat||^2`` on a grid, compared with both bounds (plus 3 SE).

    ``ratio`` is the measured moment over ``G^2 d + d^2 sigma^2 / h^2``,
    reported for information only.
    """
    d = objective.dim
    rows = []
    k = 0
    for x in points:
        x = np.asarray(x, dtype=float)
        for h in hs:
            for s in sigmas:
                noise = make_noise("gaussian" if s > 0 else "none", s)
                est, se = mc_second_moment(objective, noise, x, h, kernel, n, RandomSource(seed, k))
                k += 1
                b_dist, b_grad = second_moment_bounds(objective, x, h, s, kernel)
                rows.append({
                    "x": x.tolist(), "h": float(h), "sigma": float(s), "estimate": est, "se": se,
                    "bound_distance": b_dist, "bound_gradient": b_grad,
                    "ok_distance": est <= b_dist + 3 * se, "ok_gradient": est <= b_grad + 3 * se,
                    "ratio": est / (objective.G**2 * d + d**2 * s**2 / h**2),
                })
    return {"objective": objective.name, "d": d, "n": n, "seed": seed, "rows": rows,
            "all_ok": all(r["ok_distance"] and r["ok_gradient"] for r in rows)}


def surrogate_report(objective: Objective, points, hs, n: int = 200_000, seed: int = 0) -> dict:
    """Plain-estimator mean vs finite-difference gradient of the ball surrogate,
    and the surrogate gap ``|fhat(x) - f(x)|`` against ``L h^2``."""
    L = holder_constant(objective, 2.0)
    quiet = NoiseModel("none")
    rows = []
    k = 0
    for x in points:
        x = np.asarray(x, dtype=float)
        for h in hs:
            mean, se_mean = mc_mean_estimate(objective, quiet, x, h, None, n, RandomSource(seed, k))
            fd, se_fd = surrogate_gradient_fd(objective, x, h, n, RandomSource(seed, k + 1))
            val, se_val = surrogate_value(objective, x, h, n, RandomSource(seed, k + 2))
            k += 3
            comb = float(np.sqrt(np.sum(se_mean**2 + se_fd**2)))
            diff = float(np.linalg.norm(mean - fd))
            gap = abs(val - float(objective(x)))
            rows.append({
                "x": x.tolist(), "h": float(h), "grad_diff": diff, "combined_se": comb,
                "grad_ok": diff <= 3 * comb, "gap": gap, "gap_se": se_val,
                "gap_bound": L * h**2, "gap_ok": gap <= L * h**2 + 3 * se_val,
            })
    return {"objective": objective.name, "n": n, "seed": seed, "rows": rows,
            "all_ok": all(r["grad_ok"] and r["gap_ok"] for r in rows)}


def minvalue_table(spec: SweepSpec, frozen: bool = False) -> dict:
    """Mean ``|M - f(x*)|`` per horizon.

    ``spec.minvalue`` picks the third-query estimator (``"third"``, the
    default when unset) or the two-query one (``"beta2"``).  In frozen mode
    the start is moved to the minimizer so only query noise remains; the
    Gaussian reference ``sigma3 sqrt(2/pi) / sqrt(T)`` is reported alongside.
    """
    spec.validate()
    obj = spec.build_objective()
    mode = spec.minvalue or "third"
    noise = make_noise(spec.noise, spec.sigma, spec.pattern)
    streams = list(range(spec.replications))
    rows = []
    for T in spec.T_values:
        cfg = spec.build_config(obj, T)
        if frozen:
            cfg.x1 = obj.minimizer.copy()
        if mode == "third":
            noise3 = make_noise("gaussian" if spec.sigma3 > 0 else "none", spec.sigma3)
            res = estimate_min_batch(cfg, obj, noise, noise3, streams, frozen=frozen)
            ref_sigma = spec.sigma3
        else:
            res = estimate_min_beta2_batch(cfg, obj, noise, streams, frozen=frozen)
            ref_sigma = spec.sigma
        err = np.array([abs(r.m_hat - obj.fmin) for r in res])
        se = float(err.std(ddof=1) / math.sqrt(len(err))) if len(err) > 1 else float("nan")
        rows.append({"T": int(T), "mean_abs_error": float(err.mean()), "se": se,
                     "gaussian_reference": ref_sigma * math.sqrt(2 / math.pi) / math.sqrt(T),
                     "queries_used": res[0].queries_used})
    out = {"mode": mode, "frozen": frozen, "replications": spec.replications, "rows": rows}
    if len(rows) >= 3 and all(r["mean_abs_error"] > 0 for r in rows):
        out["slope"] = fit_loglog([(r["T"], r["mean_abs_error"]) for r in rows]).slope
    return out

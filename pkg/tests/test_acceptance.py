"""End-to-end acceptance checks, one test per criterion.

Each test prints ``CRITERION <n>: PASS|FAIL <details>``; the lines are also
collected and repeated in the pytest terminal summary.
"""
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from zosmooth.diagnostics import bias_report, minvalue_table, surrogate_report, variance_report
from zosmooth.harness import SweepSpec, fit_log_growth, fit_rows, run_sweep
from zosmooth.kernels import build_legendre_kernel, moment
from zosmooth.optimizer import Schedule, run_batch, t0_threshold
from zosmooth.problems import make_hard_instance, make_noise, make_objective

POW2_GRID = [2**k for k in range(8, 15)]
ALL_ROWS = []


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@lru_cache(maxsize=None)
def sweep(**kw):
    kw = {k: list(v) if isinstance(v, tuple) else v for k, v in kw.items()}
    rows = run_sweep(SweepSpec(**kw))
    ALL_ROWS.extend(rows)
    return rows


def quadratic_rate_rows(**extra):
    return sweep(objective="quadratic", d=5, alpha=1.0, noise="gaussian", sigma=1.0,
                 schedule="beta2_constrained", estimator="plain", averaging="tail_half",
                 T_values=tuple(POW2_GRID), replications=100, seed=0, **extra)


def quartic_rows(seed, kernel_run):
    common = dict(objective="quartic", d=3, alpha=1.0, c4=0.1, radius=1.0, noise="gaussian",
                  sigma=1.0, averaging="tail_half", T_values=tuple(POW2_GRID), replications=100,
                  seed=seed)
    if kernel_run:
        return sweep(schedule="constrained_general", estimator="kernel", beta=4.0, **common)
    return sweep(schedule="beta2_constrained", estimator="plain", **common)


def test_criterion_01_kernel_moments():
    t = time.perf_counter()
    worst, kb_ok = 0.0, True
    for beta in (2, 2.5, 3, 4, 5, 6):
        k = build_legendre_kernel(beta)
        errs = [abs(moment(k, 0)), abs(moment(k, 1) - 1)] + [abs(moment(k, j)) for j in range(2, k.ell + 1)]
        worst = max(worst, max(errs))
        kb_ok &= k.kappa_beta <= 2 * math.sqrt(2) * beta
    dt = time.perf_counter() - t
    report(1, worst <= 1e-10 and kb_ok and dt < 1.0,
           f"max moment error {worst:.2e}, kappa_beta bound {kb_ok}, {dt:.3f}s")


def test_criterion_02_bias_law():
    t = time.perf_counter()
    f = make_objective("quartic_one_sided", d=2, alpha=1.0, c4=1.0)
    rep = bias_report(f, f.minimizer, [0.4, 0.2, 0.1, 0.05], build_legendre_kernel(4), n=100_000)
    dt = time.perf_counter() - t
    ok = rep["all_within_bound"] and 2.7 <= rep["slope"] <= 3.3 and dt < 60
    report(2, ok, f"slope {rep['slope']:.3f}, within bound {rep['all_within_bound']}, {dt:.1f}s")


def test_criterion_03_second_moment_bounds():
    t = time.perf_counter()
    f = make_objective("quadratic", d=3, alpha=1.0)
    x = f.minimizer + np.array([0.5, 0.0, 0.0])
    rep = variance_report(f, [x], [0.05, 0.2, 0.5], [0.0, 0.5, 1.0], build_legendre_kernel(2),
                          n=20_000)
    dt = time.perf_counter() - t
    worst = max(max(r["estimate"] / r["bound_distance"], r["estimate"] / r["bound_gradient"])
                for r in rep["rows"])
    report(3, rep["all_ok"] and len(rep["rows"]) == 9 and dt < 60,
           f"9 grid points, largest estimate/bound {worst:.3f}, {dt:.1f}s")


def test_criterion_04_surrogate():
    t = time.perf_counter()
    f = make_objective("quartic", d=3, alpha=1.0, c4=1.0)
    pts = [np.array([0.3, -0.2, 0.1]), np.array([0.4, 0.0, -0.3])]
    rep = surrogate_report(f, pts, [0.1, 0.2, 0.3], n=200_000)
    dt = time.perf_counter() - t
    worst = max(r["grad_diff"] / r["combined_se"] for r in rep["rows"])
    report(4, rep["all_ok"] and dt < 60,
           f"max |mean - fd| / combined SE {worst:.2f}, gaps within L h^2, {dt:.1f}s")


def test_criterion_05_beta2_rate():
    rows = quadratic_rate_rows()
    fit = fit_rows(rows)
    report(5, -0.65 <= fit.slope <= -0.38, f"opt-error slope {fit.slope:.3f} (target [-0.65, -0.38])")


def test_criterion_06_beta4_rate():
    k_slopes, p_slopes = [], []
    for seed in (0, 1, 2):
        k_slopes.append(fit_rows(quartic_rows(seed, True)).slope)
        p_slopes.append(fit_rows(quartic_rows(seed, False)).slope)
    gap = float(np.mean(np.array(p_slopes) - np.array(k_slopes)))
    in_range = all(-0.92 <= s <= -0.58 for s in k_slopes)
    report(6, in_range and gap >= 0.1,
           f"kernel slopes {np.round(k_slopes, 3).tolist()}, plain slopes "
           f"{np.round(p_slopes, 3).tolist()}, mean gap {gap:.3f}")


def test_criterion_07_regret_growth():
    fit = fit_rows(quadratic_rate_rows(), "mean_regret")
    grid = [2**k for k in range(6, 14)] + [10**4, 2**14]
    rows0 = sweep(objective="quadratic", d=5, alpha=1.0, noise="none", sigma=0.0,
                  schedule="beta2_constrained", estimator="plain", T_values=tuple(grid),
                  replications=20, seed=0)
    T = [r["T"] for r in rows0]
    reg = [r["mean_regret"] for r in rows0]
    c, r2 = fit_log_growth(T, reg)
    at_1e4 = reg[T.index(10**4)]
    ok = 0.35 <= fit.slope <= 0.65 and r2 >= 0.9 and at_1e4 <= c * math.log(10**4)
    report(7, ok, f"noisy regret slope {fit.slope:.3f}; sigma=0: regret(1e4) {at_1e4:.3f} "
                  f"<= {c:.3f} log T = {c * math.log(10**4):.3f}, r2 {r2:.3f}")


def test_criterion_08_minvalue_rate():
    spec = SweepSpec(objective="quadratic", d=5, alpha=1.0, sigma=1.0, T_values=POW2_GRID,
                     replications=100, minvalue="third", sigma3=1.0, seed=0)
    slope = minvalue_table(spec)["slope"]
    frozen = SweepSpec(objective="quadratic", d=5, alpha=1.0, sigma=1.0, T_values=[2**14],
                       replications=4000, minvalue="third", sigma3=1.0, seed=1)
    row = minvalue_table(frozen, frozen=True)["rows"][0]
    rel = abs(row["mean_abs_error"] / row["gaussian_reference"] - 1)
    report(8, -0.6 <= slope <= -0.4 and rel <= 0.05,
           f"slope {slope:.3f}; frozen T=2^14 relative deviation {rel:.4f}")


def test_criterion_09_two_phase():
    k2 = build_legendre_kernel(2)
    f = make_objective("quadratic", d=2, alpha=2.0)
    grid = [2**k for k in range(9, 15)]
    cstar = 72 * k2.kappa * f.lbar**2
    applicable = all(f.alpha > math.sqrt(cstar * f.dim / T) for T in grid)
    rows = sweep(objective="quadratic", d=2, alpha=2.0, beta=2.0, noise="gaussian", sigma=1.0,
                 schedule="unconstrained_two_phase", estimator="kernel",
                 averaging="window_from_T0", T_values=tuple(grid), replications=400, seed=0)
    err = [r["mean_opt_error"] for r in rows]
    monotone = all(b < a for a, b in zip(err, err[1:]))

    rng = np.random.default_rng(2024)
    matches = 0
    for _ in range(20):
        kappa = float(rng.uniform(0.5, 60))
        lbar = float(rng.uniform(0.1, 5))
        d = int(rng.integers(1, 50))
        alpha = float(rng.uniform(0.05, 10))
        sched = Schedule(kind="constrained_general", T=2, alpha=alpha, lbar=lbar, kappa=kappa, d=d)
        matches += t0_threshold(sched) == math.floor(4 * 9 * kappa * lbar**2 * d / alpha**2)
    report(9, applicable and monotone and matches == 20 and not any(r["warnings"] for r in rows),
           f"errors {np.round(err, 5).tolist()}, monotone {monotone}, T0 matches {matches}/20")


def test_criterion_10_hard_instance():
    rng = np.random.default_rng(7)
    worst_grad, all_above = 0.0, True
    for _ in range(50):
        d = int(rng.integers(1, 7))
        beta = float(rng.choice([2.0, 2.5, 3.0, 4.0, 5.0, 6.0]))
        alpha = float(rng.uniform(0.5, 2.0))
        delta = float(rng.uniform(0.01, 0.5))
        h = float(rng.uniform(0.05, 0.5))
        rmax = 0.25 * alpha * (1 + delta) / h ** (beta - 2)
        r = float(rng.uniform(0.01, 0.99)) * rmax
        omega = rng.choice([-1.0, 1.0], size=d)
        f = make_hard_instance(d, alpha, beta, r, delta, h, omega)
        x = f.minimizer
        step = 1e-6
        g = np.array([(f(x + step * e) - f(x - step * e)) / (2 * step) for e in np.eye(d)])
        worst_grad = max(worst_grad, float(np.linalg.norm(g)))
        u = rng.standard_normal((1000, d))
        u *= (rng.uniform(size=(1000, 1)) ** (1 / d)) / np.linalg.norm(u, axis=1, keepdims=True)
        all_above &= bool(np.all(f(u) > f.fmin))
    report(10, worst_grad <= 1e-6 and all_above,
           f"max numeric gradient norm {worst_grad:.2e}, f above minimum at all samples {all_above}")


def test_criterion_11_determinism_and_feasibility():
    spec = dict(objective="quartic", d=3, alpha=1.0, c4=0.1, schedule="constrained_general",
                estimator="kernel", beta=4.0, T_values=[64, 128, 256], replications=10, seed=11)
    a, b = run_sweep(SweepSpec(**spec)), run_sweep(SweepSpec(**spec))
    s = SweepSpec(**spec)
    obj = s.build_objective()
    cfg = s.build_config(obj, 512)
    cfg.store_iterates = True
    t1 = run_batch(cfg, obj, make_noise("gaussian", 1.0), range(5))
    t2 = run_batch(cfg, obj, make_noise("gaussian", 1.0), range(5))
    identical = a == b and all(np.array_equal(x.iterates, y.iterates) for x, y in zip(t1, t2))
    members = all(np.all(cfg.projection.contains(tr.iterates)) for tr in t1)
    rows = ALL_ROWS + a
    feasible = all(r["feasible_fraction"] == 1.0 for r in rows) and members
    report(11, identical and feasible,
           f"bit-identical {identical}, all iterates feasible over {len(rows)} sweep rows {feasible}")

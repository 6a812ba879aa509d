"""Zero-order stochastic projected gradient descent.

The loop is vectorized across replications: ``run_batch`` advances R
independent runs in lockstep, each driven by its own :class:`RandomSource`
so that a run's trajectory does not depend on which batch it was part of.
"""
from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import SmoothingKernel, evaluate
from .problems import NoiseModel, Objective
from .randomness import RandomSource, sample_r, sample_sphere

SCHEDULE_KINDS = ("constrained_general", "unconstrained_two_phase", "beta2_constrained", "custom")
AVERAGING_MODES = ("none", "full", "tail_half", "window_from_T0")
SIGMA0_H_SCALE = 1e-3
CHUNK = 2048


# ---------------------------------------------------------------------------
# projection sets

@dataclass(frozen=True)
class ProjectionSet:
    kind: str
    center: np.ndarray | None = None
    radius: float = math.inf
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    @classmethod
    def ball(cls, center, radius: float) -> "ProjectionSet":
        if radius <= 0:
            raise ValueError("radius must be positive")
        return cls("euclidean_ball", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def box(cls, lower, upper) -> "ProjectionSet":
        lo, up = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
        if lo.shape != up.shape or np.any(lo > up):
            raise ValueError("box needs lower <= upper of equal shape")
        return cls("box", lower=lo, upper=up)

    @classmethod
    def all_space(cls) -> "ProjectionSet":
        return cls("all_space")

    @property
    def diameter(self) -> float:
        if self.kind == "euclidean_ball":
            return 2.0 * self.radius
        if self.kind == "box":
            return float(np.linalg.norm(self.upper - self.lower))
        return math.inf

    def project(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "all_space":
            return x
        if self.kind == "box":
            return np.clip(x, self.lower, self.upper)
        v = x - self.center
        nrm = np.linalg.norm(v, axis=-1, keepdims=True)
        outside = nrm > self.radius
        if not np.any(outside):
            return x
        scale = np.where(outside, self.radius / np.where(outside, nrm, 1.0), 1.0)
        v = v * scale
        out = self.center + v
        # pull back points that rounding left a hair outside
        bad = np.linalg.norm(out - self.center, axis=-1) > self.radius
        while np.any(bad):
            v = np.where(bad[..., None], v * (1.0 - 4 * np.finfo(float).eps), v)
            out = self.center + v
            bad = np.linalg.norm(out - self.center, axis=-1) > self.radius
        return out

    def contains(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "all_space":
            out = np.all(np.isfinite(x), axis=-1)
        elif self.kind == "box":
            out = np.all((x >= self.lower) & (x <= self.upper), axis=-1)
        else:
            out = np.linalg.norm(x - self.center, axis=-1) <= self.radius
        return bool(out) if np.ndim(out) == 0 else out


def project(pset: ProjectionSet, x):
    return pset.project(x)


# ---------------------------------------------------------------------------
# schedules

@dataclass(frozen=True)
class Schedule:
    """Perturbation radii ``h_t`` and step sizes ``eta_t`` for ``t = 1..T``.

    ``L`` is the Hoelder constant for order ``beta`` (for ``beta2_constrained``
    the F_2 constant).  ``diameter`` only matters for the sigma = 0 fallback.
    """

    kind: str
    T: int
    alpha: float
    beta: float = 2.0
    L: float = 1.0
    lbar: float = 1.0
    sigma: float = 0.0
    kappa: float = 1.0
    kappa_beta: float = 1.0
    d: int = 1
    diameter: float | None = None
    h_rule: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    eta_rule: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.T < 2:
            raise ValueError("T must be >= 2")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.kind == "custom" and (self.h_rule is None or self.eta_rule is None):
            raise ValueError("custom schedules need h_rule and eta_rule")
        if self.kind == "unconstrained_two_phase" and self.T <= t0_threshold(self):
            raise ValueError(f"T={self.T} must exceed T0={t0_threshold(self)}")

    def _fallback_h(self, t):
        scale = self.diameter if self.diameter and math.isfinite(self.diameter) else 1.0
        return SIGMA0_H_SCALE * scale * t ** -0.5

    def h_array(self, t=None) -> np.ndarray:
        t = np.arange(1, self.T + 1, dtype=float) if t is None else np.asarray(t, dtype=float)
        b = self.beta
        if self.kind == "custom":
            return np.asarray(self.h_rule(t), dtype=float) * np.ones_like(t)
        if self.kind == "unconstrained_two_phase":
            t0 = t0_threshold(self)
            return np.where(t <= t0, float(self.T) ** (-1.0 / (2 * b)), t ** (-1.0 / (2 * b)))
        if self.sigma == 0:
            return self._fallback_h(t)
        if self.kind == "constrained_general":
            c = 3 * self.kappa * self.sigma**2 / (2 * (b - 1) * (self.kappa_beta * self.L) ** 2)
            return c ** (1.0 / (2 * b)) * t ** (-1.0 / (2 * b))
        # beta2_constrained
        d, L, s = self.d, self.L, self.sigma
        return (3 * d**2 * s**2 / (4 * L * self.alpha * t + 9 * L**2 * d**2)) ** 0.25

    def eta_array(self, t=None) -> np.ndarray:
        t = np.arange(1, self.T + 1, dtype=float) if t is None else np.asarray(t, dtype=float)
        a = self.alpha
        if self.kind == "custom":
            return np.asarray(self.eta_rule(t), dtype=float) * np.ones_like(t)
        if self.kind == "unconstrained_two_phase":
            t0 = t0_threshold(self)
            return np.where(t <= t0, 1.0 / (a * self.T), 2.0 / (a * t))
        if self.kind == "constrained_general":
            return 2.0 / (a * t)
        return 1.0 / (a * t)


def _check_t(schedule: Schedule, t: int):
    if not 1 <= t <= schedule.T:
        raise ValueError(f"t={t} outside 1..{schedule.T}")


def step_size(schedule: Schedule, t: int) -> float:
    _check_t(schedule, t)
    return float(schedule.eta_array(np.array([t]))[0])


def perturbation_radius(schedule: Schedule, t: int) -> float:
    _check_t(schedule, t)
    return float(schedule.h_array(np.array([t]))[0])


def t0_threshold(schedule: Schedule) -> int:
    """Warm-up length ``floor(4 * 9 kappa lbar^2 * d / alpha^2)`` of the two-phase schedule."""
    c3 = 9.0 * schedule.kappa * schedule.lbar**2
    return int(math.floor(4.0 * c3 * schedule.d / schedule.alpha**2))


def two_phase_applicable(schedule: Schedule) -> bool:
    """``alpha > sqrt(72 kappa lbar^2 d / T)``."""
    cstar = 72.0 * schedule.kappa * schedule.lbar**2
    return schedule.alpha > math.sqrt(cstar * schedule.d / schedule.T)


def make_schedule(kind: str, objective: Objective, T: int, sigma: float,
                  kernel: SmoothingKernel | None = None, diameter: float | None = None,
                  L: float | None = None, **rules) -> Schedule:
    """Build a schedule with constants taken from ``objective`` and ``kernel``.

    For ``beta2_constrained`` the F_2 constant of the objective is used
    (``objective.L`` when its order is 2, else ``lbar / 2``).  For the
    kernel schedules the order is the kernel's; its Hoelder constant is the
    objective's when the orders agree and ``lbar / 2`` when the kernel has
    order 2.  Pass ``L`` explicitly otherwise.
    """
    if diameter is None:
        diameter = 2.0 * objective.domain_radius
    if kind == "beta2_constrained":
        beta = 2.0
        kappa, kappa_beta = 1.0, 1.0
    else:
        if kernel is None:
            raise ValueError(f"{kind} schedule needs a kernel")
        beta, kappa, kappa_beta = kernel.beta, kernel.kappa, kernel.kappa_beta
    if L is None:
        if beta == objective.beta:
            L = objective.L
        elif beta == 2.0:
            L = objective.lipschitz_f2()
        else:
            raise ValueError("kernel order differs from objective order; pass L explicitly")
    return Schedule(kind=kind, T=int(T), alpha=objective.alpha, beta=beta, L=L,
                    lbar=objective.lbar, sigma=float(sigma), kappa=kappa,
                    kappa_beta=kappa_beta, d=objective.dim, diameter=diameter, **rules)


def lipschitz_beta2_schedule(objective: Objective, T: int, sigma: float, **kw) -> Schedule:
    """Preset ``h_t = (3 d^2 sigma^2 / (4 L alpha t))^(1/4)``, ``eta_t = 1/(alpha t)``
    for Lipschitz objectives with the plain estimator."""
    d, a = objective.dim, objective.alpha
    L = objective.L if objective.beta == 2 else objective.lipschitz_f2()
    return Schedule(kind="custom", T=int(T), alpha=a, beta=2.0, L=L, lbar=objective.lbar,
                    sigma=sigma, d=d,
                    h_rule=lambda t: (3 * d**2 * sigma**2 / (4 * L * a * t)) ** 0.25,
                    eta_rule=lambda t: 1.0 / (a * t), **kw)


# ---------------------------------------------------------------------------
# runs

@dataclass
class RunConfig:
    T: int
    schedule: Schedule
    projection: ProjectionSet
    x1: np.ndarray
    estimator: str = "kernel"
    kernel: SmoothingKernel | None = None
    averaging: str = "tail_half"
    seed: int = 0
    stream_id: int = 0
    store_iterates: bool = False
    record_values: bool = True

    def validate(self):
        if self.T < 2:
            raise ValueError("T must be >= 2")
        if self.schedule.T != self.T:
            raise ValueError("schedule horizon differs from T")
        if self.estimator not in ("kernel", "plain"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "kernel" and self.kernel is None:
            raise ValueError("kernel estimator needs a kernel")
        if self.estimator == "plain" and self.schedule.beta != 2:
            raise ValueError("plain estimator is only valid with beta = 2")
        if self.averaging not in AVERAGING_MODES:
            raise ValueError(f"unknown averaging {self.averaging!r}")
        if self.averaging == "window_from_T0" and self.schedule.kind != "unconstrained_two_phase":
            raise ValueError("window_from_T0 averaging needs the two-phase schedule")
        if not self.projection.contains(np.asarray(self.x1, dtype=float)):
            raise ValueError("x1 must lie in the projection set")


@dataclass
class Trajectory:
    T: int
    averaging: str
    averages: dict
    final_point: np.ndarray
    queries_used: int
    value_sum: float
    per_step_values: np.ndarray | None = None
    iterates: np.ndarray | None = None
    T0: int = 0
    y_plus_sum: float = 0.0
    y_minus_sum: float = 0.0
    y2: np.ndarray | None = None
    y2_sum: float | None = None
    stream_id: int = 0
    feasible: bool = True
    warnings: list = field(default_factory=list)

    @property
    def averaged_point(self) -> np.ndarray:
        return averaged_point(self, self.averaging, self.T0)

    @classmethod
    def from_iterates(cls, iterates, values=None, averaging="full", T0=0) -> "Trajectory":
        its = np.asarray(iterates, dtype=float)
        if its.ndim == 1:
            its = its[:, None]
        vals = None if values is None else np.asarray(values, dtype=float)
        return cls(T=len(its), averaging=averaging, averages={}, final_point=its[-1],
                   queries_used=2 * len(its),
                   value_sum=float(vals.sum()) if vals is not None else float("nan"),
                   per_step_values=vals, iterates=its, T0=T0)


def _window_start(mode: str, T: int, T0: int) -> int:
    """First 1-based index of the averaging window."""
    if mode == "full":
        return 1
    if mode == "tail_half":
        return T // 2 + 1
    if mode == "window_from_T0":
        return T0 + 1
    if mode == "none":
        return T
    raise ValueError(f"unknown averaging {mode!r}")


def averaged_point(traj: Trajectory, mode: str, T0: int = 0) -> np.ndarray:
    """Mean of the iterates over the window selected by ``mode``."""
    start = _window_start(mode, traj.T, T0)
    if start > traj.T:
        raise ValueError("empty averaging window")
    if traj.iterates is not None:
        return traj.iterates[start - 1:].mean(axis=0)
    if mode not in traj.averages:
        raise ValueError(f"averaging mode {mode!r} was not tracked in this run")
    return traj.averages[mode]


def cumulative_regret(traj: Trajectory, objective: Objective, x_ref) -> float:
    """``sum_t f(x_t) - T f(x_ref)`` for this run."""
    ref = float(objective(np.asarray(x_ref, dtype=float)))
    if traj.per_step_values is not None:
        return float(np.sum(traj.per_step_values - ref))
    return traj.value_sum - traj.T * ref


def run_batch(config: RunConfig, objective: Objective, noise: NoiseModel,
              stream_ids: Sequence[int], noise3: NoiseModel | None = None,
              frozen: bool = False) -> list[Trajectory]:
    """Run one independent replication per stream id, vectorized.

    Each step makes two queries ``x_t +/- h_t r_t zeta_t`` (``r_t = 1`` for
    the plain estimator), and a third one at ``x_t`` when ``noise3`` is
    given.  With ``frozen`` the update is skipped so ``x_t = x_1``
    throughout; queries are still made.
    """
    config.validate()
    sched, pset, T = config.schedule, config.projection, config.T
    d = objective.dim
    R = len(stream_ids)
    srcs = [RandomSource(config.seed, sid) for sid in stream_ids]
    kernel = config.kernel if config.estimator == "kernel" else None

    notes = []
    T0 = 0
    if sched.kind == "unconstrained_two_phase":
        T0 = t0_threshold(sched)
        if not two_phase_applicable(sched):
            msg = (f"alpha={sched.alpha} <= sqrt(72 kappa lbar^2 d / T); "
                   "two-phase guarantee does not apply")
            notes.append(msg)
            _warnings.warn(msg, RuntimeWarning, stacklevel=2)

    hs = sched.h_array()
    etas = sched.eta_array()
    if np.any(~(hs > 0)) or np.any(~(etas > 0)):
        raise ValueError("schedule produced nonpositive h_t or eta_t")

    modes = ["none", "full", "tail_half"] + (["window_from_T0"] if T0 > 0 or
                                      sched.kind == "unconstrained_two_phase" else [])
    starts = {m: _window_start(m, T, T0) for m in modes}
    sums = {m: np.zeros((R, d)) for m in modes}

    X = np.tile(np.asarray(config.x1, dtype=float), (R, 1))
    feasible = np.ones(R, dtype=bool)
    value_sum = np.zeros(R)
    yp_sum = np.zeros(R)
    ym_sum = np.zeros(R)
    values = np.empty((R, T)) if config.record_values else None
    iterates = np.empty((R, T, d)) if config.store_iterates else None
    y2 = np.empty((R, T)) if noise3 is not None else None

    for c0 in range(0, T, CHUNK):
        n = min(CHUNK, T - c0)
        Z = np.stack([sample_sphere(d, s, size=n) for s in srcs], axis=1)  # (n, R, d)
        if kernel is not None:
            rr = np.stack([sample_r(s, size=n) for s in srcs], axis=1)  # (n, R)
            W = evaluate(kernel, rr)
        else:
            rr = np.ones((n, R))
            W = np.ones((n, R))
        XI = np.stack([noise.draw(s.noise, c0 + 1, n) for s in srcs], axis=1)  # (n, R, 2)
        if noise3 is not None:
            XI3 = np.stack([noise3.draw(s.noise3, c0 + 1, n, width=1)[:, 0] for s in srcs], axis=1)
        for j in range(n):
            t = c0 + j + 1
            h, eta = hs[t - 1], etas[t - 1]
            step = (h * rr[j])[:, None] * Z[j]
            F = objective(np.concatenate((X, X + step, X - step)))
            fx, fp, fm = F[:R], F[R:2 * R], F[2 * R:]
            value_sum += fx
            if values is not None:
                values[:, t - 1] = fx
            if iterates is not None:
                iterates[:, t - 1] = X
            if y2 is not None:
                y2[:, t - 1] = fx + XI3[j]
            for m in modes:
                if t >= starts[m]:
                    sums[m] += X
            yp = fp + XI[j, :, 0]
            ym = fm + XI[j, :, 1]
            yp_sum += yp
            ym_sum += ym
            if not frozen:
                g = ((d / (2.0 * h)) * (yp - ym) * W[j])[:, None] * Z[j]
                X = pset.project(X - eta * g)
                feasible &= pset.contains(X)

    q = 3 if noise3 is not None else 2
    out = []
    for i, sid in enumerate(stream_ids):
        averages = {m: sums[m][i] / (T - starts[m] + 1) for m in modes}
        out.append(Trajectory(
            T=T, averaging=config.averaging, averages=averages, final_point=averages["none"],
            queries_used=q * T, value_sum=float(value_sum[i]),
            per_step_values=None if values is None else values[i],
            iterates=None if iterates is None else iterates[i],
            T0=T0, y_plus_sum=float(yp_sum[i]), y_minus_sum=float(ym_sum[i]),
            y2=None if y2 is None else y2[i],
            y2_sum=None if y2 is None else float(y2[i].sum()),
            stream_id=sid, feasible=bool(feasible[i]), warnings=list(notes),
        ))
    return out


def run(config: RunConfig, objective: Objective, noise: NoiseModel, **kw) -> Trajectory:
    """Single run on stream ``config.stream_id``."""
    return run_batch(config, objective, noise, [config.stream_id], **kw)[0]

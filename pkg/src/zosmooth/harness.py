"""Replicated parameter sweeps, log-log rate fits and result files."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats

from .kernels import build_legendre_kernel
from .optimizer import ProjectionSet, RunConfig, make_schedule, run_batch
from .problems import make_noise, make_objective

OUTPUT_ENV = "ZOSMOOTH_OUTPUT_DIR"

COLUMNS = (
    "T", "d", "alpha", "beta", "sigma", "schedule", "estimator", "replications",
    "mean_opt_error", "se_opt_error", "mean_sq_dist", "se_sq_dist",
    "mean_regret", "se_regret", "mean_minval_error", "se_minval_error", "warnings",
)
_INT_COLS = {"T", "d", "replications"}
_STR_COLS = {"schedule", "estimator", "warnings"}


@dataclass
class SweepSpec:
    """Everything needed to reproduce one sweep.

    ``beta`` is the kernel order (ignored by the plain estimator).
    ``minvalue`` is ``""`` (off), ``"third"`` (extra query with noise
    ``sigma3``) or ``"beta2"`` (reuse the optimizer's ``y_t``).
    ``x1_offset`` places the start at ``minimizer + x1_offset * radius * e_1``.
    """

    objective: str = "quadratic"
    d: int = 2
    alpha: float = 1.0
    beta: float = 2.0
    c4: float = 1.0
    radius: float = 1.0
    noise: str = "gaussian"
    sigma: float = 1.0
    pattern: str = "alternating"
    schedule: str = "beta2_constrained"
    estimator: str = "plain"
    T_values: list = field(default_factory=lambda: [2**k for k in range(8, 15)])
    replications: int = 100
    seed: int = 0
    averaging: str = "tail_half"
    minvalue: str = ""
    sigma3: float = 1.0
    x1_offset: float = 0.5
    output: str = ""

    def validate(self):
        Ts = list(self.T_values)
        if not Ts or any(int(t) < 2 for t in Ts):
            raise ValueError("T values must be >= 2")
        if any(b <= a for a, b in zip(Ts[:-1], Ts[1:])):
            raise ValueError("T values must be strictly increasing")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.minvalue not in ("", "third", "beta2"):
            raise ValueError(f"unknown minvalue mode {self.minvalue!r}")
        if self.minvalue == "beta2" and self.estimator != "plain":
            raise ValueError("minvalue=beta2 needs the plain estimator")

    def build_objective(self):
        if self.objective == "quadratic":
            return make_objective("quadratic", d=self.d, alpha=self.alpha, radius=self.radius)
        if self.objective in ("quartic", "quartic_one_sided"):
            return make_objective(self.objective, d=self.d, alpha=self.alpha, c4=self.c4,
                                  radius=self.radius)
        raise ValueError(f"objective {self.objective!r} is not available in sweeps")

    def build_config(self, objective, T: int) -> RunConfig:
        kernel = build_legendre_kernel(self.beta) if self.estimator == "kernel" else None
        sched = make_schedule(self.schedule, objective, T, self.sigma, kernel=kernel)
        if self.schedule == "unconstrained_two_phase":
            pset = ProjectionSet.all_space()
        else:
            pset = ProjectionSet.ball(objective.domain_center, objective.domain_radius)
        x1 = objective.minimizer.copy()
        x1[0] += self.x1_offset * objective.domain_radius
        return RunConfig(T=int(T), schedule=sched, projection=pset, x1=x1,
                         estimator=self.estimator, kernel=kernel, averaging=self.averaging,
                         seed=self.seed, record_values=False)


def _mean_se(vals):
    a = np.asarray(vals, dtype=float)
    if len(a) < 2:
        return float(a.mean()), float("nan")
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a)))


def run_grid_point(spec: SweepSpec, T: int) -> dict:
    """All replications for one horizon; returns one table row."""
    obj = spec.build_objective()
    cfg = spec.build_config(obj, T)
    noise = make_noise(spec.noise, spec.sigma, spec.pattern)
    streams = list(range(spec.replications))
    minval = None
    if spec.minvalue == "third":
        noise3 = make_noise("gaussian" if spec.sigma3 > 0 else "none", spec.sigma3)
        trajs = run_batch(cfg, obj, noise, streams, noise3=noise3)
        minval = [abs(t.y2_sum / t.T - obj.fmin) for t in trajs]
    else:
        trajs = run_batch(cfg, obj, noise, streams)
        if spec.minvalue == "beta2":
            minval = [abs(t.y_plus_sum / t.T - obj.fmin) for t in trajs]

    opt, sq, reg = [], [], []
    for tr in trajs:
        xb = tr.averaged_point
        opt.append(float(obj(xb)) - obj.fmin)
        sq.append(float(np.sum((xb - obj.minimizer) ** 2)))
        reg.append(tr.value_sum - tr.T * obj.fmin)
    row = {
        "T": int(T), "d": spec.d, "alpha": spec.alpha,
        "beta": 2.0 if spec.estimator == "plain" else spec.beta,
        "sigma": spec.sigma, "schedule": spec.schedule, "estimator": spec.estimator,
        "replications": spec.replications,
    }
    row["mean_opt_error"], row["se_opt_error"] = _mean_se(opt)
    row["mean_sq_dist"], row["se_sq_dist"] = _mean_se(sq)
    row["mean_regret"], row["se_regret"] = _mean_se(reg)
    if minval is None:
        row["mean_minval_error"] = row["se_minval_error"] = None
    else:
        row["mean_minval_error"], row["se_minval_error"] = _mean_se(minval)
    row["warnings"] = ";".join(sorted(set(w for t in trajs for w in t.warnings)))
    row["queries_used"] = trajs[0].queries_used
    row["feasible_fraction"] = float(np.mean([t.feasible for t in trajs]))
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """One row per horizon in ``spec.T_values``; rows are ordered by T.

    Grid points run in a process pool when ``workers > 1``.  Every grid
    point uses streams ``(spec.seed, 0..R-1)`` so results do not depend on
    scheduling.
    """
    spec.validate()
    spec.build_objective()  # fail fast on bad objective parameters
    Ts = [int(t) for t in spec.T_values]
    if workers > 1 and len(Ts) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_grid_point, [spec] * len(Ts), Ts))
    else:
        rows = [run_grid_point(spec, T) for T in Ts]
    return rows


# ---------------------------------------------------------------------------
# rate fits

@dataclass
class RateFit:
    slope: float
    intercept: float
    stderr_slope: float
    r_squared: float


def fit_loglog(points) -> RateFit:
    """OLS fit of ``log(error) = intercept + slope * log(T)``."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (T, error) points")
    T, err = pts[:, 0], pts[:, 1]
    if np.any(err <= 0) or np.any(T <= 0):
        raise ValueError("errors must be positive for a log-log fit; try more replications")
    x, y = np.log(T), np.log(err)
    if np.ptp(y) == 0:
        return RateFit(0.0, float(y[0]), 0.0, 1.0)
    res = stats.linregress(x, y)
    return RateFit(float(res.slope), float(res.intercept), float(res.stderr), float(res.rvalue**2))


def fit_log_growth(T, values) -> tuple[float, float]:
    """Least-squares ``values ~ c log T`` through the origin.

    Returns ``(c, r2)`` with the uncentered coefficient of determination.
    """
    x = np.log(np.asarray(T, dtype=float))
    y = np.asarray(values, dtype=float)
    c = float(x @ y / (x @ x))
    r2 = 1.0 - float(np.sum((y - c * x) ** 2) / np.sum(y * y))
    return c, r2


def fit_rows(rows, column: str = "mean_opt_error") -> RateFit:
    return fit_loglog([(r["T"], r[column]) for r in rows])


# ---------------------------------------------------------------------------
# result files

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def emit_results(table, fmt: str, path) -> None:
    """Write rows to CSV (columns exactly :data:`COLUMNS`) or JSON."""
    if not table:
        raise ValueError("empty table")
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for row in table:
                w.writerow([_fmt(row.get(c)) for c in COLUMNS])
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump({"columns": list(COLUMNS),
                       "rows": [{c: row.get(c) for c in COLUMNS} for row in table]},
                      fh, indent=1)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _parse(col, s):
    if col in _STR_COLS:
        return s
    if s == "":
        return None
    return int(s) if col in _INT_COLS else float(s)


def read_results(path) -> list[dict]:
    path = Path(path)
    if path.suffix == ".json":
        with open(path) as fh:
            return json.load(fh)["rows"]
    with open(path, newline="") as fh:
        return [{c: _parse(c, row[c]) for c in COLUMNS} for row in csv.DictReader(fh)]


# ---------------------------------------------------------------------------
# config files

def _coerce(name: str, value: str):
    types = {f.name: f.type for f in fields(SweepSpec)}
    if name not in types:
        raise ValueError(f"unknown config key {name!r}")
    if name == "T_values":
        return parse_T_values(value)
    default = getattr(SweepSpec(), name)
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def parse_T_values(value: str) -> list[int]:
    """``"256,512,1024"`` or ``"2^8..2^14"`` (powers of two)."""
    value = value.strip()
    if ".." in value:
        lo, hi = value.split("..")
        lo_e, hi_e = int(lo.split("^")[1]), int(hi.split("^")[1])
        return [2**k for k in range(lo_e, hi_e + 1)]
    return [int(v) for v in value.replace(" ", "").split(",") if v]


def load_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = _coerce(key, value)
    return out


def spec_from_mapping(mapping: dict) -> SweepSpec:
    return SweepSpec(**mapping)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "."))


def spec_dict(spec: SweepSpec) -> dict:
    return asdict(spec)

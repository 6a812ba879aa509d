"""Test objectives with certified constants, and query-noise models.

Every objective accepts a batch of points of shape ``(..., d)`` and returns
values of shape ``(...)``.  Gradients are exposed for diagnostics only; the
optimizer and the estimators never call them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class Objective:
    """A black-box test function plus the constants that certify it.

    ``domain_center`` / ``domain_radius`` describe the Euclidean ball on which
    ``G`` (sup of the gradient norm) and ``lbar`` were computed.
    """

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    grad_func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    alpha: float
    beta: float
    L: float
    lbar: float
    G: float
    minimizer: np.ndarray = field(repr=False)
    fmin: float
    domain_center: np.ndarray = field(repr=False)
    domain_radius: float
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def grad(self, x):
        return self.grad_func(np.asarray(x, dtype=float))

    def lipschitz_f2(self) -> float:
        """Constant of the class F_2(L) on the domain ball (``lbar / 2``)."""
        return 0.5 * self.lbar


def _center(d: int, center) -> np.ndarray:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(-1)
    if c.shape != (d,):
        raise ValueError(f"center must have shape ({d},), got {c.shape}")
    return c


def make_quadratic(d: int, alpha: float, center=None, radius: float = 1.0) -> Objective:
    """``f(x) = alpha/2 * ||x - c||^2`` on the ball of given radius around c."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c = _center(d, center)

    def func(x):
        v = x - c
        return 0.5 * alpha * np.sum(v * v, axis=-1)

    def grad(x):
        return alpha * (x - c)

    return Objective(
        name="quadratic", dim=d, func=func, grad_func=grad,
        alpha=float(alpha), beta=2.0, L=0.5 * alpha, lbar=float(alpha),
        G=alpha * radius, minimizer=c.copy(), fmin=0.0,
        domain_center=c.copy(), domain_radius=float(radius),
        params={"alpha": alpha, "radius": radius},
    )


def make_quartic(d: int, alpha: float, c4: float, center=None, radius: float = 1.0,
                 one_sided: bool = False) -> Objective:
    """``f(x) = alpha/2 ||x - c||^2 + c4 * sum_i q(x_i - c_i)``.

    ``q(v) = v**4`` by default.  With ``one_sided=True``, ``q(v) = max(v, 0)**4``:
    still convex and in F_4 with the same constant, but its third derivative
    has a kink at ``c``, so the odd part of the fourth-order Taylor remainder
    does not vanish there.  A smooth quartic is annihilated exactly by any
    kernel of order 4, which makes it useless for measuring bias.

    In both cases the order-3 Taylor remainder is ``c4 * sum_i w_i**4`` at
    most, which is ``<= c4 ||w||**4``, hence ``L = c4``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if c4 < 0:
        raise ValueError("c4 must be nonnegative")
    c = _center(d, center)

    if one_sided:
        def func(x):
            v = x - c
            p = np.maximum(v, 0.0)
            return 0.5 * alpha * np.sum(v * v, axis=-1) + c4 * np.sum(p**4, axis=-1)

        def grad(x):
            v = x - c
            return alpha * v + 4.0 * c4 * np.maximum(v, 0.0) ** 3
    else:
        def func(x):
            v = x - c
            v2 = v * v
            return np.sum(0.5 * alpha * v2 + c4 * v2 * v2, axis=-1)

        def grad(x):
            v = x - c
            return alpha * v + 4.0 * c4 * v**3

    return Objective(
        name="quartic_one_sided" if one_sided else "quartic", dim=d,
        func=func, grad_func=grad,
        alpha=float(alpha), beta=4.0, L=float(c4),
        lbar=alpha + 12.0 * c4 * radius**2,
        G=alpha * radius + 4.0 * c4 * radius**3,
        minimizer=c.copy(), fmin=0.0,
        domain_center=c.copy(), domain_radius=float(radius),
        params={"alpha": alpha, "c4": c4, "radius": radius, "one_sided": one_sided},
    )


# ---------------------------------------------------------------------------
# hard-instance family

def _phi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _smoothstep(t):
    a = _phi(t)
    b = _phi(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def bump(x):
    """C-infinity bump: 1 on |x| <= 1/4, 0 on |x| >= 1, in (0, 1) between."""
    x = np.asarray(x, dtype=float)
    out = _smoothstep((1.0 - np.abs(x)) / 0.75)
    return float(out) if out.ndim == 0 else out


_TABLE_STEP = 1e-3


@lru_cache(maxsize=1)
def _bump_integral_table() -> CubicSpline:
    grid = np.linspace(-1.0, 1.0, int(round(2.0 / _TABLE_STEP)) + 1)
    pieces = [integrate.quad(bump, a, b, epsabs=1e-14, epsrel=1e-13)[0]
              for a, b in zip(grid[:-1], grid[1:])]
    vals = np.concatenate(([0.0], np.cumsum(pieces)))
    return CubicSpline(grid, vals)


def bump_integral(x):
    """Antiderivative of :func:`bump` from -infinity (tabulated, cubic interpolation)."""
    spline = _bump_integral_table()
    x = np.asarray(x, dtype=float)
    total = float(spline(1.0))
    out = np.where(x <= -1.0, 0.0, np.where(x >= 1.0, total, spline(np.clip(x, -1.0, 1.0))))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _bump_integral_derivative_sup(k: int) -> float:
    """Sup of the k-th derivative of :func:`bump_integral` (the (k-1)-th of :func:`bump`)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return 1.0
    import sympy as sp

    t = sp.symbols("t")
    g = sp.exp(-1 / t) / (sp.exp(-1 / t) + sp.exp(-1 / (1 - t)))
    fn = sp.lambdify(t, sp.diff(g, t, k - 1), "numpy")
    ts = np.linspace(1e-3, 1 - 1e-3, 20001)
    with np.errstate(all="ignore"):
        vals = np.abs(fn(ts))
    # chain rule through t = (1 - |x|) / (3/4)
    return float(np.nanmax(vals)) * (4.0 / 3.0) ** (k - 1)


def hard_instance_minimizer(alpha, beta, r, delta, h, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    return -omega * r * h ** (beta - 1) / (alpha * (1.0 + delta))


def make_hard_instance(d: int, alpha: float, beta: float, r: float, delta: float,
                       h: float, omega) -> Objective:
    """Member ``f_omega`` of the sign-indexed family used for lower bounds.

    ``f(u) = alpha (1+delta) ||u||^2 / 2 + sum_i omega_i r h^beta bump_integral(u_i / h)``.
    Requires ``r h^(beta-2) / (alpha (1+delta)) < 1/4`` so that the closed-form
    minimizer lies in the flat part of the bump.  The stored ``alpha`` is the
    certified modulus ``alpha (1+delta) - r h^(beta-2) sup|bump'|``.
    """
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if omega.shape != (d,) or not np.all(np.abs(omega) == 1.0):
        raise ValueError("omega must be a sign vector of length d")
    if min(alpha, r, delta, h) <= 0 or beta < 2:
        raise ValueError("alpha, r, delta, h must be positive and beta >= 2")
    a1 = alpha * (1.0 + delta)
    if r * h ** (beta - 2) / a1 >= 0.25:
        raise ValueError("interiority condition r h^(beta-2) / (alpha (1+delta)) < 1/4 violated")
    s2 = _bump_integral_derivative_sup(2)
    modulus = a1 - r * h ** (beta - 2) * s2
    if modulus <= 0:
        raise ValueError("r too large: f_omega would not be strongly convex")

    scale = r * h**beta

    def func(u):
        return 0.5 * a1 * np.sum(u * u, axis=-1) + scale * np.sum(omega * bump_integral(u / h), axis=-1)

    def grad(u):
        return a1 * u + omega * r * h ** (beta - 1) * bump(u / h)

    ell = math.ceil(beta) - 1
    if float(beta).is_integer():
        c_bump = _bump_integral_derivative_sup(int(beta)) / math.factorial(int(beta))
    else:
        c_bump = max(2.0 * _bump_integral_derivative_sup(ell) / math.factorial(ell),
                    _bump_integral_derivative_sup(ell + 1) / math.factorial(ell + 1))
    L = r * c_bump + (0.5 * a1 if ell == 1 else 0.0)

    xstar = hard_instance_minimizer(alpha, beta, r, delta, h, omega)
    return Objective(
        name="hard_instance", dim=d, func=func, grad_func=grad,
        alpha=modulus, beta=float(beta), L=L,
        lbar=a1 + r * h ** (beta - 2) * s2,
        G=a1 + r * h ** (beta - 1) * math.sqrt(d),
        minimizer=xstar, fmin=float(func(xstar)),
        domain_center=np.zeros(d), domain_radius=1.0,
        params={"alpha": alpha, "beta": beta, "r": r, "delta": delta, "h": h,
                "omega": omega.tolist()},
    )


OBJECTIVES = {
    "quadratic": make_quadratic,
    "quartic": make_quartic,
    "hard_instance": make_hard_instance,
}


def make_objective(name: str, **kwargs) -> Objective:
    if name == "quartic_one_sided":
        return make_quartic(one_sided=True, **kwargs)
    try:
        return OBJECTIVES[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown objective {name!r}") from None


# ---------------------------------------------------------------------------
# noise

NOISE_KINDS = ("none", "gaussian", "adversarial")
ADVERSARIAL_PATTERNS = ("alternating", "constant")


@dataclass(frozen=True)
class NoiseModel:
    """Additive query noise.

    ``adversarial`` is deterministic with ``|xi| <= sigma``:

    * ``alternating``: ``xi_t = sigma (-1)^t``, ``xi'_t = sigma (-1)^(t+1)``
    * ``constant``:    ``xi_t = sigma``, ``xi'_t = -sigma``
    """

    kind: str = "none"
    sigma: float = 0.0
    pattern: str = "alternating"

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.kind == "adversarial" and self.pattern not in ADVERSARIAL_PATTERNS:
            raise ValueError(f"unknown adversarial pattern {self.pattern!r}")

    @property
    def zero_mean(self) -> bool:
        return self.kind != "adversarial" or self.sigma == 0.0

    def draw(self, rng: np.random.Generator, t_start: int, n: int, width: int = 2) -> np.ndarray:
        """Noise for steps ``t_start .. t_start+n-1``, shape ``(n, width)``."""
        if self.kind == "none" or self.sigma == 0.0:
            return np.zeros((n, width))
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, size=(n, width))
        t = np.arange(t_start, t_start + n)
        if self.pattern == "alternating":
            s = np.where(t % 2 == 0, 1.0, -1.0)
            cols = [s, -s]
        else:
            cols = [np.ones(n), -np.ones(n)]
        out = np.stack([cols[k % 2] for k in range(width)], axis=1)
        return self.sigma * out


def sample_noise(model: NoiseModel, rng: np.random.Generator, t: int) -> tuple[float, float]:
    """The pair ``(xi_t, xi'_t)`` for step ``t``."""
    xi = model.draw(rng, t, 1)[0]
    return float(xi[0]), float(xi[1])


def make_noise(kind: str = "none", sigma: float = 0.0, pattern: str = "alternating") -> NoiseModel:
    if kind in ("adversarial_bounded",):
        kind = "adversarial"
    return NoiseModel(kind, float(sigma), pattern)

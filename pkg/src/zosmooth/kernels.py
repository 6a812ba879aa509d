"""Polynomial smoothing kernels on [-1, 1].

All moments are taken with respect to the uniform *probability* measure on
[-1, 1], i.e. ``E[g(r)] = (1/2) * int_{-1}^{1} g(u) du``.  Under this
convention a kernel with ``E[r K(r)] = 1`` makes the two-point estimator
exactly unbiased on linear functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

QUAD_NODES = 64
MOMENT_TOL = 1e-10


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return npleg.leggauss(n)


def kernel_order(beta: float) -> int:
    """Greatest integer strictly less than ``beta``."""
    if beta <= 1:
        raise ValueError(f"beta must be > 1, got {beta}")
    ell = math.ceil(beta) - 1
    return int(ell)


@dataclass(frozen=True)
class SmoothingKernel:
    """Odd polynomial kernel ``K(u) = sum_k coeffs[k] u**k`` on [-1, 1].

    ``kappa = E[K(r)^2]`` and ``kappa_beta = E[|r|^beta |K(r)|]`` for
    ``r ~ U[-1, 1]``.
    """

    beta: float
    ell: int
    coeffs: tuple[float, ...]
    kappa: float
    kappa_beta: float

    def __call__(self, u):
        return evaluate(self, u)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def evaluate(kernel: SmoothingKernel, u):
    """Evaluate the kernel polynomial at ``u`` (scalar or array)."""
    out = nppoly.polyval(u, np.asarray(kernel.coeffs))
    return float(out) if np.ndim(out) == 0 else out


def _integrate_01(func, breaks, nodes: int) -> float:
    """Gauss-Legendre on [0, 1] split at ``breaks``."""
    x, w = _gauss_legendre(nodes)
    pts = np.unique(np.concatenate(([0.0, 1.0], np.asarray(breaks, dtype=float))))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * np.dot(w, func(mid + half * x))
    return float(total)


def _positive_roots(coeffs) -> np.ndarray:
    roots = nppoly.polyroots(np.asarray(coeffs, dtype=float))
    real = roots[np.abs(roots.imag) < 1e-12].real
    return np.sort(real[(real > 0.0) & (real < 1.0)])


def moment(kernel: SmoothingKernel, j: int, nodes: int = QUAD_NODES) -> float:
    """``E[r^j K(r)]`` for ``r ~ U[-1, 1]`` by Gauss-Legendre quadrature."""
    if j < 0:
        raise ValueError("moment order must be >= 0")
    nodes = max(nodes, QUAD_NODES)
    x, w = _gauss_legendre(nodes)
    return float(0.5 * np.dot(w, x**j * evaluate(kernel, x)))


def compute_constants(kernel: SmoothingKernel, nodes: int = QUAD_NODES) -> tuple[float, float]:
    """Return ``(kappa, kappa_beta)``.

    Both integrands are even, so they are integrated over [0, 1]; the
    absolute value is handled by splitting at the positive roots of K.
    """
    coeffs = np.asarray(kernel.coeffs)
    breaks = _positive_roots(coeffs)
    kappa = _integrate_01(lambda u: nppoly.polyval(u, coeffs) ** 2, breaks, nodes)
    kappa_beta = _integrate_01(
        lambda u: u**kernel.beta * np.abs(nppoly.polyval(u, coeffs)), breaks, nodes
    )
    return kappa, kappa_beta


def build_legendre_kernel(beta: float) -> SmoothingKernel:
    """Minimum-variance polynomial kernel of order ``beta``.

    ``K(u) = sum_{m<=ell} p_m(u) p_m'(0)`` where ``p_m = sqrt(2m+1) P_m`` are
    the Legendre polynomials normalised for the uniform probability measure.
    This is the reproducing kernel of ``q -> q'(0)`` on polynomials of degree
    at most ``ell``, so ``E[r K] = 1`` and ``E[r^j K] = 0`` for ``j != 1``.
    """
    beta = float(beta)
    ell = kernel_order(beta)
    leg = np.zeros(ell + 1)
    for m in range(ell + 1):
        dp0 = npleg.Legendre.basis(m).deriv()(0.0)
        leg[m] = (2 * m + 1) * dp0
    coeffs = npleg.leg2poly(leg)
    coeffs = np.asarray(coeffs, dtype=float)
    coeffs[0::2] = 0.0  # K is odd; drop roundoff in even slots
    # trailing zero from an even top degree
    while len(coeffs) > 2 and coeffs[-1] == 0.0:
        coeffs = coeffs[:-1]
    proto = SmoothingKernel(beta, ell, tuple(float(c) for c in coeffs), float("nan"), float("nan"))
    kappa, kappa_beta = compute_constants(proto)
    return SmoothingKernel(beta, ell, proto.coeffs, kappa, kappa_beta)


def moment_table(kernel: SmoothingKernel) -> list[dict]:
    """Moments ``E[r^j K]`` for ``j = 0..ell+1`` with their target values."""
    rows = []
    for j in range(kernel.ell + 2):
        target = 1.0 if j == 1 else (0.0 if j <= kernel.ell else None)
        rows.append({"j": j, "moment": moment(kernel, j), "target": target})
    return rows


def check_kernel(kernel: SmoothingKernel, tol: float = MOMENT_TOL) -> bool:
    """True when all moment conditions hold to ``tol`` and the constants are sane."""
    for row in moment_table(kernel):
        if row["target"] is not None and abs(row["moment"] - row["target"]) > tol:
            return False
    return kernel.kappa > 0 and 0 < kernel.kappa_beta <= 2 * math.sqrt(2) * kernel.beta

"""Small objectives that only the tests need."""
import numpy as np

from zosmooth.problems import Objective


def custom_objective(name, d, func, grad, alpha=1.0, beta=2.0, L=1.0, lbar=1.0, G=1.0,
                     minimizer=None):
    m = np.zeros(d) if minimizer is None else np.asarray(minimizer, dtype=float)
    return Objective(name=name, dim=d, func=func, grad_func=grad, alpha=alpha, beta=beta, L=L,
                     lbar=lbar, G=G, minimizer=m, fmin=float(func(m)), domain_center=np.zeros(d),
                     domain_radius=1.0)


def linear_objective(g):
    g = np.asarray(g, dtype=float)
    return custom_objective("linear", len(g), lambda x: x @ g,
                            lambda x: np.broadcast_to(g, np.shape(x)).copy())


def constant_objective(d, c=2.5):
    return custom_objective("constant", d, lambda x: np.full(np.shape(x)[:-1], c),
                            lambda x: np.zeros(np.shape(x)))


def kinked_quadratic(d, alpha=1.0, c=1.0):
    """``alpha/2 ||x||^2 + c sum max(x_i, 0)^2``: gradient Lipschitz with a kink at 0,
    so the plain estimator's bias is of order h there."""
    def func(x):
        return 0.5 * alpha * np.sum(x * x, axis=-1) + c * np.sum(np.maximum(x, 0) ** 2, axis=-1)

    def grad(x):
        return alpha * x + 2 * c * np.maximum(x, 0)

    lbar = alpha + 2 * c
    return custom_objective("kinked_quadratic", d, func, grad, alpha=alpha, L=lbar / 2,
                            lbar=lbar, G=lbar)


class CountingObjective:
    """Wraps an objective and counts evaluated points."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        self.calls += int(np.prod(x.shape[:-1])) if x.ndim > 1 else 1
        return self.inner(x)

    def __getattr__(self, name):
        return getattr(self.inner, name)

"""Seedable random sources for directions, radial scalars, noise and ball samples.

Each :class:`RandomSource` owns five independent Philox substreams derived
from ``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`:

====================  ==========================================
substream             used for
====================  ==========================================
``directions``        unit-sphere directions (zeta)
``scalars``           radial scalars r ~ U[-1, 1]
``noise``             query noise (xi, xi')
``noise3``            third-query noise (xi'')
``ball``              unit-ball perturbations for diagnostics
====================  ==========================================

Because the layout is fixed, two runs that differ only in their noise model
see the same zeta / r sequences.
"""
from __future__ import annotations

import numpy as np

SUBSTREAMS = ("directions", "scalars", "noise", "noise3", "ball")


class RandomSource:
    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        root = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        children = root.spawn(len(SUBSTREAMS))
        for name, child in zip(SUBSTREAMS, children):
            setattr(self, name, np.random.Generator(np.random.Philox(child)))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream_id={self.stream_id})"


def _normalize_rows(g: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    norms = np.linalg.norm(g, axis=-1)
    bad = norms == 0.0
    while np.any(bad):
        g[bad] = rng.standard_normal((int(bad.sum()), g.shape[-1]))
        norms = np.linalg.norm(g, axis=-1)
        bad = norms == 0.0
    return g / norms[..., None]


def sample_sphere(d: int, src: RandomSource, size: int | None = None) -> np.ndarray:
    """Uniform direction(s) on the unit sphere in R^d.

    Returns shape ``(d,)`` when ``size`` is None, else ``(size, d)``.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    n = 1 if size is None else int(size)
    g = src.directions.standard_normal((n, d))
    z = _normalize_rows(g, src.directions)
    return z[0] if size is None else z


def sample_r(src: RandomSource, size: int | None = None):
    """Scalar(s) uniform on [-1, 1]."""
    return src.scalars.uniform(-1.0, 1.0, size=size)


def sample_ball(d: int, src: RandomSource, size: int | None = None) -> np.ndarray:
    """Uniform point(s) in the closed unit ball of R^d (direction * U^(1/d))."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    n = 1 if size is None else int(size)
    g = _normalize_rows(src.ball.standard_normal((n, d)), src.ball)
    rad = src.ball.uniform(size=n) ** (1.0 / d)
    v = g * rad[:, None]
    return v[0] if size is None else v

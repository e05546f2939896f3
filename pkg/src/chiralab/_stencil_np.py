"""Reference numpy implementations of the hot stencil reductions.

These are the fallback backend for :mod:`chiralab.kernels`.  numpy's pairwise
summation gives a fixed reduction tree for a fixed length, so results are
bit-reproducible run to run.
"""

from __future__ import annotations

import numpy as np


def sliced_energy(values: np.ndarray, lam: float, delta: float) -> float:
    """0.5·lam·Σ_i |u_i − 2(1−delta)·u_{i+1} + u_{i+2}|² over i = 0..N−2."""
    a = values[:-2] - 2.0 * (1.0 - delta) * values[1:-1] + values[2:]
    return 0.5 * lam * float(np.sum(a * a))


def sliced_energy_gradient(values: np.ndarray, lam: float, delta: float):
    """Energy together with its gradient with respect to every spin component."""
    w = 2.0 * (1.0 - delta)
    a = values[:-2] - w * values[1:-1] + values[2:]
    e = 0.5 * lam * float(np.sum(a * a))
    g = np.zeros_like(values)
    g[:-2] += a
    g[2:] += a
    g[1:-1] -= w * a
    g *= lam
    return e, g

"""Backend selection for the stencil reductions.

The compiled extension (Cython, Neumaier-compensated sums) is preferred; the
numpy reference in :mod:`chiralab._stencil_np` is used when the extension was
not built.  Both satisfy the same contracts and agree to ~1e-13 relative;
``benchmarks/bench_kernels.py`` compares their throughput.
"""

from __future__ import annotations

from . import _stencil_np

try:
    from . import _stencil_cy as _impl

    _BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build environment
    _impl = _stencil_np
    _BACKEND = "numpy"


def backend_name() -> str:
    """Which stencil backend is active: "cython" or "numpy"."""
    return _BACKEND


def sliced_energy_raw(values, lam: float, delta: float) -> float:
    return _impl.sliced_energy(values, lam, delta)


def sliced_energy_gradient_raw(values, lam: float, delta: float):
    return _impl.sliced_energy_gradient(values, lam, delta)

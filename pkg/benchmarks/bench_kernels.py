"""Throughput comparison: Cython stencil kernels vs the numpy reference.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeats 7]

Prints per-size best-of-N wall times for energy and energy+gradient on both
backends, the speedup, and the cross-backend agreement on the same inputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from chiralab import _stencil_np
from chiralab.energy import ModelParams
from chiralab.geometry import make_uniform_axes
from chiralab.kernels import backend_name
from chiralab.recovery import ProfileSpec, build_tanh_transition

try:
    from chiralab import _stencil_cy
except ImportError:
    _stencil_cy = None


def _wall_values(n_sites: int, delta: float) -> np.ndarray:
    family = make_uniform_axes(4)
    p = ModelParams(lam=1.0 / (n_sites - 1), delta=delta)
    chain = build_tanh_transition(family.axes[0], family.axes[1], p,
                                  ProfileSpec("tanh_odd", 1e-2),
                                  n_sites=n_sites)
    return chain.values


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,10000,100000",
                        help="comma-separated chain lengths")
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--delta", type=float, default=1e-4)
    args = parser.parse_args()
    sizes = [int(float(s)) for s in args.sizes.split(",")]

    print(f"active backend: {backend_name()}")
    if _stencil_cy is None:
        print("compiled extension not importable; timing the numpy path only")

    header = f"{'n':>8} {'kernel':>8} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        values = _wall_values(n, args.delta)
        lam = 1.0 / (n - 1)
        for label, np_fn, cy_fn in (
            ("energy", _stencil_np.sliced_energy,
             None if _stencil_cy is None else _stencil_cy.sliced_energy),
            ("grad", _stencil_np.sliced_energy_gradient,
             None if _stencil_cy is None else _stencil_cy.sliced_energy_gradient),
        ):
            t_np = _best_of(lambda: np_fn(values, lam, args.delta), args.repeats)
            if cy_fn is None:
                print(f"{n:>8} {label:>8} {t_np * 1e3:>10.3f} {'-':>10} {'-':>8}")
                continue
            t_cy = _best_of(lambda: cy_fn(values, lam, args.delta), args.repeats)
            print(f"{n:>8} {label:>8} {t_np * 1e3:>10.3f} {t_cy * 1e3:>10.3f} "
                  f"{t_np / t_cy:>8.2f}")

    if _stencil_cy is not None:
        values = _wall_values(sizes[-1], args.delta)
        lam = 1.0 / (sizes[-1] - 1)
        e_np = _stencil_np.sliced_energy(values, lam, args.delta)
        e_cy = _stencil_cy.sliced_energy(values, lam, args.delta)
        _, g_np = _stencil_np.sliced_energy_gradient(values, lam, args.delta)
        _, g_cy = _stencil_cy.sliced_energy_gradient(values, lam, args.delta)
        g_scale = max(float(np.max(np.abs(g_np))), 1e-300)
        print(f"energy agreement:   |rel diff| = "
              f"{abs(e_np - e_cy) / max(abs(e_np), 1e-300):.3e}")
        print(f"gradient agreement: max |diff|/max|g| = "
              f"{float(np.max(np.abs(g_np - g_cy))) / g_scale:.3e}")


if __name__ == "__main__":
    main()

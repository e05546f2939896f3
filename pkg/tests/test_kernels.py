"""Parity between the compiled stencil kernels and the numpy reference."""

import numpy as np
import pytest

from chiralab import kernels
from chiralab import _stencil_np
from chiralab.energy import ModelParams
from chiralab.geometry import project_sphere
from chiralab.recovery import ProfileSpec, build_tanh_transition, helix_chain
from chiralab.geometry import make_uniform_axes

_cy = pytest.importorskip("chiralab._stencil_cy")


def _random_chains(n_cases=25, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        n = int(rng.integers(3, 400))
        values = project_sphere(rng.normal(size=(n, 3)))
        lam = float(10.0 ** rng.uniform(-5, -1))
        delta = float(10.0 ** rng.uniform(-5, -0.5))
        yield values, lam, delta


def test_backend_identifies_itself():
    assert kernels.backend_name() in ("cython", "numpy")


def test_energy_parity_random():
    for values, lam, delta in _random_chains():
        a = _stencil_np.sliced_energy(values, lam, delta)
        b = _cy.sliced_energy(values, lam, delta)
        assert b == pytest.approx(a, rel=1e-13, abs=1e-300)


def test_gradient_parity_random():
    for values, lam, delta in _random_chains(seed=1):
        ea, ga = _stencil_np.sliced_energy_gradient(values, lam, delta)
        eb, gb = _cy.sliced_energy_gradient(values, lam, delta)
        assert eb == pytest.approx(ea, rel=1e-13, abs=1e-300)
        scale = max(1.0, float(np.max(np.abs(ga))))
        np.testing.assert_allclose(gb, ga, rtol=0, atol=1e-13 * scale)


def test_parity_on_structured_chains():
    fam = make_uniform_axes(4)
    p = ModelParams(lam=1e-4, delta=1e-3)
    wall = build_tanh_transition(fam.axes[0], fam.axes[1], p, ProfileSpec("tanh_odd", 1e-2))
    helix = helix_chain(fam.axes[2], p, n_sites=500)
    for chain in (wall, helix):
        a = _stencil_np.sliced_energy(chain.values, p.lam, p.delta)
        b = _cy.sliced_energy(chain.values, p.lam, p.delta)
        assert b == pytest.approx(a, rel=1e-13, abs=1e-300)
        ga = _stencil_np.sliced_energy_gradient(chain.values, p.lam, p.delta)[1]
        gb = _cy.sliced_energy_gradient(chain.values, p.lam, p.delta)[1]
        scale = max(1.0, float(np.max(np.abs(ga))))
        np.testing.assert_allclose(gb, ga, rtol=0, atol=1e-13 * scale)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    values = project_sphere(rng.normal(size=(12, 3)))
    lam, delta = 0.05, 0.2
    for impl in (_stencil_np, _cy):
        _, grad = impl.sliced_energy_gradient(values, lam, delta)
        # unconstrained Cartesian gradient: perturb single coordinates
        h = 1e-7
        for _ in range(30):
            i = int(rng.integers(0, 12))
            j = int(rng.integers(0, 3))
            vp = values.copy()
            vp[i, j] += h
            vm = values.copy()
            vm[i, j] -= h
            fd = (
                impl.sliced_energy(vp, lam, delta)
                - impl.sliced_energy(vm, lam, delta)
            ) / (2.0 * h)
            assert fd == pytest.approx(grad[i, j], rel=5e-6, abs=1e-8)


def test_gradient_of_energy_minimum_vanishes():
    # a ground helix is a critical point of the raw energy along the sphere,
    # but the Cartesian gradient also vanishes because every stencil is zero
    fam = make_uniform_axes(2)
    p = ModelParams(lam=1e-3, delta=1e-2)
    helix = helix_chain(fam.axes[0], p, n_sites=200)
    for impl in (_stencil_np, _cy):
        _, grad = impl.sliced_energy_gradient(helix.values, p.lam, p.delta)
        assert float(np.max(np.abs(grad))) < 1e-12

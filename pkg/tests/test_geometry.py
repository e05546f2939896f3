"""Spherical projections, circle families and chain containers."""

import math

import numpy as np
import pytest

from chiralab.errors import (
    ChainTooShortError,
    DegenerateProjectionError,
    EmptyFamilyError,
    InvalidDeltaError,
    ValidationError,
    ZeroVectorError,
)
from chiralab.geometry import (
    CircleFamily,
    SphericalAngles,
    SpinChain,
    SpinField2D,
    circle_frame,
    dist_to_lines,
    frame_vectors,
    make_critical_axes,
    make_uniform_axes,
    nearest_circle_index,
    project_circle,
    project_sphere,
)


def test_project_sphere_normalizes_batches():
    rng = np.random.default_rng(0)
    u = rng.normal(size=(40, 3)) * rng.uniform(0.1, 9.0, size=(40, 1))
    v = project_sphere(u)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-14)
    # directions preserved
    cos = np.einsum("ij,ij->i", v, u) / np.linalg.norm(u, axis=1)
    np.testing.assert_allclose(cos, 1.0, atol=1e-14)


def test_project_sphere_rejects_zero():
    with pytest.raises(ZeroVectorError):
        project_sphere(np.zeros(3))


def test_project_circle_is_closest_circle_point():
    rng = np.random.default_rng(1)
    ts = np.linspace(0.0, 2.0 * math.pi, 20001)
    for _ in range(10):
        axis = project_sphere(rng.normal(size=3))
        u = project_sphere(rng.normal(size=3))
        p = project_circle(u, axis)
        assert abs(np.linalg.norm(p) - 1.0) < 1e-14
        assert abs(float(np.dot(p, axis))) < 1e-14
        # brute-force closest point on a dense sampling of the circle
        e1, e2 = frame_vectors(axis)
        circle = np.cos(ts)[:, None] * e1 + np.sin(ts)[:, None] * e2
        best = float(np.min(np.linalg.norm(circle - u, axis=1)))
        assert np.linalg.norm(p - u) <= best + 1e-7
        # idempotence
        np.testing.assert_allclose(project_circle(p, axis), p, atol=1e-14)


def test_project_circle_degenerate_input():
    with pytest.raises(DegenerateProjectionError):
        project_circle(np.array([0.0, 0.0, 2.0]), np.array([0.0, 0.0, 1.0]))


def test_circle_frame_is_special_orthogonal():
    rng = np.random.default_rng(2)
    for _ in range(50):
        axis = project_sphere(rng.normal(size=3))
        r = circle_frame(axis)
        np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-14)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(r[:, 2], axis, atol=1e-14)
        e1, e2 = frame_vectors(axis)
        np.testing.assert_allclose(np.cross(e1, e2), axis, atol=1e-14)


def test_circle_frame_identity_for_ez():
    np.testing.assert_allclose(circle_frame(np.array([0.0, 0.0, 1.0])), np.eye(3), atol=0)


def test_spherical_angles_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(100):
        v = project_sphere(rng.normal(size=3))
        a = SphericalAngles.from_cartesian(v)
        np.testing.assert_allclose(a.to_cartesian(), v, atol=1e-12)
    with pytest.raises(ValidationError):
        SphericalAngles(theta=-0.1, phi=0.0)
    with pytest.raises(ValidationError):
        SphericalAngles(theta=1.0, phi=7.0)


def test_dist_to_lines_matches_brute_force():
    rng = np.random.default_rng(4)
    family = make_uniform_axes(5)
    pts = rng.normal(size=(200, 3)) * rng.uniform(0.1, 3.0, size=(200, 1))
    got = dist_to_lines(pts, family)
    # distance from x to the line span(q): |x - (x.q) q|
    per_axis = np.stack(
        [np.linalg.norm(pts - (pts @ q)[:, None] * q, axis=1) for q in family.axes]
    )
    np.testing.assert_allclose(got, per_axis.min(axis=0), atol=1e-12)
    # scalar path
    assert isinstance(dist_to_lines(pts[0], family), float)
    with pytest.raises(EmptyFamilyError):
        dist_to_lines(pts[0], np.zeros((0, 3)))


def test_nearest_circle_index_finds_constructed_circle():
    family = make_uniform_axes(6)
    rng = np.random.default_rng(5)
    for j in range(family.k):
        e1, e2 = frame_vectors(family.axes[j])
        t = rng.uniform(0.3, 1.2)  # stay away from the shared diameter
        u = math.cos(t) * e1 + math.sin(t) * e2
        idx, res = nearest_circle_index(u, family)
        assert idx == j
        assert res < 1e-12
    # the shared diameter +-e_y lies on every circle: ties resolve to index 0
    idx, res = nearest_circle_index(np.array([0.0, 1.0, 0.0]), family)
    assert idx == 0 and res < 1e-15
    with pytest.raises(ValidationError):
        nearest_circle_index(np.array([0.0, 1.0, 0.0]), family, tol=-1.0)


def test_uniform_axes_geometry():
    for k in (1, 2, 4, 9):
        fam = make_uniform_axes(k)
        assert fam.k == k and fam.kind == "uniform"
        np.testing.assert_allclose(np.linalg.norm(fam.axes, axis=1), 1.0, atol=1e-15)
        # every circle contains the common diameter through +-e_y
        np.testing.assert_allclose(fam.axes @ np.array([0.0, 1.0, 0.0]), 0.0, atol=1e-15)
        if k > 1:
            cons = np.abs(np.einsum("ij,ij->i", fam.axes[:-1], fam.axes[1:]))
            np.testing.assert_allclose(cons, math.cos(math.pi / k), atol=1e-12)
    with pytest.raises(EmptyFamilyError):
        make_uniform_axes(0)


def test_critical_axes_structure():
    delta = 1e-4
    fam = make_critical_axes(delta)
    assert fam.kind == "critical" and fam.delta == delta
    assert fam.k == 2 * math.ceil(delta ** -0.25)  # default k
    half = fam.k // 2
    q4 = delta ** 0.25
    for m in range(1, half + 1):
        q = fam.axes[fam.vertical_index(m)]
        expected = np.array([0.0, -m * q4, 1.0])
        expected /= np.linalg.norm(expected)
        np.testing.assert_allclose(q, expected, atol=1e-12)
    for j in range(1, half + 1):
        q = fam.axes[fam.horizontal_index(j)]
        # meridian of azimuth j*sqrt(2 delta) is orthogonal to its axis
        phi = j * math.sqrt(2.0 * delta)
        point = np.array([math.cos(phi), math.sin(phi), 0.0])
        assert abs(float(np.dot(q, point))) < 1e-12
    with pytest.raises(EmptyFamilyError):
        fam.vertical_index(half + 1)
    with pytest.raises(EmptyFamilyError):
        make_critical_axes(delta, k=7)
    with pytest.raises(InvalidDeltaError):
        make_critical_axes(1.5)
    with pytest.raises(InvalidDeltaError):
        make_critical_axes(0.25, k=40)  # meridian azimuths reach pi/4
    with pytest.raises(ValidationError):
        make_uniform_axes(4).vertical_index(1)


def test_circle_family_canonical_signs_and_json():
    axes = np.array([[0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, -2.0, 0.0]])
    fam = CircleFamily(axes=axes)
    # last nonzero coordinate nonnegative, unit norm
    np.testing.assert_allclose(fam.axes[0], [0.0, 0.0, 1.0], atol=0)
    np.testing.assert_allclose(fam.axes[2], [0.0, 1.0, 0.0], atol=0)
    again = CircleFamily.from_json(fam.to_json())
    np.testing.assert_allclose(again.axes, fam.axes, atol=0)
    assert again.kind == fam.kind
    assert not fam.axes.flags.writeable
    with pytest.raises(ValidationError):
        CircleFamily(axes=axes, kind="spiral")
    with pytest.raises(ValidationError):
        CircleFamily.from_json('{"axes": [[0,0,1]], "k": 3}')
    with pytest.raises(ValidationError):
        CircleFamily.from_json("not json at all")


def test_spin_chain_validation_and_properties():
    vals = project_sphere(np.random.default_rng(6).normal(size=(5, 3)))
    chain = SpinChain(values=vals, lam=0.25, delta=0.1)
    assert chain.n_sites == 5 and chain.n_bonds == 4
    np.testing.assert_allclose(chain.x, 0.25 * np.arange(5), atol=0)
    with pytest.raises(ChainTooShortError):
        chain.require_sites(9, "something")
    with pytest.raises(ValidationError):
        SpinChain(values=vals * 1.01, lam=0.25, delta=0.1)
    with pytest.raises(ValidationError):
        SpinChain(values=vals[:1], lam=0.25, delta=0.1)
    with pytest.raises(ValidationError):
        SpinChain(values=vals, lam=-1.0, delta=0.1)
    with pytest.raises(InvalidDeltaError):
        SpinChain(values=vals, lam=0.25, delta=3.0)
    bad = vals.copy()
    bad[2, 0] = np.nan
    bad[2] = bad[2]  # keep shape; nan fails the finite check
    with pytest.raises(ValidationError):
        SpinChain(values=bad, lam=0.25, delta=0.1)
    # periodic flag demands matching boundary turning angles
    with pytest.raises(ValidationError):
        SpinChain(values=vals, lam=0.25, delta=0.1, periodic=True)


def test_spin_field_2d_validation():
    rng = np.random.default_rng(7)
    vals = project_sphere(rng.normal(size=(3, 4, 3)))
    field = SpinField2D(values=vals, lam=0.2, delta=0.1)
    assert field.shape == (3, 4)
    with pytest.raises(ValidationError):
        SpinField2D(values=vals[..., :2], lam=0.2, delta=0.1)
    with pytest.raises(ValidationError):
        SpinField2D(values=vals * 2.0, lam=0.2, delta=0.1)

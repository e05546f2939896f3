"""Diffuse-interface functional for the vector order parameter.

The chirality field of a nearly-minimal chain concentrates near the axis
lines of the circle family, with modulus close to 1.  The corresponding
phase-field energy on the lattice lam·Z^d ∩ [0,1]^d is

    F(z) = 1/eps · Σ_{i∈R} lam^d · g(z^i)
         + eps · Σ_{i∈R} lam^d · Σ_ℓ |(z^{i+e_ℓ} − z^i)/lam|²,

    R = {i : i + e_ℓ on the lattice for every ℓ},

where the potential g(ξ) = (|ξ|_A² − 1)² is finite only within distance r of
the axis lines (off the tube the functional is Infinite — a tagged value,
never a float placed into the sums).  |·|_A is a configurable norm, Euclidean
by default or diagonally weighted; the gradient term stays Euclidean.  Wall
energies between wells ±q are measured by the density
h(q1, q2) = 4/3·(|q1| + |q2|).
"""

from __future__ import annotations

import io
import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySliceError,
    NotOnLevelSetError,
    OutOfDomainError,
    ValidationError,
)
from .geometry import CircleFamily, dist_to_lines


class _Infinite:
    """Tagged value of the functional off the constraint tube."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "Infinite"

    def __bool__(self) -> bool:
        return False


INFINITE = _Infinite()


def is_infinite(x) -> bool:
    return x is INFINITE


@dataclass(frozen=True)
class PhaseFieldProblem:
    """Parameters of the lattice phase-field functional.

    Parameters
    ----------
    eps, lam, r : float
        Interface width, lattice spacing and constraint-tube radius, all > 0.
    axes : CircleFamily
        The family whose axis lines carry the wells; the tube is the union of
        cylinders of radius ``r`` around those lines.
    norm_a : tuple of 3 floats, optional
        Diagonal weights of the anisotropy norm |ξ|_A = |diag(w)·ξ|; omit for
        the Euclidean norm.  The equivalence constants c₁|ξ| ≤ |ξ|_A ≤ c₂|ξ|
        are exposed as ``c1``/``c2``.
    dim : int, optional
        Lattice dimension d ≥ 1.

    The sharp-interface regime needs lam/eps → 0 with lam/(eps·r²) under
    control; ``report`` exposes both ratios so drivers can tag their outputs,
    but nothing is enforced.
    """

    eps: float
    lam: float
    r: float
    axes: CircleFamily
    norm_a: tuple[float, float, float] | None = None
    dim: int = 1

    def __post_init__(self):
        if not (self.eps > 0 and self.lam > 0 and self.r > 0):
            raise ValidationError("eps, lam and r must all be positive")
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")
        if self.norm_a is not None:
            w = tuple(float(x) for x in self.norm_a)
            if len(w) != 3 or any(x <= 0 for x in w):
                raise ValidationError("norm_a needs 3 positive diagonal weights")
            object.__setattr__(self, "norm_a", w)

    @property
    def c1(self) -> float:
        return 1.0 if self.norm_a is None else min(self.norm_a)

    @property
    def c2(self) -> float:
        return 1.0 if self.norm_a is None else max(self.norm_a)

    def a_norm(self, values: np.ndarray) -> np.ndarray:
        """|ξ|_A for a single vector or an array of vectors (last axis 3)."""
        values = np.asarray(values, dtype=float)
        if self.norm_a is not None:
            values = values * np.asarray(self.norm_a)
        return np.sqrt(np.einsum("...j,...j->...", values, values))

    def eta_separation(self) -> float:
        """Smallest η with every pairwise cylinder intersection inside B_η.

        Two radius-r cylinders around lines through the origin with mutual
        angle α intersect inside the ball of radius r/sin(α/2); the report
        takes the worst (closest) axis pair.  Families with one axis have no
        intersections and report 0.
        """
        q = self.axes.axes
        if len(q) < 2:
            return 0.0
        cos = np.abs(q @ q.T)
        np.fill_diagonal(cos, -1.0)
        alpha = math.acos(min(1.0, float(cos.max())))
        if alpha < 1e-12:
            return math.inf
        return self.r / math.sin(0.5 * alpha)

    def report(self) -> dict:
        return {
            "eps": self.eps,
            "lam": self.lam,
            "r": self.r,
            "k": self.axes.k,
            "dim": self.dim,
            "c1": self.c1,
            "c2": self.c2,
            "lam_over_eps": self.lam / self.eps,
            "lam_over_eps_r2": self.lam / (self.eps * self.r ** 2),
            "eta": self.eta_separation(),
        }

    def to_json(self) -> str:
        payload = {
            "eps": self.eps,
            "lam": self.lam,
            "r": self.r,
            "axes": json.loads(self.axes.to_json()),
            "norm_a": list(self.norm_a) if self.norm_a is not None else None,
            "dim": self.dim,
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PhaseFieldProblem":
        payload = json.loads(text)
        return cls(
            eps=payload["eps"],
            lam=payload["lam"],
            r=payload["r"],
            axes=CircleFamily.from_json(json.dumps(payload["axes"])),
            norm_a=tuple(payload["norm_a"]) if payload.get("norm_a") else None,
            dim=payload.get("dim", 1),
        )


_FIELD_HEADER = re.compile(
    r"^# chiralab lattice-field v1 d=(\d+) shape=([0-9x]+) lam=([-+0-9.eE]+)\s*$"
)


@dataclass
class LatticeField(object):
    """A Vec3-valued field on the lattice lam·Z^d ∩ [0,1]^d.

    ``values`` has shape (n_1, ..., n_d, 3); the field must fit inside the
    unit cube, i.e. (n_ℓ − 1)·lam ≤ 1 per direction, with at least two points
    each way.
    """

    values: np.ndarray
    problem: PhaseFieldProblem

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        d = self.problem.dim
        if self.values.ndim != d + 1 or self.values.shape[-1] != 3:
            raise ValidationError(
                f"values must have shape (n_1..n_{d}, 3), got {self.values.shape}"
            )
        lam = self.problem.lam
        for a, s in enumerate(self.values.shape[:-1]):
            if s < 2:
                raise ValidationError(f"direction {a} has {s} < 2 lattice points")
            if (s - 1) * lam > 1.0 + 1e-9:
                raise ValidationError(
                    f"direction {a}: {s} points at spacing {lam} leave [0,1]"
                )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    def to_csv(self, path_or_buf) -> None:
        """Write the field with a {d, shape, lambda} header (C-order rows)."""
        d = self.problem.dim
        shape = "x".join(str(s) for s in self.shape)
        header = f"# chiralab lattice-field v1 d={d} shape={shape} lam={self.problem.lam!r}\n"
        flat = self.values.reshape(-1, 3)
        buf = io.StringIO()
        buf.write(header)
        np.savetxt(buf, flat, fmt="%.17g", delimiter=",")
        text = buf.getvalue()
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)

    @classmethod
    def from_csv(cls, path_or_buf, problem: PhaseFieldProblem) -> "LatticeField":
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf) as fh:
                text = fh.read()
        lines = text.splitlines()
        if not lines:
            raise ValidationError("empty lattice-field file")
        m = _FIELD_HEADER.match(lines[0])
        if m is None:
            raise ValidationError(f"unrecognized lattice-field header: {lines[0]!r}")
        d = int(m.group(1))
        shape = tuple(int(s) for s in m.group(2).split("x"))
        lam = float(m.group(3))
        if d != problem.dim:
            raise ValidationError(f"file is {d}-dimensional, problem expects {problem.dim}")
        if not math.isclose(lam, problem.lam, rel_tol=1e-12):
            raise ValidationError(f"file lam {lam} does not match problem lam {problem.lam}")
        flat = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        if flat.shape != (int(np.prod(shape)), 3):
            raise ValidationError(
                f"expected {int(np.prod(shape))} rows of 3 values, got {flat.shape}"
            )
        return cls(values=flat.reshape(shape + (3,)), problem=problem)


def potential_g(xi: np.ndarray, prob: PhaseFieldProblem) -> float | _Infinite:
    """Double-well potential (|ξ|_A² − 1)², Infinite off the axis tube of radius r."""
    xi = np.asarray(xi, dtype=float)
    if dist_to_lines(xi, prob.axes) > prob.r:
        return INFINITE
    na = float(prob.a_norm(xi))
    return (na * na - 1.0) ** 2


def limit_density_h(
    q1: np.ndarray, q2: np.ndarray, prob: PhaseFieldProblem | None = None
) -> float:
    """Wall energy density between wells q1 and q2: 4/3·(|q1| + |q2|).

    The lengths in the formula are Euclidean; the wells themselves must sit on
    the unit level set of the anisotropy norm (Euclidean when ``prob`` is
    omitted).

    Raises
    ------
    NotOnLevelSetError
        If | |q|_A − 1 | > 1e-9 for either argument.
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    for name, q in (("q1", q1), ("q2", q2)):
        na = float(np.linalg.norm(q)) if prob is None else float(prob.a_norm(q))
        if abs(na - 1.0) > 1e-9:
            raise NotOnLevelSetError(f"{name} has |·|_A = {na}, need 1 within 1e-9")
    return (4.0 / 3.0) * (float(np.linalg.norm(q1)) + float(np.linalg.norm(q2)))


def _interior(values: np.ndarray) -> np.ndarray:
    d = values.ndim - 1
    return values[tuple(slice(0, -1) for _ in range(d))]


def mm_energy_parts(z: LatticeField):
    """(potential part, gradient part) of F, or INFINITE.

    The potential is evaluated on the index set R only, and feasibility (the
    distance-r tube) is decided before any term enters an accumulator.
    """
    problem = z.problem
    values = z.values
    d = problem.dim
    inter = _interior(values)
    dist = dist_to_lines(inter, problem.axes)
    if np.any(dist > problem.r):
        return INFINITE
    lam = problem.lam
    weight = lam ** d
    na = problem.a_norm(inter)
    pot = weight / problem.eps * float(np.sum((na * na - 1.0) ** 2))
    grad = 0.0
    for axis in range(d):
        diff = np.diff(values, axis=axis)
        # restrict the other lattice directions to the interior set R
        sel = tuple(slice(None) if a == axis else slice(0, -1) for a in range(d))
        diff = diff[sel]
        grad += float(np.sum(diff * diff))
    grad *= problem.eps * weight / lam ** 2
    return pot, grad


def mm_energy(z: LatticeField) -> float | _Infinite:
    """The lattice phase-field energy F(z), or INFINITE off the tube."""
    parts = mm_energy_parts(z)
    if is_infinite(parts):
        return INFINITE
    return parts[0] + parts[1]


def truncate_field(z: LatticeField) -> LatticeField:
    """Radially truncate to the A-ball of radius 2: z ↦ 2·z/|z|_A where |z|_A ≥ 2.

    The map is the metric projection onto a convex set in the A-geometry and
    only acts where the potential exceeds 9, so it never increases the
    phase-field energy.
    """
    values = z.values.copy()
    norms = z.problem.a_norm(values)
    mask = norms >= 2.0
    if np.any(mask):
        values[mask] *= (2.0 / norms[mask])[..., None]
    return LatticeField(values=values, problem=z.problem)


@dataclass(frozen=True)
class AffineInterpolant:
    """Piecewise-affine extension of lattice values on the Kuhn triangulation.

    Each lattice cell is split into d! simplices by the orderings of the local
    coordinates; on the simplex where loc_{s(1)} >= ... >= loc_{s(d)} the value
    interpolates along the monotone vertex path c, c+e_{s(1)}, c+e_{s(1)}+e_{s(2)}, ...
    For d = 1 this is ordinary piecewise-linear interpolation.
    """

    values: np.ndarray
    lam: float

    @property
    def d(self) -> int:
        return self.values.ndim - 1

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.d
        if x.shape != (d,):
            raise OutOfDomainError(f"point must have shape ({d},), got {x.shape}")
        t = x / self.lam
        shape = self.values.shape[:-1]
        for a in range(d):
            if not -1e-9 <= t[a] <= shape[a] - 1 + 1e-9:
                raise OutOfDomainError(f"coordinate {a} of {x} outside the lattice hull")
        cell = np.clip(np.floor(t).astype(int), 0, np.array(shape) - 2)
        loc = np.clip(t - cell, 0.0, 1.0)
        order = np.argsort(-loc, kind="stable")
        idx = cell.copy()
        out = self.values[tuple(idx)].astype(float).copy()
        for a in order:
            prev = self.values[tuple(idx)]
            idx[a] += 1
            out += loc[a] * (self.values[tuple(idx)] - prev)
        return out


def affine_interpolant(z: LatticeField) -> AffineInterpolant:
    """Build the Kuhn-triangulation affine interpolant of a lattice field."""
    return AffineInterpolant(values=z.values, lam=z.problem.lam)


def slice_energy_parts(z: LatticeField, xi: np.ndarray, y: np.ndarray):
    """(potential, gradient) parts of the 1D functional along a line slice.

    The affine interpolant of the field is sampled at spacing lam along the
    line y + t·xi (t clipped to the lattice hull), and the 1D phase-field
    functional with the same eps, lam, r is evaluated on the samples.  For an
    axis direction through lattice points this reproduces the corresponding
    row/column terms of the full functional exactly.
    """
    problem = z.problem
    d = problem.dim
    if d < 2:
        raise ValidationError("slices need a lattice of dimension >= 2")
    interp = affine_interpolant(z)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (d,):
        raise ValidationError(f"slice direction must have shape ({d},)")
    n = np.linalg.norm(xi)
    if n < 1e-12:
        raise ValidationError("slice direction must be nonzero")
    xi = xi / n
    y = np.asarray(y, dtype=float)
    if y.shape != (d,):
        raise ValidationError(f"base point must have shape ({d},)")

    # parameter window [t0, t1] keeping y + t·xi inside the hull
    t0, t1 = -np.inf, np.inf
    shape = z.shape
    for a in range(d):
        hi = problem.lam * (shape[a] - 1)
        if abs(xi[a]) < 1e-15:
            if not -1e-12 <= y[a] <= hi + 1e-12:
                raise EmptySliceError("line misses the lattice hull")
            continue
        ta = (0.0 - y[a]) / xi[a]
        tb = (hi - y[a]) / xi[a]
        t0 = max(t0, min(ta, tb))
        t1 = min(t1, max(ta, tb))
    if not np.isfinite(t0) or not np.isfinite(t1) or t1 - t0 < problem.lam - 1e-12:
        raise EmptySliceError("slice shorter than one lattice step")

    m = int(math.floor((t1 - t0) / problem.lam + 1e-9))
    ts = t0 + problem.lam * np.arange(m + 1)
    w = np.array([interp(y + t * xi) for t in ts])

    inter = w[:-1]
    if np.any(dist_to_lines(inter, problem.axes) > problem.r):
        return INFINITE
    na = problem.a_norm(inter)
    pot = problem.lam / problem.eps * float(np.sum((na * na - 1.0) ** 2))
    diff = w[1:] - w[:-1]
    grad = problem.eps / problem.lam * float(np.sum(diff * diff))
    return pot, grad


def slice_energy(z: LatticeField, xi, y) -> float | _Infinite:
    """Total 1D phase-field energy along a line slice (see slice_energy_parts)."""
    parts = slice_energy_parts(z, xi, y)
    if is_infinite(parts):
        return INFINITE
    return parts[0] + parts[1]

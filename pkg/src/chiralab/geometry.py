"""Circle families on S² and the basic spherical projections.

A *circle family* is a finite set of great circles C_l = {x in S² : x·q_l = 0},
identified with their unit axes q_l.  Spin configurations downstream take
values on (unions of) such circles, so everything here is plain vector
geometry: normalization, projection onto a circle, distances to the axis
lines, and the two structured families used throughout — the *uniform* fan of
k circles sharing the diameter through ±e_y, and the *critical* family of
near-equator circles indexed by small tilts of order delta^(1/4).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChainTooShortError,
    DegenerateProjectionError,
    EmptyFamilyError,
    GridTooSmallError,
    InvalidDeltaError,
    ValidationError,
    ZeroVectorError,
)

_NORM_TOL = 1e-12


def project_sphere(u: np.ndarray) -> np.ndarray:
    """Normalize vectors onto the unit sphere.

    Parameters
    ----------
    u : ndarray, shape (..., 3)
        One vector or an array of vectors.

    Returns
    -------
    ndarray, same shape
        u / |u| taken along the last axis.

    Raises
    ------
    ZeroVectorError
        If any input vector has norm below 1e-12.
    """
    u = np.asarray(u, dtype=float)
    norms = np.linalg.norm(u, axis=-1, keepdims=True)
    if np.any(norms < _NORM_TOL):
        raise ZeroVectorError("cannot normalize a (near-)zero vector")
    return u / norms


def project_circle(u: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Project a vector onto the great circle with the given unit axis.

    The image is the closest point of {x : |x| = 1, x·axis = 0}, obtained by
    removing the axis component and renormalizing.

    Raises
    ------
    DegenerateProjectionError
        If u is parallel to the axis within 1e-12, so every circle point is
        equally close.
    """
    u = np.asarray(u, dtype=float)
    axis = project_sphere(axis)
    w = u - np.dot(u, axis) * axis
    n = np.linalg.norm(w)
    if n < _NORM_TOL:
        raise DegenerateProjectionError("input is parallel to the circle axis")
    return w / n


def circle_frame(axis: np.ndarray) -> np.ndarray:
    """Deterministic rotation R in SO(3) mapping the plane z = 0 onto x·axis = 0.

    The columns of R are (e1, e2, axis): e1 is the Gram-Schmidt projection of
    whichever of e_x, e_y, e_z is least aligned with the axis (ties toward
    e_x), and e2 = axis × e1.  Points of the circle are
    R @ (cos t, sin t, 0) = cos(t)·e1 + sin(t)·e2, traversed with positive
    chirality about the axis.  For axis = e_z the frame is the identity.
    """
    q = project_sphere(axis)
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(q)))] = 1.0
    e1 = ref - np.dot(ref, q) * q
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(q, e1)
    return np.stack([e1, e2, q], axis=1)


def frame_vectors(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The in-plane columns (e1, e2) of circle_frame(axis)."""
    r = circle_frame(axis)
    return r[:, 0], r[:, 1]


@dataclass(frozen=True)
class SphericalAngles:
    """Polar/azimuthal coordinates of a point on S².

    theta is the polar angle in [0, pi] measured from e_z, phi the azimuth in
    [0, 2·pi), so that the point is
    (sin theta · cos phi, sin theta · sin phi, cos theta).
    """

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValidationError(f"polar angle {self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValidationError(f"azimuth {self.phi} outside [0, 2*pi)")

    def to_cartesian(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_cartesian(cls, v: np.ndarray) -> "SphericalAngles":
        x, y, z = project_sphere(v)
        phi = math.atan2(y, x) % (2.0 * math.pi)
        return cls(theta=math.acos(max(-1.0, min(1.0, z))), phi=phi)


def dist_to_lines(u: np.ndarray, axes) -> np.ndarray | float:
    """Distance from u to the union of the lines spanned by the axes.

    Parameters
    ----------
    u : ndarray, shape (..., 3)
    axes : ndarray (k, 3) or CircleFamily

    Returns
    -------
    min_l sqrt(|u|² − (u·q_l)²), scalar for a single vector.
    """
    if isinstance(axes, CircleFamily):
        axes = axes.axes
    axes = np.asarray(axes, dtype=float)
    if axes.ndim != 2 or axes.shape[0] == 0:
        raise EmptyFamilyError("need at least one axis")
    u = np.asarray(u, dtype=float)
    dots = u @ axes.T  # (..., k)
    norm2 = np.sum(u * u, axis=-1)[..., None]
    d2 = np.clip(norm2 - dots * dots, 0.0, None)
    out = np.sqrt(np.min(d2, axis=-1))
    return float(out) if out.ndim == 0 else out


def nearest_circle_index(u: np.ndarray, family, tol: float = 1e-9):
    """Circle of the family whose plane is closest to u, with its residual.

    Returns ``(index, residual)`` where index = argmin_l |u·q_l| (ties resolve
    to the smallest index) and residual = |u·q_index|.  Membership of u in the
    union of circles holds iff residual <= tol; the tolerance is carried in
    the signature for documentation but the comparison is left to callers.
    Vectorized over leading axes of u.
    """
    if tol < 0.0:
        raise ValidationError(f"tol must be >= 0, got {tol}")
    axes = family.axes if isinstance(family, CircleFamily) else np.asarray(family, float)
    if axes.ndim != 2 or axes.shape[0] == 0:
        raise EmptyFamilyError("need at least one axis")
    u = np.asarray(u, dtype=float)
    residuals = np.abs(u @ axes.T)
    idx = np.argmin(residuals, axis=-1)
    res = np.min(residuals, axis=-1)
    if idx.ndim == 0:
        return int(idx), float(res)
    return idx, res


def _canonical_axes(axes: np.ndarray) -> np.ndarray:
    """Unit axes with the sign fixed so the last nonzero coordinate is positive."""
    axes = project_sphere(np.asarray(axes, dtype=float).reshape(-1, 3)).copy()
    for q in axes:
        nz = np.nonzero(np.abs(q) > 1e-14)[0]
        if nz.size and q[nz[-1]] < 0.0:
            q *= -1.0
    return axes


@dataclass(frozen=True, eq=False)
class CircleFamily:
    """A finite family of great circles, stored as canonical unit axes.

    Attributes
    ----------
    axes : ndarray, shape (k, 3)
        Unit axes, sign-normalized so the last nonzero coordinate is >= 0.
    kind : str
        "uniform", "critical" or "explicit".
    delta : float or None
        The lattice parameter the family was built for ("critical" only).
    """

    axes: np.ndarray
    kind: str = "explicit"
    delta: float | None = None

    def __post_init__(self):
        axes = _canonical_axes(self.axes)
        if axes.shape[0] < 1:
            raise EmptyFamilyError("a circle family needs at least one axis")
        if self.kind not in ("uniform", "critical", "explicit"):
            raise ValidationError(f"unknown family kind {self.kind!r}")
        axes.setflags(write=False)
        object.__setattr__(self, "axes", axes)

    @property
    def k(self) -> int:
        return self.axes.shape[0]

    def vertical_index(self, m: int) -> int:
        """Index of the m-th tilted-equator axis of a critical family (m = 1..k/2)."""
        if self.kind != "critical":
            raise ValidationError("vertical_index is defined for critical families only")
        if not 1 <= m <= self.k // 2:
            raise EmptyFamilyError(f"vertical circle m={m} outside 1..{self.k // 2}")
        return m - 1

    def horizontal_index(self, j: int) -> int:
        """Index of the j-th meridian axis of a critical family (j = 1..k/2)."""
        if self.kind != "critical":
            raise ValidationError("horizontal_index is defined for critical families only")
        if not 1 <= j <= self.k // 2:
            raise EmptyFamilyError(f"meridian circle j={j} outside 1..{self.k // 2}")
        return self.k // 2 + j - 1

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "k": self.k,
            "axes": [[float(c) for c in q] for q in self.axes],
        }
        if self.delta is not None:
            payload["delta"] = float(self.delta)
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CircleFamily":
        try:
            payload = json.loads(text)
            axes = np.array(payload["axes"], dtype=float)
            kind = payload.get("kind", "explicit")
            delta = payload.get("delta")
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed circle-family JSON: {exc}") from exc
        fam = cls(axes=axes, kind=kind, delta=delta)
        if "k" in payload and int(payload["k"]) != fam.k:
            raise ValidationError("circle-family JSON: k does not match the axes")
        return fam


def make_uniform_axes(k: int) -> CircleFamily:
    """The uniform fan of k circles through ±e_y.

    Axis j is e_z rotated about e_y by j·pi/k, j = 0..k−1, so consecutive
    circles meet at angle pi/k and every circle contains the common diameter
    through ±e_y.
    """
    if k < 1:
        raise EmptyFamilyError("uniform family needs k >= 1")
    j = np.arange(k)
    ang = j * math.pi / k
    axes = np.stack([np.sin(ang), np.zeros(k), np.cos(ang)], axis=1)
    return CircleFamily(axes=axes, kind="uniform")


def _meridian_slope(phi: float) -> float:
    """Solve a·cos(phi) + sin(phi) = 0 for a in [−1, 1] by bisection.

    This is the slope making (a, 1, 0) orthogonal to the whole meridian of
    azimuth phi; the root is −tan(phi), but we locate it to ~1e-15 with the
    same bracketing the axes are defined by.
    """

    def g(a: float) -> float:
        return a * math.cos(phi) + math.sin(phi)

    lo, hi = -1.0, 1.0
    if g(lo) > 0.0 or g(hi) < 0.0:
        raise InvalidDeltaError("meridian azimuth too steep: slope leaves [-1, 1]")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def make_critical_axes(delta: float, k: int | None = None) -> CircleFamily:
    """The critical family of circles at lattice parameter delta.

    The first k/2 axes are the tilted equators
        q_m = (0, −m·delta^(1/4), 1) / sqrt(1 + m²·sqrt(delta)),  m = 1..k/2,
    whose circles step down from the equator in elevation increments of order
    delta^(1/4); the last k/2 axes are meridian circles of azimuth
    phi_j = j·sqrt(2·delta),
        q_j = (a_j, 1, 0) / sqrt(1 + a_j²),  a_j = −tan(phi_j),
    found by bisection.  k defaults to 2·ceil(delta^(−1/4)) and must be even.

    Raises
    ------
    InvalidDeltaError
        If delta is outside (0, 1) or the largest meridian azimuth reaches
        pi/4 (the slope bracket [−1, 1] fails there).
    EmptyFamilyError
        If an explicit k is odd or < 2.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidDeltaError(f"delta={delta} outside (0, 1)")
    if k is None:
        # guard against pow() landing a hair above an exact integer
        k = 2 * math.ceil(delta ** -0.25 - 1e-9)
    if k < 2 or k % 2:
        raise EmptyFamilyError(f"critical family needs even k >= 2, got {k}")
    half = k // 2
    root = math.sqrt(2.0 * delta)
    if half * root >= math.pi / 4.0:
        raise InvalidDeltaError(
            f"largest meridian azimuth {half * root:.3f} >= pi/4; reduce k or delta"
        )
    q4 = delta ** 0.25
    vertical = [
        np.array([0.0, -m * q4, 1.0]) / math.sqrt(1.0 + m * m * math.sqrt(delta))
        for m in range(1, half + 1)
    ]
    horizontal = []
    for j in range(1, half + 1):
        a = _meridian_slope(j * root)
        horizontal.append(np.array([a, 1.0, 0.0]) / math.sqrt(1.0 + a * a))
    return CircleFamily(axes=np.array(vertical + horizontal), kind="critical", delta=delta)


@dataclass
class SpinChain:
    """A discrete spin configuration on the 1D lattice lam·Z ∩ [0, 1].

    values[i] is the unit spin at x = lam·i.  delta is the frustration
    parameter of the energy the chain is meant for (the ground-state turning
    angle is arccos(1−delta)); it is carried here so that chirality fields and
    scaled energies need no extra bookkeeping.  ``periodic`` marks chains
    whose first and last turning angles agree (checked, not enforced).
    """

    values: np.ndarray
    lam: float
    delta: float
    periodic: bool = False

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 2:
            raise ValidationError(f"spin chain needs shape (N+1, 3) with N >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("spin chain contains non-finite entries")
        err = np.max(np.abs(np.einsum("ij,ij->i", v, v) - 1.0))
        if err > 2e-9:
            raise ValidationError(f"spins deviate from unit norm by {err:.2e}")
        if not (self.lam > 0.0):
            raise ValidationError(f"lam must be positive, got {self.lam}")
        if not (0.0 < self.delta < 2.0):
            raise InvalidDeltaError(f"delta={self.delta} outside (0, 2)")
        if self.periodic:
            d0 = float(np.dot(v[1], v[0]))
            d1 = float(np.dot(v[-1], v[-2]))
            if abs(d0 - d1) > 1e-8:
                raise ValidationError(
                    f"periodic flag set but boundary turning angles differ by {abs(d0 - d1):.2e}"
                )
        self.values = v

    @property
    def n_sites(self) -> int:
        return self.values.shape[0]

    @property
    def n_bonds(self) -> int:
        return self.values.shape[0] - 1

    @property
    def x(self) -> np.ndarray:
        """Physical positions lam·i of the sites."""
        return self.lam * np.arange(self.n_sites)

    def require_sites(self, n: int, what: str) -> None:
        if self.n_sites < n:
            raise ChainTooShortError(f"{what} needs at least {n} sites, chain has {self.n_sites}")


@dataclass
class SpinField2D:
    """A spin configuration on the 2D lattice lam·Z² ∩ [0, 1]², values[r, c] at (lam·c, lam·r).

    Axis 1 (columns) is the frustrated chain direction; axis 0 (rows) is the
    ferromagnetically coupled transverse direction.
    """

    values: np.ndarray
    lam: float
    delta: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[2] != 3:
            raise ValidationError(f"spin field needs shape (rows, cols, 3), got {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 2:
            raise GridTooSmallError(f"grid {v.shape[:2]} too small")
        if not np.all(np.isfinite(v)):
            raise ValidationError("spin field contains non-finite entries")
        err = np.max(np.abs(np.einsum("rcj,rcj->rc", v, v) - 1.0))
        if err > 2e-9:
            raise ValidationError(f"spins deviate from unit norm by {err:.2e}")
        if not (self.lam > 0.0):
            raise ValidationError(f"lam must be positive, got {self.lam}")
        if not (0.0 < self.delta < 2.0):
            raise InvalidDeltaError(f"delta={self.delta} outside (0, 2)")
        self.values = v

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[:2]

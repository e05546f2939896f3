"""Explicit low-energy spin constructions and their profile machinery.

Everything here builds configurations whose energy is understood in closed
form up to small, quantified corrections:

* ``helix_chain`` — exact ground helices (zero stencil energy);
* ``build_tanh_transition`` — a single chirality wall between two circles,
  driven by a truncated tanh profile whose transition integral is 8/3 + O(ε);
* ``build_two_transition_chain`` — two well-separated walls (axis pattern
  a → b → a) with the middle plateau speed-tuned so both seams land exactly
  on circle intersections;
* ``build_critical_path`` — the meridian-hopping path between vertical
  circles of a critical family: per adjacent circle pair, one azimuth-grid
  hop whose elevation is lifted by a C¹ ramp with second differences below
  the 8·delta budget, followed by a full revolution whose angular speed is
  ramped to match the hop's junction speeds;
* ``build_distance_profile_field`` — the regularized distance-profile field
  whose phase-field energy meets the wall-density bound up to (1+3σ)(1+τ)².

All chain builders emit unit spins that pass circle-membership checks at
tolerances well below 1e-8 by construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .energy import ModelParams
from .errors import (
    BadJumpSetError,
    ChainTooShortError,
    FamilyMismatchError,
    InvalidDeltaError,
    RegimeViolationError,
    ValidationError,
)
from .geometry import CircleFamily, SpinChain, frame_vectors, project_sphere
from .phasefield import LatticeField, PhaseFieldProblem

__all__ = [
    "ProfileSpec",
    "profile_tanh",
    "profile_f_tau",
    "quadrature_profile_constant",
    "helix_chain",
    "build_tanh_transition",
    "build_two_transition_chain",
    "CriticalPathSpec",
    "build_critical_path",
    "PiecewiseConstantTarget",
    "build_distance_profile_field",
]


# ---------------------------------------------------------------------------
# transition profiles


@dataclass(frozen=True)
class ProfileSpec:
    """A ±1-plateau transition profile: tanh core plus a polynomial ramp.

    kind "tanh_odd": odd, equal to tanh(x) on [0, x_plateau] with
    x_plateau = atanh(1 − eps_profile), continued by a cubic Hermite ramp of
    width eps_profile that reaches the plateau value 1 with zero slope.

    kind "tau_optimal": equal to tanh(x) on [0, x_plateau] with
    x_plateau = atanh(1 − eps_profile²/4), continued by a quintic ramp of
    width 1 matching value, slope and curvature at the knot (C²), reaching 1
    with zero slope and curvature.  Extended oddly so value(0) = 0 either way.

    ``coeffs`` holds the ramp polynomial's coefficients (ascending order, in
    the scaled ramp variable t = (x − x_plateau)/ramp_width); they are filled
    automatically and only accepted as input for round-tripping.
    """

    kind: str
    eps_profile: float
    coeffs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("tanh_odd", "tau_optimal"):
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if not 0.0 < self.eps_profile < 1.0:
            raise ValidationError(
                f"eps_profile must lie in (0, 1), got {self.eps_profile}"
            )
        if self.coeffs is None:
            object.__setattr__(self, "coeffs", self._ramp_coeffs())

    @property
    def x_plateau(self) -> float:
        """Knot where the tanh core hands over to the ramp."""
        if self.kind == "tanh_odd":
            return math.atanh(1.0 - self.eps_profile)
        return math.atanh(1.0 - self.eps_profile ** 2 / 4.0)

    @property
    def ramp_width(self) -> float:
        return self.eps_profile if self.kind == "tanh_odd" else 1.0

    def _ramp_coeffs(self) -> tuple[float, ...]:
        w = self.ramp_width
        f0 = math.tanh(self.x_plateau)
        d0 = 1.0 - f0 * f0
        if self.kind == "tanh_odd":
            # cubic Hermite: (f0, d0) at the knot, (1, 0) at the plateau end
            m0 = w * d0
            return (f0, m0, -3.0 * f0 - 2.0 * m0 + 3.0, 2.0 * f0 + m0 - 2.0)
        # quintic: (f0, d0, f0'') at the knot, (1, 0, 0) at the plateau end
        s0 = -2.0 * f0 * d0
        c0, c1, c2 = f0, w * d0, w * w * s0 / 2.0
        a = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
        rhs = np.array([1.0 - c0 - c1 - c2, -c1 - 2.0 * c2, -2.0 * c2])
        c3, c4, c5 = np.linalg.solve(a, rhs)
        return (c0, c1, c2, float(c3), float(c4), float(c5))

    def value(self, x):
        """Profile value, vectorized; odd in x and ±1 beyond the ramp."""
        x = np.asarray(x, dtype=float)
        s = np.sign(x)
        a = np.abs(x)
        xp, w = self.x_plateau, self.ramp_width
        t = np.clip((a - xp) / w, 0.0, 1.0)
        ramp = np.polynomial.polynomial.polyval(t, np.asarray(self.coeffs))
        core = np.tanh(np.minimum(a, xp))
        out = np.where(a <= xp, core, np.where(a >= xp + w, 1.0, ramp))
        out = s * out
        return float(out) if out.ndim == 0 else out

    def slope(self, x):
        """d(value)/dx, vectorized; zero beyond the ramp."""
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        xp, w = self.x_plateau, self.ramp_width
        t = np.clip((a - xp) / w, 0.0, 1.0)
        dcoef = np.polynomial.polynomial.polyder(np.asarray(self.coeffs))
        ramp = np.polynomial.polynomial.polyval(t, dcoef) / w
        core = 1.0 - np.tanh(np.minimum(a, xp)) ** 2
        out = np.where(a <= xp, core, np.where(a >= xp + w, 0.0, ramp))
        return float(out) if out.ndim == 0 else out


def profile_tanh(eps: float) -> ProfileSpec:
    """Odd tanh profile truncated at atanh(1−eps) with a width-eps C¹ ramp."""
    return ProfileSpec(kind="tanh_odd", eps_profile=float(eps))


def profile_f_tau(tau: float) -> ProfileSpec:
    """Distance profile: tanh up to atanh(1−tau²/4), then a width-1 C² ramp."""
    return ProfileSpec(kind="tau_optimal", eps_profile=float(tau))


def quadrature_profile_constant(spec: ProfileSpec) -> float:
    """∫ (f²−1)² + (f')² over the transition, by adaptive quadrature.

    For the odd kind the integral runs over the full two-sided transition
    [−x_plateau−w, x_plateau+w] and approaches 8/3 as eps_profile → 0; for
    the one-sided distance profile it runs over [0, x_plateau+w] and
    approaches 4/3.  Beyond those windows the integrand vanishes identically.
    """
    hi = spec.x_plateau + spec.ramp_width
    lo = -hi if spec.kind == "tanh_odd" else 0.0

    def integrand(x):
        f = spec.value(x)
        return (f * f - 1.0) ** 2 + spec.slope(x) ** 2

    total, _ = quad(
        integrand, lo, hi, points=[-spec.x_plateau, 0.0, spec.x_plateau], limit=200
    )
    return float(total)


# ---------------------------------------------------------------------------
# chain builders


def helix_chain(axis, p: ModelParams, n_sites: int | None = None,
                sign: int = 1, phase: float = 0.0) -> SpinChain:
    """Ground helix on the circle orthogonal to ``axis``.

    Constant angle increments 2·arcsin(sqrt(delta/2)) make every stencil
    vanish identically; ``sign`` picks the handedness (chirality ±axis) and
    ``phase`` the starting point on the circle.
    """
    axis = project_sphere(np.asarray(axis, dtype=float))
    n = round(1.0 / p.lam) + 1 if n_sites is None else int(n_sites)
    if n < 3:
        raise ChainTooShortError("a helix chain needs at least 3 sites")
    if sign not in (-1, 1):
        raise ValidationError(f"sign must be ±1, got {sign}")
    phibar = 2.0 * math.asin(math.sqrt(p.delta / 2.0))
    e1, e2 = frame_vectors(axis)
    ang = phase + sign * phibar * np.arange(n)
    values = np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2
    return SpinChain(values=values, lam=p.lam, delta=p.delta, periodic=True)


def _seam_frames(q_from: np.ndarray, q_to: np.ndarray):
    """Hub (shared point of both circles) and in-circle tangents at the hub."""
    cross = np.cross(q_from, q_to)
    nc = float(np.linalg.norm(cross))
    if nc < 1e-12:
        raise FamilyMismatchError(
            "the two circles are parallel: no transverse seam point exists"
        )
    hub = cross / nc
    return hub, np.cross(q_from, hub), np.cross(q_to, hub)


def _chain_from_angles(phi, mid, hub, t_left, t_right, lam, delta) -> SpinChain:
    n = len(phi)
    values = np.empty((n, 3))
    cos, sin = np.cos(phi), np.sin(phi)
    values[: mid + 1] = cos[: mid + 1, None] * hub + sin[: mid + 1, None] * t_left
    values[mid + 1:] = cos[mid + 1:, None] * hub + sin[mid + 1:, None] * t_right
    d0 = float(np.dot(values[0], values[1]))
    d1 = float(np.dot(values[-2], values[-1]))
    return SpinChain(
        values=values, lam=lam, delta=delta, periodic=abs(d0 - d1) <= 1e-8
    )


def _warn_regime(p: ModelParams) -> None:
    ratio = p.lam / math.sqrt(p.delta)
    if ratio > 0.15:
        warnings.warn(
            f"lam/sqrt(delta) = {ratio:.3g}: the wall occupies a sizable "
            "fraction of the chain and plateau estimates degrade",
            stacklevel=3,
        )


def build_tanh_transition(
    q_from,
    q_to,
    p: ModelParams,
    spec: ProfileSpec,
    n_sites: int | None = None,
    flip: bool = False,
    center: float = 0.5,
) -> SpinChain:
    """Single chirality wall: z runs from −q_from to +q_to through a seam.

    The chain lives on the circle orthogonal to q_from up to the seam site
    (the hub normalize(q_from × q_to), the intersection point of the two
    circles) and on the q_to circle after it.  Bond angle increments are
    2·arcsin(sqrt(delta/2)·f) with f the profile sampled at
    s_i = sqrt(2·delta)·(i − center/lam), so the plateaus are exact ground
    helices and the wall's scaled energy is the profile's transition
    integral plus seam corrections of order delta.

    ``flip=True`` builds the handedness wall −q → +q on the single circle
    q_from (q_to is ignored).  Equal axes with flip=False yield a pure helix
    with no wall; parallel distinct circles raise FamilyMismatchError.
    """
    _warn_regime(p)
    lam, delta = p.lam, p.delta
    n = round(1.0 / lam) + 1 if n_sites is None else int(n_sites)
    nbonds = n - 1
    if nbonds < 3:
        raise ChainTooShortError("a transition chain needs at least 4 sites")
    qf = project_sphere(np.asarray(q_from, dtype=float))
    qt = qf if flip else project_sphere(np.asarray(q_to, dtype=float))

    if not flip and float(np.linalg.norm(qf - qt)) < 1e-12:
        return helix_chain(qf, p, n_sites=n)

    if flip:
        hub, t_left = frame_vectors(qf)
        t_right = t_left
    else:
        hub, t_left, t_right = _seam_frames(qf, qt)

    mid = int(round(center / lam))
    if not 1 <= mid <= nbonds - 1:
        raise ChainTooShortError(
            f"seam site {mid} outside the chain (0..{nbonds}); "
            "grow n_sites or move center"
        )
    s = math.sqrt(2.0 * delta) * (np.arange(nbonds) - center / lam)
    f = spec.value(s)
    inc = 2.0 * np.arcsin(math.sqrt(delta / 2.0) * f)
    cum = np.concatenate(([0.0], np.cumsum(inc)))
    phi = cum - cum[mid]
    return _chain_from_angles(phi, mid, hub, t_left, t_right, lam, delta)


def build_two_transition_chain(
    q_a,
    q_b,
    p: ModelParams,
    spec: ProfileSpec,
    n_sites: int | None = None,
    centers: tuple[float, float] = (1.0 / 3.0, 2.0 / 3.0),
) -> SpinChain:
    """Two well-separated walls, axis pattern a → b → a (chirality −a, +b, −a).

    Both seams must land on intersection points of the two circles.  The
    first is anchored there by construction; the second is arranged by
    scaling the middle plateau's angle increments by a common factor (1+eta),
    solved so the angle traveled between the seams is an exact multiple of π.
    The tuning costs scaled energy of order eta²·sqrt(delta)·n_plateau — a
    few 1e-4 for the default geometry, far below the two-wall budget.
    """
    _warn_regime(p)
    lam, delta = p.lam, p.delta
    n = round(1.0 / lam) + 1 if n_sites is None else int(n_sites)
    nbonds = n - 1
    c1, c2 = centers
    if not 0.0 < c1 < c2 < 1.0:
        raise ValidationError(
            f"wall centers must satisfy 0 < c1 < c2 < 1, got {centers}"
        )
    qa = project_sphere(np.asarray(q_a, dtype=float))
    qb = project_sphere(np.asarray(q_b, dtype=float))
    hub, t_a, t_b = _seam_frames(qa, qb)

    i1 = int(round(c1 / lam))
    i2 = int(round(c2 / lam))
    if not 1 <= i1 < i2 <= nbonds - 1:
        raise ChainTooShortError("chain too short to hold two separated walls")

    j = np.arange(nbonds)
    root = math.sqrt(2.0 * delta)
    f_up = spec.value(root * (j - c1 / lam))      # −1 → +1 at the first wall
    f_down = -spec.value(root * (j - c2 / lam))   # +1 → −1 at the second
    g = np.minimum(f_up, f_down)
    mask = (g >= 0.999) & (j >= i1) & (j < i2)
    if not np.any(mask):
        raise ChainTooShortError("no middle plateau left between the walls")
    half = math.sqrt(delta / 2.0)

    def mid_angle(eta: float) -> float:
        scale = np.where(mask[i1:i2], 1.0 + eta, 1.0)
        return float(np.sum(2.0 * np.arcsin(half * g[i1:i2] * scale)))

    base = mid_angle(0.0)
    target = round(base / math.pi) * math.pi
    # the dependence on eta is almost exactly linear; bracket around the
    # linear estimate and polish with brentq
    den = float(np.sum(2.0 * half * g[i1:i2][mask[i1:i2]]))
    eta0 = (target - base) / den
    width = max(abs(eta0), 1e-9)
    lo, hi = eta0 - width, eta0 + width
    for _ in range(60):
        if (mid_angle(lo) - target) * (mid_angle(hi) - target) <= 0.0:
            break
        lo, hi = lo - width, hi + width
        width *= 2.0
    else:
        raise ValidationError("failed to bracket the plateau speed factor")
    eta = brentq(lambda t: mid_angle(t) - target, lo, hi, xtol=1e-18, rtol=9e-16)

    scale = np.where(mask, 1.0 + eta, 1.0)
    inc = 2.0 * np.arcsin(half * g * scale)
    cum = np.concatenate(([0.0], np.cumsum(inc)))
    phi = cum - cum[i1]

    values = np.empty((n, 3))
    cos, sin = np.cos(phi), np.sin(phi)
    for sl, tan in ((np.s_[: i1 + 1], t_a), (np.s_[i1 + 1: i2 + 1], t_b),
                    (np.s_[i2 + 1:], t_a)):
        values[sl] = cos[sl, None] * hub + sin[sl, None] * tan
    d0 = float(np.dot(values[0], values[1]))
    d1 = float(np.dot(values[-2], values[-1]))
    return SpinChain(values=values, lam=lam, delta=delta,
                     periodic=abs(d0 - d1) <= 1e-8)


# ---------------------------------------------------------------------------
# critical-regime meridian-hopping path


@dataclass(frozen=True)
class CriticalPathSpec:
    """Parameters of a path between vertical circles of a critical family.

    ``m_from``/``m_to`` index the vertical circles (1-based, up to k/2).  The
    elevation lift along each hop is D(φ)·S(j/K) where D is the exact
    elevation gap between consecutive circles and S is a C¹ ramp that is
    quadratic on [0, ramp_fraction], linear up to plateau_end, and quadratic
    again to 1 — flat at both ends, with the small peak curvature needed to
    keep the lift's second differences within the 8·delta budget.

    ``revolution_sites`` overrides the per-revolution site count (default:
    a full turn at ground speed, about 2π/sqrt(2·delta) sites).
    """

    delta: float
    m_from: int
    m_to: int
    ramp_fraction: float = 0.4
    plateau_end: float = 0.6
    revolution_sites: int | None = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidDeltaError(f"delta must lie in (0, 1), got {self.delta}")
        if self.m_from < 1 or self.m_to < 1:
            raise ValidationError("vertical circle indices are 1-based positives")
        if not 0.0 < self.ramp_fraction < self.plateau_end < 1.0:
            raise ValidationError(
                "need 0 < ramp_fraction < plateau_end < 1, got "
                f"{self.ramp_fraction}, {self.plateau_end}"
            )

    @property
    def steps(self) -> int:
        return abs(self.m_to - self.m_from)

    def smoothing(self, s):
        """The C¹ ramp S with S(0)=S'(0)=0, S(1)=1, S'(1)=0, vectorized."""
        s = np.asarray(s, dtype=float)
        a, b = self.ramp_fraction, self.plateau_end
        slope = 2.0 / (1.0 + b - a)
        out = np.where(
            s <= a,
            slope * s * s / (2.0 * a),
            np.where(
                s <= b,
                slope * (s - a / 2.0),
                1.0 - slope * (1.0 - s) ** 2 / (2.0 * (1.0 - b)),
            ),
        )
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


_HUB = np.array([1.0, 0.0, 0.0])


def _vertical_axis_tangent(c: int, q: float):
    """(axis, in-circle tangent at the hub) of vertical circle c."""
    norm = math.sqrt(1.0 + (c * q) ** 2)
    axis = np.array([0.0, -c * q, 1.0]) / norm
    tangent = np.array([0.0, 1.0, c * q]) / norm
    return axis, tangent


def _circle_points(c: int, q: float, angles: np.ndarray) -> np.ndarray:
    _, w = _vertical_axis_tangent(c, q)
    return np.cos(angles)[:, None] * _HUB + np.sin(angles)[:, None] * w


def _hop_points(m: int, q: float, K: int, root: float, spec: CriticalPathSpec):
    """Sites of the hop from vertical circle m to m+1 (K+1 points, hub first)."""
    phis = root * np.arange(K + 1)
    sines = np.sin(phis)
    base = np.arctan(m * q * sines)
    lift = np.arctan((m + 1) * q * sines) - base
    theta = base + lift * spec.smoothing(np.arange(K + 1) / K)
    cos_t = np.cos(theta)
    return np.stack(
        [cos_t * np.cos(phis), cos_t * np.sin(phis), np.sin(theta)], axis=1
    )


def _ramped_increments(arc: float, dt_in: float, dt_out: float,
                       n: int, w: int) -> np.ndarray:
    """n angle increments summing exactly to arc: ramp dt_in → cruise → dt_out."""
    w = max(1, min(w, (n - 2) // 2))
    cruise = (arc - (dt_in + dt_out) * (w + 1) / 2.0) / (n - w - 1)
    inc = np.full(n, cruise)
    inc[:w] = dt_in + (cruise - dt_in) * (np.arange(w) / w)
    inc[n - w:] = cruise + (dt_out - cruise) * (np.arange(1, w + 1) / w)
    # close the residual rounding gap on the cruise section so the sum is exact
    body = n - 2 * w
    if body > 0:
        inc[w: n - w] += (arc - float(np.sum(inc))) / body
    else:
        inc[-1] += arc - float(np.sum(inc))
    return inc


def build_critical_path(
    spec: CriticalPathSpec,
    family: CircleFamily,
    p: ModelParams,
    n_sites: int | None = None,
) -> SpinChain:
    """Chain transitioning between vertical circles of a critical family.

    Layout: a ground-helix fill on the starting circle ending at the hub
    (1,0,0), then per adjacent circle pair a meridian-grid hop (azimuths
    j·sqrt(2·delta), elevations lifted onto the next circle) followed by a
    full revolution on the reached circle back to the hub, then a final
    ground-helix fill.  Revolutions and fills ramp their angle increments
    near the junctions so consecutive bond lengths match where the hop's
    inherent 3D speed exceeds the ground speed; the ramp windows scale like
    delta^(−1/2) and for low circle indices contribute energy far below the
    per-step cost.

    Paths downward (m_to < m_from) are the upward chain traversed backwards,
    which mirrors the chirality signs but leaves the energy unchanged.  Equal
    endpoints yield a pure ground helix on the circle (no revolution), so the
    zero-step path costs nothing.
    """
    delta = spec.delta
    if family.kind != "critical":
        raise FamilyMismatchError("critical paths need a critical circle family")
    if abs(family.delta - delta) > 1e-12 * delta or abs(p.delta - delta) > 1e-12 * delta:
        raise FamilyMismatchError(
            f"delta mismatch: spec {delta}, family {family.delta}, params {p.delta}"
        )
    if p.lam / delta ** 0.75 >= 1.0:
        raise RegimeViolationError(
            f"lam/delta^0.75 = {p.lam / delta ** 0.75:.3g} >= 1: the hop grid "
            "no longer fits the chain"
        )
    half = family.k // 2
    for name, m in (("m_from", spec.m_from), ("m_to", spec.m_to)):
        if m > half:
            raise FamilyMismatchError(f"{name}={m} exceeds the k/2={half} verticals")

    n = round(1.0 / p.lam) + 1 if n_sites is None else int(n_sites)
    q = delta ** 0.25
    root = math.sqrt(2.0 * delta)
    phibar = 2.0 * math.asin(math.sqrt(delta / 2.0))

    if spec.m_from == spec.m_to:
        axis, _ = _vertical_axis_tangent(spec.m_from, q)
        return helix_chain(axis, p, n_sites=n)

    lo, hi = sorted((spec.m_from, spec.m_to))
    rungs = list(range(lo, hi))
    K = half
    w_target = max(8, round(0.6 / math.sqrt(delta)))

    hops = [_hop_points(m, q, K, root, spec) for m in rungs]
    first_chords = [float(np.linalg.norm(h[1] - h[0])) for h in hops]
    last_chords = [float(np.linalg.norm(h[-1] - h[-2])) for h in hops]
    ground_chord = 2.0 * math.sin(phibar / 2.0)

    # exit angle of each hop on its target circle, measured from the hub
    t_ends = []
    for m, h in zip(rungs, hops):
        u = h[-1]
        t_ends.append(math.atan2(math.hypot(1.0, (m + 1) * q) * u[1], u[0]))

    rev_counts = [
        spec.revolution_sites
        if spec.revolution_sites is not None
        else max(8, round((2.0 * math.pi - t_end) / phibar))
        for t_end in t_ends
    ]

    fixed = sum(K + nr for nr in rev_counts)
    leftover = n - 1 - fixed
    if leftover < 8:
        raise ChainTooShortError(
            f"path structure needs {fixed + 9} sites, chain has {n}"
        )
    n_pre = leftover // 2
    n_post = leftover - n_pre

    pieces = []
    # fill on the starting circle, ramping up into the first hop's speed
    w_pre = max(1, min(w_target, n_pre // 3))
    dt0 = 2.0 * math.asin(min(first_chords[0] / 2.0, 1.0))
    inc_pre = np.full(n_pre, phibar)
    inc_pre[n_pre - w_pre:] = phibar + (dt0 - phibar) * (
        np.arange(1, w_pre + 1) / w_pre
    )
    ang_pre = np.concatenate(([0.0], np.cumsum(inc_pre)))
    ang_pre -= ang_pre[-1]
    pieces.append(_circle_points(lo, q, ang_pre))

    for idx, (m, hop) in enumerate(zip(rungs, hops)):
        pieces.append(hop[1:])
        dt_in = 2.0 * math.asin(min(last_chords[idx] / 2.0, 1.0))
        if idx + 1 < len(rungs):
            dt_out = 2.0 * math.asin(min(first_chords[idx + 1] / 2.0, 1.0))
        else:
            dt_out = phibar
        nr = rev_counts[idx]
        w_rev = min(w_target, nr // 3)
        inc = _ramped_increments(2.0 * math.pi - t_ends[idx], dt_in, dt_out,
                                 nr, w_rev)
        angles = t_ends[idx] + np.cumsum(inc)
        pieces.append(_circle_points(m + 1, q, angles))

    ang_post = phibar * np.arange(1, n_post + 1)
    pieces.append(_circle_points(hi, q, ang_post))

    values = np.concatenate(pieces, axis=0)
    if spec.m_to < spec.m_from:
        values = values[::-1].copy()
    d0 = float(np.dot(values[0], values[1]))
    d1 = float(np.dot(values[-2], values[-1]))
    return SpinChain(values=values, lam=p.lam, delta=delta,
                     periodic=abs(d0 - d1) <= 1e-8)


# ---------------------------------------------------------------------------
# distance-profile recovery field


@dataclass(frozen=True)
class PiecewiseConstantTarget:
    """A piecewise-constant vector field on [0,1]^d with a polyhedral jump set.

    ``value_at`` maps a point (shape (d,)) to the local well vector;
    ``simplexes`` lists the jump set as vertex arrays of shape (nv, d) with
    nv ∈ {1, 2, 3} (points, segments, triangles).  An empty tuple means no
    jumps — a globally constant target, for which the recovery field is the
    constant itself.
    """

    value_at: object
    simplexes: tuple = ()


def _dist_point_simplex(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Distance from each point (n, d) to one simplex with ≤ 3 vertices."""
    nv = verts.shape[0]
    if nv == 1:
        return np.linalg.norm(points - verts[0], axis=1)
    if nv == 2:
        a, b = verts
        ab = b - a
        denom = float(np.dot(ab, ab))
        if denom < 1e-30:
            return np.linalg.norm(points - a, axis=1)
        t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
        return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)
    if nv == 3:
        a, b, c = verts
        u, v = b - a, c - a
        gram = np.array([[u @ u, u @ v], [v @ u, v @ v]])
        if abs(np.linalg.det(gram)) < 1e-30:
            return np.minimum(
                _dist_point_simplex(points, verts[:2]),
                _dist_point_simplex(points, verts[1:]),
            )
        rhs = np.stack([(points - a) @ u, (points - a) @ v])
        st = np.linalg.solve(gram, rhs)
        inside = (st[0] >= 0.0) & (st[1] >= 0.0) & (st[0] + st[1] <= 1.0)
        proj = a + st[0][:, None] * u + st[1][:, None] * v
        d_in = np.linalg.norm(points - proj, axis=1)
        d_edges = np.minimum.reduce(
            [
                _dist_point_simplex(points, np.array([a, b])),
                _dist_point_simplex(points, np.array([b, c])),
                _dist_point_simplex(points, np.array([a, c])),
            ]
        )
        return np.where(inside, d_in, d_edges)
    raise ValidationError("jump simplexes support at most 3 vertices")


def build_distance_profile_field(
    z_target: PiecewiseConstantTarget,
    prob: PhaseFieldProblem,
    tau: float,
) -> LatticeField:
    """Regularized recovery field for a piecewise-constant target.

    Each lattice node x receives

        z(x) = ẑ(x) · f_τ( max(dist(x) − 3·sqrt(d)·λ, 0) / (ε·|ẑ(x)|) )

    with ẑ the target value, dist the distance to the jump set and f_τ the
    distance profile.  The field vanishes at every node within 3·sqrt(d)·λ
    of the jump set, equals the target wells away from the walls, and its
    phase-field energy matches the wall density up to (1+3σ)(1+τ)² factors.

    Raises
    ------
    BadJumpSetError
        If a jump simplex has vertices outside the closed unit cube.
    """
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must lie in (0, 1), got {tau}")
    d = prob.dim
    simplexes = []
    for s in z_target.simplexes:
        verts = np.asarray(s, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != d:
            raise BadJumpSetError(
                f"jump simplex must have shape (nv, {d}), got {verts.shape}"
            )
        if np.any(verts < -1e-12) or np.any(verts > 1.0 + 1e-12):
            raise BadJumpSetError("jump simplex leaves the closed unit cube")
        simplexes.append(verts)

    m = round(1.0 / prob.lam) + 1
    axes = [prob.lam * np.arange(m) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.ravel() for g in mesh], axis=1)

    if simplexes:
        dist = np.minimum.reduce([_dist_point_simplex(points, v) for v in simplexes])
    else:
        dist = np.full(len(points), np.inf)

    target = np.array([z_target.value_at(x) for x in points], dtype=float)
    mags = np.linalg.norm(target, axis=1)
    safe = np.maximum(mags, 1e-300)
    spec = profile_f_tau(tau)
    reg = np.maximum(dist - 3.0 * math.sqrt(d) * prob.lam, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        amp = np.where(np.isfinite(reg), spec.value(reg / (prob.eps * safe)), 1.0)
    values = target * np.asarray(amp)[:, None]
    shape = tuple(len(a) for a in axes) + (3,)
    return LatticeField(values=values.reshape(shape), problem=prob)

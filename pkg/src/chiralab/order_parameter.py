"""Chirality order parameter of a spin chain and its jump structure.

For a chain u on lam·Z ∩ [0,1] with frustration parameter delta, the scaled
chirality of bond i is

    z^i = (u^i × u^{i+1}) / sqrt(2·delta),   i = 0..N−1,

extended by duplication z^N := z^{N−1} so the field lives on the same lattice
as the spins.  On a ground helix |z| = sqrt(1 − delta/2) ≈ 1 and z is parallel
to the circle axis; transitions between helices show up as wells of |z| and/or
switches of the axis z aligns with.  ``detect_jumps`` turns a finite-n field
into that combinatorial picture.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDeltaError, ValidationError
from .geometry import CircleFamily, SpinChain

_CSV_MAGIC = "chiralab chirality-field v1"


def theta(u_i: np.ndarray, u_next: np.ndarray):
    """Turning angle arccos(u_i · u_next) in [0, pi].

    Accepts single vectors or arrays of vectors (dot taken along the last
    axis, clamped to [−1, 1] before arccos); pass ``values[:-1], values[1:]``
    of a chain to get all N bond angles at once.
    """
    dots = np.clip(np.sum(np.asarray(u_i, float) * np.asarray(u_next, float), axis=-1), -1.0, 1.0)
    out = np.arccos(dots)
    return float(out) if out.ndim == 0 else out


def beta(u_i: np.ndarray, u_next: np.ndarray):
    """Bond weight 2 / (1 + u_i·u_next), vectorized like ``theta``.

    The weights convert squared chirality moduli into squared
    difference-quotient moduli: beta_i·|z^i|² = |u^{i+1} − u^i|²/(2·delta)
    exactly.

    Raises
    ------
    ValidationError
        If some pair is antipodal within 1e-12 (the weight blows up).
    """
    dots = np.sum(np.asarray(u_i, float) * np.asarray(u_next, float), axis=-1)
    if np.any(dots <= -1.0 + 1e-12):
        raise ValidationError("antipodal spin pair: beta is unbounded")
    out = 2.0 / (1.0 + dots)
    return float(out) if out.ndim == 0 else out


@dataclass
class ChiralityField:
    """Scaled chirality z^i on the chain lattice, last value duplicated."""

    values: np.ndarray
    lam: float
    delta: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 2:
            raise ValidationError(f"chirality field needs shape (N+1, 3), got {v.shape}")
        self.values = v

    @property
    def n_bonds(self) -> int:
        return self.values.shape[0] - 1

    def modulus(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {_CSV_MAGIC} lam={self.lam!r} delta={self.delta!r}\n")
        buf.write("i,x,z1,z2,z3,znorm\n")
        mod = self.modulus()
        for i, (z, m) in enumerate(zip(self.values, mod)):
            x = self.lam * i
            buf.write(f"{i},{x:.17g},{z[0]:.17g},{z[1]:.17g},{z[2]:.17g},{m:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ChiralityField":
        lines = text.splitlines()
        if not lines or _CSV_MAGIC not in lines[0]:
            raise ValidationError("not a chirality-field CSV (missing version header)")
        m = re.search(r"lam=([^ ]+) delta=([^ ]+)", lines[0])
        if m is None:
            raise ValidationError("chirality-field CSV header lacks lam/delta")
        lam, delta = float(m.group(1)), float(m.group(2))
        data = np.loadtxt(io.StringIO("\n".join(lines[2:])), delimiter=",")
        data = np.atleast_2d(data)
        return cls(values=data[:, 2:5], lam=lam, delta=delta)


def chirality(chain: SpinChain, delta: float | None = None) -> ChiralityField:
    """The scaled chirality field of a chain (cross products / sqrt(2·delta)).

    ``delta`` defaults to the chain's own frustration parameter; passing it
    explicitly lets you normalize against a different reference model.
    """
    d = chain.delta if delta is None else float(delta)
    if not 0.0 < d < 2.0:
        raise InvalidDeltaError(f"delta must lie in (0, 2), got {d}")
    v = chain.values
    z = np.cross(v[:-1], v[1:]) / np.sqrt(2.0 * d)
    z = np.vstack([z, z[-1]])
    return ChiralityField(values=z, lam=chain.lam, delta=d)


@dataclass
class JumpInterval:
    """A maximal run of bonds where |z| stays above threshold with one axis label."""

    start: int          # first bond index
    stop: int           # one past the last bond index
    axis: int           # index into the family
    sign: int           # orientation of z along that axis (+1 / −1)
    mean_direction: np.ndarray


@dataclass
class Jump:
    site: int
    left_axis: int
    left_sign: int
    right_axis: int
    right_sign: int


@dataclass
class JumpReport:
    intervals: list[JumpInterval]
    jumps: list[Jump]
    drop_threshold: float

    @property
    def jump_count(self) -> int:
        return len(self.jumps)


def detect_jumps(
    field: ChiralityField,
    family: CircleFamily,
    drop_threshold: float = 0.25,
) -> JumpReport:
    """Segment a chirality field into labeled plateaus and count transitions.

    This is a finite-n proxy for the jump set of the limiting order parameter:
    bonds with |z^i| >= drop_threshold are grouped into maximal runs of
    constant (axis, sign) label, where the per-bond label is the family axis
    most aligned with z (largest |ẑ·q_l|, ties to the smallest index) and the
    sign orients z along it.  Each interval is then labeled once more by its
    mean direction.  A *jump* is recorded between consecutive intervals that
    either carry different (axis, sign) labels or are separated by a
    sub-threshold well — note a well with equal labels on both sides still
    counts (it contributes nothing to the total variation).
    """
    z = field.values[:-1]  # genuine bonds; the last value is a duplicate
    mod = np.linalg.norm(z, axis=1)
    mask = mod >= drop_threshold
    axes = family.axes

    n = z.shape[0]
    site_axis = np.full(n, -1)
    site_sign = np.zeros(n, dtype=int)
    if np.any(mask):
        dots = z[mask] @ axes.T
        a = np.argmax(np.abs(dots), axis=1)
        site_axis[mask] = a
        s = np.sign(dots[np.arange(a.size), a])
        site_sign[mask] = np.where(s >= 0, 1, -1)

    intervals: list[JumpInterval] = []
    i = 0
    while i < n:
        if site_axis[i] < 0:
            i += 1
            continue
        j = i + 1
        while j < n and site_axis[j] == site_axis[i] and site_sign[j] == site_sign[i]:
            j += 1
        mean = z[i:j].mean(axis=0)
        dots = mean @ axes.T
        axis = int(np.argmax(np.abs(dots)))
        sign = 1 if dots[axis] >= 0 else -1
        intervals.append(JumpInterval(start=i, stop=j, axis=axis, sign=sign, mean_direction=mean))
        i = j

    jumps: list[Jump] = []
    for left, right in zip(intervals, intervals[1:]):
        well = right.start > left.stop
        differ = (left.axis, left.sign) != (right.axis, right.sign)
        if well or differ:
            site = (left.stop + right.start) // 2
            jumps.append(
                Jump(
                    site=site,
                    left_axis=left.axis,
                    left_sign=left.sign,
                    right_axis=right.axis,
                    right_sign=right.sign,
                )
            )
    return JumpReport(intervals=intervals, jumps=jumps, drop_threshold=drop_threshold)


def total_variation(report: JumpReport, family: CircleFamily) -> float:
    """Total variation of the piecewise-constant axis picture.

    Sums |q_left − q_right| over consecutive interval pairs, using the
    canonical (unsigned) axis of each interval: sqrt(2) for a switch between
    perpendicular axes, 2|q1 − q2| for a there-and-back excursion.  A
    handedness flip on a single circle keeps the axis, so it contributes a
    jump but no variation; the signs stay available on the report's intervals
    for diagnostics.
    """
    axes = family.axes
    tv = 0.0
    for left, right in zip(report.intervals[:-1], report.intervals[1:]):
        tv += float(np.linalg.norm(axes[left.axis] - axes[right.axis]))
    return tv

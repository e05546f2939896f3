"""Frustrated chain energies, their renormalized stencil forms, and bounds.

The chain energy at the center of the package is the renormalized sliced form

    H(u) = 1/2 · Σ_{i=0}^{N−2} lam · |u^i − 2(1−delta)·u^{i+1} + u^{i+2}|²,

whose minimizers are the two delta-helices on any fixed circle.  Per chirality
transition the natural scaling divides by sqrt(2)·lam·delta^{3/2}; in those
units a single transition costs 8/3 in the vanishing-lam regime, which is what
the construction and minimization modules chase.  The 2D variants couple rows
of such chains ferromagnetically, and ``sandwich_bounds`` provides the
two-sided chirality-field estimate the scaling analysis rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooSmallError, ValidationError
from .geometry import CircleFamily, SpinChain, SpinField2D
from .kernels import sliced_energy_raw


@dataclass(frozen=True)
class ModelParams:
    """Scaling parameters of one frustrated-chain model.

    Parameters
    ----------
    lam : float
        Lattice spacing, > 0.
    delta : float
        Frustration depth, in (0, 1); the ground helices turn by
        2·arcsin(sqrt(delta/2)) per bond.
    j2 : float, optional
        Transverse ferromagnetic coupling of the 2D variants, >= 0.
    k : int, optional
        Number of constraint circles; 0 means unconstrained (the sentinel
        used by ``energy_constrained`` to skip the membership check).

    Notes
    -----
    The asymptotic analysis lives in the regime lam/sqrt(delta) -> 0 and,
    for constrained problems, k·delta^{1/4} bounded.  Those ratios are
    reported by ``regime_report`` but never enforced here — experiments
    decide what to do with them.
    """

    lam: float
    delta: float
    j2: float = 0.0
    k: int = 0

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise ValidationError(f"lam must be positive, got {self.lam}")
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.j2 < 0.0:
            raise ValidationError(f"j2 must be nonnegative, got {self.j2}")
        if self.k < 0:
            raise ValidationError(f"k must be nonnegative, got {self.k}")

    @property
    def normalizer(self) -> float:
        """The per-transition energy unit sqrt(2)·lam·delta^{3/2}."""
        return math.sqrt(2.0) * self.lam * self.delta ** 1.5

    def regime_report(self) -> dict[str, float]:
        """Diagnostic ratios governing the asymptotic regime (not enforced)."""
        return {
            "lam_over_sqrt_delta": self.lam / math.sqrt(self.delta),
            "k_delta_quarter": self.k * self.delta ** 0.25,
        }


class _Infeasible:
    """Tagged result of a constrained energy whose argument leaves the circles."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "Infeasible"

    def __bool__(self) -> bool:
        return False


INFEASIBLE = _Infeasible()


def is_infeasible(x) -> bool:
    return x is INFEASIBLE


def energy_sliced(chain: SpinChain) -> float:
    """The renormalized stencil energy H(u) of a chain (raw units)."""
    chain.require_sites(3, "sliced energy")
    return sliced_energy_raw(chain.values, chain.lam, chain.delta)


def scaled_energy(raw: float, params) -> float:
    """Convert a raw energy to transition units: raw / (sqrt(2)·lam·delta^{3/2}).

    ``params`` is anything carrying ``lam`` and ``delta`` attributes —
    a ``ModelParams``, a ``SpinChain``, a chirality field.
    """
    return float(raw) / (math.sqrt(2.0) * params.lam * params.delta ** 1.5)


def energy_constrained(
    chain: SpinChain,
    family: CircleFamily,
    p: ModelParams | None = None,
    tol: float = 1e-9,
) -> float | _Infeasible:
    """H(u) restricted to chains living on the union of the family's circles.

    Feasibility is membership in the union: every site must satisfy
    min over axes q of |u^i · q| <= tol.  Sites may hop between circles
    freely — no per-site labels are demanded, matching a constraint set
    that is a union of great circles, not a product of them.  Returns
    INFEASIBLE (a tagged singleton, never a float) when any site is off
    all circles; with p.k == 0 the model is unconstrained and the check
    is skipped entirely.

    Raises
    ------
    FamilyMismatchError
        If p names a circle count different from the family's.
    """
    if p is not None and p.k == 0:
        return energy_sliced(chain)
    if p is not None and p.k != family.k:
        from .errors import FamilyMismatchError

        raise FamilyMismatchError(f"params expect k={p.k} circles, family has {family.k}")
    # residual of site i = distance of u^i from the union, measured as the
    # smallest axis alignment |u·q| over the family
    align = np.abs(chain.values @ family.axes.T)  # (N+1, k)
    worst = float(align.min(axis=1).max())
    if worst > tol:
        return INFEASIBLE
    return energy_sliced(chain)


def sandwich_bounds(
    chain: SpinChain, gamma: float | None = None
) -> tuple[float, float, float]:
    """Two-sided chirality estimate for the scaled energy.

    With m_i = (u^{i+1} − u^i)/sqrt(2·delta) and z_i the scaled chirality,

        P = sqrt(2·delta) · Σ_{i=0}^{N−2} (|m_i|² − 1)²
        G = 1/sqrt(2·delta) · Σ_{i=0}^{N−2} |z_{i+1} − z_i|²

    and the scaled energy E satisfies  P + (1−gamma)·G <= E <= P + G  in the
    small-delta regime.  gamma defaults to 2·sqrt(delta), which is safe as
    soon as the chirality stays bounded by ~1/sqrt(2·delta); the upper bound
    additionally relies on stretch varying slowly into the chain ends, which
    holds for every construction this package builds.

    Returns
    -------
    (lower, upper, gamma) : lower/upper in scaled-energy units plus the
        slack parameter actually used.
    """
    chain.require_sites(3, "sandwich bounds")
    delta = chain.delta
    if gamma is None:
        gamma = 2.0 * math.sqrt(delta)
    if gamma < 0.0:
        raise ValidationError(f"gamma must be nonnegative, got {gamma}")
    v = chain.values
    root = math.sqrt(2.0 * delta)
    m = (v[1:] - v[:-1]) / root
    e = np.einsum("ij,ij->i", m, m) - 1.0
    pot = root * float(np.sum(e[:-1] ** 2))
    z = np.cross(v[:-1], v[1:]) / root
    dz = z[1:] - z[:-1]
    grad = float(np.sum(dz * dz)) / root
    return pot + (1.0 - gamma) * grad, pot + grad, gamma


def energy_full_2d(field: SpinField2D, J0: float, J1: float, J2: float) -> float:
    """The unrenormalized lattice energy with competing in-row couplings.

    E = − Σ_{i: i+2e1 in grid} lam²·[J0·(u^i·u^{i+e1}) − J1·(u^i·u^{i+2e1})]
        − J2 · Σ_{i: i+e2 in grid} lam²·(u^i·u^{i+e2})

    where e1 runs along rows (the frustrated direction) and e2 across them.
    Note the first sum indexes nearest-neighbor pairs by their stencil base, so
    the final in-row pair of each row does not appear — this is the boundary
    convention the renormalized form is an exact affine shift of.
    """
    v = field.values
    rows, cols = field.shape
    if cols < 3:
        raise GridTooSmallError("full 2D energy needs at least 3 columns")
    lam2 = field.lam ** 2
    nn = np.einsum("rcj,rcj->rc", v[:, :-2], v[:, 1:-1])
    nnn = np.einsum("rcj,rcj->rc", v[:, :-2], v[:, 2:])
    e = -lam2 * (J0 * float(np.sum(nn)) - J1 * float(np.sum(nnn)))
    if rows >= 2:
        tr = np.einsum("rcj,rcj->rc", v[:-1], v[1:])
        e -= J2 * lam2 * float(np.sum(tr))
    return e


def energy_renorm_2d(field: SpinField2D, J2: float) -> float:
    """Renormalized 2D energy: in-row stencils plus transverse exchange.

    H = 1/2 · [ Σ_{i: i+2e1} lam²·|u^i − 2(1−delta)·u^{i+e1} + u^{i+2e1}|²
              + J2 · Σ_{i: i+e2} lam²·|u^{i+e2} − u^i|² ]

    For a field constant across rows this is (number of rows)·lam times the
    sliced chain energy of one row.
    """
    v = field.values
    rows, cols = field.shape
    if cols < 3:
        raise GridTooSmallError("renormalized 2D energy needs at least 3 columns")
    lam2 = field.lam ** 2
    a = v[:, :-2] - 2.0 * (1.0 - field.delta) * v[:, 1:-1] + v[:, 2:]
    e = 0.5 * lam2 * float(np.sum(a * a))
    if rows >= 2:
        d = v[1:] - v[:-1]
        e += 0.5 * J2 * lam2 * float(np.sum(d * d))
    return e

"""Experiment drivers: sweeps over (lam, delta, k), persistence, plot data.

Each experiment maps a grid of model parameters to a flat list of ResultRow
records with a fixed column order, written as versioned CSV.  Rows are fully
regenerable from their recorded parameters and seed; wall-clock timings go to
a sidecar file so re-running an identical config reproduces the main CSV
byte for byte.  Fitted constants (transition constant, critical-regime slope)
are reported in the summary JSON with confidence intervals — never asserted
against theoretical values, only against the tolerance bands stated in the
runner contracts.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .energy import (
    ModelParams,
    energy_constrained,
    energy_sliced,
    is_infeasible,
    sandwich_bounds,
    scaled_energy,
)
from .errors import ConfigError, RegimeViolationError, ValidationError
from .geometry import (
    CircleFamily,
    SpinChain,
    frame_vectors,
    make_critical_axes,
    make_uniform_axes,
)
from .minimize import ConstrainedState, SolverConfig, anneal_assignment, descend, ground_helix, mm_descend_1d
from .order_parameter import chirality, detect_jumps, total_variation
from .phasefield import PhaseFieldProblem
from .recovery import (
    CriticalPathSpec,
    ProfileSpec,
    build_critical_path,
    build_tanh_transition,
    build_two_transition_chain,
    helix_chain,
)

__all__ = [
    "EXPERIMENTS",
    "COLUMNS",
    "ResultRow",
    "ExperimentConfig",
    "run_transition_constant",
    "run_critical_scaling",
    "run_regime_sweep",
    "run_mm1d",
    "run_sandwich_audit",
    "summarize",
    "write_results",
    "emit_plots",
    "run_experiment",
]

EXPERIMENTS = (
    "transition_constant",
    "regime_sweep",
    "critical_scaling",
    "mm_1d_profile",
    "sandwich_audit",
)

CSV_MAGIC = "# chiralab-results v1"

COLUMNS = (
    "experiment",
    "method",
    "lam",
    "delta",
    "k",
    "seed",
    "m_from",
    "m_to",
    "eps",
    "gamma",
    "scaled_energy",
    "raw_energy",
    "jump_count",
    "total_variation",
    "lower",
    "upper",
    "feasible",
    "wall_time_ms",
)

EIGHT_THIRDS = 8.0 / 3.0

# profile used by every tanh-type construction below; the plateau knob only
# nudges the constant at O(eps), see quadrature_profile_constant
_WALL_PROFILE = ProfileSpec(kind="tanh_odd", eps_profile=1e-2)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)  # shortest round-tripping decimal, deterministic
    return str(x)


@dataclass
class ResultRow:
    """One experiment outcome; column order is the module-level COLUMNS."""

    experiment: str
    method: str
    lam: float
    delta: float
    k: int
    seed: int = 0
    m_from: int | None = None
    m_to: int | None = None
    eps: float | None = None
    gamma: float | None = None
    scaled_energy: float | None = None
    raw_energy: float | None = None
    jump_count: int | None = None
    total_variation: float | None = None
    lower: float | None = None
    upper: float | None = None
    feasible: bool = True
    wall_time_ms: float | None = None

    def as_csv(self, with_timing: bool = False) -> str:
        vals = [getattr(self, name) for name in COLUMNS]
        if not with_timing:
            vals[-1] = None  # timings go to the sidecar file
        return ",".join(_fmt(v) for v in vals)


_DEFAULT_GRIDS: dict[str, tuple[tuple[float, float, int], ...]] = {
    # (lam, delta, k); k = 0 asks the runner to derive it where that applies
    "transition_constant": ((1e-6, 1e-4, 4),),
    "critical_scaling": ((5e-5, 1e-4, 0), (1e-5, 1e-5, 0), (2e-6, 1e-6, 0)),
    "regime_sweep": (
        (1e-4, 6.25e-6, 1),
        (1e-4, 1e-4, 1),
        (1e-4, 1e-4, 2),
        (1e-4, 1e-4, 4),
        (1e-4, 1e-4, 8),
        (1e-4, 1e-4, 12),
        (1e-4, 1e-4, 16),
        (1e-4, 1e-4, 20),
        (1e-4, 1e-4, 24),
        (1e-4, 1e-4, 30),
    ),
    # for the 1D profile the second slot carries the interface width eps,
    # with lam the lattice spacing of the [−1, 1]-pinned segment
    "mm_1d_profile": ((5e-4, 1e-2, 2), (7.5e-5, 3e-3, 2), (1.25e-5, 1e-3, 2)),
    "sandwich_audit": ((1e-4, 1e-2, 4), (1e-4, 1e-4, 4)),
}

_CONFIG_KEYS = {"experiment", "grid", "seeds", "output_dir", "write_plots", "workers"}


@dataclass(frozen=True)
class ExperimentConfig:
    """A single source of truth for one experiment run.

    ``grid`` rows are (lam, delta, k) triples; every runner documents how it
    reads them.  ``seeds`` feed the randomized parts (perturbations,
    annealing); deterministic constructions record the first seed.  File
    values override the per-experiment defaults, CLI flags override the file.
    """

    experiment: str
    grid: tuple[tuple[float, float, int], ...] = ()
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "results"
    write_plots: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        grid = tuple(tuple(point) for point in self.grid)
        if not grid:
            grid = _DEFAULT_GRIDS[self.experiment]
        for point in grid:
            if len(point) != 3:
                raise ConfigError(f"grid rows are (lam, delta, k); got {point!r}")
            lam, delta, k = point
            if not (lam > 0.0 and delta > 0.0):
                raise ConfigError(f"lam and delta must be positive in {point!r}")
            if int(k) != k or k < 0:
                raise ConfigError(f"k must be a nonnegative integer in {point!r}")
        object.__setattr__(
            self, "grid", tuple((float(l), float(d), int(k)) for l, d, k in grid)
        )
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def config_hash(self) -> str:
        """First 10 hex chars of the sha256 of the physics-relevant fields."""
        payload = json.dumps(
            {"experiment": self.experiment, "grid": self.grid, "seeds": self.seeds},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:10]

    @classmethod
    def from_sources(
        cls,
        experiment: str,
        config_path: str | None = None,
        out: str | None = None,
        seeds: tuple[int, ...] | None = None,
        plots: bool | None = None,
    ) -> "ExperimentConfig":
        """Merge defaults <- config file <- explicit flags, in that order."""
        values: dict = {"experiment": experiment}
        if config_path is not None:
            path = Path(config_path)
            if not path.is_file():
                raise ConfigError(f"config file not found: {config_path}")
            try:
                if path.suffix.lower() == ".toml":
                    payload = tomllib.loads(path.read_text())
                else:
                    payload = json.loads(path.read_text())
            except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot parse {config_path}: {exc}") from exc
            if not isinstance(payload, dict):
                raise ConfigError("config root must be a table/object")
            unknown = set(payload) - _CONFIG_KEYS
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
            if "experiment" in payload and payload["experiment"] != experiment:
                raise ConfigError(
                    f"config file is for {payload['experiment']!r}, "
                    f"invoked as {experiment!r}"
                )
            values.update(payload)
            values["experiment"] = experiment
        if out is not None:
            values["output_dir"] = out
        if seeds is not None:
            values["seeds"] = seeds
        if plots is not None:
            values["write_plots"] = plots
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# small fit helpers


def _ols_line(x, y):
    """y ≈ a + b·x by least squares: (a, b, r2, b_ci_halfwidth at 95%)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = x.size
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if n > 2:
        se = math.sqrt(ss_res / (n - 2) / float(np.sum((x - x.mean()) ** 2)))
        half = float(stats.t.ppf(0.975, n - 2)) * se
    else:
        half = math.inf
    return float(a), float(b), r2, half


def _chain_stats(chain: SpinChain, family: CircleFamily):
    """(jump_count, total_variation) of the chain's chirality picture."""
    report = detect_jumps(chirality(chain), family)
    return report.jump_count, total_variation(report, family)


def _feasible(chain: SpinChain, family: CircleFamily, p: ModelParams) -> bool:
    return not is_infeasible(energy_constrained(chain, family, p))


def _timed(builder):
    t0 = time.perf_counter()
    out = builder()
    return out, (time.perf_counter() - t0) * 1e3


# ---------------------------------------------------------------------------
# constructions shared by the runners


def _corner_chain(
    family: CircleFamily, p: ModelParams, a_idx: int, b_idx: int,
    n_sites: int | None = None,
) -> SpinChain:
    """Two ground helices switching circles at a common intersection point.

    All sites stay exactly on the family; the whole transition cost sits in
    the few stencils straddling the switch, which shrinks like the angle
    between the axes — the cheap construction once circles crowd the sphere.
    """
    qa, qb = family.axes[a_idx], family.axes[b_idx]
    hub = np.cross(qa, qb)
    norm = float(np.linalg.norm(hub))
    if norm < 1e-12:
        raise ValidationError("corner construction needs distinct circles")
    hub = hub / norm
    n = round(1.0 / p.lam) + 1 if n_sites is None else int(n_sites)
    mid = n // 2
    phibar = 2.0 * math.asin(math.sqrt(p.delta / 2.0))
    values = np.empty((n, 3))
    for idx, lo, hi, anchor in ((a_idx, 0, mid + 1, mid), (b_idx, mid + 1, n, mid)):
        e1, e2 = frame_vectors(family.axes[idx])
        base = math.atan2(float(hub @ e2), float(hub @ e1))
        ang = base + phibar * (np.arange(lo, hi) - anchor)
        values[lo:hi] = np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2
    return SpinChain(values=values, lam=p.lam, delta=p.delta, periodic=False)


def _pinned_wall_state(
    family: CircleFamily, p: ModelParams, circle: int = 0,
    window_iters: int = 15000, polish_iters: int = 300,
) -> ConstrainedState:
    """Minimize from a V-shaped angle profile pinned to opposite chiralities.

    The wall the descent must form is ~1/sqrt(2·delta) sites wide, so for
    long chains the kink region is relaxed first as its own pinned
    subproblem (stencils outside stay exactly zero while its two boundary
    sites hold ground-helix angles) and the full chain is then polished.
    """
    n = round(1.0 / p.lam) + 1
    phibar = 2.0 * math.asin(math.sqrt(p.delta / 2.0))
    i = np.arange(n, dtype=float)
    v_angles = phibar * np.minimum(i, (n - 1) - i)
    assignment = np.full(n, circle, dtype=np.int64)

    wall_sites = 10.0 / math.sqrt(2.0 * p.delta)
    if n > 6 * wall_sites and n > 30001:
        mid = n // 2
        radius = max(5000, int(3 * wall_sites))
        lo, hi = mid - radius, mid + radius + 1
        win = ConstrainedState(
            angles=v_angles[lo:hi].copy(), assignment=assignment[lo:hi].copy(),
            family=family, params=p,
        )
        win_out, _ = descend(win, SolverConfig(max_iters=window_iters, pin=2))
        v_angles[lo:hi] = win_out.angles
        budget = polish_iters
    else:
        budget = window_iters
    state = ConstrainedState(
        angles=v_angles, assignment=assignment, family=family, params=p
    )
    out, _ = descend(state, SolverConfig(max_iters=budget, pin=2))
    return out


def _perturbed_helix_chain(
    family: CircleFamily, p: ModelParams, seed: int, n_sites: int = 4001
) -> SpinChain:
    """Ground helix with seeded angle noise, kept exactly on its circle."""
    rng = np.random.default_rng(seed)
    circle = int(rng.integers(0, family.k))
    sign = 1 if rng.random() < 0.5 else -1
    st = ground_helix(circle, family, p, sign=sign, n_sites=n_sites)
    amp = rng.uniform(0.05, 0.5)
    phibar = 2.0 * math.asin(math.sqrt(p.delta / 2.0))
    st.angles = st.angles + amp * phibar * rng.standard_normal(n_sites)
    return st.chain()


# ---------------------------------------------------------------------------
# runners


def _map_points(cfg: ExperimentConfig, worker, payloads):
    if cfg.workers == 1 or len(payloads) == 1:
        return [worker(pl) for pl in payloads]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(worker, payloads))


def _tc_point(payload):
    lam, delta, k, seed = payload
    p = ModelParams(lam=lam, delta=delta)
    family = make_uniform_axes(k)
    rows = []

    def add(method, chain, ms, **extra):
        raw = energy_sliced(chain)
        jumps, tv = _chain_stats(chain, family)
        lo, up, gam = sandwich_bounds(chain)
        rows.append(
            ResultRow(
                experiment="transition_constant", method=method,
                lam=lam, delta=delta, k=k, seed=seed,
                gamma=gam, scaled_energy=scaled_energy(raw, p), raw_energy=raw,
                jump_count=jumps, total_variation=tv, lower=lo, upper=up,
                feasible=_feasible(chain, family, p), wall_time_ms=ms,
                **extra,
            )
        )

    q0 = family.axes[0]
    chain, ms = _timed(lambda: helix_chain(q0, p))
    add("helix", chain, ms)
    if k >= 2:
        q1 = family.axes[1]
        chain, ms = _timed(lambda: build_tanh_transition(q0, q1, p, _WALL_PROFILE))
        add("tanh", chain, ms)
        chain, ms = _timed(
            lambda: build_two_transition_chain(q0, q1, p, _WALL_PROFILE)
        )
        add("two_wall", chain, ms)
    else:
        chain, ms = _timed(
            lambda: build_tanh_transition(q0, q0, p, _WALL_PROFILE, flip=True)
        )
        add("flip", chain, ms)
    state, ms = _timed(lambda: _pinned_wall_state(family, p))
    add("minimize", state.chain(), ms)
    return rows


def run_transition_constant(cfg: ExperimentConfig) -> list[ResultRow]:
    """Subcritical transition constant: tanh walls and pinned minimizers.

    Grid rows are (lam, delta, k) with k uniform circles; each point yields a
    ground-helix baseline, a single tanh wall, a two-wall chain and the
    pinned minimization, all with scaled energy, jump count and sandwich
    brackets recorded.  Warns when k·delta^{1/4} >= 0.3 (leaving the
    subcritical regime the 8/3 constant belongs to).
    """
    for lam, delta, k in cfg.grid:
        if k * delta**0.25 >= 0.3:
            warnings.warn(
                f"grid point (lam={lam:g}, delta={delta:g}, k={k}) has "
                f"k·delta^(1/4) = {k * delta**0.25:.3f} >= 0.3: outside the "
                "subcritical regime of the transition constant",
                stacklevel=2,
            )
    payloads = [(lam, delta, k, cfg.seeds[0]) for lam, delta, k in cfg.grid]
    nested = _map_points(cfg, _tc_point, payloads)
    return [row for rows in nested for row in rows]


def _cs_point(payload):
    lam, delta, k, seed, msteps = payload
    family = make_critical_axes(delta)
    p = ModelParams(lam=lam, delta=delta)
    rows = []
    for m in msteps:
        spec = CriticalPathSpec(delta=delta, m_from=1, m_to=1 + m)
        chain, ms = _timed(lambda: build_critical_path(spec, family, p))
        raw = energy_sliced(chain)
        jumps, tv = _chain_stats(chain, family)
        lo, up, gam = sandwich_bounds(chain)
        rows.append(
            ResultRow(
                experiment="critical_scaling", method="critical",
                lam=lam, delta=delta, k=family.k, seed=seed,
                m_from=1, m_to=1 + m, gamma=gam,
                scaled_energy=scaled_energy(raw, p), raw_energy=raw,
                jump_count=jumps, total_variation=tv, lower=lo, upper=up,
                feasible=_feasible(chain, family, p), wall_time_ms=ms,
            )
        )
    return rows


_CS_MSTEPS = (0, 1, 2, 4, 8)


def run_critical_scaling(cfg: ExperimentConfig) -> list[ResultRow]:
    """Critical-regime axis-hopping paths for m-steps in {0, 1, 2, 4, 8}.

    Each grid row (lam, delta, k) must satisfy k = 2·ceil(delta^(-1/4))
    (k = 0 derives it) and lam/delta^(3/4) < 0.1.  Per delta, the scaled
    energies of the nonzero m-step paths are checked to be linear in the
    chirality variation |Dz| with R² >= 0.98; the per-step constant and the
    cross-delta slope go to the summary with confidence intervals.
    """
    payloads = []
    for lam, delta, k in cfg.grid:
        k_expected = 2 * math.ceil(delta**-0.25 - 1e-9)
        if k == 0:
            k = k_expected
        elif k != k_expected:
            raise ConfigError(
                f"critical grid needs k = 2*ceil(delta^(-1/4)) = {k_expected} "
                f"at delta={delta:g}; got k={k}"
            )
        ratio = lam / delta**0.75
        if ratio >= 0.1:
            raise RegimeViolationError(
                f"critical scaling needs lam/delta^(3/4) < 0.1; "
                f"got {ratio:.3f} at (lam={lam:g}, delta={delta:g})"
            )
        payloads.append((lam, delta, k, cfg.seeds[0], _CS_MSTEPS))
    nested = _map_points(cfg, _cs_point, payloads)
    rows = [row for point_rows in nested for row in point_rows]

    for point_rows in nested:
        steps = [r for r in point_rows if r.m_to - r.m_from > 0]
        x = [r.m_to - r.m_from for r in steps]
        y = [r.scaled_energy for r in steps]
        _, _, r2, _ = _ols_line(x, y)
        if r2 < 0.98:
            raise ValidationError(
                f"critical path energies at delta={steps[0].delta:g} are not "
                f"linear in the number of steps: R² = {r2:.4f} < 0.98"
            )
    return rows


def _rs_point(payload):
    lam, delta, k, seed = payload
    p = ModelParams(lam=lam, delta=delta)
    family = make_uniform_axes(k)
    rows = []

    def add(method, chain, ms):
        raw = energy_sliced(chain)
        jumps, tv = _chain_stats(chain, family)
        lo, up, gam = sandwich_bounds(chain)
        rows.append(
            ResultRow(
                experiment="regime_sweep", method=method,
                lam=lam, delta=delta, k=k, seed=seed, gamma=gam,
                scaled_energy=scaled_energy(raw, p), raw_energy=raw,
                jump_count=jumps, total_variation=tv, lower=lo, upper=up,
                feasible=_feasible(chain, family, p), wall_time_ms=ms,
            )
        )
        return rows[-1]

    candidates = []
    if k == 1:
        q0 = family.axes[0]
        chain, ms = _timed(
            lambda: build_tanh_transition(q0, q0, p, _WALL_PROFILE, flip=True)
        )
        candidates.append((add("flip", chain, ms), chain))
    else:
        q0, q1 = family.axes[0], family.axes[1]
        chain, ms = _timed(lambda: build_tanh_transition(q0, q1, p, _WALL_PROFILE))
        candidates.append((add("tanh", chain, ms), chain))
        chain, ms = _timed(lambda: _corner_chain(family, p, 0, 1))
        candidates.append((add("corner", chain, ms), chain))

    if k >= 2:
        _, best_chain = min(candidates, key=lambda rc: rc[0].scaled_energy)

        def annealed():
            st = ConstrainedState.from_chain(best_chain, family)
            out = anneal_assignment(
                st, SolverConfig(anneal_schedule=((0.0, 1),), seed=seed, pin=2)
            )
            return out.chain()

        chain, ms = _timed(annealed)
        add("anneal", chain, ms)
    return rows


def run_regime_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """Transition-cost crossover along k·delta^{1/4}.

    Per grid point the cheapest known transition is measured: the
    same-circle handedness wall for k = 1, the smooth tanh wall and the
    circle-switching corner chain for k >= 2, plus one greedy annealing pass
    over the best of them.  Every candidate lands in a row — infeasible ones
    are flagged by the feasibility column, never dropped.  The summary
    reports the minimum per point and the Spearman trend in k.
    """
    spans = [k * delta**0.25 for lam, delta, k in cfg.grid]
    if min(spans) > 0.05 or max(spans) < 3.0:
        warnings.warn(
            f"sweep grid spans k·delta^(1/4) in [{min(spans):.3f}, "
            f"{max(spans):.3f}]; the crossover picture wants [0.05, 3]",
            stacklevel=2,
        )
    payloads = [(lam, delta, k, cfg.seeds[0]) for lam, delta, k in cfg.grid]
    nested = _map_points(cfg, _rs_point, payloads)
    return [row for rows in nested for row in rows]


def _mm_point(payload):
    lam, eps, k, seed = payload
    family = make_uniform_axes(max(k, 2))
    prob = PhaseFieldProblem(eps=eps, lam=lam, r=0.5, axes=family, dim=1)
    q = family.axes[0]

    def solve():
        return mm_descend_1d(prob, q)

    (fld, energies), ms = _timed(solve)
    f_final = energies[-1]
    along = fld.values @ q
    flips = int(np.sum(np.sign(along[1:]) * np.sign(along[:-1]) < 0))
    return [
        ResultRow(
            experiment="mm_1d_profile", method="mm1d",
            lam=lam, delta=eps, k=family.k, seed=seed, eps=eps,
            scaled_energy=f_final, raw_energy=f_final,
            jump_count=flips, total_variation=2.0,
            feasible=True, wall_time_ms=ms,
        )
    ]


def run_mm1d(cfg: ExperimentConfig) -> list[ResultRow]:
    """Optimal 1D phase-field profiles pinned to ±q.

    Grid rows are (lam, eps, k): lattice spacing, interface width (carried in
    the delta slot and mirrored to the eps column) and the circle count of
    the family supplying the wells.  The discrete functional value is already
    in transition units, so it lands in both energy columns; it converges to
    h(q, −q) = 8/3 from the optimal-profile problem as eps shrinks.
    """
    payloads = [(lam, eps, k, cfg.seeds[0]) for lam, eps, k in cfg.grid]
    nested = _map_points(cfg, _mm_point, payloads)
    return [row for rows in nested for row in rows]


def _sa_point(payload):
    lam, delta, k, seeds = payload
    p = ModelParams(lam=lam, delta=delta)
    family = make_uniform_axes(k)
    gammas = (delta**0.25, delta**0.5)
    rows = []

    def add(method, chain, ms, seed, **extra):
        raw = energy_sliced(chain)
        scaled = scaled_energy(raw, p)
        jumps, tv = _chain_stats(chain, family)
        ok = _feasible(chain, family, p)
        for gam in gammas:
            lo, up, _ = sandwich_bounds(chain, gamma=gam)
            rows.append(
                ResultRow(
                    experiment="sandwich_audit", method=method,
                    lam=lam, delta=delta, k=k, seed=seed, gamma=gam,
                    scaled_energy=scaled, raw_energy=raw,
                    jump_count=jumps, total_variation=tv, lower=lo, upper=up,
                    feasible=ok, wall_time_ms=ms,
                    **extra,
                )
            )

    for seed in seeds:
        chain, ms = _timed(lambda: _perturbed_helix_chain(family, p, seed))
        add("perturbed", chain, ms, seed)

    q0, q1 = family.axes[0], family.axes[1 % k]
    n_sites = round(1.0 / lam) + 1
    chain, ms = _timed(lambda: helix_chain(q0, p, n_sites=n_sites))
    add("helix", chain, ms, seeds[0])
    chain, ms = _timed(lambda: build_tanh_transition(q0, q1, p, _WALL_PROFILE))
    add("tanh", chain, ms, seeds[0])
    chain, ms = _timed(
        lambda: build_tanh_transition(q0, q0, p, _WALL_PROFILE, flip=True)
    )
    add("flip", chain, ms, seeds[0])
    chain, ms = _timed(lambda: build_two_transition_chain(q0, q1, p, _WALL_PROFILE))
    add("two_wall", chain, ms, seeds[0])

    crit_family = make_critical_axes(delta)
    crit_lam = min(lam, 0.05 * delta**0.75)
    crit_p = ModelParams(lam=crit_lam, delta=delta)
    for m in (1, 2, 4, 8):
        if 1 + m > crit_family.k // 2:
            continue
        spec = CriticalPathSpec(delta=delta, m_from=1, m_to=1 + m)
        chain, ms = _timed(lambda: build_critical_path(spec, crit_family, crit_p))
        raw = energy_sliced(chain)
        scaled = scaled_energy(raw, crit_p)
        jumps, tv = _chain_stats(chain, crit_family)
        ok = _feasible(chain, crit_family, crit_p)
        for gam in gammas:
            lo, up, _ = sandwich_bounds(chain, gamma=gam)
            rows.append(
                ResultRow(
                    experiment="sandwich_audit", method="critical",
                    lam=crit_lam, delta=delta, k=crit_family.k, seed=seeds[0],
                    m_from=1, m_to=1 + m, gamma=gam,
                    scaled_energy=scaled, raw_energy=raw,
                    jump_count=jumps, total_variation=tv, lower=lo, upper=up,
                    feasible=ok, wall_time_ms=ms,
                )
            )
    return rows


def run_sandwich_audit(cfg: ExperimentConfig) -> list[ResultRow]:
    """Two-sided chirality bounds audited on noisy helices and constructions.

    Per grid point, every seed contributes one randomly perturbed on-circle
    helix, and the deterministic recovery constructions (helix, tanh wall,
    handedness flip, two walls, critical paths where the circle budget
    allows) are appended once; each chain is bracketed at gamma values
    delta^{1/4} and delta^{1/2}.  Rows record both bounds; the summary counts
    violations (none are expected in the constructions' regime).
    """
    payloads = [(lam, delta, k, cfg.seeds) for lam, delta, k in cfg.grid]
    nested = _map_points(cfg, _sa_point, payloads)
    return [row for rows in nested for row in rows]


_RUNNERS = {
    "transition_constant": run_transition_constant,
    "critical_scaling": run_critical_scaling,
    "regime_sweep": run_regime_sweep,
    "mm_1d_profile": run_mm1d,
    "sandwich_audit": run_sandwich_audit,
}


# ---------------------------------------------------------------------------
# summaries


def _transition_summary(rows):
    table = []
    for r in rows:
        if r.method in ("tanh", "minimize", "two_wall") and r.jump_count:
            per_jump = r.scaled_energy / r.jump_count
            table.append(
                {
                    "lam": r.lam, "delta": r.delta, "k": r.k, "method": r.method,
                    "jumps": r.jump_count, "scaled_per_jump": per_jump,
                    "rel_error": per_jump / EIGHT_THIRDS - 1.0,
                }
            )
    return {"target": EIGHT_THIRDS, "per_jump": table}


def _critical_summary(rows):
    per_delta = []
    deltas = sorted({r.delta for r in rows}, reverse=True)
    for delta in deltas:
        steps = [
            r for r in rows if r.delta == delta and (r.m_to or 0) - (r.m_from or 0) > 0
        ]
        steps.sort(key=lambda r: r.m_to)
        tv = [r.total_variation for r in steps]
        ms = [r.m_to - r.m_from for r in steps]
        y = [r.scaled_energy for r in steps]
        a, b, r2, half = _ols_line(tv, y)
        _, _, r2_steps, _ = _ols_line(ms, y)
        per_delta.append(
            {
                "delta": delta, "lam": steps[0].lam, "k": steps[0].k,
                "C": b, "C_ci95": half, "intercept": a, "r2_tv": r2,
                "r2_steps": r2_steps,
                "per_step": steps[0].scaled_energy,
            }
        )
    out = {"per_delta": per_delta}
    if len(per_delta) >= 2:
        lx = [math.log(d["delta"]) for d in per_delta]
        ly = [math.log(d["per_step"]) for d in per_delta]
        _, slope, r2, half = _ols_line(lx, ly)
        out["per_step_slope"] = {"slope": slope, "ci95": half, "r2": r2}
    return out


def _sweep_summary(rows):
    points = {}
    for r in rows:
        key = (r.lam, r.delta, r.k)
        cur = points.get(key)
        if r.feasible and (cur is None or r.scaled_energy < cur["min_energy"]):
            points[key] = {
                "lam": r.lam, "delta": r.delta, "k": r.k,
                "span": r.k * r.delta**0.25,
                "min_energy": r.scaled_energy, "method": r.method,
            }
    table = sorted(points.values(), key=lambda d: d["span"])
    out = {"target": EIGHT_THIRDS, "points": table}
    if table:
        out["leftmost_rel_error"] = table[0]["min_energy"] / EIGHT_THIRDS - 1.0
    by_delta: dict[float, list] = {}
    for d in table:
        by_delta.setdefault(d["delta"], []).append(d)
    for delta, ds in by_delta.items():
        if len(ds) >= 4:
            ks = [d["k"] for d in ds]
            es = [d["min_energy"] for d in ds]
            rho, pval = stats.spearmanr(ks, es)
            out["spearman"] = {"delta": delta, "rho": float(rho), "p": float(pval)}
    return out


def _mm_summary(rows):
    ladder = sorted(rows, key=lambda r: -r.eps)
    table = [
        {
            "eps": r.eps, "lam": r.lam, "energy": r.scaled_energy,
            "rel_error": r.scaled_energy / EIGHT_THIRDS - 1.0,
        }
        for r in ladder
    ]
    out = {"target": EIGHT_THIRDS, "ladder": table}
    errs = [abs(t["rel_error"]) for t in table]
    out["monotone_convergence"] = all(b <= a for a, b in zip(errs, errs[1:]))
    if len(table) >= 2:
        x = [t["eps"] for t in table]
        y = [t["energy"] for t in table]
        _, c, r2, half = _ols_line(x, y)
        out["eps_correction"] = {"C": c, "ci95": half, "r2": r2}
    return out


def _audit_summary(rows):
    margins = {}
    violations = 0
    for r in rows:
        bad = not (r.lower <= r.scaled_energy <= r.upper)
        violations += bad
        m = margins.setdefault(
            r.gamma, {"gamma": r.gamma, "min_upper_slack": math.inf,
                      "min_lower_slack": math.inf, "rows": 0}
        )
        m["rows"] += 1
        m["min_upper_slack"] = min(m["min_upper_slack"], r.upper - r.scaled_energy)
        m["min_lower_slack"] = min(m["min_lower_slack"], r.scaled_energy - r.lower)
    return {
        "rows": len(rows),
        "violations": violations,
        "per_gamma": sorted(margins.values(), key=lambda d: d["gamma"]),
    }


_SUMMARIZERS = {
    "transition_constant": _transition_summary,
    "critical_scaling": _critical_summary,
    "regime_sweep": _sweep_summary,
    "mm_1d_profile": _mm_summary,
    "sandwich_audit": _audit_summary,
}


def summarize(cfg: ExperimentConfig, rows: list[ResultRow]) -> dict:
    """Experiment-specific fits and checks, all computable from the rows."""
    out = {
        "experiment": cfg.experiment,
        "config_hash": cfg.config_hash,
        "rows": len(rows),
        "infeasible_rows": sum(1 for r in rows if not r.feasible),
    }
    out.update(_SUMMARIZERS[cfg.experiment](rows))
    return out


# ---------------------------------------------------------------------------
# persistence


def _base_name(cfg: ExperimentConfig) -> str:
    return f"{cfg.experiment}-{cfg.config_hash}"


def write_results(cfg: ExperimentConfig, rows: list[ResultRow],
                  summary: dict | None = None) -> dict[str, Path]:
    """Write the versioned CSV, a timing sidecar and the summary JSON.

    The main CSV leaves wall_time_ms empty so identical configs reproduce it
    byte for byte; measured timings go to ``timings-<hash>.csv``.
    """
    if not rows:
        raise ValidationError("refusing to write an empty result set")
    outdir = Path(cfg.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output dir {outdir}: {exc}") from exc
    base = _base_name(cfg)
    paths = {}

    csv_path = outdir / f"{base}.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(CSV_MAGIC + "\n")
        fh.write(",".join(COLUMNS) + "\n")
        for row in rows:
            fh.write(row.as_csv() + "\n")
    paths["csv"] = csv_path

    timing_path = outdir / f"timings-{cfg.config_hash}.csv"
    with open(timing_path, "w", encoding="utf-8") as fh:
        fh.write("row,wall_time_ms\n")
        for idx, row in enumerate(rows):
            fh.write(f"{idx},{_fmt(row.wall_time_ms)}\n")
    paths["timings"] = timing_path

    if summary is not None:
        summary_path = outdir / f"{base}-summary.json"
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        paths["summary"] = summary_path
    return paths


_PLOT_KINDS = ("energy_vs_span", "energy_vs_tv", "convergence")


def emit_plots(cfg: ExperimentConfig, rows: list[ResultRow],
               kinds: tuple[str, ...] = _PLOT_KINDS) -> list[Path]:
    """Optional SVG companions to the CSV; returns the files written.

    Kinds: scaled energy against k·delta^{1/4} (``energy_vs_span``), against
    chirality variation (``energy_vs_tv``), and per-jump energies against
    the 8/3 line (``convergence``).  A kind that has nothing to show for
    these rows is skipped.
    """
    if not rows:
        raise ValidationError("no rows to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = _base_name(cfg)
    written = []
    for kind in kinds:
        if kind not in _PLOT_KINDS:
            raise ValidationError(f"unknown plot kind {kind!r}")
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        drew = False
        if kind == "energy_vs_span":
            pts = [(r.k * r.delta**0.25, r.scaled_energy, r.method) for r in rows
                   if r.scaled_energy is not None and r.scaled_energy > 0]
            for method in sorted({m for _, _, m in pts}):
                xs = [x for x, _, m in pts if m == method]
                ys = [y for _, y, m in pts if m == method]
                ax.plot(xs, ys, "o", ms=4, label=method)
                drew = drew or bool(xs)
            ax.axhline(EIGHT_THIRDS, color="k", lw=0.8, ls="--")
            ax.set_xlabel(r"k·δ$^{1/4}$")
            ax.set_ylabel("scaled energy")
            ax.set_yscale("log")
            ax.legend(fontsize=7)
        elif kind == "energy_vs_tv":
            pts = [(r.total_variation, r.scaled_energy) for r in rows
                   if r.total_variation and r.scaled_energy is not None]
            if pts:
                xs, ys = zip(*sorted(pts))
                ax.plot(xs, ys, "o-", ms=4)
                drew = True
            ax.set_xlabel("|Dz|")
            ax.set_ylabel("scaled energy")
        else:
            pts = [
                (r.eps if r.eps is not None else r.lam,
                 r.scaled_energy / r.jump_count)
                for r in rows
                if r.jump_count and r.scaled_energy is not None
            ]
            if pts:
                xs, ys = zip(*sorted(pts))
                ax.plot(xs, ys, "o-", ms=4)
                drew = True
            ax.axhline(EIGHT_THIRDS, color="k", lw=0.8, ls="--")
            ax.set_xscale("log")
            ax.set_xlabel("eps (or lattice spacing)")
            ax.set_ylabel("scaled energy per jump")
        if drew:
            path = outdir / f"{base}-{kind}.svg"
            fig.savefig(path, metadata={"Date": None})
            written.append(path)
        plt.close(fig)
    return written


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict, dict]:
    """Run one configured experiment end to end; returns (rows, summary, paths)."""
    rows = _RUNNERS[cfg.experiment](cfg)
    summary = summarize(cfg, rows)
    paths = write_results(cfg, rows, summary)
    if cfg.write_plots:
        paths["plots"] = emit_plots(cfg, rows)
    return rows, summary, paths

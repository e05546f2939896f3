"""chiralab: chirality transitions in frustrated helimagnetic spin chains.

Geometry of circle families on S², chirality order parameters, renormalized
stencil energies with two-sided chirality bounds, diffuse-interface (phase
field) functionals for the vector order parameter, transition-path builders,
constrained minimizers, and the experiment drivers behind the ``chiralab``
command line tool.
"""

from .energy import (
    INFEASIBLE,
    ModelParams,
    energy_constrained,
    energy_full_2d,
    energy_renorm_2d,
    energy_sliced,
    is_infeasible,
    sandwich_bounds,
    scaled_energy,
)
from .errors import (
    ChiralabError,
    ConfigError,
    DivergedError,
    RegimeViolationError,
    ValidationError,
)
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    ResultRow,
    emit_plots,
    run_experiment,
    summarize,
    write_results,
)
from .geometry import (
    CircleFamily,
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
from .kernels import backend_name
from .minimize import (
    ConstrainedState,
    SolverConfig,
    anneal_assignment,
    descend,
    ground_helix,
    mm_descend_1d,
    save_trace,
)
from .order_parameter import (
    ChiralityField,
    JumpReport,
    beta,
    chirality,
    detect_jumps,
    theta,
    total_variation,
)
from .phasefield import (
    AffineInterpolant,
    LatticeField,
    PhaseFieldProblem,
    affine_interpolant,
    limit_density_h,
    mm_energy,
    mm_energy_parts,
    potential_g,
    slice_energy,
    slice_energy_parts,
    truncate_field,
)
from .recovery import (
    CriticalPathSpec,
    PiecewiseConstantTarget,
    ProfileSpec,
    build_critical_path,
    build_distance_profile_field,
    build_tanh_transition,
    build_two_transition_chain,
    helix_chain,
    quadrature_profile_constant,
)

__version__ = "0.1.0"

__all__ = [
    "EXPERIMENTS",
    "INFEASIBLE",
    "AffineInterpolant",
    "ChiralabError",
    "ChiralityField",
    "CircleFamily",
    "ConfigError",
    "ConstrainedState",
    "CriticalPathSpec",
    "DivergedError",
    "ExperimentConfig",
    "JumpReport",
    "LatticeField",
    "ModelParams",
    "PhaseFieldProblem",
    "PiecewiseConstantTarget",
    "ProfileSpec",
    "RegimeViolationError",
    "ResultRow",
    "SolverConfig",
    "SpinChain",
    "SpinField2D",
    "ValidationError",
    "anneal_assignment",
    "backend_name",
    "beta",
    "build_critical_path",
    "build_distance_profile_field",
    "build_tanh_transition",
    "build_two_transition_chain",
    "chirality",
    "circle_frame",
    "descend",
    "detect_jumps",
    "dist_to_lines",
    "emit_plots",
    "energy_constrained",
    "energy_full_2d",
    "energy_renorm_2d",
    "energy_sliced",
    "frame_vectors",
    "ground_helix",
    "helix_chain",
    "is_infeasible",
    "limit_density_h",
    "make_critical_axes",
    "make_uniform_axes",
    "mm_descend_1d",
    "mm_energy",
    "mm_energy_parts",
    "nearest_circle_index",
    "potential_g",
    "project_circle",
    "project_sphere",
    "quadrature_profile_constant",
    "run_experiment",
    "sandwich_bounds",
    "save_trace",
    "scaled_energy",
    "slice_energy",
    "slice_energy_parts",
    "summarize",
    "theta",
    "total_variation",
    "truncate_field",
]

"""Numerics on the Sierpinski carpet via cell averages.

Graph Laplacians on the level-m cell complex, harmonic boundary value
problems, Poisson kernels, effective resistance, eigenvalue spectra under
Dirichlet / Neumann / torus / Klein-bottle / projective-plane and twisted
boundary conditions, heat and Dirichlet kernels, boundary decay fits, and
band sweeps of the strip and staircase covers.
"""

__version__ = "0.1.0"

from .geometry import (
    D4,
    D4_BY_NAME,
    CarpetGraph,
    GroupElement,
    apply_symmetry,
    build_graph,
    compose,
    graph_from_json,
    graph_to_json,
    line_restriction,
)
from .operators import (
    BoundarySpec,
    RenormConstants,
    assemble,
    calibrate_rho,
    energy,
    estimate_rho,
    renormalized_laplacian_apply,
)
from .harmonic import (
    BoundaryData,
    HarmonicSolution,
    ResistanceSolver,
    boundary_delta,
    effective_resistance,
    poisson_integral,
    poisson_kernel,
    poisson_kernel_basis,
    resistance_field,
    sin_boundary_data,
    solve_bvp,
)
from .spectra import (
    EigenSet,
    classify_symmetry,
    coincidence_check,
    counting_difference,
    counting_function,
    detect_clusters,
    eigensolve,
    eigenvalue_scan,
    miniaturize,
    sup_norm_stats,
    weyl_ratio,
)
from .kernels import (
    SpectralKernelConfig,
    dirichlet_kernel,
    heat_apply,
    heat_kernel,
    heat_trace,
    level_set_bands,
    trace_slope,
)
from .boundary import (
    corner_stack,
    decay_profile,
    edge_stacks,
    fit_corner_decay,
    fit_decay,
    gauss_green_residual,
    boundary_functional,
)
from .covers import (
    BandSweep,
    classify_rotation_symmetry,
    group_structure_report,
    project_spectrum,
    sweep_bands,
)

__all__ = [
    "D4",
    "D4_BY_NAME",
    "BandSweep",
    "BoundaryData",
    "BoundarySpec",
    "CarpetGraph",
    "EigenSet",
    "GroupElement",
    "HarmonicSolution",
    "RenormConstants",
    "ResistanceSolver",
    "SpectralKernelConfig",
    "apply_symmetry",
    "assemble",
    "boundary_delta",
    "boundary_functional",
    "build_graph",
    "calibrate_rho",
    "classify_rotation_symmetry",
    "classify_symmetry",
    "coincidence_check",
    "compose",
    "corner_stack",
    "counting_difference",
    "counting_function",
    "decay_profile",
    "detect_clusters",
    "dirichlet_kernel",
    "edge_stacks",
    "effective_resistance",
    "eigensolve",
    "eigenvalue_scan",
    "energy",
    "estimate_rho",
    "fit_corner_decay",
    "fit_decay",
    "gauss_green_residual",
    "graph_from_json",
    "graph_to_json",
    "group_structure_report",
    "heat_apply",
    "heat_kernel",
    "heat_trace",
    "level_set_bands",
    "line_restriction",
    "miniaturize",
    "poisson_integral",
    "poisson_kernel",
    "poisson_kernel_basis",
    "project_spectrum",
    "renormalized_laplacian_apply",
    "resistance_field",
    "sin_boundary_data",
    "solve_bvp",
    "sup_norm_stats",
    "sweep_bands",
    "trace_slope",
    "weyl_ratio",
]

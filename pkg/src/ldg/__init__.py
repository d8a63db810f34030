"""Interior-penalty discontinuous Galerkin solver for the reduced
two-dimensional Landau-de Gennes system
-Delta Psi = 2 eps^-2 (1 - |Psi|^2) Psi with weakly imposed Dirichlet data,
plus Newton iteration, Newton-Kantorovich diagnostics and the benchmark
convergence studies."""

from .mesh import (
    Edge,
    Mesh,
    build_annulus_mesh,
    build_square_mesh,
    classify_edges,
    read_mesh,
    refine_uniform,
    write_mesh,
)
from .dgspace import (
    Coefficients,
    DgSpace,
    QuadratureRule,
    boundary_node_mask,
    build_space,
    edge_quadrature,
    eval_basis,
    interpolate,
    lagrange_nodes,
    prolong,
    triangle_quadrature,
)
from .assembly import (
    FormParams,
    apply_B_residual,
    assemble_B_linearized,
    assemble_a_dg,
    assemble_body_load,
    assemble_boundary_load,
    assemble_c_dg,
    assemble_gram,
    assemble_mass,
    default_params,
    jacobian,
    residual,
)
from .solver import (
    DiscreteSystem,
    KantorovichReport,
    LinearSolveError,
    NewtonConfig,
    NewtonError,
    NewtonTrace,
    kantorovich_diagnostic,
    newton_solve,
    solve_linear,
)
from .problems import (
    ProblemSpec,
    WELL_STATES,
    WellState,
    annulus_problem,
    initial_guess_director,
    initial_guess_linear,
    polynomial_problem,
    problem_by_name,
    trapezoid,
    well_problem,
)
from .analysis import (
    ConvergenceTable,
    ErrorRecord,
    StudyResult,
    annulus_study,
    dg_error,
    dg_norm,
    energy,
    energy_general,
    eoc,
    epsilon_sweep,
    l2_error,
    l2_norm,
    polynomial_study,
    well_study,
)
from .cli import RunConfig, export_csv, export_vtk, read_csv, run_study

__version__ = "0.1.0"

"""Linear solves, the Newton iteration and the Newton-Kantorovich diagnostic.

Newton runs in delta form: DN_h(Z) delta = -N_h(Z), Z <- Z + delta, which is
algebraically identical to the fixed-point update
A_dG(Z^n, .) + 3B(Z^{n-1}, Z^{n-1}, Z^n, .) + C_dG(Z^n, .)
= 2B(Z^{n-1}, Z^{n-1}, Z^{n-1}, .) + L_dG(.)
but better conditioned and with direct access to the correction norm.
No globalization is applied; non-convergence raises with the trace attached.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    assemble_a_dg,
    assemble_gram,
    assemble_mass,
    nonlinear_jacobian_matrix,
    nonlinear_residual,
    _problem_loads,
)
from .dgspace import Coefficients

__all__ = [
    "NewtonConfig",
    "NewtonTrace",
    "KantorovichReport",
    "SolverError",
    "LinearSolveError",
    "NewtonError",
    "DiscreteSystem",
    "solve_linear",
    "newton_solve",
    "kantorovich_diagnostic",
]


class SolverError(Exception):
    pass


class LinearSolveError(SolverError):
    """Linear solve failed its residual contract (or the matrix is
    singular); carries the achieved relative residual when available."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class NewtonError(SolverError):
    """Newton failure; carries the trace and the failing iteration."""

    def __init__(self, message, trace, iteration=None):
        super().__init__(message)
        self.trace = trace
        self.iteration = iteration


@dataclass(frozen=True)
class NewtonConfig:
    tol_dg: float = 1e-10
    tol_res: float = 1e-10
    max_iter: int = 50
    linear_solver: str = "direct"  # "direct" | "iterative"

    def __post_init__(self):
        if self.tol_dg <= 0 or self.tol_res <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.linear_solver not in ("direct", "iterative"):
            raise ValueError("linear_solver must be 'direct' or 'iterative'")


@dataclass
class NewtonTrace:
    """Per-iteration history: dG norms of the corrections and Euclidean
    (dual) norms of the residual after each update."""

    corrections: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    initial_residual: float = math.nan
    converged: bool = False

    @property
    def iterations(self):
        return len(self.corrections)

    @property
    def ratios(self):
        """Quadratic ratios |delta^n| / |delta^(n-1)|^2, from iteration 2 on."""
        c = self.corrections
        return [c[i] / c[i - 1] ** 2 for i in range(1, len(c)) if c[i - 1] > 0.0]


@dataclass(frozen=True)
class KantorovichReport:
    """Desk-scale realization of the Kantorovich constants.

    ``a`` bounds the inverse of the linearized operator in the dG-norm
    pairing, ``b`` is the dG norm of the first Newton correction and
    ``lipschitz`` is a sampled (lower) estimate of the Lipschitz constant
    of the linearization over a ball around the start point; certification
    is therefore advisory, not a proof.
    """

    a: float
    b: float
    lipschitz: float
    h_star: float
    certified: bool
    r: float
    r_star: float
    sample_radius: float
    n_pairs: int


def solve_linear(matrix, rhs, method="direct"):
    """Solve a sparse system to the residual contract of the backend:
    1e-12 (direct) or 1e-10 (iterative).

    The contract is enforced as the normwise backward error
    |Mx - b| / (|M| |x| + |b|), the form a double-precision solve can
    actually attain; on well-conditioned systems it coincides with the
    plain relative residual.  Raises :class:`LinearSolveError` with the
    achieved value when the contract is missed (singular or severely
    ill-conditioned matrix).
    """
    rhs = np.asarray(rhs, dtype=float)
    scale = np.linalg.norm(rhs)
    if scale == 0.0:
        return np.zeros_like(rhs)
    matrix = matrix.tocsc()
    if method == "direct":
        contract = 1e-12
        try:
            lu = spla.splu(matrix)
        except RuntimeError as exc:  # exactly singular factorization
            raise LinearSolveError(f"sparse LU failed: {exc}") from exc
        x = lu.solve(rhs)
        for _ in range(2):  # iterative refinement against round-off
            res = rhs - matrix @ x
            if np.linalg.norm(res) / scale < 1e-14:
                break
            x = x + lu.solve(res)
    elif method == "iterative":
        contract = 1e-10
        ilu = spla.spilu(matrix, drop_tol=1e-6, fill_factor=20)
        precond = spla.LinearOperator(matrix.shape, ilu.solve)
        x, info = spla.gmres(
            matrix, rhs, rtol=1e-12, atol=0.0, restart=200, maxiter=2000, M=precond
        )
        if info != 0:
            achieved = np.linalg.norm(rhs - matrix @ x) / scale
            raise LinearSolveError(
                f"GMRES stopped with info={info}, relative residual {achieved:.3e}",
                achieved=achieved,
            )
    else:
        raise ValueError("method must be 'direct' or 'iterative'")
    norm_m = np.abs(matrix).sum(axis=1).max()
    backward = np.linalg.norm(rhs - matrix @ x) / (
        norm_m * np.linalg.norm(x) + scale
    )
    if not np.isfinite(backward) or backward >= contract:
        raise LinearSolveError(
            f"linear solve missed its contract: backward error {backward:.3e}",
            achieved=backward,
        )
    return x


class DiscreteSystem:
    """Assembled operators of one problem on one space.

    Caches the Z-independent pieces (A_dG + c0 * mass, the loads and the
    dG-norm Gram matrix); the cubic term and its linearization are
    reassembled per Newton iterate.
    """

    def __init__(self, space, prob):
        self.space = space
        self.prob = prob
        self.linear_part = (
            assemble_a_dg(space, prob.params) + prob.c0 * assemble_mass(space)
        ).tocsr()
        self.load = _problem_loads(space, prob)
        self.gram = assemble_gram(space, prob.params)

    def residual(self, Z):
        return (
            self.linear_part @ Z.values
            + nonlinear_residual(self.space, Z, self.prob.c2)
            - self.load
        )

    def jacobian(self, Z):
        return (
            self.linear_part + nonlinear_jacobian_matrix(self.space, Z, self.prob.c2)
        ).tocsr()

    def dg_norm_of(self, vec):
        return math.sqrt(max(vec @ (self.gram @ vec), 0.0))


def newton_solve(prob, Z0, cfg=None, system=None):
    """Newton iteration from Z0; returns the solution and its trace.

    Terminates when both the dG norm of the correction and the Euclidean
    norm of the residual drop below their tolerances; raises
    :class:`NewtonError` (with the trace) after max_iter without
    convergence or on a singular linearized system.
    """
    cfg = cfg or NewtonConfig()
    space = Z0.space
    sysop = system if system is not None else DiscreteSystem(space, prob)
    z = Z0.copy()
    trace = NewtonTrace()
    r = sysop.residual(z)
    trace.initial_residual = float(np.linalg.norm(r))
    for it in range(1, cfg.max_iter + 1):
        J = sysop.jacobian(z)
        try:
            delta = solve_linear(J, -r, method=cfg.linear_solver)
        except LinearSolveError as exc:
            raise NewtonError(
                f"linear solve failed at Newton iteration {it}: {exc}",
                trace,
                iteration=it,
            ) from exc
        z.values += delta
        r = sysop.residual(z)
        trace.corrections.append(sysop.dg_norm_of(delta))
        trace.residuals.append(float(np.linalg.norm(r)))
        if trace.corrections[-1] <= cfg.tol_dg and trace.residuals[-1] <= cfg.tol_res:
            trace.converged = True
            return z, trace
    raise NewtonError(
        f"Newton did not converge in {cfg.max_iter} iterations "
        f"(last correction {trace.corrections[-1]:.3e}, "
        f"residual {trace.residuals[-1]:.3e})",
        trace,
        iteration=cfg.max_iter,
    )


MAX_DENSE_DOFS = 4000


def kantorovich_diagnostic(prob, Z0, n_pairs=20, seed=0, sample_radius=None):
    """Kantorovich constants a, b, L at the start point Z0, dense at desk
    scale (vector dof count at most 4000).

    a = 1/sigma_min of G^(-1/2) DN_h(Z0) G^(-1/2) with G the dG-norm Gram
    matrix; b is the dG norm of the first Newton correction; L is the
    largest sampled ratio |DN(Y1) - DN(Y2)|_G / |Y1 - Y2|_dG over random
    pairs in a dG ball around Z0 whose radius covers the Kantorovich
    existence neighborhood (2b, floored at 0.1).  Certified means
    h* = a b L <= 1/2.
    """
    space = Z0.space
    ndofs = 2 * space.num_scalar_dofs
    if ndofs > MAX_DENSE_DOFS:
        raise ValueError(
            f"kantorovich_diagnostic is desk-scale only ({ndofs} dofs > {MAX_DENSE_DOFS})"
        )
    if n_pairs < 1:
        raise ValueError("need at least one sample pair")
    sysop = DiscreteSystem(space, prob)
    G = sysop.gram.toarray()
    try:
        chol = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise ValueError("dG Gram matrix is not positive definite "
                         "(penalty configuration error)") from exc

    def whiten(mat):
        # L^-1 M L^-T, same singular values as G^(-1/2) M G^(-1/2)
        y = sla.solve_triangular(chol, mat, lower=True)
        return sla.solve_triangular(chol, y.T, lower=True).T

    M0 = sysop.jacobian(Z0).toarray()
    svals = np.linalg.svd(whiten(M0), compute_uv=False)
    a = 1.0 / svals.min()

    delta0 = solve_linear(sp.csr_matrix(M0), sysop.residual(Z0))
    b = sysop.dg_norm_of(delta0)

    radius = sample_radius if sample_radius is not None else max(2.0 * b, 0.1)
    rng = np.random.default_rng(seed)
    lip = 0.0
    for _ in range(n_pairs):
        fields = []
        for _ in range(2):
            eta = rng.standard_normal(ndofs)
            eta *= radius * rng.uniform(0.2, 1.0) / max(sysop.dg_norm_of(eta), 1e-30)
            fields.append(Coefficients(space, 2, Z0.values + eta))
        dist = sysop.dg_norm_of(fields[0].values - fields[1].values)
        if dist < 1e-14:
            continue
        dM = (
            nonlinear_jacobian_matrix(space, fields[0], prob.c2)
            - nonlinear_jacobian_matrix(space, fields[1], prob.c2)
        ).toarray()
        lip = max(lip, np.linalg.svd(whiten(dM), compute_uv=False).max() / dist)

    h_star = a * b * lip
    certified = h_star <= 0.5
    if lip == 0.0:
        r = 0.0
        r_star = math.inf
    elif certified:
        root = math.sqrt(1.0 - 2.0 * h_star)
        r = (1.0 - root) / (a * lip) - b
        r_star = (1.0 + root) / (a * lip)
    else:
        r = math.nan
        r_star = math.nan
    return KantorovichReport(
        a=a,
        b=b,
        lipschitz=lip,
        h_star=h_star,
        certified=certified,
        r=r,
        r_star=r_star,
        sample_radius=radius,
        n_pairs=n_pairs,
    )

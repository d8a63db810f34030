"""Norms, energies, convergence studies and the eps sweep.

Errors against an exact solution are integrated with the volume rule of the
space; boundary jumps of the error are measured against the Dirichlet data
([Z - g] on boundary edges), matching its weak imposition.  Errors against a
finer discrete solution go through exact prolongation to the fine space.
All functions here are pure; sweep cells are independent and could run
concurrently.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import assembly
from .assembly import default_params
from .dgspace import Coefficients, build_space, prolong
from .mesh import build_annulus_mesh, build_square_mesh, refine_uniform
from .problems import (
    annulus_problem,
    initial_guess_director,
    initial_guess_linear,
    polynomial_problem,
    well_problem,
    WELL_STATES,
)
from .solver import DiscreteSystem, NewtonConfig, NewtonError, newton_solve

__all__ = [
    "ErrorRecord",
    "ConvergenceTable",
    "StudyResult",
    "dg_norm",
    "dg_error",
    "l2_norm",
    "l2_error",
    "energy",
    "energy_general",
    "eoc",
    "polynomial_study",
    "annulus_study",
    "well_study",
    "epsilon_sweep",
]


# -- norms and energy ---------------------------------------------------------


def dg_norm(space, Z, params):
    """Mesh-dependent norm: broken H1 seminorm plus the penalty-weighted
    jump seminorm over all edges (components summed for vector fields)."""
    if Z.components == 1:
        G = assembly.assemble_gram_scalar(space, params)
    else:
        G = assembly.assemble_gram(space, params)
    return math.sqrt(max(Z.values @ (G @ Z.values), 0.0))


def _broken_gradients(space, Z):
    gp = space.physical_gradients()
    return [np.einsum("tqni,tn->tqi", gp, Z.component(c)) for c in range(Z.components)]


def dg_error(space, Z, prob):
    """dG-norm distance between Z and the problem's exact solution.

    Interior jumps of the error coincide with the jumps of Z (the exact
    solution is continuous); boundary jumps are measured as [Z - g].
    """
    if prob.exact is None or prob.exact_grad is None:
        raise ValueError("problem carries no exact solution/gradient")
    params = prob.params
    wq = space.quad_volume.weights
    pts = space.origin[:, None, :] + np.einsum("tij,qj->tqi", space.jac, space.quad_volume.points)
    x, y = pts[..., 0].ravel(), pts[..., 1].ravel()
    gex = prob.exact_grad(x, y)
    total = 0.0
    for c, gz in enumerate(_broken_gradients(space, Z)):
        for i in range(2):
            diff = gz[..., i] - np.asarray(gex[c][i], dtype=float).reshape(gz.shape[:2])
            total += np.einsum("q,tq,t->", wq, diff**2, space.det)

    t = assembly._edge_tables(space)
    pen = assembly._penalty_factor(space, params)
    # interior jumps: [Z - exact] = [Z]
    for c in range(2):
        comp = Z.component(c)
        jump = np.einsum("eqn,en->eq", t["val_p"], comp[t["tri_p"]]) - np.einsum(
            "eqn,en->eq", t["val_m"], comp[t["tri_m"]]
        )
        total += np.einsum("q,eq,e->", t["wq"], jump**2, pen[t["interior"]] * t["len_i"])
    # boundary jumps: [Z - g]
    xb, yb = t["pts_b"][..., 0].ravel(), t["pts_b"][..., 1].ravel()
    gb = prob.g(xb, yb)
    for c in range(2):
        comp = Z.component(c)
        trace = np.einsum("eqn,en->eq", t["val_b"], comp[t["tri_b"]])
        diff = trace - np.asarray(gb[c], dtype=float).reshape(trace.shape)
        total += np.einsum("q,eq,e->", t["wq"], diff**2, pen[t["boundary"]] * t["len_b"])
    return math.sqrt(max(total, 0.0))


def l2_norm(space, Z):
    """L2 norm computed with the volume quadrature of the space."""
    wq = space.quad_volume.weights
    zq = Z.at_quadrature()
    total = sum(np.einsum("q,tq,t->", wq, zq[c] ** 2, space.det) for c in range(Z.components))
    return math.sqrt(max(total, 0.0))


def l2_error(space, Z, exact):
    """L2 distance to an exact solution (callable) or to another field on
    the same space."""
    if isinstance(exact, Coefficients):
        diff = Coefficients(space, Z.components, Z.values - exact.values)
        return l2_norm(space, diff)
    wq = space.quad_volume.weights
    pts = space.origin[:, None, :] + np.einsum("tij,qj->tqi", space.jac, space.quad_volume.points)
    x, y = pts[..., 0].ravel(), pts[..., 1].ravel()
    ex = exact(x, y)
    if not isinstance(ex, (tuple, list)):
        ex = (ex,)
    zq = Z.at_quadrature()
    total = 0.0
    for c in range(Z.components):
        diff = zq[c] - np.asarray(ex[c], dtype=float).reshape(zq[c].shape)
        total += np.einsum("q,tq,t->", wq, diff**2, space.det)
    return math.sqrt(max(total, 0.0))


def energy_general(space, Z, c2, c0):
    """Quartic well energy with the broken gradient and no jump terms:
    sum_T int |grad Z|^2 + (c2/2)(|Z|^2 + c0/c2)^2."""
    if Z.components != 2:
        raise ValueError("energy needs a 2-component field")
    wq = space.quad_volume.weights
    zq = Z.at_quadrature()
    s2 = zq[0] ** 2 + zq[1] ** 2
    well = 0.5 * c2 * (s2 + c0 / c2) ** 2
    total = np.einsum("q,tq,t->", wq, well, space.det)
    for gz in _broken_gradients(space, Z):
        total += np.einsum("q,tqi,t->", wq, gz**2, space.det)
    return float(total)


def energy(space, Z, eps):
    """Dimensionless Landau-de Gennes energy
    sum_T int |grad Z|^2 + eps^-2 (|Z|^2 - 1)^2."""
    c2 = 2.0 / eps**2
    return energy_general(space, Z, c2, -c2)


# -- experimental orders of convergence --------------------------------------


def eoc(h_values, errors):
    """Orders alpha_i = log(e_n / e_i) / log(h_n / h_i) against the finest
    (smallest-h) record; one value per non-anchor record, listed coarsest
    first.  Input order does not matter."""
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) != len(e) or len(h) < 2:
        raise ValueError("need at least two (h, error) pairs")
    if np.any(e <= 0.0):
        raise ValueError("errors must be positive")
    anchor = int(np.argmin(h))
    order = np.argsort(-h, kind="stable")
    return [
        float(math.log(e[anchor] / e[i]) / math.log(h[anchor] / h[i]))
        for i in order
        if i != anchor
    ]


@dataclass
class ErrorRecord:
    """One study level: mesh size, per-component scalar dof count, errors,
    energy and Newton iteration count.  Error fields are None when they are
    not defined at this level (reference level, or a non-converged run)."""

    h: float
    dofs: int
    err_dg: float | None
    err_l2: float | None
    energy: float | None
    newton_iters: int
    eps: float
    k: int
    converged: bool = True


@dataclass
class ConvergenceTable:
    """Ordered per-level records with EOC values per norm.

    ``orders_dg[i]`` / ``orders_l2[i]`` align with ``records[i]``; entries
    are None on the anchor (finest with error) row and on rows without
    errors, following the "-" convention of printed tables.
    """

    records: list
    orders_dg: list = field(default_factory=list)
    orders_l2: list = field(default_factory=list)

    def compute_orders(self):
        idx = [i for i, r in enumerate(self.records) if r.err_dg is not None]
        self.orders_dg = [None] * len(self.records)
        self.orders_l2 = [None] * len(self.records)
        if len(idx) >= 2:
            hs = [self.records[i].h for i in idx]
            a_dg = eoc(hs, [self.records[i].err_dg for i in idx])
            a_l2 = eoc(hs, [self.records[i].err_l2 for i in idx])
            anchor = idx[int(np.argmin(hs))]
            others = [i for i in idx if i != anchor]
            for j, i in enumerate(sorted(others, key=lambda i: -self.records[i].h)):
                self.orders_dg[i] = a_dg[j]
                self.orders_l2[i] = a_l2[j]
        return self


@dataclass
class StudyResult:
    table: ConvergenceTable
    spaces: list
    solutions: list
    traces: list


# -- study drivers ------------------------------------------------------------


def _square_spaces(n0, levels, k):
    mesh = build_square_mesh(n0)
    meshes = [mesh]
    for _ in range(levels - 1):
        meshes.append(refine_uniform(meshes[-1]))
    return [build_space(m, k) for m in meshes]


def _manufactured_study(prob, spaces, newton_cfg, warmstart=False, strict=True):
    records, solutions, traces = [], [], []
    prev = None
    for space in spaces:
        if warmstart and prev is not None:
            guess = prolong(prev, space)
        else:
            guess = initial_guess_linear(prob, space)
        try:
            sol, trace = newton_solve(prob, guess, newton_cfg)
        except NewtonError as exc:
            if strict:
                raise
            records.append(
                ErrorRecord(
                    h=space.mesh.h,
                    dofs=space.num_scalar_dofs,
                    err_dg=None,
                    err_l2=None,
                    energy=None,
                    newton_iters=exc.trace.iterations,
                    eps=prob.eps if prob.eps is not None else prob.c2 / 2.0,
                    k=space.k,
                    converged=False,
                )
            )
            solutions.append(None)
            traces.append(exc.trace)
            continue
        records.append(
            ErrorRecord(
                h=space.mesh.h,
                dofs=space.num_scalar_dofs,
                err_dg=dg_error(space, sol, prob),
                err_l2=l2_error(space, sol, prob.exact),
                energy=energy_general(space, sol, prob.c2, prob.c0),
                newton_iters=trace.iterations,
                eps=prob.eps if prob.eps is not None else prob.c2 / 2.0,
                k=space.k,
            )
        )
        solutions.append(sol)
        traces.append(trace)
        prev = sol
    table = ConvergenceTable(records).compute_orders()
    return StudyResult(table, list(spaces), solutions, traces)


def polynomial_study(eps, k, levels, n0=4, sigma=None, lam=-1,
                     penalty_scaling="local", newton_cfg=None, warmstart=False,
                     strict=True):
    """Manufactured polynomial benchmark: `levels` uniform refinements from
    an n0 x n0 square mesh, errors against the exact solution."""
    params = default_params(k, eps=eps, sigma=sigma, lam=lam,
                            penalty_scaling=penalty_scaling)
    prob = polynomial_problem(eps, params)
    spaces = _square_spaces(n0, levels, k)
    return _manufactured_study(prob, spaces, newton_cfg, warmstart, strict)


def annulus_study(k=1, levels=5, n_seg=32, sigma=None, lam=-1,
                  penalty_scaling="local", newton_cfg=None, warmstart=False,
                  strict=True):
    """Radial annulus benchmark on the fixed polygonal domain (inscribed
    polygons; refinement keeps boundary midpoints on the polygon)."""
    params = default_params(k, sigma=sigma, lam=lam, penalty_scaling=penalty_scaling)
    prob = annulus_problem(params)
    mesh = build_annulus_mesh(0.5, 1.0, n_seg)
    meshes = [mesh]
    for _ in range(levels - 1):
        meshes.append(refine_uniform(meshes[-1]))
    spaces = [build_space(m, k) for m in meshes]
    return _manufactured_study(prob, spaces, newton_cfg, warmstart, strict)


def well_study(eps, k, levels, n0=16, states=("D1",), sigma=None, lam=-1,
               penalty_scaling="local", newton_cfg=None, warmstart=False,
               strict=True, reference="mixed"):
    """Bistable well benchmark for one or more states.

    Solves every state on the same refinement hierarchy (operators are
    assembled once per level and shared); without an exact solution the
    error at level i is the dG/L2 distance between discrete solutions
    across meshes, evaluated exactly in the finer space via prolongation.

    ``reference`` picks the pairing.  The default "mixed" measures the dG
    error against the next level and the L2 error against the finest level
    of the run: the dG norm is mesh dependent (the sigma/h_E penalty
    reweights coarse-level jumps when evaluated on a much finer mesh), so
    only the consecutive pairing is meaningful there, while the
    mesh-independent L2 distance to the finest solution approximates the
    true error.  "consecutive" and "finest" use one pairing for both norms.
    Returns a dict state -> StudyResult; the finest record carries the
    energy but no error fields.
    """
    if reference not in ("mixed", "consecutive", "finest"):
        raise ValueError("reference must be 'mixed', 'consecutive' or 'finest'")
    params = default_params(k, eps=eps, sigma=sigma, lam=lam,
                            penalty_scaling=penalty_scaling)
    prob = well_problem(eps, params)
    spaces = _square_spaces(n0, levels, k)
    per_state = {s: {"solutions": [], "traces": []} for s in states}
    for space in spaces:
        system = DiscreteSystem(space, prob)
        for state in states:
            prev = per_state[state]["solutions"]
            if warmstart and prev and prev[-1] is not None:
                guess = prolong(prev[-1], space)
            else:
                guess = initial_guess_director(space, state, params)
            try:
                sol, trace = newton_solve(prob, guess, newton_cfg, system=system)
            except NewtonError as exc:
                if strict:
                    raise
                sol, trace = None, exc.trace
            per_state[state]["solutions"].append(sol)
            per_state[state]["traces"].append(trace)

    if reference == "mixed":
        ref_dg, ref_l2 = "consecutive", "finest"
    else:
        ref_dg = ref_l2 = reference

    def distance(sols, i, j, norm):
        other = sols[j]
        if other is None:
            return None
        lifted = sols[i]
        for target in spaces[i + 1 : j + 1]:
            lifted = prolong(lifted, target)
        diff = Coefficients(spaces[j], 2, other.values - lifted.values)
        if norm == "dg":
            return dg_norm(spaces[j], diff, params)
        return l2_norm(spaces[j], diff)

    out = {}
    for state in states:
        sols = per_state[state]["solutions"]
        records = []
        for i, (space, sol) in enumerate(zip(spaces, sols)):
            err_dg = err_l2 = None
            if sol is not None and i < len(spaces) - 1:
                j_dg = i + 1 if ref_dg == "consecutive" else len(spaces) - 1
                j_l2 = i + 1 if ref_l2 == "consecutive" else len(spaces) - 1
                err_dg = distance(sols, i, j_dg, "dg")
                err_l2 = distance(sols, i, j_l2, "l2")
            records.append(
                ErrorRecord(
                    h=space.mesh.h,
                    dofs=space.num_scalar_dofs,
                    err_dg=err_dg,
                    err_l2=err_l2,
                    energy=None if sol is None else energy(space, sol, eps),
                    newton_iters=per_state[state]["traces"][i].iterations,
                    eps=eps,
                    k=k,
                    converged=sol is not None,
                )
            )
        table = ConvergenceTable(records).compute_orders()
        out[state] = StudyResult(table, list(spaces), sols, per_state[state]["traces"])
    return out


def epsilon_sweep(eps_values, levels, k=1, n0=4, sigma=None, lam=-1,
                  penalty_scaling="local", newton_cfg=None):
    """Polynomial benchmark over an eps list on a shared mesh hierarchy.

    Non-convergent cells are recorded with absent error fields rather than
    fabricated numbers; nothing is raised.  Returns a dict
    eps -> ConvergenceTable.
    """
    spaces = _square_spaces(n0, levels, k)
    out = {}
    for eps in eps_values:
        params = default_params(k, eps=eps, sigma=sigma, lam=lam,
                                penalty_scaling=penalty_scaling)
        prob = polynomial_problem(eps, params)
        records = []
        for space in spaces:
            try:
                guess = initial_guess_linear(prob, space)
                sol, trace = newton_solve(prob, guess, newton_cfg)
                records.append(
                    ErrorRecord(
                        h=space.mesh.h,
                        dofs=space.num_scalar_dofs,
                        err_dg=dg_error(space, sol, prob),
                        err_l2=l2_error(space, sol, prob.exact),
                        energy=energy(space, sol, eps),
                        newton_iters=trace.iterations,
                        eps=eps,
                        k=k,
                    )
                )
            except NewtonError as exc:
                records.append(
                    ErrorRecord(
                        h=space.mesh.h,
                        dofs=space.num_scalar_dofs,
                        err_dg=None,
                        err_l2=None,
                        energy=None,
                        newton_iters=exc.trace.iterations,
                        eps=eps,
                        k=k,
                        converged=False,
                    )
                )
        out[eps] = ConvergenceTable(records).compute_orders()
    return out

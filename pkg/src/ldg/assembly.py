"""Assembly of the interior-penalty dG forms.

The scalar Laplacian form is a_dG(u, v) = a_h(u, v) - J(u, v) + lam*J(v, u)
+ Jsig(u, v) with the consistency term J(u, v) = sum_E int {du/dn}[v] and
penalty Jsig(u, v) = sum_E int (sigma/h_E)[u][v]; lam = -1, 0, +1 select the
symmetric, incomplete and non-symmetric variants.  Jumps and averages follow
the standard convention anchored to the n+ normal: [v] = v+ - v- and
{w} = (w+ + w-)/2 on interior edges, [v] = v and {w} = w on boundary edges.

Vector forms act componentwise on the block dof layout [u; v]; the quartic
coupling term is assembled from the field values at the volume quadrature
points.  Matrices are accumulated as triplets (duplicates summed on
compression) and returned as scipy CSR; load vectors are plain numpy arrays.
Assembly loops are elementwise-independent and could run concurrently; the
outputs are immutable once built.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dgspace import Coefficients, edge_quadrature, eval_basis, triangle_quadrature

__all__ = [
    "FormParams",
    "default_params",
    "assemble_a_dg",
    "assemble_c_dg",
    "assemble_mass",
    "assemble_gram",
    "assemble_a_dg_scalar",
    "assemble_gram_scalar",
    "assemble_boundary_load",
    "assemble_boundary_load_scalar",
    "assemble_body_load",
    "apply_B_residual",
    "assemble_B_linearized",
    "nonlinear_residual",
    "nonlinear_jacobian_matrix",
    "residual",
    "jacobian",
]

LOAD_QUAD_DEGREE = 14  # loads may carry non-polynomial data; use the max rule


@dataclass(frozen=True)
class FormParams:
    """Parameters of the dG forms.

    ``eps`` is the Landau-de Gennes coherence parameter (C_eps = 2/eps^2);
    it may be None for problems that specify the zeroth-order coefficients
    directly.  ``penalty_scaling`` selects the penalty denominator: the
    local edge length ("local") or the global mesh size ("global").
    """

    eps: float | None
    sigma: float
    lam: int = -1
    penalty_scaling: str = "local"

    def __post_init__(self):
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.sigma > 0:
            raise ValueError("penalty parameter sigma must be positive")
        if self.lam not in (-1, 0, 1):
            raise ValueError("lam must be one of -1, 0, +1")
        if self.penalty_scaling not in ("local", "global"):
            raise ValueError("penalty_scaling must be 'local' or 'global'")

    @property
    def c_eps(self):
        if self.eps is None:
            raise ValueError("form parameters carry no eps")
        return 2.0 / self.eps**2


def default_params(k, eps=None, sigma=None, lam=-1, penalty_scaling="local"):
    """FormParams with the standard penalty sigma = 10 k^2."""
    if sigma is None:
        sigma = 10.0 * k * k
    return FormParams(eps=eps, sigma=sigma, lam=lam, penalty_scaling=penalty_scaling)


# -- cached per-space tables -------------------------------------------------


def _edge_tables(space):
    """Trace values and normal derivatives at edge quadrature points."""
    cached = getattr(space, "_edge_tables", None)
    if cached is not None:
        return cached
    mesh = space.mesh
    rule = space.quad_edge
    tq = rule.points

    def traces(edge_ids, tris):
        a = mesh.vertices[mesh.edge_vertices[edge_ids, 0]]
        b = mesh.vertices[mesh.edge_vertices[edge_ids, 1]]
        pts = a[:, None, :] + tq[None, :, None] * (b - a)[:, None, :]
        ref = np.einsum(
            "eij,eqj->eqi", space.inv_jac[tris], pts - space.origin[tris][:, None, :]
        )
        val, grad = eval_basis(space.k, ref.reshape(-1, 2))
        nd = space.dofs_per_triangle
        val = val.reshape(len(edge_ids), len(tq), nd)
        grad = grad.reshape(len(edge_ids), len(tq), nd, 2)
        gphys = np.einsum("eqnj,eji->eqni", grad, space.inv_jac[tris])
        dn = np.einsum("eqni,ei->eqn", gphys, mesh.edge_normals[edge_ids])
        return pts, val, dn

    interior = np.nonzero(mesh.edge_is_interior)[0]
    boundary = np.nonzero(~mesh.edge_is_interior)[0]
    tri_p = mesh.edge_tri_plus[interior]
    tri_m = mesh.edge_tri_minus[interior]
    _, val_p, dn_p = traces(interior, tri_p)
    _, val_m, dn_m = traces(interior, tri_m)
    tri_b = mesh.edge_tri_plus[boundary]
    pts_b, val_b, dn_b = traces(boundary, tri_b)

    tables = {
        "interior": interior,
        "tri_p": tri_p,
        "tri_m": tri_m,
        "val_p": val_p,
        "val_m": val_m,
        "dn_p": dn_p,
        "dn_m": dn_m,
        "len_i": mesh.edge_lengths[interior],
        "boundary": boundary,
        "tri_b": tri_b,
        "val_b": val_b,
        "dn_b": dn_b,
        "pts_b": pts_b,
        "len_b": mesh.edge_lengths[boundary],
        "wq": rule.weights,
    }
    space._edge_tables = tables
    return tables


def _dof_blocks(space, tris):
    """(E, nd) global scalar dof indices of the given triangles."""
    nd = space.dofs_per_triangle
    return tris[:, None] * nd + np.arange(nd)[None, :]


def _face_triplets(space):
    """Triplets of the consistency matrix J and the unit-penalty matrix S.

    J[r, c] = sum_E int {d b_c / dn} [b_r]; S carries int [b_c][b_r]
    weighted by the edge length only, with the owning edge id per triplet
    so the sigma/h factor can be applied afterwards.
    """
    cached = getattr(space, "_face_triplets", None)
    if cached is not None:
        return cached
    t = _edge_tables(space)
    wq = t["wq"]

    rows_J, cols_J, vals_J = [], [], []
    rows_S, cols_S, vals_S, eids_S = [], [], [], []

    def add(rows, cols, vals, dof_test, dof_trial, block, eids=None, store=None):
        ne, nd = dof_test.shape
        r = np.broadcast_to(dof_test[:, :, None], (ne, nd, nd)).ravel()
        c = np.broadcast_to(dof_trial[:, None, :], (ne, nd, nd)).ravel()
        rows.append(r)
        cols.append(c)
        vals.append(block.ravel())
        if store is not None:
            store.append(np.repeat(eids, nd * nd))

    # interior edges: average weight 1/2, jump signs +/-
    dof_p = _dof_blocks(space, t["tri_p"])
    dof_m = _dof_blocks(space, t["tri_m"])
    length = t["len_i"]
    sides = (("p", dof_p, t["val_p"], t["dn_p"], +1.0), ("m", dof_m, t["val_m"], t["dn_m"], -1.0))
    for _, dof_t, val_t, _, sign_t in sides:
        for _, dof_u, _, dn_u, _ in sides:
            block = np.einsum("q,eqi,eqj,e->eij", wq, val_t, dn_u, length) * (0.5 * sign_t)
            add(rows_J, cols_J, vals_J, dof_t, dof_u, block)
        for _, dof_u, val_u, _, sign_u in sides:
            block = np.einsum("q,eqi,eqj,e->eij", wq, val_t, val_u, length) * (sign_t * sign_u)
            add(rows_S, cols_S, vals_S, dof_t, dof_u, block, t["interior"], eids_S)

    # boundary edges: [v] = v, {w} = w
    dof_b = _dof_blocks(space, t["tri_b"])
    block = np.einsum("q,eqi,eqj,e->eij", wq, t["val_b"], t["dn_b"], t["len_b"])
    add(rows_J, cols_J, vals_J, dof_b, dof_b, block)
    block = np.einsum("q,eqi,eqj,e->eij", wq, t["val_b"], t["val_b"], t["len_b"])
    add(rows_S, cols_S, vals_S, dof_b, dof_b, block, t["boundary"], eids_S)

    cached = {
        "J": (np.concatenate(rows_J), np.concatenate(cols_J), np.concatenate(vals_J)),
        "S": (
            np.concatenate(rows_S),
            np.concatenate(cols_S),
            np.concatenate(vals_S),
            np.concatenate(eids_S),
        ),
    }
    space._face_triplets = cached
    return cached


def _volume_tables(space):
    cached = getattr(space, "_volume_tables", None)
    if cached is not None:
        return cached
    wq = space.quad_volume.weights
    gp = space.physical_gradients()
    stiff = np.einsum("q,tqik,tqjk,t->tij", wq, gp, gp, space.det)
    mass_ref = np.einsum("q,qi,qj->ij", wq, space.basis_val, space.basis_val)
    dofs = _dof_blocks(space, np.arange(space.num_triangles))
    nd = space.dofs_per_triangle
    ntri = space.num_triangles
    rows = np.broadcast_to(dofs[:, :, None], (ntri, nd, nd)).ravel()
    cols = np.broadcast_to(dofs[:, None, :], (ntri, nd, nd)).ravel()
    cached = {"stiff": stiff, "mass_ref": mass_ref, "rows": rows, "cols": cols}
    space._volume_tables = cached
    return cached


def _penalty_factor(space, params):
    if params.penalty_scaling == "global":
        return np.full(space.mesh.num_edges, params.sigma / space.mesh.h)
    return params.sigma / space.mesh.edge_lengths


def _csr(rows, cols, vals, n):
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


# -- scalar operators --------------------------------------------------------


def assemble_a_dg_scalar(space, params):
    """Scalar dG Laplacian matrix a_dG for the given parameters."""
    if params.lam not in (-1, 0, 1):
        raise ValueError("lam must be one of -1, 0, +1")
    n = space.num_scalar_dofs
    vol = _volume_tables(space)
    stiff = _csr(vol["rows"], vol["cols"], vol["stiff"].ravel(), n)
    face = _face_triplets(space)
    rj, cj, vj = face["J"]
    J = _csr(rj, cj, vj, n)
    rs, cs, vs, es = face["S"]
    S = _csr(rs, cs, vs * _penalty_factor(space, params)[es], n)
    A = stiff - J + params.lam * J.T + S
    return A.tocsr()


def assemble_gram_scalar(space, params):
    """Gram matrix of the mesh-dependent dG norm:
    broken stiffness plus the penalty jump form over all edges."""
    n = space.num_scalar_dofs
    vol = _volume_tables(space)
    stiff = _csr(vol["rows"], vol["cols"], vol["stiff"].ravel(), n)
    rs, cs, vs, es = _face_triplets(space)["S"]
    S = _csr(rs, cs, vs * _penalty_factor(space, params)[es], n)
    return (stiff + S).tocsr()


def assemble_mass_scalar(space):
    n = space.num_scalar_dofs
    vol = _volume_tables(space)
    local = vol["mass_ref"][None, :, :] * space.det[:, None, None]
    return _csr(vol["rows"], vol["cols"], local.ravel(), n)


def _block_diag2(m):
    return sp.block_diag([m, m], format="csr")


# -- vector operators --------------------------------------------------------


def assemble_a_dg(space, params):
    """Vector form A_dG: the scalar a_dG acting on each component
    (block-diagonal over the [u; v] layout)."""
    return _block_diag2(assemble_a_dg_scalar(space, params))


def assemble_mass(space):
    """Block-diagonal vector mass matrix."""
    return _block_diag2(assemble_mass_scalar(space))


def assemble_gram(space, params):
    """Gram matrix of the vector dG norm (componentwise sum)."""
    return _block_diag2(assemble_gram_scalar(space, params))


def assemble_c_dg(space, params):
    """C_dG = -C_eps * mass, block-diagonal over components."""
    return (-params.c_eps) * assemble_mass(space)


# -- load vectors ------------------------------------------------------------


def _boundary_sub_rules(length01_breaks):
    """Subintervals of [0, 1] between sorted interior breakpoints."""
    pts = [0.0] + sorted(t for t in length01_breaks if 0.0 < t < 1.0) + [1.0]
    return list(zip(pts[:-1], pts[1:]))


def _boundary_load_edges(space, params, g_scalar_or_pair, breakpoints, components):
    """Shared boundary-load loop; returns per-component scalar vectors.

    The edge integral is split at declared breakpoints of g so piecewise
    polynomial boundary data is integrated exactly.
    """
    mesh = space.mesh
    rule = edge_quadrature(LOAD_QUAD_DEGREE)
    tq, wq = rule.points, rule.weights
    nd = space.dofs_per_triangle
    out = [np.zeros(space.num_scalar_dofs) for _ in range(components)]
    for e in np.nonzero(~mesh.edge_is_interior)[0]:
        tri = int(mesh.edge_tri_plus[e])
        a = mesh.vertices[mesh.edge_vertices[e, 0]]
        b = mesh.vertices[mesh.edge_vertices[e, 1]]
        normal = mesh.edge_normals[e]
        length = mesh.edge_lengths[e]
        if params.penalty_scaling == "global":
            pen = params.sigma / mesh.h
        else:
            pen = params.sigma / length
        subs = _boundary_sub_rules(breakpoints(a, b) if breakpoints else [])
        dofs = tri * nd + np.arange(nd)
        for t0, t1 in subs:
            t = t0 + (t1 - t0) * tq
            pts = a[None, :] + t[:, None] * (b - a)[None, :]
            ref = space.to_reference(tri, pts)
            val, grad = eval_basis(space.k, ref)
            gphys = np.einsum("qnj,ji->qni", grad, space.inv_jac[tri])
            dn = gphys @ normal
            gv = g_scalar_or_pair(pts[:, 0], pts[:, 1])
            if components == 1:
                gv = (gv,)
            w = wq * (t1 - t0) * length
            for c in range(components):
                gq = np.broadcast_to(np.asarray(gv[c], dtype=float), t.shape)
                out[c][dofs] += np.einsum("q,qn->n", w * gq, params.lam * dn + pen * val)
    return out


def assemble_boundary_load_scalar(space, g, params, breakpoints=None):
    """Scalar boundary load l_dG(phi) = lam*sum_E int (dphi/dn) g
    + sum_E int (sigma/h_E) g phi over boundary edges."""
    return _boundary_load_edges(space, params, g, breakpoints, 1)[0]


def assemble_boundary_load(space, g, params, breakpoints=None):
    """Vector boundary load L_dG = l^1_dG(phi_1) + l^2_dG(phi_2).

    ``g(x, y)`` returns the two boundary components; ``breakpoints(a, b)``
    may list arc-length parameters in (0, 1) where g is not smooth along
    the edge from a to b, so the quadrature splits there.
    """
    l1, l2 = _boundary_load_edges(space, params, g, breakpoints, 2)
    return np.concatenate([l1, l2])


def _load_basis(space):
    cached = getattr(space, "_load_basis", None)
    if cached is None:
        rule = triangle_quadrature(LOAD_QUAD_DEGREE)
        val, _ = eval_basis(space.k, rule.points)
        cached = (rule, val)
        space._load_basis = cached
    return cached


def assemble_body_load(space, f):
    """Volume load with entries sum_T int f . Phi, using a high-order rule
    so polynomial forcings of the manufactured problems are exact."""
    rule, val = _load_basis(space)
    pts = space.origin[:, None, :] + np.einsum("tij,qj->tqi", space.jac, rule.points)
    fx = f(pts[..., 0].ravel(), pts[..., 1].ravel())
    if not isinstance(fx, (tuple, list)) or len(fx) != 2:
        raise ValueError("body forcing must return two components")
    out = []
    shape = (space.num_triangles, len(rule.points))
    for c in range(2):
        fq = np.broadcast_to(np.asarray(fx[c], dtype=float).reshape(-1), pts[..., 0].ravel().shape)
        fq = fq.reshape(shape)
        out.append(np.einsum("q,tq,qi,t->ti", rule.weights, fq, val, space.det).ravel())
    return np.concatenate(out)


# -- the cubic coupling term ---------------------------------------------------


def nonlinear_residual(space, Z, c2):
    """Entries c2 * sum_T int |Z|^2 (Z . Phi) for all test functions."""
    if Z.components != 2:
        raise ValueError("the coupling term needs a 2-component field")
    wq = space.quad_volume.weights
    val = space.basis_val
    zq = Z.at_quadrature()  # (2, T, nq)
    s2 = zq[0] ** 2 + zq[1] ** 2
    parts = [
        c2 * np.einsum("q,tq,qi,t->ti", wq, s2 * zq[c], val, space.det).ravel()
        for c in range(2)
    ]
    return np.concatenate(parts)


def nonlinear_jacobian_matrix(space, Z, c2):
    """Matrix of the linearized coupling 3B(Z, Z, ., .):
    c2 * sum_T int (|Z|^2 (Theta . Phi) + 2 (Z . Theta)(Z . Phi)).

    Symmetric and positive semidefinite for any Z; couples the two
    components through the rank-one 2(Z.Theta)(Z.Phi) term.
    """
    if Z.components != 2:
        raise ValueError("the coupling term needs a 2-component field")
    n = space.num_scalar_dofs
    wq = space.quad_volume.weights
    val = space.basis_val
    vol = _volume_tables(space)
    zq = Z.at_quadrature()
    s2 = zq[0] ** 2 + zq[1] ** 2

    def block(coef):
        return c2 * np.einsum("q,tq,qi,qj,t->tij", wq, coef, val, val, space.det)

    buu = block(s2 + 2.0 * zq[0] ** 2).ravel()
    bvv = block(s2 + 2.0 * zq[1] ** 2).ravel()
    buv = block(2.0 * zq[0] * zq[1]).ravel()
    rows, cols = vol["rows"], vol["cols"]
    r = np.concatenate([rows, n + rows, rows, n + rows])
    c = np.concatenate([cols, n + cols, n + cols, cols])
    v = np.concatenate([buu, bvv, buv, buv])
    return _csr(r, c, v, 2 * n)


def apply_B_residual(space, Z, eps):
    """The cubic term with equal arguments, B_dG(Z, Z, Z, .), for the
    Landau-de Gennes scaling c2 = C_eps = 2/eps^2."""
    return nonlinear_residual(space, Z, 2.0 / eps**2)


def assemble_B_linearized(space, Z, eps):
    """3 B_dG(Z, Z, ., .) for the Landau-de Gennes scaling."""
    return nonlinear_jacobian_matrix(space, Z, 2.0 / eps**2)


# -- full residual and Jacobian ----------------------------------------------


def _problem_loads(space, prob):
    load = assemble_boundary_load(space, prob.g, prob.params, prob.g_breakpoints)
    if prob.f is not None:
        load = load + assemble_body_load(space, prob.f)
    return load


def residual(space, Z, prob):
    """N_h(Z; .) - L_dG(.) as a dof vector: A_dG Z + B(Z,Z,Z,.) + C_dG Z
    minus the boundary and body loads.  Zero exactly at a discrete
    solution."""
    A = assemble_a_dg(space, prob.params)
    M = assemble_mass(space)
    r = A @ Z.values + prob.c0 * (M @ Z.values) + nonlinear_residual(space, Z, prob.c2)
    return r - _problem_loads(space, prob)


def jacobian(space, Z, prob):
    """Exact derivative of :func:`residual` at Z:
    A_dG + 3B(Z, Z, ., .) + C_dG.  Symmetric for lam = -1."""
    A = assemble_a_dg(space, prob.params)
    M = assemble_mass(space)
    return (A + prob.c0 * M + nonlinear_jacobian_matrix(space, Z, prob.c2)).tocsr()

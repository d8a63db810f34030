"""Broken polynomial spaces of degree k in {1, 2, 3} on triangle meshes.

Provides the nodal Lagrange reference basis, quadrature rules on the
reference triangle and edge, the dof layout (triangle-major for scalars,
block [u; v] for two-component fields), elementwise interpolation and the
exact prolongation between nested refinements.  Spaces are immutable after
``build_space``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

__all__ = [
    "QuadratureRule",
    "DgSpace",
    "Coefficients",
    "triangle_quadrature",
    "edge_quadrature",
    "lagrange_nodes",
    "eval_basis",
    "build_space",
    "interpolate",
    "prolong",
    "boundary_node_mask",
]

MAX_QUAD_DEGREE = 14


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference element.

    Triangle rules carry (nq, 2) reference coordinates and weights summing
    to 1/2; edge rules carry (nq,) points in [0, 1] and weights summing
    to 1.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


@lru_cache(maxsize=None)
def triangle_quadrature(degree_exact):
    """Rule on the reference triangle {x,y >= 0, x+y <= 1}, exact for all
    bivariate polynomials of total degree <= degree_exact.

    Built as a conical (collapsed) product of Gauss-Legendre and
    Gauss-Jacobi(1,0) rules, so all weights are positive.
    """
    degree_exact = int(degree_exact)
    if not 0 <= degree_exact <= MAX_QUAD_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree_exact}")
    n = degree_exact // 2 + 1
    xg, wg = leggauss(n)
    xi = 0.5 * (xg + 1.0)
    wi = 0.5 * wg
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    eta = 0.5 * (xj + 1.0)
    we = 0.25 * wj  # (1 - eta) factor absorbed in the Jacobi weight
    x = np.outer(xi, 1.0 - eta).ravel()
    y = np.tile(eta, n)
    w = np.outer(wi, we).ravel()
    return QuadratureRule(np.stack([x, y], axis=1), w, degree_exact)


@lru_cache(maxsize=None)
def edge_quadrature(degree_exact):
    """Gauss-Legendre rule on [0, 1], exact to degree_exact."""
    degree_exact = int(degree_exact)
    if not 0 <= degree_exact <= MAX_QUAD_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree_exact}")
    n = degree_exact // 2 + 1
    xg, wg = leggauss(n)
    return QuadratureRule(0.5 * (xg + 1.0), 0.5 * wg, degree_exact)


def lagrange_nodes(k):
    """Equispaced Lagrange nodes on the reference triangle.

    Order: the three vertices (0,0), (1,0), (0,1); then the interior nodes
    of edges (v0,v1), (v1,v2), (v2,v0); then interior nodes.
    """
    if k not in (1, 2, 3):
        raise ValueError("polynomial degree k must be 1, 2 or 3")
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes = [verts[0], verts[1], verts[2]]
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for m in range(1, k):
            t = m / k
            nodes.append((1.0 - t) * verts[a] + t * verts[b])
    if k == 3:
        nodes.append(np.array([1.0 / 3.0, 1.0 / 3.0]))
    return np.array(nodes)


@lru_cache(maxsize=None)
def _basis_data(k):
    # monomial exponents of total degree <= k and the coefficient matrix
    # turning monomial values into Lagrange basis values
    exps = [(a, b) for d in range(k + 1) for a in range(d, -1, -1) for b in (d - a,)]
    exps = np.array(exps)
    nodes = lagrange_nodes(k)
    vand = nodes[:, 0][:, None] ** exps[:, 0] * nodes[:, 1][:, None] ** exps[:, 1]
    coeff = np.linalg.inv(vand)
    return exps, coeff


def eval_basis(k, points):
    """Evaluate the degree-k Lagrange basis at reference points.

    Parameters
    ----------
    k : int, one of {1, 2, 3}
    points : (2,) or (n, 2) array of reference coordinates

    Returns
    -------
    values : (n, ndof) array
    gradients : (n, ndof, 2) array of reference-coordinate gradients

    For a single point the leading axis is dropped.
    """
    exps, coeff = _basis_data(k)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    single = np.asarray(points).ndim == 1
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    a = exps[:, 0]
    b = exps[:, 1]
    mono = x**a * y**b
    # d/dx x^a = a x^(a-1); guard the a = 0 column against 0^(-1)
    dx = np.where(a > 0, a * x ** np.maximum(a - 1, 0) * y**b, 0.0)
    dy = np.where(b > 0, b * x**a * y ** np.maximum(b - 1, 0), 0.0)
    values = mono @ coeff
    gradients = np.stack([dx @ coeff, dy @ coeff], axis=2)
    if single:
        return values[0], gradients[0]
    return values, gradients


class DgSpace:
    """Fully discontinuous P_k space over a mesh.

    Scalar dofs are triangle-major: dof (t, i) sits at index
    ``t * dofs_per_triangle + i``.  Two-component fields use the block
    layout [all u-dofs; all v-dofs].
    """

    def __init__(self, mesh, k):
        if k not in (1, 2, 3):
            raise ValueError("polynomial degree k must be 1, 2 or 3")
        self.mesh = mesh
        self.k = int(k)
        self.dofs_per_triangle = (k + 1) * (k + 2) // 2
        self.num_scalar_dofs = mesh.num_triangles * self.dofs_per_triangle
        self.quad_volume = triangle_quadrature(min(4 * k, MAX_QUAD_DEGREE))
        self.quad_edge = edge_quadrature(2 * k + 1)

        # affine maps x = v0 + B xhat per triangle
        p = mesh.vertices[mesh.triangles]
        self.origin = p[:, 0]
        self.jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        self.det = self.jac[:, 0, 0] * self.jac[:, 1, 1] - self.jac[:, 0, 1] * self.jac[:, 1, 0]
        self.inv_jac = (
            np.stack(
                [
                    np.stack([self.jac[:, 1, 1], -self.jac[:, 0, 1]], axis=1),
                    np.stack([-self.jac[:, 1, 0], self.jac[:, 0, 0]], axis=1),
                ],
                axis=1,
            )
            / self.det[:, None, None]
        )

        # reference basis tables at the volume rule
        self.basis_val, self.basis_grad = eval_basis(k, self.quad_volume.points)
        self.ref_nodes = lagrange_nodes(k)

    @property
    def num_triangles(self):
        return self.mesh.num_triangles

    def dof_index(self, tri, local):
        return tri * self.dofs_per_triangle + local

    def node_coords(self):
        """Physical coordinates of all Lagrange nodes, shape (T, ndof, 2)."""
        return self.origin[:, None, :] + np.einsum(
            "tij,nj->tni", self.jac, self.ref_nodes
        )

    def physical_gradients(self):
        """Physical basis gradients at the volume quadrature points,
        shape (T, nq, ndof, 2)."""
        return np.einsum("qnj,tji->tqni", self.basis_grad, self.inv_jac)

    def to_reference(self, tri, points):
        """Map physical points into the reference coordinates of triangle
        ``tri`` (scalar index or array broadcastable against points)."""
        pts = np.asarray(points, dtype=float)
        return np.einsum("...ij,...j->...i", self.inv_jac[tri], pts - self.origin[tri])


def build_space(mesh, k):
    """Build the broken P_k space with its quadrature (volume rule exact to
    degree 4k, edge rule to 2k+1)."""
    return DgSpace(mesh, k)


class Coefficients:
    """Dof vector of a scalar (1-component) or vector (2-component) field.

    Stored in block layout: ``values[c * N : (c + 1) * N]`` holds component
    c on the scalar dof layout of the space.
    """

    def __init__(self, space, components, values=None):
        if components not in (1, 2):
            raise ValueError("components must be 1 or 2")
        self.space = space
        self.components = components
        n = components * space.num_scalar_dofs
        if values is None:
            values = np.zeros(n)
        values = np.asarray(values, dtype=float)
        if values.shape != (n,):
            raise ValueError(f"expected {n} dof values, got {values.shape}")
        self.values = values

    def component(self, c):
        """View of component c as a (T, ndof) array."""
        n = self.space.num_scalar_dofs
        return self.values[c * n : (c + 1) * n].reshape(
            self.space.num_triangles, self.space.dofs_per_triangle
        )

    def copy(self):
        return Coefficients(self.space, self.components, self.values.copy())

    def at_quadrature(self):
        """Field values at the volume quadrature points, shape (C, T, nq)."""
        val = self.space.basis_val  # (nq, ndof)
        return np.stack(
            [np.einsum("qn,tn->tq", val, self.component(c)) for c in range(self.components)]
        )

    def eval_in_triangle(self, tri, ref_points):
        """Evaluate inside one triangle at reference points; returns
        (n,) for scalars or (n, 2) for vector fields."""
        vals, _ = eval_basis(self.space.k, np.atleast_2d(ref_points))
        out = np.stack([vals @ self.component(c)[tri] for c in range(self.components)], axis=-1)
        return out[..., 0] if self.components == 1 else out

    def eval_at_points(self, points, tol=1e-12):
        """Evaluate at physical points by brute-force triangle location.

        Points on shared edges use the lowest-indexed containing triangle.
        Intended for sampling and tests, not inner loops.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out_shape = (len(pts),) if self.components == 1 else (len(pts), 2)
        out = np.empty(out_shape)
        for i, p in enumerate(pts):
            tri = self._locate(p, tol)
            ref = self.space.to_reference(tri, p)
            out[i] = self.eval_in_triangle(tri, ref)[0]
        return out

    def _locate(self, p, tol):
        ref = np.einsum(
            "tij,tj->ti", self.space.inv_jac, p[None, :] - self.space.origin
        )
        ok = (ref[:, 0] >= -tol) & (ref[:, 1] >= -tol) & (ref.sum(axis=1) <= 1 + tol)
        hits = np.nonzero(ok)[0]
        if len(hits) == 0:
            raise ValueError(f"point {p} lies outside the mesh")
        return int(hits[0])


def interpolate(f, space, components=None):
    """Elementwise Lagrange interpolation of a function onto the space.

    ``f(x, y)`` receives coordinate arrays and returns an array (scalar
    field) or a 2-tuple/list of arrays (vector field).  The interpolant
    matches f at every Lagrange node of every triangle.
    """
    nodes = space.node_coords()
    x = nodes[..., 0].ravel()
    y = nodes[..., 1].ravel()
    fx = f(x, y)
    if isinstance(fx, (tuple, list)):
        comps = [np.broadcast_to(np.asarray(c, dtype=float), x.shape) for c in fx]
    else:
        comps = [np.broadcast_to(np.asarray(fx, dtype=float), x.shape)]
    if components is not None and len(comps) != components:
        raise ValueError(f"expected {components} components, f returned {len(comps)}")
    return Coefficients(space, len(comps), np.concatenate([c.ravel() for c in comps]))


def prolong(coarse, fine_space):
    """Re-express a coarse-mesh field exactly in the nested refined space.

    ``fine_space`` must be built on ``refine_uniform`` of the coarse mesh;
    nestedness makes the prolonged field equal the coarse field pointwise.
    """
    cspace = coarse.space
    fmesh = fine_space.mesh
    parent = fmesh.parent_map
    if (
        parent.size != fmesh.num_triangles
        or fmesh.num_triangles != 4 * cspace.mesh.num_triangles
        or fine_space.k != cspace.k
        or fmesh.level != cspace.mesh.level + 1
    ):
        raise ValueError("fine space is not the uniform refinement of the coarse space")

    nodes = fine_space.node_coords()  # (Tf, ndof, 2)
    ref_in_parent = np.einsum(
        "tij,tnj->tni", cspace.inv_jac[parent], nodes - cspace.origin[parent][:, None, :]
    )
    nd = fine_space.dofs_per_triangle
    vals, _ = eval_basis(cspace.k, ref_in_parent.reshape(-1, 2))
    vals = vals.reshape(fmesh.num_triangles, nd, cspace.dofs_per_triangle)
    out = Coefficients(fine_space, coarse.components)
    for c in range(coarse.components):
        out.component(c)[:] = np.einsum("tnm,tm->tn", vals, coarse.component(c)[parent])
    return out


def boundary_node_mask(space, tol=1e-12):
    """Boolean (T, ndof) mask of Lagrange nodes lying on a boundary edge.

    A node is a boundary node iff its distance to some boundary edge
    segment is below ``tol``.  Only triangles touching the boundary are
    inspected; the result is cached on the space.
    """
    cached = getattr(space, "_boundary_node_mask", None)
    if cached is not None:
        return cached
    mesh = space.mesh
    nd = space.dofs_per_triangle
    mask = np.zeros((mesh.num_triangles, nd), dtype=bool)
    bnd = np.nonzero(~mesh.edge_is_interior)[0]
    bnd_verts = np.unique(mesh.edge_vertices[bnd])
    touching = np.nonzero(np.isin(mesh.triangles, bnd_verts).any(axis=1))[0]
    if len(touching) and len(bnd):
        nodes = space.node_coords()[touching].reshape(-1, 2)
        hit = np.zeros(len(nodes), dtype=bool)
        for e in bnd:
            a = mesh.vertices[mesh.edge_vertices[e, 0]]
            b = mesh.vertices[mesh.edge_vertices[e, 1]]
            d = b - a
            t = np.clip(((nodes - a) @ d) / (d @ d), 0.0, 1.0)
            closest = a + t[:, None] * d
            hit |= ((nodes - closest) ** 2).sum(axis=1) <= tol * tol
        mask[touching] = hit.reshape(len(touching), nd)
    space._boundary_node_mask = mask
    return mask

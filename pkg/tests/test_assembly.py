import math

import numpy as np
import pytest
import scipy.integrate
import scipy.sparse as sp

import ldg
from ldg import (
    Coefficients,
    FormParams,
    apply_B_residual,
    assemble_B_linearized,
    assemble_a_dg,
    assemble_body_load,
    assemble_boundary_load,
    assemble_c_dg,
    build_space,
    build_square_mesh,
    default_params,
    interpolate,
    jacobian,
    polynomial_problem,
    refine_uniform,
    residual,
    well_problem,
)
from ldg.assembly import (
    assemble_a_dg_scalar,
    assemble_mass_scalar,
    _volume_tables,
)

EPS = 0.2
C_EPS = 2.0 / EPS**2


def params(k=1, **kw):
    return default_params(k, eps=EPS, **kw)


def rand_field(space, seed=0):
    rng = np.random.default_rng(seed)
    return Coefficients(space, 2, rng.standard_normal(2 * space.num_scalar_dofs))


def reference_triangle_space(k=1):
    mesh = ldg.Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))
    return build_space(mesh, k)


# -- a_dG -----------------------------------------------------------------------


def test_local_stiffness_reference_triangle():
    s = reference_triangle_space(1)
    K = _volume_tables(s)["stiff"][0]
    expect = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    assert np.allclose(K, expect, atol=1e-14)


def test_a_dg_constant_field_touches_only_boundary_triangles():
    m = build_square_mesh(3)
    s = build_space(m, 1)
    A = assemble_a_dg(s, params())
    r = A @ np.ones(2 * s.num_scalar_dofs)
    per_tri = np.abs(r.reshape(2, m.num_triangles, 3)).max(axis=(0, 2))
    boundary_tris = set(m.edge_tri_plus[~m.edge_is_interior].tolist())
    assert set(np.nonzero(per_tri > 1e-12)[0].tolist()) <= boundary_tris
    # paired with a constant test function only the penalty term survives
    p = params()
    ones = np.ones(s.num_scalar_dofs)
    As = assemble_a_dg_scalar(s, p)
    expect = sum(
        p.sigma / le * le for le in m.edge_lengths[~m.edge_is_interior]
    )
    assert ones @ (As @ ones) == pytest.approx(expect, rel=1e-12)


def test_a_dg_symmetric_positive_definite_sipg():
    s = build_space(build_square_mesh(2), 1)
    A = assemble_a_dg(s, params(sigma=10.0)).toarray()
    assert np.abs(A - A.T).max() < 1e-10 * np.abs(A).max()
    assert np.linalg.eigvalsh(A).min() > 0


def test_a_dg_rejects_bad_lambda():
    with pytest.raises(ValueError):
        FormParams(eps=EPS, sigma=10.0, lam=2)


def test_adjoint_structure_between_lambda_variants():
    # with Kt := M(0) - M(-1) (the transposed consistency term):
    # M(-1) symmetric, M(+1) = M(-1) + 2 Kt, M(+1)^T = M(-1) + 2 Kt^T
    s = build_space(build_square_mesh(2), 2)
    mats = {
        lam: assemble_a_dg_scalar(s, params(k=2, lam=lam)) for lam in (-1, 0, 1)
    }
    kt = mats[0] - mats[-1]
    scale = np.abs(mats[-1]).max()
    assert np.abs((mats[-1] - mats[-1].T)).max() < 1e-12 * scale
    assert np.abs(mats[1] - (mats[-1] + 2 * kt)).max() < 1e-12 * scale
    assert np.abs(mats[1].T - (mats[-1] + 2 * kt.T)).max() < 1e-12 * scale


@pytest.mark.parametrize("k", [1, 2, 3])
def test_coercivity_default_sigma(k):
    s = build_space(build_square_mesh(4), k)
    A = assemble_a_dg_scalar(s, params(k=k)).toarray()
    assert np.linalg.eigvalsh(A).min() > 0


# -- c_dG and mass -----------------------------------------------------------------


def test_c_dg_constants_unit_square():
    s = build_space(build_square_mesh(2), 1)
    C = assemble_c_dg(s, params())
    u = np.concatenate([np.ones(s.num_scalar_dofs), np.zeros(s.num_scalar_dofs)])
    assert u @ (C @ u) == pytest.approx(-C_EPS, rel=1e-13)


def test_c_dg_eps_scaling():
    s = build_space(build_square_mesh(2), 1)
    C1 = assemble_c_dg(s, params())
    C2 = assemble_c_dg(s, default_params(1, eps=2 * EPS))
    assert np.abs(C2 - 0.25 * C1).max() < 1e-14 * np.abs(C1).max()


def test_local_p1_mass_matrix():
    s = reference_triangle_space(1)
    M = assemble_mass_scalar(s).toarray()
    area = 0.5
    expect = area / 12.0 * np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]])
    assert np.allclose(M, expect, atol=1e-15)
    C = assemble_c_dg(s, params()).toarray()[:3, :3]
    assert np.allclose(C, -C_EPS * expect, atol=1e-12)


# -- load vectors ------------------------------------------------------------------


def test_boundary_load_zero_and_constant():
    s = build_space(build_square_mesh(2), 1)
    p = params()
    zero = assemble_boundary_load(s, lambda x, y: (0.0 * x, 0.0 * x), p)
    assert np.abs(zero).max() == 0.0
    load = assemble_boundary_load(s, lambda x, y: (np.ones_like(x), 0.0 * x), p)
    ones_u = np.concatenate([np.ones(s.num_scalar_dofs), np.zeros(s.num_scalar_dofs)])
    m = s.mesh
    expect = sum(p.sigma / le * le for le in m.edge_lengths[~m.edge_is_interior])
    assert ones_u @ load == pytest.approx(expect, rel=1e-12)


def test_boundary_load_trapezoid_against_adaptive_quadrature():
    eps = 0.02
    prob = well_problem(eps, default_params(1, eps=eps))
    s = build_space(build_square_mesh(4), 1)
    p = prob.params
    load = assemble_boundary_load(s, prob.g, p, prob.g_breakpoints)

    m = s.mesh
    nd = s.dofs_per_triangle
    oracle = np.zeros(2 * s.num_scalar_dofs)
    for e in np.nonzero(~m.edge_is_interior)[0]:
        tri = int(m.edge_tri_plus[e])
        a = m.vertices[m.edge_vertices[e, 0]]
        b = m.vertices[m.edge_vertices[e, 1]]
        length = m.edge_lengths[e]
        normal = m.edge_normals[e]
        pen = p.sigma / length
        kinks = prob.g_breakpoints(a, b)
        for i in range(nd):
            def integrand(t, comp, i=i):
                pt = a + t * (b - a)
                val, grad = ldg.eval_basis(1, s.to_reference(tri, pt))
                dn = (grad @ s.inv_jac[tri]) @ normal
                g = prob.g(np.array([pt[0]]), np.array([pt[1]]))
                return float(g[comp][0] * (p.lam * dn[i] + pen * val[i]))

            for comp, off in ((0, 0), (1, s.num_scalar_dofs)):
                val, _ = scipy.integrate.quad(
                    integrand, 0.0, 1.0, args=(comp,), points=kinks, limit=200,
                    epsabs=1e-13, epsrel=1e-13,
                )
                oracle[off + tri * nd + i] += length * val
    assert np.abs(load - oracle).max() < 1e-10


def test_body_load_zero_and_constant():
    s = build_space(build_square_mesh(2), 1)
    zero = assemble_body_load(s, lambda x, y: (0.0 * x, 0.0 * x))
    assert np.abs(zero).max() == 0.0
    load = assemble_body_load(s, lambda x, y: (np.ones_like(x), 0.0 * x))
    ones_u = np.concatenate([np.ones(s.num_scalar_dofs), np.zeros(s.num_scalar_dofs)])
    assert ones_u @ load == pytest.approx(1.0, rel=1e-13)  # unit area


def test_body_load_polynomial_forcing_oversampled():
    prob = polynomial_problem(EPS)
    s = build_space(build_square_mesh(2), 1)
    load = assemble_body_load(s, prob.f)
    # oracle: per-triangle adaptive quadrature over the reference triangle
    oracle = np.zeros(2 * s.num_scalar_dofs)
    nd = s.dofs_per_triangle
    for t in range(s.num_triangles):
        for i in range(nd):
            for comp, off in ((0, 0), (1, s.num_scalar_dofs)):
                def inner(xr):
                    def f_at(yr):
                        pt = s.origin[t] + s.jac[t] @ np.array([xr, yr])
                        val, _ = ldg.eval_basis(1, np.array([xr, yr]))
                        return prob.f(pt[0], pt[1])[comp] * val[i]
                    v, _ = scipy.integrate.quad(f_at, 0.0, 1.0 - xr, epsabs=1e-13)
                    return v
                v, _ = scipy.integrate.quad(inner, 0.0, 1.0, epsabs=1e-13)
                oracle[off + t * nd + i] = v * s.det[t]
    assert np.abs(load - oracle).max() < 1e-10


# -- the cubic term ---------------------------------------------------------------


def test_B_residual_constant_field():
    s = build_space(build_square_mesh(2), 1)
    one0 = Coefficients(
        s, 2, np.concatenate([np.ones(s.num_scalar_dofs), np.zeros(s.num_scalar_dofs)])
    )
    r = apply_B_residual(s, one0, EPS)
    test_u = np.concatenate([np.ones(s.num_scalar_dofs), np.zeros(s.num_scalar_dofs)])
    assert test_u @ r == pytest.approx(C_EPS, rel=1e-13)
    zero = Coefficients(s, 2)
    assert np.abs(apply_B_residual(s, zero, EPS)).max() == 0.0


def scalar_b_form(space, a, b, c, d, c2):
    """Oracle: b(xi, eta, theta, phi) = c2 * sum_T int xi eta theta phi."""
    wq = space.quad_volume.weights
    vals = [np.einsum("qn,tn->tq", space.basis_val, z) for z in (a, b, c, d)]
    return c2 * np.einsum("q,tq,tq,tq,tq,t->", wq, *vals, space.det)


def test_B_equal_arguments_vs_six_term_expansion():
    # B(Z,Z,Z,Phi) via the assembled entries against the expanded scalar
    # combination b(u,u,u,p1)+b(v,v,u,p1)+b(v,v,v,p2)+b(u,u,v,p2)
    s = build_space(build_square_mesh(1), 1)
    rng = np.random.default_rng(11)
    Z = rand_field(s, 11)
    Phi = rand_field(s, 12)
    lhs = Phi.values @ apply_B_residual(s, Z, EPS)
    u, v = Z.component(0), Z.component(1)
    p1, p2 = Phi.component(0), Phi.component(1)
    rhs = (
        scalar_b_form(s, u, u, u, p1, C_EPS)
        + scalar_b_form(s, v, v, u, p1, C_EPS)
        + scalar_b_form(s, v, v, v, p2, C_EPS)
        + scalar_b_form(s, u, u, v, p2, C_EPS)
    )
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_B_general_vs_six_term_expansion():
    # full quartic form via the linearization identity:
    # Theta^T B_lin-like assembly vs the six-term expansion of the vector form
    s = build_space(build_square_mesh(1), 1)
    xi, eta, theta, phi = (rand_field(s, seed) for seed in (21, 22, 23, 24))

    # vectorized value of B(xi, eta, theta, phi) by quadrature
    wq = s.quad_volume.weights
    q = {
        name: f.at_quadrature()
        for name, f in (("xi", xi), ("eta", eta), ("th", theta), ("ph", phi))
    }
    dot = lambda a, b: a[0] * b[0] + a[1] * b[1]
    integrand = dot(q["xi"], q["eta"]) * dot(q["th"], q["ph"]) + 2.0 * dot(
        q["xi"], q["th"]
    ) * dot(q["eta"], q["ph"])
    vectorized = C_EPS / 3.0 * np.einsum("q,tq,t->", wq, integrand, s.det)

    x1, x2 = xi.component(0), xi.component(1)
    e1, e2 = eta.component(0), eta.component(1)
    t1, t2 = theta.component(0), theta.component(1)
    f1, f2 = phi.component(0), phi.component(1)
    expanded = (1.0 / 3.0) * (
        3 * scalar_b_form(s, x1, e1, t1, f1, C_EPS)
        + 3 * scalar_b_form(s, x2, e2, t2, f2, C_EPS)
        + 2 * scalar_b_form(s, x2, e1, t2, f1, C_EPS)
        + 2 * scalar_b_form(s, x1, e2, t1, f2, C_EPS)
        + scalar_b_form(s, x2, e2, t1, f1, C_EPS)
        + scalar_b_form(s, x1, e1, t2, f2, C_EPS)
    )
    assert vectorized == pytest.approx(expanded, rel=1e-12)


def test_B_linearized_structure_and_derivative():
    s = build_space(build_square_mesh(2), 1)
    zero = Coefficients(s, 2)
    assert assemble_B_linearized(s, zero, EPS).nnz == 0 or np.abs(
        assemble_B_linearized(s, zero, EPS).toarray()
    ).max() == 0.0

    n = s.num_scalar_dofs
    one0 = Coefficients(s, 2, np.concatenate([np.ones(n), np.zeros(n)]))
    B = assemble_B_linearized(s, one0, EPS).toarray()
    M = assemble_mass_scalar(s).toarray()
    assert np.allclose(B[:n, :n], 3 * C_EPS * M, atol=1e-12)
    assert np.allclose(B[n:, n:], C_EPS * M, atol=1e-12)
    assert np.abs(B[:n, n:]).max() == 0.0

    Z = rand_field(s, 31)
    B = assemble_B_linearized(s, Z, EPS)
    # symmetric and positive semidefinite
    assert np.abs(B - B.T).max() < 1e-12 * max(np.abs(B).max(), 1)
    assert np.linalg.eigvalsh(B.toarray()).min() > -1e-10
    # central differences of the equal-argument form
    rng = np.random.default_rng(32)
    theta = rng.standard_normal(2 * n)
    t = 1e-6
    zp = Coefficients(s, 2, Z.values + t * theta)
    zm = Coefficients(s, 2, Z.values - t * theta)
    fd = (apply_B_residual(s, zp, EPS) - apply_B_residual(s, zm, EPS)) / (2 * t)
    ref = B @ theta
    assert np.linalg.norm(fd - ref) / np.linalg.norm(ref) < 1e-6


def test_B_rejects_scalar_fields():
    s = build_space(build_square_mesh(1), 1)
    z = Coefficients(s, 1)
    with pytest.raises(ValueError):
        apply_B_residual(s, z, EPS)
    with pytest.raises(ValueError):
        assemble_B_linearized(s, z, EPS)


# -- residual and jacobian -----------------------------------------------------------


def test_residual_zero_data_zero_state():
    s = build_space(build_square_mesh(2), 1)
    prob = ldg.ProblemSpec(
        name="null", domain="square", c2=C_EPS, c0=-0.0, g=lambda x, y: (0 * x, 0 * x),
        f=None, params=params(),
    )
    r = residual(s, Coefficients(s, 2), prob)
    assert np.abs(r).max() == 0.0


def test_residual_decreases_under_refinement_at_interpolant():
    prob = polynomial_problem(EPS)
    norms = []
    for n in (16, 32):
        s = build_space(build_square_mesh(n), 1)
        z = interpolate(prob.exact, s, components=2)
        norms.append(np.linalg.norm(residual(s, z, prob)))
    assert norms[1] < norms[0]


def test_jacobian_zero_state_is_linear_part():
    s = build_space(build_square_mesh(2), 1)
    prob = polynomial_problem(EPS)
    J0 = jacobian(s, Coefficients(s, 2), prob)
    AC = assemble_a_dg(s, prob.params) + assemble_c_dg(s, prob.params)
    assert np.abs(J0 - AC).max() < 1e-14 * np.abs(AC).max()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_jacobian_matches_finite_differences(k):
    s = build_space(build_square_mesh(2), k)
    prob = polynomial_problem(EPS, params(k=k))
    rng = np.random.default_rng(40 + k)
    Z = Coefficients(s, 2, rng.standard_normal(2 * s.num_scalar_dofs))
    J = jacobian(s, Z, prob)
    assert np.abs(J - J.T).max() < 1e-10 * np.abs(J).max()  # lam = -1
    theta = rng.standard_normal(2 * s.num_scalar_dofs)
    t = 1e-5
    zp = Coefficients(s, 2, Z.values + t * theta)
    zm = Coefficients(s, 2, Z.values - t * theta)
    fd = (residual(s, zp, prob) - residual(s, zm, prob)) / (2 * t)
    ref = J @ theta
    assert np.linalg.norm(fd - ref) / np.linalg.norm(ref) < 1e-6

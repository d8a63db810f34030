"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line per criterion (run `pytest -s tests/test_acceptance.py` to see
the lines as they complete).

The heavy benchmark runs are shared through module-scoped fixtures; expect
roughly 10-20 minutes for the full module on a desktop."""

import math
from math import factorial

import numpy as np
import pytest
import scipy.sparse as sp

import ldg
from ldg import (
    Coefficients,
    FormParams,
    NewtonConfig,
    annulus_study,
    build_annulus_mesh,
    build_space,
    build_square_mesh,
    default_params,
    dg_norm,
    edge_quadrature,
    epsilon_sweep,
    eoc,
    interpolate,
    jacobian,
    kantorovich_diagnostic,
    newton_solve,
    polynomial_problem,
    polynomial_study,
    prolong,
    refine_uniform,
    residual,
    solve_linear,
    triangle_quadrature,
    well_study,
)
from ldg.assembly import (
    apply_B_residual,
    assemble_a_dg_scalar,
)
from ldg.solver import DiscreteSystem

BENCH_NEWTON = NewtonConfig(tol_dg=1e-8, tol_res=1e-10, max_iter=30)

# paper anchors: first-row (h = 0.3535) error magnitudes of the polynomial
# tables, matched to within one order of magnitude only
PAPER_FIRST_ROW = {
    1: (0.69481292e-1, 0.37102062e-2),
    2: (0.20812609e-1, 0.59563518e-3),
    3: (0.44002858e-2, 0.79005568e-4),
}
D1_ENERGY = 77.94112012
R1_ENERGY = 86.57670525
ALL_STATES = ("D1", "D2", "R1", "R2", "R3", "R4")


def report(criterion, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status} {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


@pytest.fixture(scope="module")
def poly_runs():
    return {
        k: polynomial_study(0.2, k, 5, n0=4, newton_cfg=BENCH_NEWTON)
        for k in (1, 2, 3)
    }


@pytest.fixture(scope="module")
def well_runs():
    return well_study(0.02, 1, 4, n0=16, states=ALL_STATES,
                      newton_cfg=BENCH_NEWTON)


@pytest.fixture(scope="module")
def annulus_run():
    return annulus_study(k=1, levels=5, n_seg=32, newton_cfg=BENCH_NEWTON)


def test_criterion_1_polynomial_orders(poly_runs):
    details = []
    ok = True
    for k, res in poly_runs.items():
        t = res.table
        a_dg = t.orders_dg[0]
        a_l2 = t.orders_l2[0]
        ok &= abs(a_dg - k) <= 0.15
        ok &= abs(a_l2 - (k + 1)) <= 0.2
        ref_dg, ref_l2 = PAPER_FIRST_ROW[k]
        ok &= 0.1 <= t.records[0].err_dg / ref_dg <= 10.0
        ok &= 0.1 <= t.records[0].err_l2 / ref_l2 <= 10.0
        details.append(f"k={k}: dG {a_dg:.3f} L2 {a_l2:.3f}")
    report("1 (polynomial EOC, Tables 1-3)", ok, "; ".join(details))


def test_criterion_2_well_energies_and_orders(well_runs):
    ok = all(
        rec.converged for res in well_runs.values() for rec in res.table.records
    )
    detail = [f"all six states converged: {ok}"]
    for state, target in (("D1", D1_ENERGY), ("R1", R1_ENERGY)):
        e = well_runs[state].table.records[-1].energy
        rel = abs(e - target) / target
        ok &= rel <= 0.02
        detail.append(f"{state} energy {e:.4f} ({100 * rel:.2f}% off {target})")
        t = well_runs[state].table
        for o in t.orders_dg:
            if o is not None:
                ok &= abs(o - 0.95) <= 0.15
        for o in t.orders_l2:
            if o is not None:
                ok &= abs(o - 2.0) <= 0.25
        detail.append(
            f"{state} dG orders {[round(o, 3) for o in t.orders_dg if o is not None]}"
            f" L2 {[round(o, 3) for o in t.orders_l2 if o is not None]}"
        )
    report("2 (well benchmark, Tables 5-6)", ok, "; ".join(detail))


def test_criterion_3_annulus_orders(annulus_run):
    t = annulus_run.table
    dg = [o for o in t.orders_dg if o is not None]
    l2 = [o for o in t.orders_l2 if o is not None]
    ok = all(abs(o - 1.0) <= 0.15 for o in dg)
    ok &= all(abs(o - 1.9) <= 0.25 for o in l2)
    report(
        "3 (annulus benchmark, Table 7)",
        ok,
        f"dG {[round(o, 3) for o in dg]} L2 {[round(o, 3) for o in l2]}",
    )


def test_criterion_4_newton_quadratic(poly_runs, well_runs, annulus_run):
    traces = []
    for res in poly_runs.values():
        traces += res.traces
    for res in well_runs.values():
        traces += res.traces
    traces += annulus_run.traces
    ok = True
    worst_iters = 0
    worst_ratio = 1.0
    for trace in traces:
        ok &= trace.converged
        worst_iters = max(worst_iters, trace.iterations)
        ok &= trace.iterations <= 12
        ratios = trace.ratios
        if len(ratios) >= 2:
            spread = max(ratios[-2:]) / min(ratios[-2:])
            worst_ratio = max(worst_ratio, spread)
            ok &= spread < 10.0
    report(
        "4 (Newton quadratic convergence)",
        ok,
        f"{len(traces)} runs, max iterations {worst_iters}, "
        f"worst last-two-ratio spread {worst_ratio:.2f}",
    )


def test_criterion_5_epsilon_sweep():
    eps_values = [0.2, 0.1, 0.05]
    sweep = epsilon_sweep(eps_values, 4, k=1, n0=4,
                          newton_cfg=NewtonConfig(tol_dg=1e-8, tol_res=1e-10,
                                                  max_iter=25))
    # every cell is recorded; divergences are flagged, never fabricated
    ok = all(len(t.records) == 4 for t in sweep.values())
    flagged = [
        (eps, i)
        for eps, t in sweep.items()
        for i, r in enumerate(t.records)
        if not r.converged
    ]
    ok &= all(
        sweep[eps].records[i].err_dg is None for eps, i in flagged
    )
    # dG error at the coarsest level every eps converged on grows as eps drops
    common = None
    for lvl in range(4):
        if all(t.records[lvl].converged for t in sweep.values()):
            common = lvl
            break
    ok &= common is not None
    errs = [sweep[eps].records[common].err_dg for eps in eps_values]
    ok &= all(errs[i] < errs[i + 1] for i in range(len(errs) - 1))
    report(
        "5 (eps sweep, Figure 7 trend)",
        ok,
        f"level {common} errors {[f'{e:.3g}' for e in errs]} for eps {eps_values}; "
        f"flagged cells {flagged or 'none'}",
    )


def test_criterion_6_property_suites():
    checks = {}

    # Jacobian vs central finite differences on 20 random states
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(20):
        k = (1, 2, 3)[trial % 3]
        s = build_space(build_square_mesh(2), k)
        prob = polynomial_problem(0.2, default_params(k, eps=0.2))
        z = Coefficients(s, 2, rng.standard_normal(2 * s.num_scalar_dofs))
        theta = rng.standard_normal(2 * s.num_scalar_dofs)
        t = 1e-5
        zp = Coefficients(s, 2, z.values + t * theta)
        zm = Coefficients(s, 2, z.values - t * theta)
        fd = (residual(s, zp, prob) - residual(s, zm, prob)) / (2 * t)
        ref = jacobian(s, z, prob) @ theta
        worst = max(worst, np.linalg.norm(fd - ref) / np.linalg.norm(ref))
    checks["jacobian-fd"] = worst < 1e-6

    # A_dG symmetry at lam = -1
    s = build_space(build_square_mesh(4), 2)
    A = assemble_a_dg_scalar(s, default_params(2))
    checks["a_dg-symmetry"] = np.abs(A - A.T).max() < 1e-10 * np.abs(A).max()

    # A_dG positive definiteness at sigma = 10 k^2 on meshes up to n = 8
    pd_ok = True
    for n in (2, 4, 8):
        for k in (1, 2, 3):
            sk = build_space(build_square_mesh(n), k)
            Ak = assemble_a_dg_scalar(sk, default_params(k)).toarray()
            pd_ok &= np.linalg.eigvalsh(Ak).min() > 0
    checks["a_dg-positive-definite"] = pd_ok

    # quadrature exactness against the factorial monomial formula
    q_ok = True
    for deg in (2, 6, 10, 14):
        rule = triangle_quadrature(deg)
        for a in range(deg + 1):
            for b in range(deg + 1 - a):
                val = (rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b).sum()
                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                q_ok &= abs(val - exact) < 1e-12 * max(exact, 1)
    er = edge_quadrature(7)
    q_ok &= abs((er.weights * er.points**7).sum() - 0.125) < 1e-13
    checks["quadrature-exactness"] = q_ok

    # mesh handshake and Euler identities on generated meshes
    mesh_ok = True
    meshes = [(build_square_mesh(n), 1) for n in (1, 2, 4)]
    meshes.append((build_annulus_mesh(0.5, 1.0, 16), 0))
    meshes += [(refine_uniform(m), chi) for m, chi in meshes]
    for m, chi in meshes:
        ni = int(m.edge_is_interior.sum())
        nb = m.num_edges - ni
        mesh_ok &= 3 * m.num_triangles == 2 * ni + nb
        mesh_ok &= m.euler_characteristic() == chi
    checks["mesh-identities"] = mesh_ok

    # B_dG vectorized vs expanded six-term combination
    s1 = build_space(build_square_mesh(1), 1)
    c_eps = 2.0 / 0.04
    fields = [
        Coefficients(s1, 2, rng.standard_normal(2 * s1.num_scalar_dofs))
        for _ in range(4)
    ]
    wq = s1.quad_volume.weights
    q = [f.at_quadrature() for f in fields]
    dot = lambda a, b: a[0] * b[0] + a[1] * b[1]
    integrand = dot(q[0], q[1]) * dot(q[2], q[3]) + 2 * dot(q[0], q[2]) * dot(q[1], q[3])
    vectorized = c_eps / 3.0 * np.einsum("q,tq,t->", wq, integrand, s1.det)

    def b_form(a, b, c, d):
        vals = [np.einsum("qn,tn->tq", s1.basis_val, z) for z in (a, b, c, d)]
        return c_eps * np.einsum("q,tq,tq,tq,tq,t->", wq, *vals, s1.det)

    comp = [(f.component(0), f.component(1)) for f in fields]
    (x1, x2), (e1, e2), (t1, t2), (f1, f2) = comp
    expanded = (
        3 * b_form(x1, e1, t1, f1) + 3 * b_form(x2, e2, t2, f2)
        + 2 * b_form(x2, e1, t2, f1) + 2 * b_form(x1, e2, t1, f2)
        + b_form(x2, e2, t1, f1) + b_form(x1, e1, t2, f2)
    ) / 3.0
    checks["b-form-equivalence"] = abs(vectorized - expanded) <= 1e-12 * abs(expanded)

    # delta-form vs literal fixed-point Newton step
    s2 = build_space(build_square_mesh(2), 1)
    prob = polynomial_problem(0.2, default_params(1, eps=0.2))
    z0 = Coefficients(s2, 2, 0.1 * rng.standard_normal(2 * s2.num_scalar_dofs))
    J = jacobian(s2, z0, prob)
    z1_delta = z0.values + solve_linear(J, -residual(s2, z0, prob))
    sysop = DiscreteSystem(s2, prob)
    z1_literal = solve_linear(J, 2.0 * apply_B_residual(s2, z0, 0.2) + sysop.load)
    checks["delta-vs-literal-newton"] = (
        np.abs(z1_delta - z1_literal).max() / max(np.abs(z1_literal).max(), 1.0)
        < 1e-10
    )

    # prolongation exactness
    coarse = build_space(build_square_mesh(2), 2)
    fine = build_space(refine_uniform(coarse.mesh), 2)
    zc = Coefficients(coarse, 2, rng.standard_normal(2 * coarse.num_scalar_dofs))
    pts = rng.random((100, 2))
    diff = np.abs(zc.eval_at_points(pts) - prolong(zc, fine).eval_at_points(pts))
    checks["prolongation-exact"] = diff.max() < 1e-12

    # hand-computed two-triangle dG norm for both penalty scalings
    m1 = build_square_mesh(1)
    sp1 = build_space(m1, 1)
    upper_left = next(t for t in range(2) if 3 in m1.triangles[t])
    vals = np.zeros(sp1.num_scalar_dofs)
    vals[upper_left * 3 : upper_left * 3 + 3] = 1.0
    ind = Coefficients(sp1, 1, vals)
    sig = 10.0
    loc = dg_norm(sp1, ind, FormParams(eps=None, sigma=sig, penalty_scaling="local"))
    glo = dg_norm(sp1, ind, FormParams(eps=None, sigma=sig, penalty_scaling="global"))
    checks["dg-norm-hand-case"] = (
        abs(loc**2 - 3 * sig) < 1e-12 * 3 * sig
        and abs(glo**2 - sig * (1 + math.sqrt(2))) < 1e-12 * 3 * sig
    )

    ok = all(checks.values())
    failing = [name for name, good in checks.items() if not good]
    report("6 (property suites)", ok, f"failing: {failing or 'none'}")


def test_criterion_7_kantorovich_pipeline():
    s = build_space(build_square_mesh(4), 1)
    prob = polynomial_problem(0.2, default_params(1, eps=0.2))
    z0 = interpolate(prob.exact, s, components=2)
    rep = kantorovich_diagnostic(prob, z0, n_pairs=20, seed=0)
    sol, trace = newton_solve(prob, z0)
    ok = rep.certified and rep.h_star <= 0.5 and trace.converged
    report(
        "7 (Newton-Kantorovich certificate)",
        ok,
        f"a={rep.a:.3f} b={rep.b:.4f} L={rep.lipschitz:.4f} "
        f"h*={rep.h_star:.4f} certified={rep.certified}, "
        f"Newton converged in {trace.iterations} iterations",
    )

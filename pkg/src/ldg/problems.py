"""Benchmark problem definitions and Newton initial guesses.

All problems solve -Delta Psi + c2 |Psi|^2 Psi + c0 Psi = f with weakly
imposed Dirichlet data g.  The Landau-de Gennes scaling has c2 = 2/eps^2 and
c0 = -c2; the annulus benchmark keeps its material constant in the
coefficients (c2 = 2*C, c0 = -1) instead of mapping to an eps.

Problem functions are pure and vectorized over coordinate arrays, so specs
are safe to share across threads.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    FormParams,
    assemble_a_dg,
    assemble_a_dg_scalar,
    assemble_body_load,
    assemble_boundary_load,
    assemble_boundary_load_scalar,
    default_params,
)
from .dgspace import Coefficients, boundary_node_mask
from .solver import solve_linear

__all__ = [
    "ProblemSpec",
    "WellState",
    "WELL_STATES",
    "trapezoid",
    "polynomial_problem",
    "well_problem",
    "annulus_problem",
    "initial_guess_director",
    "initial_guess_linear",
    "problem_by_name",
]


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark: coefficients, data and form parameters.

    The zeroth-order terms read c2 |Psi|^2 Psi + c0 Psi.  ``exact`` and
    ``exact_grad`` are present for manufactured problems only;
    ``g_breakpoints(a, b)`` lists edge parameters where g kinks so boundary
    quadrature can split there.
    """

    name: str
    domain: str  # "square" | "annulus"
    c2: float
    c0: float
    g: callable
    params: FormParams
    f: callable = None
    exact: callable = None
    exact_grad: callable = None
    g_breakpoints: callable = None

    @property
    def eps(self):
        return self.params.eps


@dataclass(frozen=True)
class WellState:
    """One of the six bistable-well equilibria and its director boundary
    angles on the sides x=0, x=1, y=0, y=1."""

    name: str
    angles: tuple


_PI = math.pi
WELL_STATES = {
    "D1": WellState("D1", (_PI / 2, _PI / 2, 0.0, 0.0)),
    "D2": WellState("D2", (_PI / 2, _PI / 2, _PI, _PI)),
    "R1": WellState("R1", (_PI / 2, _PI / 2, _PI, 0.0)),
    "R2": WellState("R2", (_PI / 2, _PI / 2, 0.0, _PI)),
    "R3": WellState("R3", (3 * _PI / 2, _PI / 2, _PI, _PI)),
    "R4": WellState("R4", (_PI / 2, 3 * _PI / 2, _PI, _PI)),
}


def trapezoid(t, d):
    """Trapezoidal ramp on [0, 1]: t/d up to d, 1 on the plateau,
    (1-t)/d beyond 1-d."""
    if not 0.0 < d < 0.5:
        raise ValueError("ramp width d must lie in (0, 1/2)")
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > 1 + 1e-12):
        raise ValueError("trapezoid argument outside [0, 1]")
    out = np.minimum.reduce([t / d, np.ones_like(t), (1.0 - t) / d])
    return np.clip(out, 0.0, 1.0)


def polynomial_problem(eps, params=None):
    """Manufactured solution u = v = x(1-x)y(1-y) on the unit square with
    the Landau-de Gennes nonlinearity; g vanishes on the boundary and the
    forcing comes from the closed-form Laplacian."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = params or default_params(1, eps=eps)
    if params.eps != eps:
        raise ValueError("params.eps disagrees with the problem eps")
    c2 = 2.0 / eps**2

    def q(x, y):
        return x * (1.0 - x) * y * (1.0 - y)

    def exact(x, y):
        return q(x, y), q(x, y)

    def exact_grad(x, y):
        qx = (1.0 - 2.0 * x) * y * (1.0 - y)
        qy = x * (1.0 - x) * (1.0 - 2.0 * y)
        return (qx, qy), (qx, qy)

    def f(x, y):
        lap = -2.0 * y * (1.0 - y) - 2.0 * x * (1.0 - x)
        s2 = 2.0 * q(x, y) ** 2
        comp = -lap + c2 * (s2 - 1.0) * q(x, y)
        return comp, comp

    return ProblemSpec(
        name="polynomial",
        domain="square",
        c2=c2,
        c0=-c2,
        g=exact,
        f=f,
        exact=exact,
        exact_grad=exact_grad,
        params=params,
    )


def well_problem(eps, params=None):
    """Bistable square well: tangent boundary data from the trapezoidal
    ramp of width d = 3*eps, zero forcing, no exact solution (errors are
    later measured against a finer discrete reference)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = 3.0 * eps
    if not d < 0.5:
        raise ValueError("well problem needs d = 3*eps < 1/2")
    params = params or default_params(1, eps=eps)
    if params.eps != eps:
        raise ValueError("params.eps disagrees with the problem eps")

    def g(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        on_vertical = np.minimum(np.abs(x), np.abs(1.0 - x)) < 1e-12
        tx = trapezoid(np.clip(x, 0.0, 1.0), d)
        ty = trapezoid(np.clip(y, 0.0, 1.0), d)
        g1 = np.where(on_vertical, -ty, tx)
        return g1, np.zeros_like(g1)

    def g_breakpoints(a, b):
        # boundary edges of the square are axis aligned; the ramp kinks
        # where the varying coordinate crosses d or 1-d
        axis = 0 if abs(b[1] - a[1]) < 1e-12 else 1
        lo, hi = a[axis], b[axis]
        if hi == lo:
            return []
        out = []
        for c in (d, 1.0 - d):
            t = (c - lo) / (hi - lo)
            if 1e-12 < t < 1.0 - 1e-12:
                out.append(t)
        return out

    return ProblemSpec(
        name="well",
        domain="square",
        c2=2.0 / eps**2,
        c0=-2.0 / eps**2,
        g=g,
        params=params,
        g_breakpoints=g_breakpoints,
    )


ANNULUS_CONSTANT = 1.73e6 / 0.172e6  # material ratio C~/|A| for 5CB


def annulus_problem(params=None):
    """Radial-director benchmark on the annulus with inner radius 0.5 and
    outer radius 1: -Delta Psi + (-1 + 2*C*|Psi|^2) Psi = f with the
    manufactured solution u + i v = exp(2 i phi), |Psi| = 1."""
    params = params or default_params(1)
    C = ANNULUS_CONSTANT

    def exact(x, y):
        r2 = x * x + y * y
        return 2.0 * x * x / r2 - 1.0, 2.0 * x * y / r2

    def exact_grad(x, y):
        r2 = x * x + y * y
        r4 = r2 * r2
        ux = 4.0 * x * y * y / r4
        uy = -4.0 * x * x * y / r4
        vx = 2.0 * y * (y * y - x * x) / r4
        vy = 2.0 * x * (x * x - y * y) / r4
        return (ux, uy), (vx, vy)

    def f(x, y):
        # -Delta acts as +4/r^2 on exp(2 i phi); |Psi| = 1
        r2 = x * x + y * y
        u, v = exact(x, y)
        coef = 4.0 / r2 + (-1.0 + 2.0 * C)
        return coef * u, coef * v

    return ProblemSpec(
        name="annulus",
        domain="annulus",
        c2=2.0 * C,
        c0=-1.0,
        g=exact,
        f=f,
        exact=exact,
        exact_grad=exact_grad,
        params=params,
    )


def _director_boundary_angle(state):
    ax0, ax1, ay0, ay1 = state.angles

    def g_d(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.where(np.abs(y) < 1e-12, ay0, np.full_like(x, ay1))
        out = np.where(np.abs(x) < 1e-12, ax0, out)
        out = np.where(np.abs(1.0 - x) < 1e-12, ax1, out)
        return out

    return g_d


def initial_guess_director(space, state, params):
    """Newton start for the well problem: solve the scalar dG Laplace
    problem for the director angle with the state's boundary angles, then
    set Psi0 = s (cos 2*theta, sin 2*theta) with s = 1 at interior Lagrange
    nodes and s = |g| at boundary nodes."""
    if isinstance(state, str):
        state = WELL_STATES[state]
    if params.eps is None:
        raise ValueError("director guess needs params.eps to size the ramp")
    A = assemble_a_dg_scalar(space, params)
    rhs = assemble_boundary_load_scalar(space, _director_boundary_angle(state), params)
    theta = solve_linear(A, rhs)

    nodes = space.node_coords()
    x = nodes[..., 0].ravel()
    y = nodes[..., 1].ravel()
    g1, g2 = well_problem(params.eps, params).g(x, y)
    s = np.where(
        boundary_node_mask(space).ravel(), np.hypot(g1, g2), 1.0
    )
    values = np.concatenate([s * np.cos(2.0 * theta), s * np.sin(2.0 * theta)])
    return Coefficients(space, 2, values)


def initial_guess_linear(prob, space):
    """Newton start for the manufactured problems: the solution of the
    linear (Laplace) part A_dG Z = L_dG with the problem's data."""
    A = assemble_a_dg(space, prob.params)
    rhs = assemble_boundary_load(space, prob.g, prob.params, prob.g_breakpoints)
    if prob.f is not None:
        rhs = rhs + assemble_body_load(space, prob.f)
    return Coefficients(space, 2, solve_linear(A, rhs))


def problem_by_name(name, eps=None, params=None):
    """Problem selection for the command line: "polynomial", "well:D1"
    ... "well:R4", "annulus"."""
    if name == "polynomial":
        return polynomial_problem(eps, params), None
    if name == "annulus":
        return annulus_problem(params), None
    if name == "well" or name.startswith("well:"):
        state = name.split(":", 1)[1] if ":" in name else None
        if state is not None and state not in WELL_STATES:
            raise ValueError(f"unknown well state {state!r}")
        return well_problem(eps, params), state
    raise ValueError(f"unknown problem {name!r}")

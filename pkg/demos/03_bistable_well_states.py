"""The six equilibria of the bistable square well.

For each state the Newton start comes from a scalar dG Laplace solve of the
director angle with the tabulated boundary angles, lifted to
Psi0 = s (cos 2 theta, sin 2 theta).  Newton then converges to the two
diagonal and four rotated equilibria.  Plots director fields and exports the
converged D1 field as VTK.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import ldg

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

EPS = 0.02
N = 32
STATES = ("D1", "D2", "R1", "R2", "R3", "R4")

space = ldg.build_space(ldg.build_square_mesh(N), 1)
params = ldg.default_params(1, eps=EPS)
prob = ldg.well_problem(EPS, params)
system = ldg.DiscreteSystem(space, prob)
newton = ldg.NewtonConfig(tol_dg=1e-8, tol_res=1e-10, max_iter=30)

# sample grid for the director plots
gx, gy = np.meshgrid(np.linspace(0.04, 0.96, 16), np.linspace(0.04, 0.96, 16))
pts = np.stack([gx.ravel(), gy.ravel()], axis=1)

fig, axes = plt.subplots(2, 3, figsize=(12, 8))
for ax, state in zip(axes.ravel(), STATES):
    guess = ldg.initial_guess_director(space, state, params)
    sol, trace = ldg.newton_solve(prob, guess, newton, system=system)
    e = ldg.energy(space, sol, EPS)
    print(f"{state}: {trace.iterations} Newton iterations, energy {e:.4f}")

    uv = sol.eval_at_points(pts)
    s = np.hypot(uv[:, 0], uv[:, 1])
    theta = 0.5 * np.arctan2(uv[:, 1], uv[:, 0])
    ax.quiver(pts[:, 0], pts[:, 1], s * np.cos(theta), s * np.sin(theta),
              s, cmap="viridis", pivot="mid", headwidth=2, headlength=3)
    ax.set_title(f"{state}  (energy {e:.2f})")
    ax.set_aspect("equal")
    ax.set_xticks([]), ax.set_yticks([])

    if state == "D1":
        ldg.export_vtk(space, sol, os.path.join(OUT, "well_D1.vtk"))

fig.suptitle(f"bistable well equilibria, eps = {EPS}, n = {N}")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "well_states.png"), dpi=130)
print("wrote", os.path.join(OUT, "well_states.png"))
print("wrote", os.path.join(OUT, "well_D1.vtk"))

"""Meshes and broken polynomial spaces.

Builds the structured square mesh and the polygonal annulus, refines them
uniformly, checks the combinatorial identities, and round-trips the plain-text
mesh format.  Saves a figure with both coarse meshes.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import ldg

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

# A unit square cut into n x n cells, each split along the lower-left to
# upper-right diagonal.  h is the diagonal length sqrt(2)/n.
square = ldg.build_square_mesh(4)
print(f"square n=4: V={square.num_vertices} T={square.num_triangles} "
      f"E={square.num_edges} h={square.h:.4f}")

# Uniform (red) refinement splits each triangle into four similar children:
# the triangle count quadruples and h halves exactly.
fine = ldg.refine_uniform(square)
print(f"refined:    V={fine.num_vertices} T={fine.num_triangles} "
      f"E={fine.num_edges} h={fine.h:.4f}")
assert fine.num_triangles == 4 * square.num_triangles

# Edge bookkeeping satisfies the handshake identity 3T = 2 E_i + E_D and the
# Euler relation V - E + T (1 for the square, 0 for the annulus).
ni = int(square.edge_is_interior.sum())
print(f"handshake: 3*{square.num_triangles} = 2*{ni} + {square.num_edges - ni}")
print("euler square:", square.euler_characteristic())

annulus = ldg.build_annulus_mesh(0.5, 1.0, 32)
print(f"annulus:    V={annulus.num_vertices} T={annulus.num_triangles} "
      f"E={annulus.num_edges} h={annulus.h:.4f} "
      f"euler={annulus.euler_characteristic()}")

# Plain-text mesh format, bit-exact on round trip.
path = os.path.join(OUT, "annulus.ldgmesh")
ldg.write_mesh(path, annulus)
back = ldg.read_mesh(path)
assert np.array_equal(back.vertices, annulus.vertices)
print("mesh file round-trip: ok")

# Broken P_k spaces attach quadrature and a triangle-major dof layout; no dof
# is shared between triangles.
for k in (1, 2, 3):
    space = ldg.build_space(square, k)
    print(f"P{k} space on the n=4 square: {space.num_scalar_dofs} scalar dofs "
          f"({space.dofs_per_triangle} per triangle)")

fig, axes = plt.subplots(1, 2, figsize=(10, 5))
for ax, mesh, title in ((axes[0], square, "unit square, n=4"),
                        (axes[1], annulus, "annulus, 32 segments")):
    ax.triplot(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles,
               lw=0.7, color="tab:blue")
    ax.set_aspect("equal")
    ax.set_title(title)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "meshes.png"), dpi=130)
print("wrote", os.path.join(OUT, "meshes.png"))

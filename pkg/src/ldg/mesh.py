"""Triangulations of the unit square and a polygonal annulus.

Meshes are plain containers of vertex coordinates and counterclockwise
triangles, with a full edge classification (interior/boundary, adjacent
triangles, unit normals).  They are immutable after construction: refinement
and classification return new objects, so concurrent reads are safe.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Edge",
    "Mesh",
    "build_square_mesh",
    "build_annulus_mesh",
    "refine_uniform",
    "classify_edges",
    "read_mesh",
    "write_mesh",
]


@dataclass(frozen=True)
class Edge:
    """One mesh edge with its adjacency and geometry.

    For interior edges ``tri_plus`` is the lower-indexed adjacent triangle
    (the T+ side) and ``normal`` is the unit normal pointing from T+ into
    T-.  For boundary edges ``tri_minus`` is ``None`` and the normal points
    out of the domain.
    """

    vertices: tuple
    kind: str  # "interior" | "boundary"
    tri_plus: int
    tri_minus: int | None
    normal: np.ndarray
    length: float


class Mesh:
    """Conforming triangulation with classified edge topology.

    Attributes
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counterclockwise vertex triples
    h : float
        Maximum triangle diameter (the longest side over all triangles).
    level : int
        Refinement generation; 0 for a freshly built mesh.
    parent_map : (T,) int array
        Child-to-parent triangle indices; empty at level 0.
    """

    def __init__(self, vertices, triangles, level=0, parent_map=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("vertices must be an (V, 2) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be a (T, 3) array")
        areas = self.signed_areas()
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise ValueError(
                f"triangle {bad} has non-positive signed area {areas[bad]:.3e}"
            )
        self.level = int(level)
        if parent_map is None:
            parent_map = np.empty(0, dtype=np.int64)
        self.parent_map = np.asarray(parent_map, dtype=np.int64)

        self._classify()
        side = self.vertices[self.triangles] - self.vertices[np.roll(self.triangles, -1, axis=1)]
        self.h = float(np.sqrt((side**2).sum(axis=2)).max())

    # -- basic queries ----------------------------------------------------

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def num_edges(self):
        return self.edge_vertices.shape[0]

    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def euler_characteristic(self):
        """V - E + T; 1 for a simply connected domain, 0 for an annulus."""
        return self.num_vertices - self.num_edges + self.num_triangles

    @property
    def edges(self):
        """Edges as a list of :class:`Edge` views (built on demand)."""
        if self._edge_list is None:
            items = []
            for e in range(self.num_edges):
                interior = bool(self.edge_is_interior[e])
                items.append(
                    Edge(
                        vertices=(int(self.edge_vertices[e, 0]), int(self.edge_vertices[e, 1])),
                        kind="interior" if interior else "boundary",
                        tri_plus=int(self.edge_tri_plus[e]),
                        tri_minus=int(self.edge_tri_minus[e]) if interior else None,
                        normal=self.edge_normals[e],
                        length=float(self.edge_lengths[e]),
                    )
                )
            self._edge_list = items
        return self._edge_list

    # -- edge classification ----------------------------------------------

    def _classify(self):
        tris = self.triangles
        ntri = tris.shape[0]
        # every directed side (a, b) of every triangle, in CCW order
        sides = np.stack(
            [tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=1
        ).reshape(-1, 2)
        owner = np.repeat(np.arange(ntri), 3)
        key = np.sort(sides, axis=1)
        uniq, inverse, counts = np.unique(
            key, axis=0, return_inverse=True, return_counts=True
        )
        inverse = inverse.reshape(-1)
        if counts.max(initial=0) > 2:
            bad = uniq[np.argmax(counts)]
            raise ValueError(
                f"non-conforming mesh: side {tuple(bad)} shared by {counts.max()} triangles"
            )

        # T+ is the lower-indexed adjacent triangle (deterministic jump signs)
        nedge = uniq.shape[0]
        tri_plus = np.full(nedge, ntri, dtype=np.int64)
        np.minimum.at(tri_plus, inverse, owner)
        tri_minus = np.full(nedge, -1, dtype=np.int64)
        np.maximum.at(tri_minus, inverse, owner)
        tri_minus[counts == 1] = -1
        self.edge_vertices = uniq
        self.edge_tri_plus = tri_plus
        self.edge_tri_minus = tri_minus
        self.edge_is_interior = tri_minus >= 0

        # outward normal of T+: locate the directed side of T+ matching the
        # edge and rotate its direction by -90 degrees (CCW triangles)
        tp = tri_plus
        tv = tris[tp]  # (E, 3)
        a = uniq[:, 0][:, None]
        b = uniq[:, 1][:, None]
        nxt = np.roll(tv, -1, axis=1)
        fwd = (tv == a) & (nxt == b)
        bwd = (tv == b) & (nxt == a)
        start = np.where(fwd.any(axis=1)[:, None], a, b).ravel()
        stop = np.where(fwd.any(axis=1)[:, None], b, a).ravel()
        if not np.all(fwd.any(axis=1) | bwd.any(axis=1)):
            raise ValueError("edge classification failed: side not found in T+")
        d = self.vertices[stop] - self.vertices[start]
        length = np.sqrt((d**2).sum(axis=1))
        normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]
        self.edge_lengths = length
        self.edge_normals = normal
        self._edge_list = None


def build_square_mesh(n):
    """Structured mesh of the unit square, n x n cells split by the
    lower-left to upper-right diagonal.

    Parameters
    ----------
    n : int
        Subdivisions per side, n >= 1.  The mesh size is ``h = sqrt(2)/n``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    xs = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.stack([xx.ravel(), yy.ravel()], axis=1)

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return Mesh(vertices, np.array(tris))


def build_annulus_mesh(r_in, r_out, n_seg, n_rings=None):
    """Polygonal approximation of an annulus from concentric vertex rings.

    The curved boundaries are approximated by inscribed polygons with
    ``n_seg`` segments; every boundary vertex lies exactly on its circle.
    The number of radial cell layers defaults to the value that makes the
    radial spacing match the mid-radius circumferential spacing.
    """
    r_in = float(r_in)
    r_out = float(r_out)
    if not 0.0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")
    n_seg = int(n_seg)
    if n_seg < 8:
        raise ValueError("n_seg must be at least 8")
    if n_rings is None:
        target = 2.0 * np.pi * 0.5 * (r_in + r_out) / n_seg
        n_rings = max(1, round((r_out - r_in) / target))
    n_rings = int(n_rings)
    if n_rings < 1:
        raise ValueError("n_rings must be at least 1")

    radii = np.linspace(r_in, r_out, n_rings + 1)
    theta = 2.0 * np.pi * np.arange(n_seg) / n_seg
    vertices = np.empty(((n_rings + 1) * n_seg, 2))
    for i, r in enumerate(radii):
        vertices[i * n_seg : (i + 1) * n_seg, 0] = r * np.cos(theta)
        vertices[i * n_seg : (i + 1) * n_seg, 1] = r * np.sin(theta)

    def vid(i, j):
        return i * n_seg + (j % n_seg)

    tris = []
    for i in range(n_rings):
        for j in range(n_seg):
            a = vid(i, j)  # inner, theta_j
            b = vid(i, j + 1)  # inner, theta_j+1
            c = vid(i + 1, j + 1)  # outer, theta_j+1
            d = vid(i + 1, j)  # outer, theta_j
            # counterclockwise cycle of the radial quad is a, d, c, b
            tris.append((a, d, c))
            tris.append((a, c, b))
    return Mesh(vertices, np.array(tris))


def refine_uniform(mesh):
    """Red refinement: split every triangle at its edge midpoints into four
    similar children.  Midpoints of boundary edges stay on the polygonal
    boundary (no re-projection to a circle)."""
    tris = mesh.triangles
    ntri = tris.shape[0]
    sides = np.stack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=1)
    key = np.sort(sides.reshape(-1, 2), axis=1)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    mids = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    mid_id = mesh.num_vertices + inverse.reshape(ntri, 3)

    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    mab, mbc, mca = mid_id[:, 0], mid_id[:, 1], mid_id[:, 2]
    children = np.empty((4 * ntri, 3), dtype=np.int64)
    children[0::4] = np.stack([a, mab, mca], axis=1)
    children[1::4] = np.stack([mab, b, mbc], axis=1)
    children[2::4] = np.stack([mca, mbc, c], axis=1)
    children[3::4] = np.stack([mab, mbc, mca], axis=1)
    parent_map = np.repeat(np.arange(ntri, dtype=np.int64), 4)
    return Mesh(vertices, children, level=mesh.level + 1, parent_map=parent_map)


def classify_edges(mesh):
    """Recompute the edge classification of a mesh.

    Construction already classifies edges; this re-runs it and returns the
    mesh, failing on non-conforming input (a side shared by more than two
    triangles)."""
    mesh._classify()
    return mesh


# -- plain-text mesh format ------------------------------------------------
#
#   ldgmesh 1
#   vertices N
#   x y          (N lines, repr-exact decimals)
#   triangles M
#   i j k        (M lines, 0-based)


def write_mesh(path, mesh):
    """Write a mesh in the plain-text ``ldgmesh 1`` format."""
    lines = ["ldgmesh 1", f"vertices {mesh.num_vertices}"]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r}")
    lines.append(f"triangles {mesh.num_triangles}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_mesh(path):
    """Read a mesh written by :func:`write_mesh`.

    The edge topology is rebuilt from scratch; the refinement level resets
    to 0 (the format stores geometry and connectivity only)."""
    with open(path) as f:
        tokens = f.read().split("\n")
    it = iter(t for t in tokens if t.strip())
    header = next(it, "")
    if header.strip() != "ldgmesh 1":
        raise ValueError(f"not an ldgmesh file (header {header!r})")
    tag, nv = next(it).split()
    if tag != "vertices":
        raise ValueError("expected 'vertices N' line")
    nv = int(nv)
    vertices = np.empty((nv, 2))
    for i in range(nv):
        x, y = next(it).split()
        vertices[i] = (float(x), float(y))
    tag, nt = next(it).split()
    if tag != "triangles":
        raise ValueError("expected 'triangles M' line")
    nt = int(nt)
    triangles = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        triangles[i] = [int(v) for v in next(it).split()]
    return Mesh(vertices, triangles)

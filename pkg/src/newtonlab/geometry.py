"""Procedural tetrahedral box meshes and vertex selection.

Boxes are meshed on a regular grid with each cell split into 6 tetrahedra
(Kuhn split), which is conforming regardless of cell parity. Quadratic
(P2) meshes are derived from the linear mesh by inserting edge-midpoint
nodes with a canonical (min, max) edge key, so node numbering is fully
deterministic.
"""

from dataclasses import dataclass, field

import numpy as np

P1 = "P1"
P2 = "P2"

# Corner offsets of a grid cell, indexed by (dx, dy, dz) bits.
_CUBE_CORNERS = [(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)]

# Kuhn split: one tet per permutation of the axes, all sharing the main
# diagonal (0,0,0)-(1,1,1). Axis order (a, b, c) walks corner bits
# 000 -> a -> ab -> abc.
_AXIS_PERMS = [
    (0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0),
]

# Local edges of a tet; P2 nodes 4..9 sit on these in this order.
TET_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


@dataclass(frozen=True, eq=False)
class TetMesh:
    """Tetrahedral mesh in the rest configuration.

    vertices: (n, 3) float array of rest positions [m].
    tets: (m, 4) int array for P1 or (m, 10) for P2 (4 corners followed
    by 6 edge-midpoint nodes in TET_EDGES order).
    """

    vertices: np.ndarray
    tets: np.ndarray
    element_kind: str = P1

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "tets", np.asarray(self.tets, dtype=np.int64))
        self.vertices.setflags(write=False)
        self.tets.setflags(write=False)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_tets(self):
        return self.tets.shape[0]

    def corner_positions(self):
        """(m, 4, 3) rest positions of the tet corners."""
        return self.vertices[self.tets[:, :4]]

    def signed_volumes(self):
        """(m,) signed rest volumes from the corner determinant."""
        x = self.corner_positions()
        e = x[:, 1:4, :] - x[:, 0:1, :]
        return np.linalg.det(e) / 6.0


@dataclass(frozen=True)
class VertexSet:
    """Sorted unique vertex indices into an owning mesh."""

    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "indices", idx)
        self.indices.setflags(write=False)

    def __len__(self):
        return len(self.indices)


def _grid_index(nx, ny, nz):
    def idx(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k
    return idx


def generate_box_mesh(extent, subdivisions, kind=P1):
    """Regular box mesh: 6 tets per grid cell, positively oriented.

    extent: (lx, ly, lz) box side lengths in meters, all > 0.
    subdivisions: (nx, ny, nz) cell counts per axis, all >= 1.
    """
    extent = np.asarray(extent, dtype=float)
    subs = np.asarray(subdivisions, dtype=np.int64)
    if extent.shape != (3,) or np.any(extent <= 0):
        raise ValueError(f"extents must be 3 positive lengths, got {extent}")
    if subs.shape != (3,) or np.any(subs < 1):
        raise ValueError(f"subdivisions must be 3 positive integers, got {subs}")
    if kind not in (P1, P2):
        raise ValueError(f"unknown element kind {kind!r}")

    nx, ny, nz = (int(s) for s in subs)
    xs = np.linspace(0.0, extent[0], nx + 1)
    ys = np.linspace(0.0, extent[1], ny + 1)
    zs = np.linspace(0.0, extent[2], nz + 1)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    idx = _grid_index(nx, ny, nz)
    tets = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                corner = {bits: idx(i + bits[0], j + bits[1], k + bits[2])
                          for bits in _CUBE_CORNERS}
                for a, b, c in _AXIS_PERMS:
                    bits = [0, 0, 0]
                    path = [(0, 0, 0)]
                    for axis in (a, b, c):
                        bits[axis] = 1
                        path.append(tuple(bits))
                    tet = [corner[p] for p in path]
                    tets.append(tet)
    tets = np.array(tets, dtype=np.int64)

    # Fix orientation cell-independently: swap last two nodes where the
    # signed volume is negative (odd axis permutations).
    x = vertices[tets]
    vol = np.linalg.det(x[:, 1:4, :] - x[:, 0:1, :]) / 6.0
    flip = vol < 0
    tets[flip, 2], tets[flip, 3] = tets[flip, 3].copy(), tets[flip, 2].copy()

    mesh = TetMesh(vertices=vertices, tets=tets, element_kind=P1)
    if kind == P2:
        mesh = to_quadratic(mesh)

    if np.any(mesh.signed_volumes() <= 0):
        raise ValueError("degenerate or inverted element in generated mesh")
    return mesh


def to_quadratic(mesh):
    """Derive a P2 mesh from a P1 mesh by edge-midpoint insertion."""
    if mesh.element_kind != P1:
        raise ValueError("to_quadratic expects a P1 mesh")
    verts = [mesh.vertices]
    edge_node = {}
    new_pos = []
    tets10 = np.empty((mesh.num_tets, 10), dtype=np.int64)
    next_id = mesh.num_vertices
    for e, tet in enumerate(mesh.tets):
        tets10[e, :4] = tet
        for s, (la, lb) in enumerate(TET_EDGES):
            key = (min(tet[la], tet[lb]), max(tet[la], tet[lb]))
            node = edge_node.get(key)
            if node is None:
                node = next_id
                next_id += 1
                edge_node[key] = node
                new_pos.append(0.5 * (mesh.vertices[key[0]] + mesh.vertices[key[1]]))
            tets10[e, 4 + s] = node
    if new_pos:
        verts.append(np.array(new_pos))
    return TetMesh(vertices=np.vstack(verts), tets=tets10, element_kind=P2)


def select_in_box(mesh, lo, hi):
    """Vertices whose rest position lies in the closed box [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box lower corner exceeds upper corner")
    inside = np.all((mesh.vertices >= lo) & (mesh.vertices <= hi), axis=1)
    return VertexSet(indices=np.nonzero(inside)[0])

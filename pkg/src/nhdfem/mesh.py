"""Tetrahedral meshes: topology, structured generation, refinement, submeshes.

Orientation convention used everywhere downstream: an edge points from its
lower to its higher global vertex index, and a face is oriented by its
vertices in ascending global order. Per-cell entity tables (``cell_edges``,
``cell_faces``) are indexed in the *ascending-vertex* local numbering of each
cell (``sorted_cells``), so the local orientation of every edge and face
agrees with the global one by construction.

Cells themselves are stored positively oriented (``det > 0``).
"""
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations

import numpy as np

from .errors import DegenerateCellError, InvalidArgument

# local entities of a cell with vertices (0, 1, 2, 3); face k is opposite vertex k
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
LOCAL_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])

DEGENERATE_RTOL = 1e-14


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def _signed_dets(vertices, cells):
    v = vertices[cells]
    return np.linalg.det(np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]], axis=2))


def _cell_scale(vertices, cells):
    v = vertices[cells]
    d = v[:, LOCAL_EDGES[:, 0]] - v[:, LOCAL_EDGES[:, 1]]
    return np.sqrt((d ** 2).sum(axis=2)).max(axis=1)


class Mesh:
    """Conforming tetrahedral mesh with full edge/face topology.

    Parameters
    ----------
    vertices : (nv, 3) array
    cells : (nc, 4) int array; reordered internally to positive orientation.
    cell_markers : (nc,) int array, default all 1.
    face_tags : dict mapping sorted vertex triples to an integer tag, or None.
        Tags of boundary faces form ``boundary_face_marker``; boundary faces
        without a tag get marker 0.
    """

    def __init__(self, vertices, cells, cell_markers=None, face_tags=None):
        vertices = np.array(vertices, dtype=np.float64).reshape(-1, 3)
        cells = np.array(cells, dtype=np.int64).reshape(-1, 4)
        if len(cells) == 0:
            raise InvalidArgument("mesh has no cells")
        if cells.min() < 0 or cells.max() >= len(vertices):
            raise InvalidArgument("cell references a vertex out of range")
        dets = _signed_dets(vertices, cells)
        scale = _cell_scale(vertices, cells)
        bad = np.abs(dets) < DEGENERATE_RTOL * scale ** 3
        if bad.any():
            raise DegenerateCellError(f"degenerate cell(s): {np.flatnonzero(bad)[:10].tolist()}")
        flip = dets < 0
        cells[flip] = cells[flip][:, [0, 1, 3, 2]]

        if cell_markers is None:
            cell_markers = np.ones(len(cells), dtype=np.int64)
        cell_markers = np.array(cell_markers, dtype=np.int64).reshape(-1)
        if len(cell_markers) != len(cells):
            raise InvalidArgument("cell_markers length does not match cells")

        self.vertices = vertices
        self.cells = cells
        self.cell_markers = cell_markers
        self._build_topology()

        face_marker = np.zeros(len(self.faces), dtype=np.int64)
        if face_tags:
            keys = np.array(list(face_tags.keys()), dtype=np.int64).reshape(-1, 3)
            tags = np.array(list(face_tags.values()), dtype=np.int64)
            idx = self.find_faces(keys)
            found = idx >= 0
            face_marker[idx[found]] = tags[found]
        self.face_marker = face_marker
        _freeze(self.vertices, self.cells, self.cell_markers, self.face_marker)

    def _build_topology(self):
        sc = np.sort(self.cells, axis=1)
        nc = len(sc)
        e = sc[:, LOCAL_EDGES].reshape(-1, 2)
        self.edges, inv = np.unique(e, axis=0, return_inverse=True)
        self.cell_edges = inv.reshape(nc, 6).astype(np.int64)
        f = sc[:, LOCAL_FACES].reshape(-1, 3)
        self.faces, inv = np.unique(f, axis=0, return_inverse=True)
        inv = inv.reshape(-1).astype(np.int64)
        self.cell_faces = inv.reshape(nc, 4)
        counts = np.bincount(inv, minlength=len(self.faces))
        if counts.max() > 2:
            raise InvalidArgument("non-manifold mesh: a face is shared by more than two cells")
        order = np.argsort(inv, kind="stable")
        owner = order // 4
        face_cells = np.full((len(self.faces), 2), -1, dtype=np.int64)
        first = np.ones(len(order), dtype=bool)
        first[1:] = inv[order][1:] != inv[order][:-1]
        face_cells[inv[order][first], 0] = owner[first]
        face_cells[inv[order][~first], 1] = owner[~first]
        self.face_cells = face_cells
        self.sorted_cells = sc
        self.boundary_faces = np.flatnonzero(face_cells[:, 1] < 0)
        self._edge_keys = self.edges[:, 0] * len(self.vertices) + self.edges[:, 1]
        _freeze(self.edges, self.cell_edges, self.faces, self.cell_faces, self.face_cells,
                self.sorted_cells, self.boundary_faces)

    # ------------------------------------------------------------------ counts
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def boundary_face_marker(self):
        return self.face_marker[self.boundary_faces]

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces - self.n_cells

    # ---------------------------------------------------------------- lookups
    def find_edges(self, pairs):
        """Edge indices of vertex pairs (any order); -1 where absent."""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        keys = pairs[:, 0] * len(self.vertices) + pairs[:, 1]
        pos = np.searchsorted(self._edge_keys, keys)
        pos = np.minimum(pos, len(self._edge_keys) - 1)
        return np.where(self._edge_keys[pos] == keys, pos, -1)

    def find_faces(self, triples):
        """Face indices of vertex triples (any order); -1 where absent."""
        triples = np.sort(np.asarray(triples, dtype=np.int64).reshape(-1, 3), axis=1)
        nv = len(self.vertices)
        fk = (self.faces[:, 0] * nv + self.faces[:, 1]) * nv + self.faces[:, 2]
        keys = (triples[:, 0] * nv + triples[:, 1]) * nv + triples[:, 2]
        pos = np.minimum(np.searchsorted(fk, keys), len(fk) - 1)
        return np.where(fk[pos] == keys, pos, -1)

    # --------------------------------------------------------------- geometry
    @cached_property
    def cell_volumes(self):
        vol = _signed_dets(self.vertices, self.cells) / 6.0
        vol.setflags(write=False)
        return vol

    @cached_property
    def cell_diameters(self):
        return _cell_scale(self.vertices, self.cells)

    @property
    def h(self):
        return float(self.cell_diameters.max())

    @cached_property
    def cell_centroids(self):
        return self.vertices[self.cells].mean(axis=1)

    @cached_property
    def sorted_geometry(self):
        """Affine maps of every cell in its ascending-vertex ordering.

        Returns (origin, J, det, Jinv) with shapes (nc,3), (nc,3,3), (nc,),
        (nc,3,3). ``det`` is signed and may be negative; element transforms
        use the signed value, quadrature uses ``abs(det)``.
        """
        v = self.vertices[self.sorted_cells]
        origin = v[:, 0].copy()
        jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]], axis=2)
        det = np.linalg.det(jac)
        jinv = np.linalg.inv(jac)
        _freeze(origin, jac, det, jinv)
        return origin, jac, det, jinv

    def face_geometry(self, faces):
        """Unit normal (oriented away from ``face_cells[:, 0]``) and area."""
        faces = np.asarray(faces, dtype=np.int64)
        p = self.vertices[self.faces[faces]]
        nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        area = 0.5 * np.linalg.norm(nrm, axis=1)
        nrm = nrm / (2.0 * area[:, None])
        owner = self.face_cells[faces, 0]
        inward = self.cell_centroids[owner] - p[:, 0]
        flip = np.einsum("ij,ij->i", nrm, inward) > 0
        nrm[flip] *= -1.0
        return nrm, area

    def total_volume(self):
        return float(self.cell_volumes.sum())

    def summary(self):
        markers, counts = np.unique(self.cell_markers, return_counts=True)
        bmark, bcounts = np.unique(self.boundary_face_marker, return_counts=True)
        return {
            "vertices": self.n_vertices,
            "edges": self.n_edges,
            "faces": self.n_faces,
            "cells": self.n_cells,
            "boundary_faces": len(self.boundary_faces),
            "volume": self.total_volume(),
            "h": self.h,
            "euler": self.euler_characteristic(),
            "cell_markers": dict(zip(markers.tolist(), counts.tolist())),
            "boundary_markers": dict(zip(bmark.tolist(), bcounts.tolist())),
        }

    def face_tag_dict(self):
        tagged = np.flatnonzero(self.face_marker)
        return {tuple(self.faces[f]): int(self.face_marker[f]) for f in tagged}


class Submesh(Mesh):
    """Mesh over the cells of one region of a parent mesh.

    Vertices are renumbered monotonically in parent index, so the
    ascending-vertex ordering of each cell (and hence every reference map)
    is the same as in the parent.
    """

    def __init__(self, parent, region_marker, parent_cell, parent_vertex, vertices, cells, face_tags):
        super().__init__(vertices, cells, parent.cell_markers[parent_cell], face_tags)
        self.parent = parent
        self.region_marker = region_marker
        self.parent_cell = parent_cell
        self.parent_vertex = parent_vertex
        _freeze(self.parent_cell, self.parent_vertex)


@dataclass(frozen=True)
class AffineMap:
    """x = origin + J @ xhat from the reference tetrahedron."""

    origin: np.ndarray
    jacobian: np.ndarray
    det: float
    inv_transpose: np.ndarray

    def __call__(self, xhat):
        return self.origin + np.asarray(xhat) @ self.jacobian.T

    def inverse(self, x):
        return (np.asarray(x) - self.origin) @ self.inv_transpose


def cell_affine_map(mesh, cell):
    if not 0 <= cell < mesh.n_cells:
        raise InvalidArgument(f"cell index {cell} out of range")
    v = mesh.vertices[mesh.cells[cell]]
    jac = np.column_stack([v[1] - v[0], v[2] - v[0], v[3] - v[0]])
    det = float(np.linalg.det(jac))
    scale = _cell_scale(mesh.vertices, mesh.cells[cell:cell + 1])[0]
    if abs(det) < DEGENERATE_RTOL * scale ** 3:
        raise DegenerateCellError(f"cell {cell} is degenerate (det={det:g})")
    return AffineMap(v[0].copy(), jac, det, np.linalg.inv(jac).T)


# ------------------------------------------------------------------ generation
_KUHN_PATHS = list(permutations(range(3)))
_BOX_SIDES = ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1))


def generate_box_mesh(n_per_axis, bounds=((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), marker=1):
    """Structured Kuhn mesh: each sub-cube split into 6 tets around its main diagonal.

    Boundary faces are tagged 1..6 for the sides x=lo, x=hi, y=lo, y=hi,
    z=lo, z=hi.
    """
    n = tuple(int(k) for k in n_per_axis)
    if len(n) != 3 or min(n) < 1:
        raise InvalidArgument(f"subdivision counts must be positive, got {n_per_axis!r}")
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    if np.any(hi <= lo):
        raise InvalidArgument("degenerate box bounds")
    nx, ny, nz = n
    axes = [np.linspace(lo[d], hi[d], n[d] + 1) for d in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    vertices = np.column_stack([gx.ravel(order="F"), gy.ravel(order="F"), gz.ravel(order="F")])

    def vid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    corner = np.stack([i.ravel(order="F"), j.ravel(order="F"), k.ravel(order="F")], axis=1)
    cells = []
    for path in _KUHN_PATHS:
        pts = [corner.copy()]
        cur = corner.copy()
        for axis in path:
            cur = cur.copy()
            cur[:, axis] += 1
            pts.append(cur)
        cells.append(np.stack([vid(*p.T) for p in pts], axis=1))
    cells = np.stack(cells, axis=1).reshape(-1, 4)

    mesh = Mesh(vertices, cells, np.full(len(cells), marker))
    return _tag_box_sides(mesh, lo, hi)


def _tag_box_sides(mesh, lo, hi):
    bf = mesh.boundary_faces
    p = mesh.vertices[mesh.faces[bf]]
    tags = {}
    tol = 1e-12 * float(np.max(hi - lo))
    for tag, (axis, side) in enumerate(_BOX_SIDES, start=1):
        target = hi[axis] if side else lo[axis]
        on = np.all(np.abs(p[:, :, axis] - target) < tol, axis=1)
        for f in bf[on]:
            tags[tuple(mesh.faces[f])] = tag
    return Mesh(mesh.vertices, mesh.cells, mesh.cell_markers, tags)


def generate_sphere_in_sphere(inner_radius=2.0, outer_radius=20.0, n_inner=2, n_outer=4,
                              inner_marker=1, outer_marker=2,
                              outer_boundary_tag=10, interface_tag=11):
    """Ball of radius ``outer_radius`` containing a concentric ball of ``inner_radius``.

    Built by mapping a Kuhn cube mesh onto the ball: the cube shell at
    sup-norm layer k goes to a sphere of radius rho(k), linear up to the
    interface and geometrically graded outside it.
    """
    if not 0 < inner_radius < outer_radius:
        raise InvalidArgument("need 0 < inner_radius < outer_radius")
    if n_inner < 1 or n_outer < 1:
        raise InvalidArgument("layer counts must be positive")
    m = n_inner + n_outer
    box = generate_box_mesh((2 * m,) * 3, ((-m,) * 3, (m,) * 3))
    lattice = np.rint(box.vertices).astype(np.int64)
    layer = np.abs(lattice).max(axis=1)
    rho = np.where(
        layer <= n_inner,
        inner_radius * layer / n_inner,
        inner_radius * (outer_radius / inner_radius) ** ((layer - n_inner) / n_outer),
    )
    norm = np.linalg.norm(lattice, axis=1)
    direction = np.divide(lattice, norm[:, None], out=np.zeros_like(box.vertices), where=norm[:, None] > 0)
    vertices = direction * rho[:, None]

    cell_layer = np.abs(lattice[box.cells]).max(axis=2).max(axis=1)
    markers = np.where(cell_layer <= n_inner, inner_marker, outer_marker)
    mesh = Mesh(vertices, box.cells, markers)
    tags = {tuple(mesh.faces[f]): outer_boundary_tag for f in mesh.boundary_faces}
    fc = mesh.face_cells
    interior = fc[:, 1] >= 0
    iface = np.flatnonzero(interior & (markers[fc[:, 0]] != markers[np.maximum(fc[:, 1], 0)]))
    for f in iface:
        tags[tuple(mesh.faces[f])] = interface_tag
    return Mesh(mesh.vertices, mesh.cells, mesh.cell_markers, tags)


# ------------------------------------------------------------------ refinement
def _octahedron_children(m, verts):
    """Split the inner octahedron of a red-refined tet along its shortest diagonal.

    ``m`` maps local edge (a, b) -> midpoint vertex id (per cell arrays).
    """
    diagonals = [((0, 2), (1, 3)), ((0, 3), (1, 2)), ((0, 1), (2, 3))]
    lengths = np.stack(
        [np.linalg.norm(verts[m[a]] - verts[m[b]], axis=1) for a, b in diagonals], axis=1
    )
    # ties resolved toward the earlier diagonal, deterministically
    choice = np.argmin(np.round(lengths / lengths.max(axis=1, keepdims=True), 12), axis=1)
    out = []
    for d, (a, b) in enumerate(diagonals):
        sel = choice == d
        (p1, p1o), (p2, p2o) = [pair for pair in diagonals if pair != diagonals[d]]
        cyc = [p1, p2, p1o, p2o]
        kids = [np.stack([m[a][sel], m[b][sel], m[cyc[t]][sel], m[cyc[(t + 1) % 4]][sel]], axis=1)
                for t in range(4)]
        out.append((sel, kids))
    return out


def refine_uniform(mesh):
    """Red refinement: every tet split into 8 by its edge midpoints."""
    nv = mesh.n_vertices
    verts = np.vstack([mesh.vertices, mesh.vertices[mesh.edges].mean(axis=1)])
    sc = mesh.sorted_cells
    m = {}
    for k, (a, b) in enumerate(LOCAL_EDGES):
        m[(a, b)] = nv + mesh.cell_edges[:, k]
    corner = [
        np.stack([sc[:, 0], m[(0, 1)], m[(0, 2)], m[(0, 3)]], axis=1),
        np.stack([m[(0, 1)], sc[:, 1], m[(1, 2)], m[(1, 3)]], axis=1),
        np.stack([m[(0, 2)], m[(1, 2)], sc[:, 2], m[(2, 3)]], axis=1),
        np.stack([m[(0, 3)], m[(1, 3)], m[(2, 3)], sc[:, 3]], axis=1),
    ]
    nc = mesh.n_cells
    children = np.empty((nc, 8, 4), dtype=np.int64)
    for t in range(4):
        children[:, t] = corner[t]
    for sel, kids in _octahedron_children(m, verts):
        for t in range(4):
            children[sel, 4 + t] = kids[t]
    markers = np.repeat(mesh.cell_markers, 8)

    tags = {}
    tagged = np.flatnonzero(mesh.face_marker)
    if len(tagged):
        fv = mesh.faces[tagged]
        mid = lambda a, b: nv + mesh.find_edges(np.stack([fv[:, a], fv[:, b]], axis=1))
        m01, m02, m12 = mid(0, 1), mid(0, 2), mid(1, 2)
        subs = [
            np.stack([fv[:, 0], m01, m02], axis=1),
            np.stack([fv[:, 1], m01, m12], axis=1),
            np.stack([fv[:, 2], m02, m12], axis=1),
            np.stack([m01, m02, m12], axis=1),
        ]
        for s in subs:
            for tri, tag in zip(np.sort(s, axis=1), mesh.face_marker[tagged]):
                tags[tuple(tri)] = int(tag)
    return Mesh(verts, children.reshape(-1, 4), markers, tags)


# ------------------------------------------------------------------- submeshes
def extract_submesh(mesh, region_marker):
    sel = np.flatnonzero(mesh.cell_markers == region_marker)
    if len(sel) == 0:
        raise InvalidArgument(f"no cells carry region marker {region_marker}")
    parent_vertex = np.unique(mesh.cells[sel])
    renum = np.full(mesh.n_vertices, -1, dtype=np.int64)
    renum[parent_vertex] = np.arange(len(parent_vertex))
    cells = renum[mesh.cells[sel]]
    tags = {}
    tagged = np.flatnonzero(mesh.face_marker)
    for f in tagged:
        tri = renum[mesh.faces[f]]
        if np.all(tri >= 0):
            tags[tuple(np.sort(tri))] = int(mesh.face_marker[f])
    return Submesh(mesh, region_marker, sel, parent_vertex, mesh.vertices[parent_vertex], cells, tags)


# ------------------------------------------------------------------ validation
def validate(mesh, simply_connected=True, expected_volume=None, rtol=1e-12):
    """Check the structural invariants; raise InvalidArgument on the first failure."""
    if np.any(mesh.cell_volumes <= 0):
        raise InvalidArgument("non-positive cell volume")
    if np.any(np.diff(mesh.edges, axis=1) <= 0) or np.any(np.diff(mesh.faces, axis=1) <= 0):
        raise InvalidArgument("edge/face vertices not in ascending order")
    counts = (mesh.face_cells >= 0).sum(axis=1)
    if np.any(counts < 1):
        raise InvalidArgument("face without incident cell")
    # every boundary face must be covered once, interior faces twice
    inc = np.bincount(mesh.cell_faces.ravel(), minlength=mesh.n_faces)
    if not np.array_equal(inc, counts):
        raise InvalidArgument("face incidence table inconsistent")
    if simply_connected and mesh.euler_characteristic() != 1:
        raise InvalidArgument(f"Euler characteristic {mesh.euler_characteristic()} != 1")
    if expected_volume is not None:
        vol = mesh.total_volume()
        if abs(vol - expected_volume) > rtol * abs(expected_volume):
            raise InvalidArgument(f"volume {vol!r} != {expected_volume!r}")
    sc = mesh.sorted_cells
    for k, (a, b) in enumerate(LOCAL_EDGES):
        if not np.array_equal(mesh.edges[mesh.cell_edges[:, k]], sc[:, [a, b]]):
            raise InvalidArgument("cell_edges inconsistent with sorted cell vertices")
    return True

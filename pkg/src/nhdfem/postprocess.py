"""Error norms, convergence tables, extinction cross section, residual checks and VTK output."""
import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument, InvalidSurfaceError
from .fespaces.reference import NEDELEC
from .fespaces.space import FEField
from .linsolve import matvec
from .mesh import Submesh
from .quadrature import tet_rule, tri_rule


class ErrorNorms(NamedTuple):
    l2: float
    derivative: float
    combined: float


def _field_error(fh, exact, dexact, rss):
    space = fh.space
    rule = tet_rule(2 * space.order + 2)
    cells = np.arange(space.mesh.n_cells)
    vals, ders = fh.evaluate_cells(cells, rule.points)
    x = space.physical_points(cells, rule.points).reshape(-1, 3)
    w = (np.abs(space.mesh.sorted_geometry[2])[:, None] * rule.weights[None, :]).ravel()
    dv = vals.reshape(-1, 3) - np.asarray(exact(x)).reshape(-1, 3)
    dd = ders.reshape(len(x), -1) - np.asarray(dexact(x)).reshape(len(x), -1)
    l2 = math.sqrt(float(np.sum(w * np.sum(np.abs(dv) ** 2, axis=1))))
    d = math.sqrt(float(np.sum(w * np.sum(np.abs(dd) ** 2, axis=1))))
    return ErrorNorms(l2, d, math.hypot(l2, d) if rss else l2 + d)


def error_hcurl(field, exact, curl_exact, rss=False):
    """L2 error, curl error and their sum (root-sum-square with ``rss=True``)."""
    if field.space.kind != NEDELEC:
        raise InvalidArgument("error_hcurl needs a Nedelec field")
    return _field_error(field, exact, curl_exact, rss)


def error_hdiv(field, exact, div_exact, rss=False):
    """L2 error, divergence error and their sum (root-sum-square with ``rss=True``)."""
    if field.space.kind == NEDELEC:
        raise InvalidArgument("error_hdiv needs a Raviart-Thomas field")
    return _field_error(field, exact, div_exact, rss)


def convergence_orders(errors, h_values):
    """log(e[i-1]/e[i]) / log(h[i-1]/h[i]) for i >= 1."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(h_values, dtype=float)
    if e.shape != h.shape or e.ndim != 1 or len(e) < 2:
        raise InvalidArgument("need matching error and h sequences of length >= 2")
    if np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise InvalidArgument("errors must be positive and finite")
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise InvalidArgument("h must be positive and strictly decreasing")
    return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))


def _num(v):
    return "" if v is None else repr(float(v))


CSV_COLUMNS = ("level", "h", "ndofs_E", "ndofs_J", "err_E", "order_E", "err_J", "order_J")


@dataclass
class ConvergenceRow:
    level: int
    h: float
    ndofs_E: int
    ndofs_J: int
    err_E: float
    err_J: float
    order_E: float = None
    order_J: float = None


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)

    def add(self, level, h, ndofs_E, ndofs_J, err_E, err_J):
        row = ConvergenceRow(level, h, ndofs_E, ndofs_J, err_E, err_J)
        if self.rows:
            prev = self.rows[-1]
            row.order_E = convergence_orders([prev.err_E, err_E], [prev.h, h])[0]
            row.order_J = convergence_orders([prev.err_J, err_J], [prev.h, h])[0]
        self.rows.append(row)
        return row

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow([
                    r.level, _num(r.h), r.ndofs_E, r.ndofs_J, _num(r.err_E), _num(r.order_E),
                    _num(r.err_J), _num(r.order_J),
                ])

    def format(self):
        lines = ["level        h   ndofs_E   ndofs_J        err_E  order_E        err_J  order_J"]
        for r in self.rows:
            oe = "" if r.order_E is None else f"{r.order_E:.3f}"
            oj = "" if r.order_J is None else f"{r.order_J:.3f}"
            lines.append(f"{r.level:5d} {r.h:8.4f} {r.ndofs_E:9d} {r.ndofs_J:9d} "
                         f"{r.err_E:12.4e} {oe:>8} {r.err_J:12.4e} {oj:>8}")
        return "\n".join(lines)


# ------------------------------------------------------------------ extinction
@dataclass
class Surface:
    """Oriented triangulated surface of a mesh.

    ``cells`` is the cell each face is evaluated from and ``normals`` are
    unit normals pointing away from the enclosed region.
    """

    mesh: object
    faces: np.ndarray
    cells: np.ndarray
    normals: np.ndarray
    areas: np.ndarray


def interface_surface(mesh, region_marker):
    """Boundary of the cells carrying ``region_marker``, seen from outside them."""
    inside = np.asarray(mesh.cell_markers) == region_marker
    if not inside.any():
        raise InvalidArgument(f"no cells with marker {region_marker}")
    fc = mesh.face_cells
    a = fc[:, 0]
    b = fc[:, 1]
    in_a = inside[a]
    in_b = np.where(b >= 0, inside[np.maximum(b, 0)], False)
    faces = np.flatnonzero((in_a != in_b) & (b >= 0))
    if len(faces) == 0:
        raise InvalidArgument("region has no interior interface")
    normals, areas = mesh.face_geometry(faces)
    # face_geometry normals point away from face_cells[:, 0]
    from_a_inside = in_a[faces]
    normals = np.where(from_a_inside[:, None], normals, -normals)
    outside = np.where(from_a_inside, b[faces], a[faces])
    return Surface(mesh, faces, outside, normals, areas)


def check_closed(surface, rtol=1e-10):
    """Raise InvalidSurfaceError unless the surface is closed.

    Every edge must be shared by exactly two faces, and the flux of a
    constant field (sum of area vectors) must vanish.
    """
    tri = surface.mesh.faces[surface.faces]
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [0, 2]], tri[:, [1, 2]]]), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    if len(surface.faces) == 0 or np.any(counts != 2):
        raise InvalidSurfaceError("surface is not closed: some edges are not shared by two faces")
    flux = np.abs((surface.normals * surface.areas[:, None]).sum(axis=0)).max()
    if flux > rtol * surface.areas.sum():
        raise InvalidSurfaceError(f"surface is not closed: constant-field flux {flux:.3e}")


def extinction_cross_section(E_h, wave, surface, diameter, mu=1.0, check=True):
    """-1/(D |E0|^2) * surface integral of Re[E_inc x conj(H_s) + E_s x conj(H_inc)] . n.

    H_h = curl E_h / (i omega mu) is evaluated in ``surface.cells``.
    """
    if check:
        check_closed(surface)
    if diameter <= 0:
        raise InvalidArgument("diameter must be positive")
    space = E_h.space
    rule = tri_rule(2 * space.order + 2)
    mesh = space.mesh
    local = np.argmax(mesh.cell_faces[surface.cells] == surface.faces[:, None], axis=1)
    integrand = np.zeros((len(surface.faces), len(rule.weights)))
    for lf in range(4):
        sel = np.flatnonzero(local == lf)
        if len(sel) == 0:
            continue
        ref = space.face_reference_points(lf, rule.points)
        e, c = E_h.evaluate_cells(surface.cells[sel], ref)
        x = space.physical_points(surface.cells[sel], ref).reshape(-1, 3)
        shape = e.shape
        h = c / (1j * wave.omega * mu)
        e_inc = wave.E(x).reshape(shape)
        h_inc = wave.H(x).reshape(shape)
        e_s, h_s = e - e_inc, h - h_inc
        flux = np.cross(e_inc, np.conj(h_s)) + np.cross(e_s, np.conj(h_inc))
        integrand[sel] = np.einsum("fqi,fi->fq", flux.real, surface.normals[sel])
    total = float(np.sum(integrand * (2.0 * surface.areas[:, None] * rule.weights[None, :])))
    return -total / (diameter * abs(wave.amplitude) ** 2)


# ------------------------------------------------------------------ residuals
class BlockResidual(NamedTuple):
    abs_E: float
    abs_J: float
    rel_E: float
    rel_J: float


def galerkin_residual(blocks, x):
    """Residuals of both block rows of the discrete equations.

    Eliminated J rows are the boundary condition and are excluded. Relative
    values divide by ||b|| + ||A_x1 x1|| + ||A_x2 x2|| of the same row.
    """
    e, j = blocks.split(np.asarray(x, dtype=np.complex128))
    ee, ej = matvec(blocks.A_EE, e), matvec(blocks.A_EJ, j)
    je, jj = matvec(blocks.A_JE, e), matvec(blocks.A_JJ, j)
    keep = np.ones(blocks.n_J, dtype=bool)
    keep[blocks.eliminated - blocks.n_E] = False
    rE = ee + ej - blocks.b_E
    rJ = (je + jj - blocks.b_J)[keep]
    sE = np.linalg.norm(blocks.b_E) + np.linalg.norm(ee) + np.linalg.norm(ej)
    sJ = np.linalg.norm(blocks.b_J[keep]) + np.linalg.norm(je[keep]) + np.linalg.norm(jj[keep])
    aE, aJ = float(np.linalg.norm(rE)), float(np.linalg.norm(rJ))
    return BlockResidual(aE, aJ, aE / sE if sE > 0 else aE, aJ / sJ if sJ > 0 else aJ)


class BalanceCheck(NamedTuple):
    lhs: float
    rhs: float
    scale: float

    @property
    def error(self):
        return abs(self.lhs - self.rhs) / self.scale if self.scale > 0 else abs(self.lhs - self.rhs)


def power_balance(blocks, x, params):
    """Imaginary parts of the two block equations tested with the solution itself.

    field row:   -w ||E_T||^2 - w Re(J, E)               = Im[(f1, E) + <g, E_T>]
    current row: -w gamma ||J||^2 + w wp^2 eps0 Re(E, J) = -Im(f2, J)
    """
    w = params.omega
    e, j = blocks.split(np.asarray(x, dtype=np.complex128))
    bt = np.vdot(e, matvec(blocks.boundary_gram, e)).real
    je = np.vdot(e, matvec(blocks.coupling_gram, j))  # (J, E)
    jj = np.vdot(j, matvec(blocks.mass_J_gram, j)).real
    src_E = np.vdot(e, blocks.b_E).imag
    src_J = np.vdot(j, blocks.b_J).imag
    t1, t2 = -w * bt, -w * je.real
    # (E, J) = conj((J, E))
    u1 = -w * params.gamma * jj
    u2 = w * params.omega_p ** 2 * params.eps0 * je.real
    # one scale for both rows, so a row whose terms all vanish is not judged
    # relative to round-off
    scale = sum(abs(v) for v in (t1, t2, src_E, u1, u2, src_J))
    return BalanceCheck(t1 + t2, src_E, scale), BalanceCheck(u1 + u2, src_J, scale)


# ------------------------------------------------------------------ VTK
_VTK_TETRA = 10


def _cell_vectors(mesh, data):
    """Per-cell complex vectors on ``mesh`` from an FEField or an array."""
    if isinstance(data, FEField):
        vals, _ = data.cell_values()
        fmesh = data.space.mesh
        if fmesh is mesh:
            return vals
        if isinstance(fmesh, Submesh) and fmesh.parent is mesh:
            out = np.zeros((mesh.n_cells, 3), dtype=np.complex128)
            out[fmesh.parent_cell] = vals
            return out
        raise InvalidArgument("field does not live on this mesh or one of its submeshes")
    arr = np.asarray(data, dtype=np.complex128)
    if arr.shape == (3,):
        arr = np.broadcast_to(arr, (mesh.n_cells, 3))
    if arr.shape != (mesh.n_cells, 3):
        raise InvalidArgument(f"cell data has shape {arr.shape}, expected ({mesh.n_cells}, 3)")
    return arr


def export_vtk(path, mesh, fields=None, title="nhdfem"):
    """Legacy ASCII unstructured grid with per-cell ``<name>_re``, ``_im`` and ``_mag``."""
    fields = dict(fields or {})
    vectors = {name: _cell_vectors(mesh, data) for name, data in fields.items()}
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    nc = mesh.n_cells
    lines.append(f"CELLS {nc} {5 * nc}")
    lines += [f"4 {a} {b} {c} {d}" for a, b, c, d in mesh.cells.tolist()]
    lines.append(f"CELL_TYPES {nc}")
    lines += [str(_VTK_TETRA)] * nc
    lines.append(f"CELL_DATA {nc}")
    lines.append("SCALARS region int 1")
    lines.append("LOOKUP_TABLE default")
    lines += [str(int(m)) for m in mesh.cell_markers]
    for name, v in vectors.items():
        for suffix, part in (("re", v.real), ("im", v.imag)):
            lines.append(f"VECTORS {name}_{suffix} double")
            lines += [f"{a!r} {b!r} {c!r}" for a, b, c in np.asarray(part, dtype=float).tolist()]
        lines.append(f"SCALARS {name}_mag double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [repr(float(m)) for m in np.linalg.norm(v, axis=1)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

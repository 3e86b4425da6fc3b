"""Assembly of the coupled E/J system.

Conventions
-----------
* Inner products are (a, b) = int a . conj(b); the test function is the
  conjugated one. Basis functions are real, so conjugation only matters for
  complex coefficients and sources.
* Row index = test function, column index = trial function.
* Global unknowns: all E DOFs first, then all J DOFs.
* J is extended by zero outside the metal region; the E/J coupling is
  integrated over metal cells only.

With these conventions the discrete problem is

    A_EE = (mu^-1 curl E, curl u) - w^2 (eps E, u) - i w <E_T, u_T>
    A_EJ = -i w (J, u)
    A_JE = +i w wp^2 eps0 (E, v)
    A_JJ = beta^2 (div J, div v) - w (w + i gamma) (J, v)
    b_E  = (f1, u) + <g, u_T>,   b_J = -(f2, v)
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgument
from .fespaces.reference import NEDELEC, RAVIART_THOMAS
from .fespaces.space import tangential
from .linsolve import Triplets, csr_from_triplets
from .mesh import Submesh
from .quadrature import tet_rule, tri_rule

VOLUME_KINDS = ("curl_curl", "mass_E", "div_div", "mass_J")
CHUNK = 2048  # cells per work item; fixed so results do not depend on thread count


def _chunks(n):
    return [np.arange(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]


def _map_chunks(fn, chunks, threads):
    threads = kernels.thread_count() if threads is None else max(1, int(threads))
    if threads == 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))  # map preserves chunk order


def cell_coefficients(mesh, coefficient):
    """Per-cell complex values from a scalar, a {marker: value} dict or an array."""
    nc = mesh.n_cells
    if isinstance(coefficient, dict):
        out = np.empty(nc, dtype=np.complex128)
        markers = np.asarray(mesh.cell_markers)
        for m in np.unique(markers):
            if int(m) not in coefficient:
                raise InvalidArgument(f"no coefficient given for region marker {int(m)}")
            out[markers == m] = coefficient[int(m)]
        return out
    arr = np.asarray(coefficient, dtype=np.complex128)
    if arr.ndim == 0:
        return np.full(nc, complex(arr))
    if arr.shape != (nc,):
        raise InvalidArgument(f"coefficient array has shape {arr.shape}, mesh has {nc} cells")
    return arr


def _local_to_triplets(row_dofs, col_dofs, local):
    nc, ni, nj = local.shape
    rows = np.repeat(row_dofs[:, :, None], nj, axis=2)
    cols = np.repeat(col_dofs[:, None, :], ni, axis=1)
    return Triplets(rows.ravel(), cols.ravel(), local.ravel().astype(np.complex128))


def _weights(mesh, cells, rule):
    det = np.abs(mesh.sorted_geometry[2][cells])
    return np.ascontiguousarray(det[:, None] * rule.weights[None, :])


def assemble_volume_form(kind, space, coefficient=1.0, threads=None):
    """Triplets of int coef * (trial-part) . (test-part) over all cells of ``space.mesh``.

    ``kind`` selects the integrand: ``curl_curl`` and ``mass_E`` need a
    Nedelec space, ``div_div`` and ``mass_J`` a Raviart-Thomas space.
    """
    if kind not in VOLUME_KINDS:
        raise InvalidArgument(f"unknown volume form {kind!r}")
    want = NEDELEC if kind in ("curl_curl", "mass_E") else RAVIART_THOMAS
    if space.kind != want:
        raise InvalidArgument(f"{kind} requires a {want} space, got {space.kind}")
    mesh = space.mesh
    coef = cell_coefficients(mesh, coefficient)
    rule = tet_rule(2 * space.order + 1)

    def work(cells):
        vals, ders = space.eval_basis(cells, rule.points)
        if kind in ("mass_E", "mass_J"):
            part = vals
        elif kind == "curl_curl":
            part = ders
        else:
            part = ders[..., None]
        part = np.ascontiguousarray(part)
        local = kernels.weighted_gram(part, part, _weights(mesh, cells, rule))
        dofs = space.cell_dofs[cells]
        return _local_to_triplets(dofs, dofs, local * coef[cells][:, None, None])

    return Triplets.concat(_map_chunks(work, _chunks(mesh.n_cells), threads))


def marked_boundary_faces(mesh, marker=None):
    faces = mesh.boundary_faces
    if marker is None:
        return faces
    markers = np.atleast_1d(marker)
    return faces[np.isin(mesh.face_marker[faces], markers)]


def assemble_boundary_form(space, marker=None, weight=1.0):
    """weight * sum over marked boundary faces of int u_T . conj(v_T).

    ``marker`` None selects every boundary face. No matching faces gives an
    empty result.
    """
    if space.kind != NEDELEC:
        raise InvalidArgument("boundary form requires a Nedelec space")
    faces = marked_boundary_faces(space.mesh, marker)
    if len(faces) == 0:
        return Triplets.empty()
    rule = tri_rule(2 * space.order + 2)
    data = space.face_basis(faces, rule.points)
    traces = np.ascontiguousarray(tangential(data["values"], data["normals"][:, None, None, :]))
    w = np.ascontiguousarray(2.0 * data["areas"][:, None] * rule.weights[None, :])
    local = kernels.weighted_gram(traces, traces, w)
    return _local_to_triplets(data["dofs"], data["dofs"], local * weight)


def metal_cells(X, Y):
    """Parent-mesh cell index of each cell of ``Y.mesh``."""
    if Y.mesh is X.mesh:
        return np.arange(X.mesh.n_cells)
    if isinstance(Y.mesh, Submesh) and Y.mesh.parent is X.mesh:
        return np.asarray(Y.mesh.parent_cell)
    raise InvalidArgument("the J-space mesh is not a submesh of the E-space mesh")


def assemble_coupling_form(direction, X, Y, weight=1.0, threads=None):
    """Mixed Nedelec/RT mass over metal cells.

    ``J_to_E``: rows are E DOFs, columns J DOFs, entries weight*(psi_j, phi_i).
    ``E_to_J``: rows are J DOFs, columns E DOFs, entries weight*(phi_j, psi_i).
    """
    if direction not in ("J_to_E", "E_to_J"):
        raise InvalidArgument(f"unknown coupling direction {direction!r}")
    if X.kind != NEDELEC or Y.kind != RAVIART_THOMAS:
        raise InvalidArgument("coupling needs a Nedelec X-space and an RT Y-space")
    parent = metal_cells(X, Y)
    rule = tet_rule(X.order + Y.order + 1)
    ymesh = Y.mesh

    def work(cells):
        pcells = parent[cells]
        phi, _ = X.eval_basis(pcells, rule.points)
        psi, _ = Y.eval_basis(cells, rule.points)
        w = _weights(ymesh, cells, rule)
        phi, psi = np.ascontiguousarray(phi), np.ascontiguousarray(psi)
        if direction == "J_to_E":
            local = kernels.weighted_gram(phi, psi, w)
            return _local_to_triplets(X.cell_dofs[pcells], Y.cell_dofs[cells], local * weight)
        local = kernels.weighted_gram(psi, phi, w)
        return _local_to_triplets(Y.cell_dofs[cells], X.cell_dofs[pcells], local * weight)

    return Triplets.concat(_map_chunks(work, _chunks(ymesh.n_cells), threads))


def assemble_rhs(space, source, domain="volume", marker=None, threads=None):
    """Load vector.

    ``domain="volume"``: int f . conj(phi) with ``source(points) -> (n, 3)``.
    ``domain="boundary"``: sum over boundary faces of int g . conj(phi_T) with
    ``source(points, normals) -> (n, 3)`` and outward unit normals.
    """
    out = np.zeros(space.n_dofs, dtype=np.complex128)
    if source is None:
        return out
    mesh = space.mesh
    deg = 2 * space.order + 2
    if domain == "volume":
        rule = tet_rule(deg)

        def work(cells):
            vals, _ = space.eval_basis(cells, rule.points)
            x = space.physical_points(cells, rule.points)
            f = np.asarray(source(x.reshape(-1, 3)), dtype=np.complex128).reshape(x.shape)
            return kernels.weighted_load(np.ascontiguousarray(f), np.ascontiguousarray(vals),
                                         _weights(mesh, cells, rule))

        chunks = _chunks(mesh.n_cells)
        for cells, local in zip(chunks, _map_chunks(work, chunks, threads)):
            np.add.at(out, space.cell_dofs[cells], local)
        return out
    if domain == "boundary":
        if space.kind != NEDELEC:
            raise InvalidArgument("boundary loads require a Nedelec space")
        faces = marked_boundary_faces(mesh, marker)
        if len(faces) == 0:
            return out
        rule = tri_rule(deg)
        data = space.face_basis(faces, rule.points)
        nq = len(rule.weights)
        normals = np.repeat(data["normals"], nq, axis=0)
        g = np.asarray(source(data["points"].reshape(-1, 3), normals), dtype=np.complex128)
        g = np.ascontiguousarray(g.reshape(len(faces), nq, 3))
        traces = np.ascontiguousarray(tangential(data["values"], data["normals"][:, None, None, :]))
        w = np.ascontiguousarray(2.0 * data["areas"][:, None] * rule.weights[None, :])
        np.add.at(out, data["dofs"], kernels.weighted_load(g, traces, w))
        return out
    raise InvalidArgument(f"unknown rhs domain {domain!r}")


def apply_essential_bc(triplets, rhs, dofs):
    """Symmetric elimination of ``dofs`` with zero prescribed values.

    Every triplet touching an eliminated row or column is dropped, a unit
    diagonal is added and the matching RHS entries are zeroed.
    """
    rhs = np.array(rhs, dtype=np.complex128, copy=True)
    dofs = np.unique(np.asarray(dofs, dtype=np.int64))
    if len(dofs) == 0:
        return triplets, rhs
    if dofs[0] < 0 or dofs[-1] >= len(rhs):
        raise InvalidArgument("eliminated DOF out of range")
    drop = np.zeros(len(rhs), dtype=bool)
    drop[dofs] = True
    keep = ~(drop[triplets.rows] | drop[triplets.cols])
    diag = Triplets(dofs, dofs, np.ones(len(dofs), dtype=np.complex128))
    rhs[dofs] = 0.0
    kept = Triplets(triplets.rows[keep], triplets.cols[keep], triplets.vals[keep])
    return Triplets.concat([kept, diag]), rhs


@dataclass
class SystemBlocks:
    """Block view of an assembled system (blocks are before BC elimination).

    The Gram matrices ``boundary_gram`` (<E_T, u_T>), ``coupling_gram``
    ((J, u) on metal cells, rows E) and ``mass_J_gram`` ((J, v)) are kept
    unweighted for energy checks.
    """

    A_EE: object
    A_EJ: object
    A_JE: object
    A_JJ: object
    b_E: np.ndarray
    b_J: np.ndarray
    n_E: int
    n_J: int
    eliminated: np.ndarray
    boundary_gram: object
    coupling_gram: object
    mass_J_gram: object
    mass_E_gram: object
    div_gram: object
    curl_gram: object

    @property
    def offsets(self):
        return (0, self.n_E)

    @property
    def size(self):
        return self.n_E + self.n_J

    def split(self, x):
        return x[:self.n_E], x[self.n_E:]


def build_coupled_system(params, E_space, J_space, f1=None, f2=None, g=None, boundary_marker=None,
                         threads=None):
    """Assemble the monolithic matrix and RHS.

    ``f1``, ``f2`` are volume sources ``f(points)``; ``g(points, normals)``
    is the Silver-Mueller boundary data. Returns ``(A, b, blocks)``.
    """
    p = params
    w = p.omega
    n_E, n_J = E_space.n_dofs, J_space.n_dofs
    in_metal = np.zeros(E_space.mesh.n_cells, dtype=bool)
    in_metal[metal_cells(E_space, J_space)] = True
    inv_mu = np.where(in_metal, 1.0 / p.mu1, 1.0 / p.mu2)
    eps = np.where(in_metal, p.eps1, p.eps2)

    curl = assemble_volume_form("curl_curl", E_space, 1.0, threads)
    mass_E = assemble_volume_form("mass_E", E_space, 1.0, threads)
    bnd = assemble_boundary_form(E_space, boundary_marker, 1.0)
    div = assemble_volume_form("div_div", J_space, 1.0, threads)
    mass_J = assemble_volume_form("mass_J", J_space, 1.0, threads)
    mixed = assemble_coupling_form("J_to_E", E_space, J_space, 1.0, threads)
    mixed_t = Triplets(mixed.cols, mixed.rows, mixed.vals)

    # coefficient-weighted copies; entries are emitted in cell order so the
    # per-cell coefficient can be applied entrywise
    nloc_E = E_space.cell_dofs.shape[1] ** 2
    a_ee = Triplets.concat([
        curl.scaled(np.repeat(inv_mu, nloc_E)),
        mass_E.scaled(-w ** 2 * np.repeat(eps, nloc_E)),
        bnd.scaled(-1j * w),
    ])
    a_ej = mixed.scaled(-1j * w)
    a_je = mixed_t.scaled(1j * w * p.omega_p ** 2 * p.eps0)
    a_jj = Triplets.concat([div.scaled(p.beta ** 2), mass_J.scaled(-w * (w + 1j * p.gamma))])

    b_E = assemble_rhs(E_space, f1, "volume", threads=threads)
    if g is not None:
        b_E = b_E + assemble_rhs(E_space, g, "boundary", marker=boundary_marker)
    b_J = -assemble_rhs(J_space, f2, "volume", threads=threads)

    full = Triplets.concat([a_ee, a_ej.shifted(0, n_E), a_je.shifted(n_E, 0), a_jj.shifted(n_E, n_E)])
    rhs = np.concatenate([b_E, b_J])
    eliminated = np.asarray(J_space.essential_dofs, dtype=np.int64) + n_E
    full, rhs = apply_essential_bc(full, rhs, eliminated)
    A = csr_from_triplets(n_E + n_J, n_E + n_J, full)

    csr = csr_from_triplets
    blocks = SystemBlocks(
        A_EE=csr(n_E, n_E, a_ee), A_EJ=csr(n_E, n_J, a_ej), A_JE=csr(n_J, n_E, a_je),
        A_JJ=csr(n_J, n_J, a_jj), b_E=b_E, b_J=b_J, n_E=n_E, n_J=n_J, eliminated=eliminated,
        boundary_gram=csr(n_E, n_E, bnd), coupling_gram=csr(n_E, n_J, mixed),
        mass_J_gram=csr(n_J, n_J, mass_J), mass_E_gram=csr(n_E, n_E, mass_E),
        div_gram=csr(n_J, n_J, div), curl_gram=csr(n_E, n_E, curl),
    )
    return A, rhs, blocks

"""Global H(curl) and H(div) spaces and discrete fields on a tetrahedral mesh."""
import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidArgument
from ..mesh import LOCAL_EDGES, LOCAL_FACES
from .reference import NEDELEC, RAVIART_THOMAS, REF_VERTICES, reference_element

_KIND_ALIASES = {
    "nedelec": NEDELEC, "ned": NEDELEC, "hcurl": NEDELEC,
    "rt": RAVIART_THOMAS, "raviart_thomas": RAVIART_THOMAS, "raviartthomas": RAVIART_THOMAS,
    "hdiv": RAVIART_THOMAS,
}


def _normalize_kind(kind):
    try:
        return _KIND_ALIASES[str(kind).lower()]
    except KeyError:
        raise InvalidArgument(f"unknown space kind {kind!r}") from None


class FESpace:
    """Nedelec (first kind) or Raviart-Thomas space of order 1 or 2.

    Attributes
    ----------
    cell_dofs : (ncells, nloc) global DOF index of each local basis function
    cell_signs : (ncells, nloc) orientation sign of each local basis function.
        Local numbering follows ascending global vertex order, so local and
        global orientations coincide and every sign is +1.
    boundary_dof_mask : (n_dofs,) True for DOFs attached to boundary edges/faces
    essential_dofs : DOFs removed by the n.J = 0 condition (RT only)
    """

    def __init__(self, kind, mesh, order, zero_normal_bc=False):
        self.kind = _normalize_kind(kind)
        if order not in (1, 2):
            raise InvalidArgument(f"unsupported order {order!r}; expected 1 or 2")
        if zero_normal_bc and self.kind != RAVIART_THOMAS:
            raise InvalidArgument("zero_normal_bc only applies to Raviart-Thomas spaces")
        self.mesh = mesh
        self.order = order
        self.element = reference_element(self.kind, order)
        self.zero_normal_bc = bool(zero_normal_bc)
        self._number_dofs()

    def __repr__(self):
        return f"FESpace({self.kind}, order={self.order}, n_dofs={self.n_dofs})"

    def _number_dofs(self):
        mesh, el, r = self.mesh, self.element, self.order
        nc = mesh.n_cells
        cell_dofs = np.empty((nc, el.n_dofs), dtype=np.int64)
        bnd_faces = mesh.boundary_faces
        if self.kind == NEDELEC:
            n_edge_dofs = r * mesh.n_edges
            for e in range(6):
                for k, loc in enumerate(el.entity_dofs[(1, e)]):
                    cell_dofs[:, loc] = r * mesh.cell_edges[:, e] + k
            n = n_edge_dofs
            if r == 2:
                for f in range(4):
                    for k, loc in enumerate(el.entity_dofs[(2, f)]):
                        cell_dofs[:, loc] = n_edge_dofs + 2 * mesh.cell_faces[:, f] + k
                n += 2 * mesh.n_faces
            mask = np.zeros(n, dtype=bool)
            bedges = mesh.find_edges(mesh.faces[bnd_faces][:, [[0, 1], [0, 2], [1, 2]]].reshape(-1, 2))
            for k in range(r):
                mask[r * bedges + k] = True
            if r == 2:
                mask[n_edge_dofs + 2 * bnd_faces] = True
                mask[n_edge_dofs + 2 * bnd_faces + 1] = True
        else:
            nf = r * (r + 1) // 2  # 1 or 3 DOFs per face
            for f in range(4):
                for k, loc in enumerate(el.entity_dofs[(2, f)]):
                    cell_dofs[:, loc] = nf * mesh.cell_faces[:, f] + k
            n = nf * mesh.n_faces
            if r == 2:
                for k, loc in enumerate(el.entity_dofs[(3, 0)]):
                    cell_dofs[:, loc] = n + 3 * np.arange(nc) + k
                n += 3 * nc
            mask = np.zeros(n, dtype=bool)
            for k in range(nf):
                mask[nf * bnd_faces + k] = True
        self.n_dofs = int(n)
        self.cell_dofs = cell_dofs
        self.cell_signs = np.ones(cell_dofs.shape)
        self.boundary_dof_mask = mask
        self.essential_dofs = np.flatnonzero(mask) if self.zero_normal_bc else np.empty(0, dtype=np.int64)
        for a in (cell_dofs, self.cell_signs, mask, self.essential_dofs):
            a.setflags(write=False)

    @property
    def n_free_dofs(self):
        return self.n_dofs - len(self.essential_dofs)

    # ------------------------------------------------------------ evaluation
    def physical_points(self, cells, ref_points):
        origin, jac, _, _ = self.mesh.sorted_geometry
        return origin[cells][:, None, :] + np.einsum("cij,qj->cqi", jac[cells], ref_points)

    def eval_basis(self, cells, ref_points):
        """Physical basis values and curl/div at reference points of ``cells``.

        Returns ``(values, derivs)``: values (nc, nq, nloc, 3); derivs is the
        curl (nc, nq, nloc, 3) for Nedelec and the divergence (nc, nq, nloc)
        for Raviart-Thomas.
        """
        cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
        ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
        el = self.element
        dhat = el.curls(ref_points) if self.kind == NEDELEC else el.divergences(ref_points)
        return self._transform(cells, el.values(ref_points)[None], dhat[None])

    def _transform(self, cells, vhat, dhat):
        _, jac, det, jinv = self.mesh.sorted_geometry
        signs = self.cell_signs[cells][:, None, :]
        J, d = jac[cells], det[cells]
        if self.kind == NEDELEC:
            # covariant Piola: phi = J^{-T} phihat, curl phi = J curlhat / det
            vals = np.einsum("cji,cqbj->cqbi", jinv[cells], vhat)
            curls = np.einsum("cij,cqbj->cqbi", J, dhat) / d[:, None, None, None]
            return vals * signs[..., None], curls * signs[..., None]
        # contravariant Piola: phi = J phihat / det, div phi = divhat / det
        vals = np.einsum("cij,cqbj->cqbi", J, vhat) / d[:, None, None, None]
        divs = dhat / d[:, None, None]
        return vals * signs[..., None], divs * signs

    def pull_back(self, cells, values):
        """Map physical vector samples (nc, nq, 3) to the reference cell."""
        _, jac, det, jinv = self.mesh.sorted_geometry
        if self.kind == NEDELEC:
            return np.einsum("cji,cqj->cqi", jac[cells], values)
        return det[cells][:, None, None] * np.einsum("cij,cqj->cqi", jinv[cells], values)

    # ------------------------------------------------------------ face data
    def face_reference_points(self, local_face, tri_points):
        """Reference-cell coordinates of triangle points on local face ``local_face``."""
        a, b, c = LOCAL_FACES[local_face]
        tri_points = np.atleast_2d(tri_points)
        return (REF_VERTICES[a] + tri_points[:, :1] * (REF_VERTICES[b] - REF_VERTICES[a])
                + tri_points[:, 1:] * (REF_VERTICES[c] - REF_VERTICES[a]))

    def face_basis(self, faces, tri_points, side=0):
        """Basis values on mesh faces seen from cell ``face_cells[:, side]``.

        Returns a dict with ``cells``, ``dofs`` (nf, nloc), ``values``
        (nf, nq, nloc, 3), ``points`` (nf, nq, 3), ``normals`` (nf, 3; away
        from ``face_cells[:, 0]``) and ``areas`` (nf,).
        """
        mesh = self.mesh
        faces = np.atleast_1d(np.asarray(faces, dtype=np.int64))
        cells = mesh.face_cells[faces, side]
        if np.any(cells < 0):
            raise InvalidArgument("requested side has no cell for some faces")
        local = np.argmax(mesh.cell_faces[cells] == faces[:, None], axis=1)
        nq = len(np.atleast_2d(tri_points))
        values = np.empty((len(faces), nq, self.element.n_dofs, 3))
        points = np.empty((len(faces), nq, 3))
        for lf in range(4):
            sel = np.flatnonzero(local == lf)
            if len(sel) == 0:
                continue
            ref = self.face_reference_points(lf, tri_points)
            v, _ = self.eval_basis(cells[sel], ref)
            values[sel] = v
            points[sel] = self.physical_points(cells[sel], ref)
        normals, areas = mesh.face_geometry(faces)
        return {"cells": cells, "dofs": self.cell_dofs[cells], "values": values,
                "points": points, "normals": normals, "areas": areas}

    def boundary_tangential_trace(self, face, tri_points):
        """Tangential trace u_T = (n x u) x n of every local basis function on a boundary face.

        Returns ``(dofs, traces)`` with traces of shape (nq, nloc, 3).
        """
        if not 0 <= face < self.mesh.n_faces or self.mesh.face_cells[face, 1] >= 0:
            raise InvalidArgument(f"face {face} is not a boundary face")
        data = self.face_basis([face], tri_points)
        n = data["normals"][0]
        return data["dofs"][0], tangential(data["values"][0], n)

    # -------------------------------------------------------- interpolation
    def interpolate(self, field):
        """Canonical interpolant of a vectorized callable ``field(points) -> (n, 3)``."""
        el = self.element
        cells = np.arange(self.mesh.n_cells)
        x = self.physical_points(cells, el.dof_points)
        vals = np.asarray(field(x.reshape(-1, 3))).reshape(x.shape)
        dtype = np.result_type(vals.dtype, np.float64)
        local = el.apply_dofs(self.pull_back(cells, vals.astype(dtype)))
        coef = np.zeros(self.n_dofs, dtype=np.complex128)
        coef[self.cell_dofs] = local * self.cell_signs
        return FEField(self, coef)


def tangential(values, normal):
    """(n x u) x n = u - (u.n) n, broadcasting over leading axes."""
    normal = np.asarray(normal)
    return values - np.einsum("...i,...i->...", values, normal)[..., None] * normal


def build_space(kind, mesh, order, zero_normal_bc=False):
    return FESpace(kind, mesh, order, zero_normal_bc)


def eval_basis(space, cell, ref_points):
    return space.eval_basis(cell, ref_points)


def interpolate(space, field):
    return space.interpolate(field)


def boundary_tangential_trace(space, face, tri_points):
    return space.boundary_tangential_trace(face, tri_points)


class FEField:
    """Coefficient vector over an :class:`FESpace`."""

    def __init__(self, space, coefficients):
        coefficients = np.asarray(coefficients, dtype=np.complex128)
        if coefficients.shape != (space.n_dofs,):
            raise InvalidArgument(
                f"coefficient vector has shape {coefficients.shape}, space has {space.n_dofs} DOFs"
            )
        self.space = space
        self.coefficients = coefficients

    def freeze(self):
        self.coefficients.setflags(write=False)
        return self

    def evaluate_cells(self, cells, ref_points):
        """Field values (nc, nq, 3) and curl (nc, nq, 3) or div (nc, nq)."""
        cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
        vals, ders = self.space.eval_basis(cells, ref_points)
        c = self.coefficients[self.space.cell_dofs[cells]]
        v = np.einsum("cqbi,cb->cqi", vals, c)
        if ders.ndim == 4:
            return v, np.einsum("cqbi,cb->cqi", ders, c)
        return v, np.einsum("cqb,cb->cq", ders, c)

    def cell_values(self):
        """Values and derivatives at every cell centroid."""
        centre = np.full((1, 3), 0.25)
        v, d = self.evaluate_cells(np.arange(self.space.mesh.n_cells), centre)
        return v[:, 0], d[:, 0]

    def locate(self, points, tol=1e-12):
        """Index of a cell containing each point (-1 when outside the mesh)."""
        mesh = self.space.mesh
        points = np.atleast_2d(points)
        origin, _, _, jinv = mesh.sorted_geometry
        tree = cKDTree(mesh.cell_centroids)
        k = min(32, mesh.n_cells)
        _, cand = tree.query(points, k=k)
        cand = np.asarray(cand).reshape(len(points), k)
        out = np.full(len(points), -1, dtype=np.int64)
        for j in range(k):
            c = cand[:, j]
            xi = np.einsum("pij,pj->pi", jinv[c], points - origin[c])
            inside = (xi.min(axis=1) >= -tol) & (xi.sum(axis=1) <= 1 + tol) & (out < 0)
            out[inside] = c[inside]
        for p in np.flatnonzero(out < 0):
            xi = np.einsum("cij,cj->ci", jinv, points[p] - origin)
            hit = np.flatnonzero((xi.min(axis=1) >= -tol) & (xi.sum(axis=1) <= 1 + tol))
            if len(hit):
                out[p] = hit[0]
        return out

    def evaluate(self, points):
        """Values and curl/div at arbitrary physical points inside the mesh."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        cells = self.locate(points)
        if np.any(cells < 0):
            raise InvalidArgument("some points lie outside the mesh")
        origin, _, _, jinv = self.space.mesh.sorted_geometry
        xi = np.einsum("pij,pj->pi", jinv[cells], points - origin[cells])
        el = self.space.element
        dhat = el.curls(xi) if self.space.kind == NEDELEC else el.divergences(xi)
        vals, ders = self.space._transform(cells, el.values(xi)[:, None], dhat[:, None])
        c = self.coefficients[self.space.cell_dofs[cells]]
        v = np.einsum("pbi,pb->pi", vals[:, 0], c)
        if ders.ndim == 4:
            return v, np.einsum("pbi,pb->pi", ders[:, 0], c)
        return v, np.einsum("pb,pb->p", ders[:, 0], c)

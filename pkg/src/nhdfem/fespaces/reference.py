"""Reference-element bases for first-kind Nedelec and Raviart-Thomas elements.

The local spaces on the reference tetrahedron are

    Nedelec order r:        (P_{r-1})^3  +  { x cross q : q in (homogeneous P_{r-1})^3 }
    Raviart-Thomas order r: (P_{r-1})^3  +  x * (homogeneous P_{r-1})

and the basis is the dual basis of the degrees of freedom below, obtained by
inverting the DOF/spanning-set matrix. Vertex numbering of the reference
cell is the ascending global numbering of the physical cell, so each edge
and face functional here is already the globally oriented one.

Nedelec DOFs: edge moments  int_0^1 u(a + s(b-a)).(b-a) q(s) ds,  q in {1, 2s-1}
              face moments  int_T u(a + s t1 + t t2).t_k  ds dt   (r = 2)
RT DOFs:      face moments  int_T u(a + s t1 + t t2).(t1 x t2) q ds dt,
              q in {1} (r = 1) or the face barycentrics (r = 2)
              cell moments  int_K u.e_k                              (r = 2)
"""
from functools import lru_cache
from itertools import product

import numpy as np

from ..errors import InvalidArgument
from ..mesh import LOCAL_EDGES, LOCAL_FACES
from ..quadrature import gauss_interval, tet_rule, tri_rule

NEDELEC = "nedelec"
RAVIART_THOMAS = "rt"

REF_VERTICES = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

_MONOMIALS = [m for d in range(3) for m in product(range(d + 1), repeat=3) if sum(m) == d]
_MONO_INDEX = {m: i for i, m in enumerate(_MONOMIALS)}
_NMONO = len(_MONOMIALS)
_EXPONENTS = np.array(_MONOMIALS)


def _monomial_values(points):
    pts = np.asarray(points, dtype=float)
    return np.prod(pts[:, None, :] ** _EXPONENTS[None, :, :], axis=2)


def _monomial_gradients(points):
    """(npts, nmono, 3) partial derivatives of the monomials."""
    pts = np.asarray(points, dtype=float)
    out = np.zeros((len(pts), _NMONO, 3))
    for k in range(3):
        e = _EXPONENTS.copy()
        coef = e[:, k].astype(float)
        e[:, k] = np.maximum(e[:, k] - 1, 0)
        out[:, :, k] = coef * np.prod(pts[:, None, :] ** e[None, :, :], axis=2)
    return out


def _vec(component, mono, scale=1.0):
    c = np.zeros((3, _NMONO))
    c[component, _MONO_INDEX[mono]] = scale
    return c


def _homogeneous(degree):
    return [m for m in _MONOMIALS if sum(m) == degree]


def _upto(degree):
    return [m for m in _MONOMIALS if sum(m) <= degree]


def _shift(mono, axis):
    m = list(mono)
    m[axis] += 1
    return tuple(m)


def _spanning_set(kind, order):
    span = [_vec(k, m) for m in _upto(order - 1) for k in range(3)]
    if kind == NEDELEC:
        # x cross (q e_k) for homogeneous q of degree order-1
        for m in _homogeneous(order - 1):
            for k in range(3):
                c = np.zeros((3, _NMONO))
                # x cross e_k = (0, z, -y), (-z, 0, x), (y, -x, 0)
                a, b = (k + 1) % 3, (k + 2) % 3
                c[a, _MONO_INDEX[_shift(m, b)]] += 1.0
                c[b, _MONO_INDEX[_shift(m, a)]] -= 1.0
                span.append(c)
    else:
        for m in _homogeneous(order - 1):
            c = np.zeros((3, _NMONO))
            for k in range(3):
                c[k, _MONO_INDEX[_shift(m, k)]] = 1.0
            span.append(c)
    return np.array(span)


class ReferenceElement:
    """Dual basis on the reference tetrahedron.

    ``coeffs`` has shape (ndofs, 3, nmono). DOF functionals are stored as a
    point set ``dof_points`` and weight vectors ``dof_weights`` of shape
    (ndofs, npoints, 3) so that dof_i(u) = sum_q dof_weights[i, q] . u(dof_points[q]).
    """

    def __init__(self, kind, order):
        if kind not in (NEDELEC, RAVIART_THOMAS):
            raise InvalidArgument(f"unknown element kind {kind!r}")
        if order not in (1, 2):
            raise InvalidArgument(f"element order must be 1 or 2, got {order!r}")
        self.kind = kind
        self.order = order
        self._build_functionals()
        span = _spanning_set(kind, order)
        vals = np.einsum("scm,pm->psc", span, _monomial_values(self.dof_points))
        dofmat = np.einsum("ipc,psc->is", self.dof_weights, vals)
        inv = np.linalg.pinv(dofmat)
        self.coeffs = np.einsum("si,scm->icm", inv, span)
        self.n_dofs = self.coeffs.shape[0]

    def _build_functionals(self):
        pts, rows = [], []
        entity_dofs = {}
        r = self.order

        def add(points, weights):
            start = sum(len(p) for p in pts)
            pts.append(points)
            rows.append((start, weights))

        if self.kind == NEDELEC:
            s, w = gauss_interval(4)
            for e, (a, b) in enumerate(LOCAL_EDGES):
                t = REF_VERTICES[b] - REF_VERTICES[a]
                x = REF_VERTICES[a] + s[:, None] * t
                dofs = []
                for q in ([1.0 + 0 * s, 2 * s - 1] if r == 2 else [1.0 + 0 * s]):
                    dofs.append(len(rows))
                    add(x, (w * q)[:, None] * t)
                entity_dofs[(1, e)] = dofs
            if r == 2:
                rule = tri_rule(6)
                for f, (a, b, c) in enumerate(LOCAL_FACES):
                    t1 = REF_VERTICES[b] - REF_VERTICES[a]
                    t2 = REF_VERTICES[c] - REF_VERTICES[a]
                    x = REF_VERTICES[a] + rule.points[:, :1] * t1 + rule.points[:, 1:] * t2
                    dofs = []
                    for t in (t1, t2):
                        dofs.append(len(rows))
                        add(x, rule.weights[:, None] * t)
                    entity_dofs[(2, f)] = dofs
        else:
            rule = tri_rule(6)
            s, t = rule.points[:, 0], rule.points[:, 1]
            for f, (a, b, c) in enumerate(LOCAL_FACES):
                t1 = REF_VERTICES[b] - REF_VERTICES[a]
                t2 = REF_VERTICES[c] - REF_VERTICES[a]
                nrm = np.cross(t1, t2)
                x = REF_VERTICES[a] + s[:, None] * t1 + t[:, None] * t2
                dofs = []
                for q in ([1 - s - t, s, t] if r == 2 else [1.0 + 0 * s]):
                    dofs.append(len(rows))
                    add(x, (rule.weights * q)[:, None] * nrm)
                entity_dofs[(2, f)] = dofs
            if r == 2:
                cell = tet_rule(6)
                dofs = []
                for k in range(3):
                    dofs.append(len(rows))
                    wv = np.zeros((len(cell.weights), 3))
                    wv[:, k] = cell.weights
                    add(cell.points, wv)
                entity_dofs[(3, 0)] = dofs

        self.dof_points = np.vstack(pts)
        weights = np.zeros((len(rows), len(self.dof_points), 3))
        for i, (start, wv) in enumerate(rows):
            weights[i, start:start + len(wv)] = wv
        self.dof_weights = weights
        self.entity_dofs = entity_dofs

    # ------------------------------------------------------------ evaluation
    def values(self, points):
        """(npts, ndofs, 3) basis values."""
        return np.einsum("icm,pm->pic", self.coeffs, _monomial_values(points))

    def _jacobians(self, points):
        # d phi_c / d x_k  -> (npts, ndofs, 3 comp, 3 deriv)
        return np.einsum("icm,pmk->pick", self.coeffs, _monomial_gradients(points))

    def curls(self, points):
        g = self._jacobians(points)
        return np.stack(
            [g[..., 2, 1] - g[..., 1, 2], g[..., 0, 2] - g[..., 2, 0], g[..., 1, 0] - g[..., 0, 1]],
            axis=-1,
        )

    def divergences(self, points):
        g = self._jacobians(points)
        return g[..., 0, 0] + g[..., 1, 1] + g[..., 2, 2]

    def apply_dofs(self, pulled_back):
        """DOF values from a pulled-back field sampled at ``dof_points``.

        ``pulled_back`` has shape (..., npoints, 3); result (..., ndofs).
        """
        return np.einsum("iqc,...qc->...i", self.dof_weights, pulled_back)


@lru_cache(maxsize=None)
def reference_element(kind, order):
    return ReferenceElement(kind, order)

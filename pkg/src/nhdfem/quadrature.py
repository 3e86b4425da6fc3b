"""Symmetric quadrature rules on the reference triangle and tetrahedron.

Reference triangle: (0,0), (1,0), (0,1), area 1/2.
Reference tetrahedron: (0,0,0), (1,0,0), (0,1,0), (0,0,1), volume 1/6.

Rules are stored as symmetry orbits in barycentric coordinates and expanded
once at import. All weights are positive and all points interior.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .errors import InvalidArgument

MAX_DEGREE = 6


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __len__(self):
        return len(self.weights)


# (degree, [(orbit barycentric generator, weight), ...])
_TET_TABLE = [
    (1, [((0.25, 0.25, 0.25, 0.25), 1.0 / 6.0)]),
    (2, [(("S31", 0.1381966011250105), 1.0 / 24.0)]),
    (3, [(("S31", 0.32969017502597686), 0.019257684832816133),
         (("S31", 0.11664072349488852), 0.02240898183385053)]),
    (5, [(("S31", 0.3108859192633006), 0.01878132095300263),
         (("S31", 0.09273525031089119), 0.012248840519393655),
         (("S22", 0.04550370412564973), 0.0070910034628469225)]),
    (6, [(("S31", 0.2146028712591509), 0.006653791709694688),
         (("S31", 0.04067395853461156), 0.0016795351758867858),
         (("S31", 0.32233789014227565), 0.009226196923942397),
         (("S211", 0.06366100187501746, 0.6030056647916492), 0.008035714285714264)]),
]

_TRI_TABLE = [
    (1, [((1 / 3, 1 / 3, 1 / 3), 0.5)]),
    (2, [(("S21", 1.0 / 6.0), 1.0 / 6.0)]),
    (3, [(("S21", 0.1570962793451773), 0.12816206870006858),
         (("S21", 0.4631586367962149), 0.0385045979665981)]),
    (4, [(("S21", 0.09157621350977074), 0.054975871827660935),
         (("S21", 0.4459484909159649), 0.11169079483900574)]),
    (5, [((1 / 3, 1 / 3, 1 / 3), 0.11250000000000114),
         (("S21", 0.4701420641051155), 0.0661970763942526),
         (("S21", 0.10128650732345648), 0.06296959027241367)]),
    (6, [(("S21", 0.0630890144915007), 0.025422453185102376),
         (("S21", 0.24928674517091617), 0.05839313786318466),
         (("S111", 0.31035245103377956, 0.6365024991213992), 0.04142553780918982)]),
]


def _generator(orbit):
    kind = orbit[0]
    if not isinstance(kind, str):
        return orbit
    if kind == "S31":
        a = orbit[1]
        return (a, a, a, 1.0 - 3.0 * a)
    if kind == "S22":
        a = orbit[1]
        return (a, a, 0.5 - a, 0.5 - a)
    if kind == "S211":
        a, b = orbit[1:]
        return (a, a, b, 1.0 - 2.0 * a - b)
    if kind == "S21":
        a = orbit[1]
        return (a, a, 1.0 - 2.0 * a)
    if kind == "S111":
        a, b = orbit[1:]
        return (a, b, 1.0 - a - b)
    raise KeyError(kind)


def _expand(table_row):
    pts, wts = [], []
    for orbit, w in table_row:
        gen = _generator(orbit)
        seen = []
        for perm in sorted(set(permutations(range(len(gen))))):
            bary = tuple(gen[i] for i in perm)
            if not any(np.allclose(bary, s, rtol=0, atol=1e-14) for s in seen):
                seen.append(bary)
        for bary in seen:
            pts.append(bary[1:])
            wts.append(w)
    return np.array(pts, dtype=float), np.array(wts, dtype=float)


def _lookup(table, degree, name):
    if not isinstance(degree, (int, np.integer)) or degree < 0 or degree > MAX_DEGREE:
        raise InvalidArgument(f"{name}: degree must be an integer in [0, {MAX_DEGREE}], got {degree!r}")
    for exact, row in table:
        if exact >= degree:
            pts, wts = _expand(row)
            pts.setflags(write=False)
            wts.setflags(write=False)
            return QuadratureRule(pts, wts, exact)
    raise AssertionError("unreachable")


@lru_cache(maxsize=None)
def tet_rule(degree):
    """Rule on the reference tetrahedron exact for total degree ``degree``."""
    return _lookup(_TET_TABLE, degree, "tet_rule")


@lru_cache(maxsize=None)
def tri_rule(degree):
    """Rule on the reference triangle exact for total degree ``degree``."""
    return _lookup(_TRI_TABLE, degree, "tri_rule")


def gauss_interval(npoints):
    """Gauss-Legendre points and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w

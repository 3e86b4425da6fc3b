"""Solve moment equations for fully symmetric simplex rules.

Offline helper: the tables in ``nhdfem/quadrature.py`` were produced with it.
"""
import itertools
import math

import numpy as np
from scipy.optimize import least_squares


def tet_orbit(kind, p):
    if kind == "S4":
        base = [(0.25, 0.25, 0.25, 0.25)]
    elif kind == "S31":
        a = p[0]
        base = [(a, a, a, 1 - 3 * a)]
    elif kind == "S22":
        a = p[0]
        base = [(a, a, 0.5 - a, 0.5 - a)]
    elif kind == "S211":
        a, b = p
        base = [(a, a, b, 1 - 2 * a - b)]
    pts = set()
    for b in base:
        for perm in itertools.permutations(b):
            pts.add(tuple(round(v, 15) for v in perm))
    return sorted(pts)


def tri_orbit(kind, p):
    if kind == "S3":
        base = (1 / 3, 1 / 3, 1 / 3)
    elif kind == "S21":
        base = (p[0], p[0], 1 - 2 * p[0])
    elif kind == "S111":
        base = (p[0], p[1], 1 - p[0] - p[1])
    return sorted({tuple(round(v, 15) for v in perm) for perm in itertools.permutations(base)})


NPAR = {"S4": 0, "S31": 1, "S22": 1, "S211": 2, "S3": 0, "S21": 1, "S111": 2}


def exact(powers):
    dim = len(powers)
    return math.prod(math.factorial(k) for k in powers) / math.factorial(sum(powers) + dim)


def solve(orbits, degree, dim, seeds=2000, start=None):
    """Search for a rule from random seeds, or polish ``start`` in place."""
    orbit_fn = tet_orbit if dim == 3 else tri_orbit
    monos = [m for m in itertools.product(range(degree + 1), repeat=dim) if sum(m) <= degree]
    target = np.array([exact(m) for m in monos])
    npar = sum(NPAR[o] for o in orbits)
    rng = np.random.default_rng(0)

    def unpack(x):
        pts, wts = [], []
        k = 0
        for i, o in enumerate(orbits):
            par = x[k:k + NPAR[o]]
            k += NPAR[o]
            if o == "S31":
                a = par[0]; b = (a, a, a, 1 - 3 * a)
            elif o == "S22":
                a = par[0]; b = (a, a, 0.5 - a, 0.5 - a)
            elif o == "S211":
                a, c = par; b = (a, a, c, 1 - 2 * a - c)
            elif o == "S21":
                b = (par[0], par[0], 1 - 2 * par[0])
            elif o == "S111":
                b = (par[0], par[1], 1 - par[0] - par[1])
            elif o == "S4":
                b = (0.25,) * 4
            else:
                b = (1 / 3,) * 3
            perms = sorted(set(itertools.permutations(range(len(b)))))
            seen = []
            for pm in perms:
                q = tuple(b[j] for j in pm)
                if not any(np.allclose(q, s, atol=1e-12) for s in seen):
                    seen.append(q)
            for q in seen:
                pts.append(q[1:])  # reference coords = barycentric 1..dim
                wts.append(x[npar + i])
        return np.array(pts), np.array(wts)

    def resid(x):
        pts, wts = unpack(x)
        vals = np.array([np.sum(wts * np.prod(pts ** np.array(m), axis=1)) for m in monos])
        return vals / target - 1.0  # relative, so small high-order moments count fully

    if start is not None:
        r = least_squares(resid, np.asarray(start, float), xtol=2.3e-16, ftol=2.3e-16, gtol=2.3e-16,
                          method="lm", max_nfev=5000)
        return unpack(r.x), r.x

    for _ in range(seeds):
        x0 = np.concatenate([rng.uniform(0.02, 0.45, npar), rng.uniform(0.001, 0.05, len(orbits))])
        try:
            r = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        except Exception:
            continue
        pts, wts = unpack(r.x)
        bary = np.column_stack([1 - pts.sum(axis=1), pts])
        if np.max(np.abs(r.fun)) < 1e-14 and np.all(wts > 0) and np.all(bary > 0):
            return unpack(r.x), r.x
    raise RuntimeError(f"no rule for {orbits}")


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    specs = [
        (3, 3, ["S31", "S31"]),
        (3, 5, ["S31", "S31", "S22"]),
        (3, 6, ["S31", "S31", "S31", "S211"]),
        (2, 3, ["S21", "S21"]),
        (2, 4, ["S21", "S21"]),
        (2, 5, ["S3", "S21", "S21"]),
        (2, 6, ["S21", "S21", "S111"]),
    ]
    for dim, deg, orbits in specs:
        _, x = solve(orbits, deg, dim)
        # second pass: Levenberg-Marquardt on relative residuals to full precision
        _, x = solve(orbits, deg, dim, start=x)
        print(dim, deg, orbits, repr(x.tolist()))

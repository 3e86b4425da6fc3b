"""Compare the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N] [--n BOX]

Inputs come from a real coupled system on an n x n x n box (order 2 for
the cell kernels, order 1 for the sparse ones), so sizes match what the
solver actually sees. Each kernel result is checked for agreement before
it is timed.
"""
import argparse
import timeit

import numpy as np

from nhdfem import _kernels_py as py
from nhdfem.assembly import CHUNK, build_coupled_system
from nhdfem.fespaces import FESpace
from nhdfem.mesh import generate_box_mesh
from nhdfem.model import ManufacturedCase
from nhdfem.quadrature import tet_rule

try:
    from nhdfem import _kernels as cy
except ImportError:
    cy = None


def cell_inputs(n):
    mesh = generate_box_mesh((n, n, n))
    sp = FESpace("nedelec", mesh, 2)
    rule = tet_rule(5)
    cells = np.arange(min(CHUNK, mesh.n_cells))
    vals, _ = sp.eval_basis(cells, rule.points)
    vals = np.ascontiguousarray(vals)
    w = np.ascontiguousarray(np.abs(mesh.sorted_geometry[2][cells])[:, None] * rule.weights)
    f = np.ascontiguousarray(np.ones(vals.shape[:2] + (3,), complex))
    return vals, w, f


def sparse_inputs(n):
    case = ManufacturedCase()
    mesh = generate_box_mesh((n, n, n))
    E, J = FESpace("nedelec", mesh, 1), FESpace("rt", mesh, 1, zero_normal_bc=True)
    A, _, _ = build_coupled_system(case.params, E, J, case.f1, case.f2, case.g)
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    return A, rows


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n", type=int, default=6, help="box subdivisions")
    args = parser.parse_args()
    if cy is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    vals, w, f = cell_inputs(args.n)
    A, rows = sparse_inputs(args.n)
    x = np.random.default_rng(0).normal(size=A.shape[0]) + 0j
    lu, diag = cy.ilu0_factor(A.indptr, A.indices, A.data)
    cases = {
        "weighted_gram": (lambda k: k.weighted_gram(vals, vals, w)),
        "weighted_load": (lambda k: k.weighted_load(f, vals, w)),
        "coo_to_csr": (lambda k: k.coo_to_csr(A.shape[0], rows, A.indices, A.data)),
        "csr_matvec": (lambda k: k.csr_matvec(A.indptr, A.indices, A.data, x)),
        "ilu0_factor": (lambda k: k.ilu0_factor(A.indptr, A.indices, A.data)),
        "ilu0_solve": (lambda k: k.ilu0_solve(A.indptr, A.indices, lu, diag, x)),
    }
    print(f"cells per chunk {vals.shape[0]}, local size {vals.shape[2]}, "
          f"sparse n {A.shape[0]}, nnz {A.nnz}")
    print(f"{'kernel':<14} {'cython [ms]':>12} {'python [ms]':>12} {'speedup':>9}")
    for name, call in cases.items():
        a, b = call(cy), call(py)
        for u, v in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.allclose(u, v, rtol=1e-10, atol=1e-12), name
        t_cy = bench(lambda: call(cy), args.repeat)
        t_py = bench(lambda: call(py), 1 if name.startswith("ilu0") else args.repeat)
        print(f"{name:<14} {1e3 * t_cy:12.3f} {1e3 * t_py:12.3f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()

import importlib

import numpy as np
import pytest

from nhdfem import _kernels_py as py
from nhdfem import kernels

try:
    from nhdfem import _kernels as cy
except ImportError:  # extension not built
    cy = None

needs_cy = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def _random_csr(n, seed):
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, n, 5 * n)
    cols = rng.integers(0, n, 5 * n)
    rows = np.concatenate([rows, np.arange(n)]).astype(np.int64)
    cols = np.concatenate([cols, np.arange(n)]).astype(np.int64)
    vals = rng.normal(size=len(rows)) + 1j * rng.normal(size=len(rows))
    vals[-n:] += 10
    return rows, cols, vals


@needs_cy
def test_gram_and_load_parity():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(7, 11, 6, 3)), rng.normal(size=(7, 11, 5, 3))
    w = rng.random((7, 11))
    np.testing.assert_allclose(cy.weighted_gram(a, b, w), py.weighted_gram(a, b, w), atol=1e-13)
    f = rng.normal(size=(7, 11, 3)) + 1j * rng.normal(size=(7, 11, 3))
    np.testing.assert_allclose(cy.weighted_load(f, a, w), py.weighted_load(f, a, w), atol=1e-13)


@needs_cy
def test_sparse_kernel_parity():
    n = 40
    rows, cols, vals = _random_csr(n, 1)
    A = cy.coo_to_csr(n, rows, cols, vals)
    B = py.coo_to_csr(n, rows, cols, vals)
    for u, v in zip(A, B):
        np.testing.assert_allclose(u, v, atol=1e-14)
    indptr, indices, data = B
    x = np.random.default_rng(2).normal(size=n) + 0j
    np.testing.assert_allclose(cy.csr_matvec(indptr, indices, data, x),
                               py.csr_matvec(indptr, indices, data, x), atol=1e-13)
    lu_c, d_c = cy.ilu0_factor(indptr, indices, data)
    lu_p, d_p = py.ilu0_factor(indptr, indices, data)
    np.testing.assert_allclose(lu_c, lu_p, atol=1e-12)
    np.testing.assert_allclose(cy.ilu0_solve(indptr, indices, lu_c, d_c, x),
                               py.ilu0_solve(indptr, indices, lu_p, d_p, x), atol=1e-12)


def test_backend_selection(monkeypatch):
    try:
        monkeypatch.setenv("NHDFEM_PURE_PYTHON", "1")
        assert importlib.reload(kernels).BACKEND == "python"
        monkeypatch.delenv("NHDFEM_PURE_PYTHON")
        assert importlib.reload(kernels).BACKEND == ("cython" if cy is not None else "python")
    finally:
        importlib.reload(kernels)


@pytest.mark.parametrize("value,expected", [(None, 1), ("4", 4), ("0", 1), ("lots", 1)])
def test_thread_count(monkeypatch, value, expected):
    if value is None:
        monkeypatch.delenv("NHDFEM_NUM_THREADS", raising=False)
    else:
        monkeypatch.setenv("NHDFEM_NUM_THREADS", value)
    assert kernels.thread_count() == expected

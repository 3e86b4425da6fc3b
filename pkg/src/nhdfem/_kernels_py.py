"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def weighted_gram(test, trial, w):
    return np.einsum("cq,cqid,cqjd->cij", w, test, trial, optimize=True)


def weighted_load(f, test, w):
    return np.einsum("cq,cqd,cqid->ci", w, f, test, optimize=True)


def coo_to_csr(nrows, rows, cols, vals):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.complex128)
    order = np.lexsort((cols, rows))
    r, c, v = rows[order], cols[order], vals[order]
    if len(r) == 0:
        return np.zeros(nrows + 1, dtype=np.int64), np.empty(0, np.int64), np.empty(0, np.complex128)
    first = np.ones(len(r), dtype=bool)
    first[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.flatnonzero(first)
    data = np.add.reduceat(v, starts)
    indices = c[starts]
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(indptr, r[starts] + 1, 1)
    return np.cumsum(indptr), indices, data


def csr_matvec(indptr, indices, data, x):
    n = len(indptr) - 1
    prod = data * np.asarray(x)[indices]
    row = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(row, weights=prod.real, minlength=n) + 1j * np.bincount(
        row, weights=prod.imag, minlength=n
    )


def ilu0_factor(indptr, indices, data):
    n = len(indptr) - 1
    lu = np.array(data, dtype=np.complex128, copy=True)
    diag = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        hit = np.flatnonzero(indices[indptr[i]:indptr[i + 1]] == i)
        if len(hit) == 0:
            raise ZeroDivisionError(f"ILU(0): missing diagonal in row {i}")
        diag[i] = indptr[i] + hit[0]
    for i in range(n):
        pos = {int(indices[p]): p for p in range(indptr[i], indptr[i + 1])}
        for pk in range(indptr[i], diag[i]):
            k = indices[pk]
            if lu[diag[k]] == 0:
                raise ZeroDivisionError(f"ILU(0): zero pivot in row {k}")
            mult = lu[pk] / lu[diag[k]]
            lu[pk] = mult
            for pj in range(diag[k] + 1, indptr[k + 1]):
                p = pos.get(int(indices[pj]))
                if p is not None:
                    lu[p] = lu[p] - mult * lu[pj]
        if lu[diag[i]] == 0:
            raise ZeroDivisionError(f"ILU(0): zero pivot in row {i}")
    return lu, diag


def ilu0_solve(indptr, indices, lu, diag, b):
    n = len(indptr) - 1
    x = np.array(b, dtype=np.complex128, copy=True)
    for i in range(n):
        lo = indptr[i]
        x[i] -= np.dot(lu[lo:diag[i]], x[indices[lo:diag[i]]])
    for i in range(n - 1, -1, -1):
        hi = indptr[i + 1]
        s = x[i] - np.dot(lu[diag[i] + 1:hi], x[indices[diag[i] + 1:hi]])
        x[i] = s / lu[diag[i]]
    return x

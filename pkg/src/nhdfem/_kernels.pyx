# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: element Gram matrices, load vectors, CSR build,
CSR matvec, and ILU(0).

Signatures and results match ``_kernels_py`` exactly; that module is the
fallback when this extension is not built.
"""
import numpy as np
cimport numpy as cnp

ctypedef double complex cplx

cnp.import_array()


def weighted_gram(const double[:, :, :, ::1] test,
                  const double[:, :, :, ::1] trial,
                  const double[:, ::1] w):
    cdef Py_ssize_t nc = test.shape[0], nq = test.shape[1]
    cdef Py_ssize_t ni = test.shape[2], nj = trial.shape[2], nd = test.shape[3]
    cdef Py_ssize_t c, q, i, j, d
    cdef double s, wq
    out_arr = np.zeros((nc, ni, nj), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for c in range(nc):
            for q in range(nq):
                wq = w[c, q]
                for i in range(ni):
                    for j in range(nj):
                        s = 0.0
                        for d in range(nd):
                            s = s + test[c, q, i, d] * trial[c, q, j, d]
                        out[c, i, j] += wq * s
    return out_arr


def weighted_load(const cplx[:, :, ::1] f,
                  const double[:, :, :, ::1] test,
                  const double[:, ::1] w):
    cdef Py_ssize_t nc = test.shape[0], nq = test.shape[1]
    cdef Py_ssize_t ni = test.shape[2], nd = test.shape[3]
    cdef Py_ssize_t c, q, i, d
    cdef cplx s
    out_arr = np.zeros((nc, ni), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    with nogil:
        for c in range(nc):
            for q in range(nq):
                for i in range(ni):
                    s = 0.0
                    for d in range(nd):
                        s = s + f[c, q, d] * test[c, q, i, d]
                    out[c, i] += w[c, q] * s
    return out_arr


def coo_to_csr(Py_ssize_t nrows, const cnp.int64_t[::1] rows,
               const cnp.int64_t[::1] cols, const cplx[::1] vals):
    cdef Py_ssize_t nnz_in = rows.shape[0]
    cdef Py_ssize_t k, r, p, start, stop, a, b, pos
    cdef cnp.int64_t key
    cdef cplx v
    counts_arr = np.zeros(nrows + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    for k in range(nnz_in):
        counts[rows[k] + 1] += 1
    for r in range(nrows):
        counts[r + 1] += counts[r]
    # stable bucket by row, then stable insertion sort by column within rows
    fill_arr = counts_arr[:-1].copy()
    cdef cnp.int64_t[::1] fill = fill_arr
    tcol_arr = np.empty(nnz_in, dtype=np.int64)
    tval_arr = np.empty(nnz_in, dtype=np.complex128)
    cdef cnp.int64_t[::1] tcol = tcol_arr
    cdef cplx[::1] tval = tval_arr
    for k in range(nnz_in):
        r = rows[k]
        tcol[fill[r]] = cols[k]
        tval[fill[r]] = vals[k]
        fill[r] += 1
    indptr_arr = np.zeros(nrows + 1, dtype=np.int64)
    indices_arr = np.empty(nnz_in, dtype=np.int64)
    data_arr = np.empty(nnz_in, dtype=np.complex128)
    cdef cnp.int64_t[::1] indptr = indptr_arr
    cdef cnp.int64_t[::1] indices = indices_arr
    cdef cplx[::1] data = data_arr
    pos = 0
    for r in range(nrows):
        start = counts[r]
        stop = counts[r + 1]
        for a in range(start + 1, stop):
            key = tcol[a]
            v = tval[a]
            b = a - 1
            while b >= start and tcol[b] > key:
                tcol[b + 1] = tcol[b]
                tval[b + 1] = tval[b]
                b -= 1
            tcol[b + 1] = key
            tval[b + 1] = v
        p = start
        while p < stop:
            key = tcol[p]
            v = tval[p]
            p += 1
            while p < stop and tcol[p] == key:
                v = v + tval[p]
                p += 1
            indices[pos] = key
            data[pos] = v
            pos += 1
        indptr[r + 1] = pos
    return indptr_arr, indices_arr[:pos].copy(), data_arr[:pos].copy()


def csr_matvec(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
               const cplx[::1] data, const cplx[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t r, p
    cdef cplx s
    y_arr = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] y = y_arr
    with nogil:
        for r in range(n):
            s = 0.0
            for p in range(indptr[r], indptr[r + 1]):
                s = s + data[p] * x[indices[p]]
            y[r] = s
    return y_arr


def ilu0_factor(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                const cplx[::1] data):
    """Return (lu, diag) with L (unit, strict lower) and U stored on A's pattern."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, k, j, pk, pj, row_k_start, row_k_end
    cdef cplx mult
    lu_arr = np.array(data, dtype=np.complex128, copy=True)
    cdef cplx[::1] lu = lu_arr
    diag_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] diag = diag_arr
    pos_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] pos = pos_arr
    for i in range(n):
        for pk in range(indptr[i], indptr[i + 1]):
            if indices[pk] == i:
                diag[i] = pk
        if diag[i] < 0:
            raise ZeroDivisionError(f"ILU(0): missing diagonal in row {i}")
    for i in range(n):
        for pk in range(indptr[i], indptr[i + 1]):
            pos[indices[pk]] = pk
        for pk in range(indptr[i], indptr[i + 1]):
            k = indices[pk]
            if k >= i:
                break
            if lu[diag[k]] == 0:
                raise ZeroDivisionError(f"ILU(0): zero pivot in row {k}")
            mult = lu[pk] / lu[diag[k]]
            lu[pk] = mult
            for pj in range(diag[k] + 1, indptr[k + 1]):
                j = indices[pj]
                if pos[j] >= 0:
                    lu[pos[j]] = lu[pos[j]] - mult * lu[pj]
        for pk in range(indptr[i], indptr[i + 1]):
            pos[indices[pk]] = -1
        if lu[diag[i]] == 0:
            raise ZeroDivisionError(f"ILU(0): zero pivot in row {i}")
    return lu_arr, diag_arr


def ilu0_solve(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
               const cplx[::1] lu, const cnp.int64_t[::1] diag, const cplx[::1] b):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef cplx s
    x_arr = np.array(b, dtype=np.complex128, copy=True)
    cdef cplx[::1] x = x_arr
    with nogil:
        for i in range(n):
            s = x[i]
            for p in range(indptr[i], diag[i]):
                s = s - lu[p] * x[indices[p]]
            x[i] = s
        for i in range(n - 1, -1, -1):
            s = x[i]
            for p in range(diag[i] + 1, indptr[i + 1]):
                s = s - lu[p] * x[indices[p]]
            x[i] = s / lu[diag[i]]
    return x_arr

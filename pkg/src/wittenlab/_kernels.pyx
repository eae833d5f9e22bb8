# distutils: language = c++
"""Compiled hot loops: GF(2) boundary-matrix reduction and one-sided Jacobi sweeps."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libcpp.vector cimport vector

cnp.import_array()


cdef void _symdiff(vector[long]& a, vector[long]& b, vector[long]& out) noexcept nogil:
    # both inputs sorted ascending; out receives the sorted symmetric difference
    cdef size_t i = 0, j = 0
    out.clear()
    while i < a.size() and j < b.size():
        if a[i] < b[j]:
            out.push_back(a[i]); i += 1
        elif b[j] < a[i]:
            out.push_back(b[j]); j += 1
        else:
            i += 1; j += 1
    while i < a.size():
        out.push_back(a[i]); i += 1
    while j < b.size():
        out.push_back(b[j]); j += 1


def reduce_gf2(const long[::1] indptr, const long[::1] indices, long ncols):
    """Standard column reduction over GF(2).

    Columns are given in CSC form with row indices sorted ascending; rows and
    columns share the same (filtration) index set. Returns ``low`` where
    ``low[j]`` is the pivot row of reduced column j, or -1 if it reduced to 0.
    """
    cdef vector[vector[long]] cols
    cdef vector[long] work, tmp
    cdef cnp.ndarray[long, ndim=1] low = np.full(ncols, -1, dtype=np.int64)
    cdef long[::1] owner = np.full(ncols, -1, dtype=np.int64)
    cdef long j, p, k, piv
    cols.resize(ncols)
    with nogil:
        for j in range(ncols):
            work.clear()
            for p in range(indptr[j], indptr[j + 1]):
                work.push_back(indices[p])
            while work.size() > 0:
                piv = work.back()
                k = owner[piv]
                if k < 0:
                    break
                _symdiff(work, cols[k], tmp)
                work.swap(tmp)
            if work.size() > 0:
                piv = work.back()
                owner[piv] = j
                low[j] = piv
                cols[j] = work
    return low


def jacobi_sweeps(double[::1, :] A, double[::1, :] V, double tol, int max_sweeps):
    """One-sided (Hestenes) Jacobi orthogonalisation of the columns of A, in place.

    ``V`` accumulates the right rotations (pass a 0x0 array to skip).
    Convergence test per pair: |a_i.a_j| <= tol * ||a_i|| ||a_j||.
    Returns the number of sweeps performed (max_sweeps + 1 signals no convergence).
    """
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], nv = V.shape[0]
    cdef Py_ssize_t i, j, r, sweep
    cdef double alpha, beta, gamma, zeta, t, c, s, xi, xj
    cdef bint rotated
    cdef bint want_v = V.shape[1] == n and nv > 0
    for sweep in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = 0.0; beta = 0.0; gamma = 0.0
                for r in range(m):
                    xi = A[r, i]; xj = A[r, j]
                    alpha += xi * xi
                    beta += xj * xj
                    gamma += xi * xj
                if gamma == 0.0 or fabs(gamma) <= tol * sqrt(alpha) * sqrt(beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for r in range(m):
                    xi = A[r, i]; xj = A[r, j]
                    A[r, i] = c * xi - s * xj
                    A[r, j] = s * xi + c * xj
                if want_v:
                    for r in range(nv):
                        xi = V[r, i]; xj = V[r, j]
                        V[r, i] = c * xi - s * xj
                        V[r, j] = s * xi + c * xj
        if not rotated:
            return sweep + 1
    return max_sweeps + 1

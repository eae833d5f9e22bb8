"""Pure-Python versions of the compiled kernels (same signatures and results)."""
import math

import numpy as np


def reduce_gf2(indptr, indices, ncols):
    cols = {}
    owner = {}
    low = np.full(ncols, -1, dtype=np.int64)
    for j in range(ncols):
        work = set(int(x) for x in indices[indptr[j]:indptr[j + 1]])
        while work:
            piv = max(work)
            k = owner.get(piv)
            if k is None:
                break
            work ^= cols[k]
        if work:
            piv = max(work)
            owner[piv] = j
            low[j] = piv
            cols[j] = work
    return low


def jacobi_sweeps(A, V, tol, max_sweeps):
    m, n = A.shape
    want_v = V.shape[1] == n and V.shape[0] > 0
    for sweep in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            ai = A[:, i]
            for j in range(i + 1, n):
                aj = A[:, j]
                alpha = float(ai @ ai)
                beta = float(aj @ aj)
                gamma = float(ai @ aj)
                if gamma == 0.0 or abs(gamma) <= tol * math.sqrt(alpha) * math.sqrt(beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                xi = ai.copy()
                A[:, i] = c * xi - s * aj
                A[:, j] = s * xi + c * aj
                if want_v:
                    vi = V[:, i].copy()
                    vj = V[:, j].copy()
                    V[:, i] = c * vi - s * vj
                    V[:, j] = s * vi + c * vj
        if not rotated:
            return sweep + 1
    return max_sweeps + 1

"""Pure NumPy implementations of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_core`` extension. Results agree to rounding; see tests/test_backend.py.
"""

import numpy as np
from scipy.linalg.lapack import dpotrf, dtrtrs

NAME = "python"

# status codes returned by layer_loglik
OK = 0
OK_RETRIED = 1
KERNEL_NOT_PD = 2
DEGENERATE = 3


def sqdist(A, B):
    """Pairwise squared Euclidean distances between rows of A and B."""
    diff = A[:, None, :] - B[None, :, :]
    return np.sum(diff * diff, axis=2)


def cross_kernel(A, B, theta):
    return np.exp(-sqdist(A, B) / theta)


def kernel_matrix(A, theta, jitter):
    K = np.exp(-sqdist(A, A) / theta)
    np.fill_diagonal(K, 1.0 + jitter)
    return K


def _chol_logdet(K):
    L, info = dpotrf(K, lower=1, clean=1, overwrite_a=0)
    if info != 0:
        return None, 0.0
    return L, 2.0 * np.sum(np.log(np.diag(L)))


def layer_loglik(Z, M, theta, jitter):
    """ICM marginal log-likelihood with the coregionalization integrated out.

    Returns ``(value, status)``; ``value`` is only meaningful when
    ``status`` is OK or OK_RETRIED.
    """
    n, S = M.shape
    status = OK
    K = kernel_matrix(Z, theta, jitter)
    L, logdet_k = _chol_logdet(K)
    if L is None:
        K[np.diag_indices(n)] = 1.0 + 100.0 * jitter
        L, logdet_k = _chol_logdet(K)
        if L is None:
            return np.nan, KERNEL_NOT_PD
        status = OK_RETRIED
    A, info = dtrtrs(L, M, lower=1)
    G = A.T @ A
    LG, logdet_g = _chol_logdet(G)
    if LG is None:
        return np.nan, DEGENERATE
    return -0.5 * S * logdet_k - 0.5 * n * logdet_g, status


def alc_sums(KrT, AcT, qr, v, Wr, Wc, theta, Q):
    """Reference-summed augmented residual variances, one per candidate.

    ``KrT`` is (r, n) with rows k(w_ref, W); ``AcT`` is (c, n) with rows
    K^-1 k(W, w_cand); ``qr`` the unaugmented quadratic forms; ``v`` the
    Schur complements of the candidates.
    """
    S = KrT @ AcT.T
    Z = np.exp(-sqdist(Wr, Wc) / theta)
    D = S - Z
    R = 1.0 - qr[:, None] - D * D / v[None, :]
    np.maximum(R, 0.0, out=R)
    return np.sum(R**Q, axis=0)


def lhd_swaps(P, dims, rows_a, rows_b):
    """Greedy coordinate-swap search on the minimum pairwise distance.

    A proposal swaps ``P[a, k]`` and ``P[b, k]`` and is kept when the
    minimum squared distance does not decrease. Returns the optimized
    copy of P and the final minimum squared distance.
    """
    P = np.array(P, dtype=float, order="C")
    n = P.shape[0]
    if n < 2:
        return P, np.inf
    D = sqdist(P, P)
    np.fill_diagonal(D, np.inf)
    rowarg = np.argmin(D, axis=1)
    rowmin = D[np.arange(n), rowarg]
    cur = rowmin.min()
    for k, a, b in zip(dims, rows_a, rows_b):
        pa, pb = P[a].copy(), P[b].copy()
        pa[k], pb[k] = pb[k], pa[k]
        da = np.sum((P - pa) ** 2, axis=1)
        db = np.sum((P - pb) ** 2, axis=1)
        dab = np.sum((pa - pb) ** 2)
        da[a], da[b] = np.inf, dab
        db[b], db[a] = np.inf, dab

        cand = rowmin.copy()
        arg = rowarg.copy()
        lower_a = da < cand
        cand[lower_a] = da[lower_a]
        arg[lower_a] = a
        lower_b = db < cand
        cand[lower_b] = db[lower_b]
        arg[lower_b] = b
        for r in np.flatnonzero((rowarg == a) | (rowarg == b)):
            if r == a or r == b:
                continue
            row = D[r].copy()
            row[a] = da[r]
            row[b] = db[r]
            j = int(np.argmin(row))
            arg[r] = j
            cand[r] = row[j]
        arg[a] = int(np.argmin(da))
        cand[a] = da[arg[a]]
        arg[b] = int(np.argmin(db))
        cand[b] = db[arg[b]]
        new = cand.min()
        if new >= cur:
            P[a], P[b] = pa, pb
            D[a, :] = da
            D[:, a] = da
            D[b, :] = db
            D[:, b] = db
            rowmin, rowarg, cur = cand, arg, new
    return P, cur

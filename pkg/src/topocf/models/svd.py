"""Truncated SVD of sparse matrices by randomized subspace iteration."""

from __future__ import annotations

import numpy as np


class SvdConvergenceError(Exception):
    pass


def randomized_subspace_svd(A, k, oversample=8, power_iters=7, max_iters=100,
                            tol=1e-6, rng=None):
    """Top-k singular triplets (U, s, V) of a sparse or dense matrix.

    Iterates an oversampled random range through A.A^T power steps (QR
    re-orthonormalized). After the minimum number of power iterations the
    leading-k triplets are extracted each round and accepted once the
    subspace residual ||A V - U diag(s)||_F / (sqrt(k) s_1) drops below
    ``tol``; exceeding ``max_iters`` raises with the last residual. The
    aggregate norm keeps near-degenerate singular-value clusters (whose
    vectors may rotate freely within the cluster) from blocking
    convergence of an otherwise settled subspace.
    """
    m, n = A.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k must be in [1, {min(m, n)}], got {k}")
    width = min(k + oversample, min(m, n))
    rng = np.random.default_rng(rng)
    Q, _ = np.linalg.qr(A @ rng.standard_normal((n, width)))
    residual = np.inf
    for it in range(max_iters):
        Z, _ = np.linalg.qr(A.T @ Q)
        Q, _ = np.linalg.qr(A @ Z)
        if it + 1 < power_iters:
            continue
        B = Q.T @ A
        Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
        U = Q @ Ub[:, :k]
        V = Vt[:k].T
        if s[0] == 0:
            return U, s[:k], V
        gap = A @ V - U * s[:k]
        residual = float(np.linalg.norm(gap) / (np.sqrt(k) * s[0]))
        if residual < tol:
            return U, s[:k], V
    raise SvdConvergenceError(
        f"subspace iteration did not converge within {max_iters} iterations "
        f"(residual {residual:.3e}, tol {tol:.1e})")

"""Dense linear-algebra primitives for the compression core.

Householder QR, the twice-applied block Gram-Schmidt projector, the
interpolative decomposition built on column-pivoted (rank-revealing) QR,
and an SVD wrapper that the verification module uses as an oracle. All
routines are thin, contract-carrying wrappers over LAPACK via numpy/scipy;
the truncation and projection semantics here are exactly what the adaptive
stopping logic relies on.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla


class QrFactors(NamedTuple):
    q: np.ndarray       # m x k, orthonormal columns
    omega: np.ndarray   # k x n, upper triangular


class InterpolativeDecomposition(NamedTuple):
    J: np.ndarray       # r selected column indices, in pivot order
    Y: np.ndarray       # r x n coefficients, Y[:, J] = I_r exactly
    rank: int


def qr(S: np.ndarray) -> QrFactors:
    """Economic Householder QR. Rank-deficient input is fine; the trailing
    diagonal of omega is then ~0, which is what the stopping tests inspect."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    q, omega = sla.qr(S, mode="economic", check_finite=False)
    return QrFactors(q, omega)


def project_out(Q: np.ndarray, S_tilde: np.ndarray) -> np.ndarray:
    """Project S_tilde onto the orthogonal complement of range(Q).

    Two block Gram-Schmidt passes; the second pass mops up the roundoff the
    first leaves behind, so the result is orthogonal to Q to ~1e-14 even for
    ill-conditioned windows.
    """
    if Q.size == 0:
        return np.array(S_tilde, dtype=float, copy=True)
    if Q.shape[0] != S_tilde.shape[0]:
        raise ValueError("Q and S_tilde must have the same number of rows")
    resid = S_tilde - Q @ (Q.T @ S_tilde)
    resid -= Q @ (Q.T @ resid)
    return resid


def interpolative_decomposition(S: np.ndarray, eps_rel: float,
                                eps_abs: float) -> InterpolativeDecomposition:
    """Column ID: S ~= S[:, J] @ Y with an exact identity block Y[:, J].

    Column-pivoted QR (LAPACK dgeqp3: max remaining column norm, lowest index
    on ties) reveals the rank as the number of leading diagonal entries with
    |R_ii| >= max(eps_abs, eps_rel * |R_11|); the coefficient block solves
    R[:r, :r] against the remaining columns.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    m, n = S.shape
    if eps_rel < 0 or eps_abs < 0:
        raise ValueError("tolerances must be nonnegative")
    if S.size == 0 or not np.any(S):
        return InterpolativeDecomposition(np.empty(0, dtype=np.intp),
                                          np.zeros((0, n)), 0)
    R, perm = sla.qr(S, mode="r", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(R))
    thresh = max(eps_abs, eps_rel * diag[0])
    r = 0
    while r < diag.size and diag[r] >= thresh:
        r += 1
    Y = np.zeros((r, n))
    if r > 0:
        Y[np.arange(r), perm[:r]] = 1.0
        if r < n:
            T = sla.solve_triangular(R[:r, :r], R[:r, r:], check_finite=False)
            Y[:, perm[r:]] = T
    return InterpolativeDecomposition(np.asarray(perm[:r], dtype=np.intp), Y, r)


def row_interpolative_decomposition(S: np.ndarray, eps_rel: float,
                                    eps_abs: float) -> tuple[np.ndarray, np.ndarray]:
    """Row ID: S ~= U @ S[J, :] with U[J, :] = I_r. Returns (U, J)."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    result = interpolative_decomposition(S.T, eps_rel, eps_abs)
    return result.Y.T, result.J


def svd(A: np.ndarray, oracle_cap: int = 512):
    """Full SVD, verification oracle only. Returns (U, s, V) with V holding
    right singular vectors as columns; s nonincreasing and nonnegative."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if min(A.shape) > oracle_cap:
        raise ValueError(
            f"svd oracle restricted to min(m, n) <= {oracle_cap}; "
            f"got {A.shape}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return U, s, Vt.T

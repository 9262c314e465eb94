"""
Dense Hermitian factorizations at 53, 106 or 212 bits.

Double-precision matrices are complex128 arrays factored by LAPACK; higher
precisions use row lists of mpc and a scalar recurrence. Either way a
breakdown is reported with the pivot where it happened.
"""

import mpmath
import numpy as np
from scipy import linalg as sla
from scipy.linalg import lapack

from .errors import CholeskyBreakdown
from .precision import is_double, working_precision


def _cholesky_double(A: np.ndarray, bits: int) -> np.ndarray:
    L, info = lapack.zpotrf(A, lower=1, clean=1)
    if info > 0:
        raise CholeskyBreakdown(info - 1, bits)
    if info < 0:
        raise ValueError(f"zpotrf rejected argument {-info}")
    return L


def _cholesky_mp(A, bits: int):
    n = len(A)
    L = [[mpmath.mpc(0)] * n for _ in range(n)]
    with working_precision(bits):
        for i in range(n):
            for j in range(i + 1):
                s = mpmath.fdot(L[i][:j], [mpmath.conj(x) for x in L[j][:j]]) if j else 0
                if i == j:
                    pivot = mpmath.re(A[i][i] - s)
                    if not pivot > 0:
                        raise CholeskyBreakdown(i, bits)
                    L[i][i] = mpmath.mpc(mpmath.sqrt(pivot))
                else:
                    L[i][j] = (A[i][j] - s) / L[j][j]
    return L


def cholesky(A, bits: int):
    """Lower factor L with A = L L^H and positive real diagonal."""
    if is_double(bits):
        return _cholesky_double(np.asarray(A, dtype=complex), bits)
    return _cholesky_mp(A, bits)


def inverse_lower(L, bits: int):
    """Inverse of a lower-triangular factor."""
    if is_double(bits):
        n = L.shape[0]
        return sla.solve_triangular(L, np.eye(n, dtype=complex), lower=True)
    n = len(L)
    X = [[mpmath.mpc(0)] * n for _ in range(n)]
    with working_precision(bits):
        for j in range(n):
            X[j][j] = 1 / L[j][j]
            for i in range(j + 1, n):
                s = mpmath.fdot(L[i][j:i], [X[k][j] for k in range(j, i)])
                X[i][j] = -s / L[i][i]
    return X


def conj_transpose(X, bits: int):
    if is_double(bits):
        return np.conj(X).T
    n = len(X)
    return [[mpmath.conj(X[j][i]) for j in range(n)] for i in range(n)]

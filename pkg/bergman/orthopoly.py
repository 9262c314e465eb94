"""
Area-orthonormal polynomials K_0..K_N with positive leading coefficients.

The Cholesky path factors A = conj(M) = L L^H at the Gram precision and takes
C = L^{-H}: upper triangular with real positive diagonal and
C^T M conj(C) = I, so column n of C holds the monomial coefficients of K_n.
The Arnoldi path orthogonalizes multiplication by z against a discrete area
measure in double precision.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np
import pandas as pd
from scipy import linalg as sla
from scipy.spatial import ConvexHull

from .conf import get_setting
from .errors import RankDeficiencyError, RootFinderError, ValidationError
from .geometry import DomainSpec, boundary_sample, diameter
from .gram import GramMatrix
from .linalg import cholesky, conj_transpose, inverse_lower
from .performance import performance_monitor
from .precision import DOUBLE_BITS, is_double, polyval, working_precision
from .quadrature import AreaRule, lune_area_rule, polar_area_rule, star_area_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """
    Coefficient triangle of K_0..K_N; column n holds K_n.

    ``mp_coeffs`` keeps the working-precision values (row lists of mpc)
    for bases built above 53 bits.
    """
    coeffs: np.ndarray
    degree: int
    method: str
    condition_estimate: float
    precision_bits: int = DOUBLE_BITS
    residual: float = float('nan')
    domain_hash: str = ""
    mp_coeffs: Optional[list] = None

    def column(self, n: int) -> Sequence:
        """Monomial coefficients of K_n (mpc above 53 bits)."""
        check_index(self, n)
        if self.mp_coeffs is None:
            return self.coeffs[:n + 1, n]
        return [self.mp_coeffs[j][n] for j in range(n + 1)]

    def leading_coefficient(self, n: int) -> float:
        return float(self.coeffs[n, n].real)


def check_index(basis: OrthoBasis, n: int) -> None:
    if not 0 <= n <= basis.degree:
        raise ValidationError(f"polynomial index {n} outside 0..{basis.degree}")


# ---------------------------------------------------------------------------
# Cholesky path
# ---------------------------------------------------------------------------

def _residual(C, M, bits: int) -> float:
    if is_double(bits):
        G = C.T @ M @ np.conj(C)
        return float(np.abs(G - np.eye(C.shape[0])).max())
    n = len(C)
    with working_precision(bits):
        MC = [[mpmath.fdot(M[i], [mpmath.conj(C[k][j]) for k in range(n)]) for j in range(n)]
              for i in range(n)]
        worst = mpmath.mpf(0)
        for a in range(n):
            col_a = [C[k][a] for k in range(n)]
            for b in range(n):
                value = mpmath.fdot(col_a, [MC[k][b] for k in range(n)])
                worst = max(worst, abs(value - (1 if a == b else 0)))
    return float(worst)


@performance_monitor.time_function('orthonormalize_cholesky')
def orthonormalize_cholesky(gram: GramMatrix) -> OrthoBasis:
    """
    K_n from the Gram matrix; raises CholeskyBreakdown with the failing pivot.
    """
    bits = gram.precision_bits
    M = gram.working()
    if is_double(bits):
        L = cholesky(np.conj(M), bits)
        C = conj_transpose(inverse_lower(L, bits), bits)
        coeffs = np.triu(C)
        mp_coeffs = None
        pivots = np.abs(np.diag(L))
    else:
        with working_precision(bits):
            A = [[mpmath.conj(x) for x in row] for row in M]
        L = cholesky(A, bits)
        C = conj_transpose(inverse_lower(L, bits), bits)
        n = len(C)
        for i in range(n):
            for j in range(i):
                C[i][j] = mpmath.mpc(0)
        mp_coeffs = C
        coeffs = np.array([[complex(x) for x in row] for row in C])
        pivots = np.array([float(abs(L[i][i])) for i in range(n)])

    residual = _residual(C, M, bits)
    condition = float((pivots.max() / pivots.min()) ** 2)
    tolerance = get_setting('ORTHONORMALITY_TOLERANCE')
    if residual > tolerance:
        logger.warning(f"orthonormality residual {residual:.2e} above {tolerance:.0e} "
                       f"(degree {gram.degree}, {bits} bits)")
    else:
        logger.debug(f"cholesky basis degree {gram.degree}: residual {residual:.2e}")
    return OrthoBasis(coeffs=coeffs, degree=gram.degree, method="cholesky",
                      condition_estimate=condition, precision_bits=bits, residual=residual,
                      domain_hash=gram.domain_hash, mp_coeffs=mp_coeffs)


# ---------------------------------------------------------------------------
# Arnoldi path
# ---------------------------------------------------------------------------

@performance_monitor.time_function('orthonormalize_arnoldi')
def orthonormalize_arnoldi(domain: DomainSpec, measure: AreaRule, degree: int) -> OrthoBasis:
    """
    K_n by orthogonalizing z*K_{n-1} against K_0..K_{n-1} in the discrete
    inner product sum(w * f * conj(g)), with one reorthogonalization pass.
    """
    if degree < 0:
        raise ValidationError(f"degree must be non-negative, got {degree}")
    if measure.size < (degree + 1) ** 2:
        raise ValidationError(
            f"discrete measure has {measure.size} nodes, need at least {(degree + 1) ** 2}")
    w = np.asarray(measure.weights, dtype=float)
    if not np.all(w > 0):
        raise ValidationError("discrete measure weights must be positive")
    z = measure.points

    Q = np.zeros((z.size, degree + 1), dtype=complex)
    coeffs = np.zeros((degree + 1, degree + 1), dtype=complex)
    norms = np.zeros(degree + 1)
    total = w.sum()
    Q[:, 0] = 1 / math.sqrt(total)
    coeffs[0, 0] = 1 / math.sqrt(total)
    norms[0] = math.sqrt(total)

    for n in range(1, degree + 1):
        v = z * Q[:, n - 1]
        c = np.zeros(degree + 1, dtype=complex)
        c[1:n + 1] = coeffs[:n, n - 1]
        for _ in range(2):
            h = (np.conj(Q[:, :n]) * w[:, None]).T @ v
            v = v - Q[:, :n] @ h
            c[:n + 1] -= coeffs[:n + 1, :n] @ h
        norm = math.sqrt(float(np.dot(w, np.abs(v) ** 2)))
        if norm <= 1e-14 * norms[n - 1] * float(np.abs(z).max()):
            raise RankDeficiencyError(f"discrete measure cannot support degree {n}")
        phase = c[n] / abs(c[n])
        Q[:, n] = v / (norm * phase)
        coeffs[:n + 1, n] = c[:n + 1] / (norm * phase)
        norms[n] = norm

    gram = (np.conj(Q) * w[:, None]).T @ Q
    residual = float(np.abs(gram - np.eye(degree + 1)).max())
    diag = np.abs(np.diag(coeffs))
    logger.debug(f"arnoldi basis degree {degree} on {measure.size} nodes: residual {residual:.2e}")
    return OrthoBasis(coeffs=coeffs, degree=degree, method="arnoldi",
                      condition_estimate=float(diag.max() / diag.min()), precision_bits=DOUBLE_BITS,
                      residual=residual, domain_hash=domain.id_hash)


def interior_measure(domain: DomainSpec, rule=None) -> AreaRule:
    """Discrete area measure suited to the domain's shape."""
    if domain.gallery == "disk":
        params = domain.gallery_params
        return polar_area_rule(params['radius'], params['center'])
    if domain.gallery == "lune":
        return lune_area_rule()
    return star_area_rule(domain, rule)


# ---------------------------------------------------------------------------
# Evaluation and diagnostics
# ---------------------------------------------------------------------------

def eval_K(basis: OrthoBasis, n: int, z):
    """K_n(z) by Horner; scalar in, complex out; arrays in, arrays out."""
    check_index(basis, n)
    values = polyval(basis.column(n), z, basis.precision_bits)
    return complex(values[0]) if np.ndim(z) == 0 else values


def sup_norm(basis: OrthoBasis, n: int, points) -> float:
    return float(np.abs(eval_K(basis, n, np.asarray(points))).max())


def orthonormality_residual(basis: OrthoBasis, gram: GramMatrix) -> float:
    """max |<K_m, K_n> - delta_mn| in the Gram inner product."""
    if gram.degree < basis.degree:
        raise ValidationError("Gram matrix degree below basis degree")
    gram = gram.truncate(basis.degree)
    if basis.mp_coeffs is not None and not is_double(gram.precision_bits):
        return _residual(basis.mp_coeffs, gram.mp_entries(), gram.precision_bits)
    return _residual(basis.coeffs, gram.entries, DOUBLE_BITS)


@dataclass(frozen=True)
class HullCheck:
    inside: bool
    worst: complex
    excess: float
    roots: np.ndarray


def polynomial_roots(coeffs: Sequence) -> np.ndarray:
    """Roots via eigenvalues of the balanced companion matrix of the monic polynomial."""
    c = np.asarray([complex(x) for x in coeffs], dtype=complex)
    if c.size < 2:
        return np.array([], dtype=complex)
    if c[-1] == 0:
        raise RootFinderError("leading coefficient is zero")
    monic = c[::-1] / c[-1]
    try:
        roots = sla.eigvals(sla.companion(monic))
    except (sla.LinAlgError, ValueError) as exc:
        raise RootFinderError(f"companion eigenvalues failed: {exc}") from exc
    if not np.all(np.isfinite(roots)):
        raise RootFinderError("companion eigenvalues not finite")
    return roots


def zeros_in_hull_check(basis: OrthoBasis, domain: DomainSpec, n: int,
                        samples: Optional[int] = None) -> HullCheck:
    """Whether every zero of K_n lies in the convex hull of the boundary (tolerance 1e-6*diam)."""
    if n < 1:
        raise ValidationError("zeros_in_hull_check needs n >= 1")
    check_index(basis, n)
    roots = polynomial_roots(basis.column(n))
    pts = boundary_sample(domain, samples or 4 * get_setting('BOUNDARY_SAMPLES'))
    hull = ConvexHull(np.column_stack([pts.real, pts.imag]))
    tolerance = 1e-6 * diameter(domain)
    # facet equations are normal . x + offset <= 0 inside, with unit normals
    excess = (hull.equations[:, :2] @ np.vstack([roots.real, roots.imag])
              + hull.equations[:, 2:3]).max(axis=0)
    index = int(np.argmax(excess))
    return HullCheck(inside=bool(excess[index] <= tolerance), worst=complex(roots[index]),
                     excess=float(max(excess[index], 0.0)), roots=roots)


def write_basis_csv(basis: OrthoBasis, path) -> None:
    rows = [(j, n, basis.coeffs[j, n].real, basis.coeffs[j, n].imag)
            for n in range(basis.degree + 1) for j in range(n + 1)]
    frame = pd.DataFrame(rows, columns=['power', 'n', 're', 'im'])
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(f"# degree={basis.degree},method={basis.method},"
                     f"residual={basis.residual:.6e}\n")
        frame.to_csv(handle, index=False, float_format='%.17g')

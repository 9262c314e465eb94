"""
Bieberbach polynomials B_n.

Two constructions that must agree:

* from an orthonormal basis, B_n(z) = sum_{k<n} conj(K_k(z0)) int_{z0}^{z} K_k / S_n
  with S_n = sum_{k<n} |K_k(z0)|**2 and the antiderivative taken term by term;
* as the minimizer of ||P'||_2 over deg P <= n, P(z0) = 0, P'(z0) = 1, from the
  Gram matrix through the bordered (KKT) system.

Bases and Gram matrices above 53 bits are processed in mpmath at their own
precision; the double coefficients are the rounded results.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np
import pandas as pd
from scipy import linalg as sla

from .errors import KKTError, NumericalError, ReferenceMapMissing, ValidationError
from .gram import GramMatrix
from .orthopoly import OrthoBasis
from .precision import DOUBLE_BITS, is_double, polyval, polyval_mp, working_precision
from .quadrature import QuadratureRule, build_rule, contour_integral

logger = logging.getLogger(__name__)

S_N_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class BieberbachPoly:
    coeffs: np.ndarray
    n: int
    z0: complex
    S_n: float
    method: str
    precision_bits: int = DOUBLE_BITS
    mp_coeffs: Optional[list] = None

    def working_coeffs(self) -> Sequence:
        return self.coeffs if self.mp_coeffs is None else self.mp_coeffs


@dataclass(frozen=True, eq=False)
class KernelPartialSum:
    """Coefficients of z -> sum_{k<n} conj(K_k(z0)) K_k(z)."""
    coeffs: np.ndarray
    n: int
    z0: complex
    S_n: float
    precision_bits: int = DOUBLE_BITS
    mp_coeffs: Optional[list] = None


def _rounded(values) -> np.ndarray:
    return np.array([complex(v) for v in values], dtype=complex)


def _check_n(basis: OrthoBasis, n: int) -> None:
    if not 1 <= n <= basis.degree + 1:
        raise ValidationError(f"n must lie in 1..{basis.degree + 1}, got {n}")


def basis_values(basis: OrthoBasis, z, count: Optional[int] = None):
    """[K_0(z), ..., K_{count-1}(z)] at a single point (mpc above 53 bits)."""
    count = basis.degree + 1 if count is None else count
    if basis.mp_coeffs is None:
        powers = np.asarray(complex(z)) ** np.arange(count)
        return powers @ basis.coeffs[:count, :count]
    with working_precision(basis.precision_bits):
        zz = mpmath.mpc(z)
        return [polyval_mp(basis.column(k), zz, basis.precision_bits) for k in range(count)]


def kernel_partial_sum(basis: OrthoBasis, n: int, z0: complex) -> KernelPartialSum:
    _check_n(basis, n)
    values = basis_values(basis, z0, n)
    if basis.mp_coeffs is None:
        C = basis.coeffs[:n, :n]
        coeffs = C @ np.conj(values)
        S_n = float(np.sum(np.abs(values) ** 2))
        return KernelPartialSum(coeffs, n, complex(z0), S_n)
    bits = basis.precision_bits
    with working_precision(bits):
        conj_values = [mpmath.conj(v) for v in values]
        S = mpmath.fsum(abs(v) ** 2 for v in values)
        coeffs = [mpmath.fdot([basis.mp_coeffs[j][k] for k in range(j, n)], conj_values[j:n])
                  for j in range(n)]
    return KernelPartialSum(_rounded(coeffs), n, complex(z0), float(S), bits, coeffs)


def _integrate_from(coeffs: Sequence, z0, scale, lib_mp: bool):
    """Coefficients of int_{z0}^{z} sum_j coeffs[j] t**j dt, divided by ``scale``."""
    if not lib_mp:
        out = np.zeros(len(coeffs) + 1, dtype=complex)
        out[1:] = np.asarray(coeffs) / np.arange(1, len(coeffs) + 1)
        out[0] = -np.polynomial.polynomial.polyval(complex(z0), out)
        return out / scale
    out = [mpmath.mpc(0)] + [c / (j + 1) for j, c in enumerate(coeffs)]
    acc = mpmath.mpc(0)
    for c in reversed(out):
        acc = acc * z0 + c
    out[0] = -acc
    return [c / scale for c in out]


def bieberbach_from_basis(basis: OrthoBasis, n: int, z0: complex) -> BieberbachPoly:
    """B_n from the kernel representation with the closed-form antiderivative."""
    kernel = kernel_partial_sum(basis, n, z0)
    if not kernel.S_n > S_N_FLOOR:
        raise NumericalError(f"S_{n} = {kernel.S_n:.3e} is degenerate")
    if kernel.mp_coeffs is None:
        coeffs = _integrate_from(kernel.coeffs, z0, kernel.S_n, lib_mp=False)
        return BieberbachPoly(coeffs, n, complex(z0), kernel.S_n, "formula")
    bits = basis.precision_bits
    with working_precision(bits):
        S = mpmath.fsum(abs(v) ** 2 for v in basis_values(basis, z0, n))
        mp_coeffs = _integrate_from(kernel.mp_coeffs, mpmath.mpc(z0), S, lib_mp=True)
    return BieberbachPoly(_rounded(mp_coeffs), n, complex(z0), kernel.S_n, "formula", bits, mp_coeffs)


def solve_extremal(gram: GramMatrix, n: int, z0: complex) -> BieberbachPoly:
    """
    Minimize ||P'||^2 subject to P(z0) = 0, P'(z0) = 1 over deg P <= n.

    With d_k = (k+1) p_{k+1}, ||P'||^2 = d^H conj(M) d and the derivative
    constraint is c^H d = 1 with c = conj(z0**k); the bordered system
    [[A, c], [c^H, 0]] [d, lam] = [0, 1] is solved at the Gram precision.
    """
    if not 1 <= n <= gram.degree + 1:
        raise ValidationError(f"n must lie in 1..{gram.degree + 1}, got {n}")
    bits = gram.precision_bits
    if is_double(bits):
        A = np.conj(gram.entries[:n, :n])
        c = np.conj(complex(z0) ** np.arange(n))
        K = np.zeros((n + 1, n + 1), dtype=complex)
        K[:n, :n] = A
        K[:n, n] = c
        K[n, :n] = np.conj(c)
        rhs = np.zeros(n + 1, dtype=complex)
        rhs[n] = 1
        try:
            solution = sla.solve(K, rhs)
        except (sla.LinAlgError, ValueError) as exc:
            raise KKTError(f"bordered system singular for n={n}: {exc}") from exc
        if not np.all(np.isfinite(solution)):
            raise KKTError(f"bordered system singular for n={n}")
        d = solution[:n]
        S_n = float(1 / np.real(np.vdot(d, A @ d)))
        coeffs = _integrate_from(d, z0, 1, lib_mp=False)
        return BieberbachPoly(coeffs, n, complex(z0), S_n, "extremal")

    M = gram.mp_entries()
    with working_precision(bits):
        zz = mpmath.mpc(z0)
        c = [mpmath.conj(zz ** k) for k in range(n)]
        K = mpmath.matrix(n + 1, n + 1)
        for i in range(n):
            for j in range(n):
                K[i, j] = mpmath.conj(M[i][j])
            K[i, n] = c[i]
            K[n, i] = mpmath.conj(c[i])
        rhs = mpmath.matrix(n + 1, 1)
        rhs[n] = 1
        try:
            solution = mpmath.lu_solve(K, rhs)
        except ZeroDivisionError as exc:
            raise KKTError(f"bordered system singular for n={n}") from exc
        d = [solution[k] for k in range(n)]
        energy = mpmath.fsum(mpmath.conj(d[i]) * mpmath.fdot([K[i, j] for j in range(n)], d)
                             for i in range(n))
        S = 1 / mpmath.re(energy)
        mp_coeffs = _integrate_from(d, zz, 1, lib_mp=True)
    return BieberbachPoly(_rounded(mp_coeffs), n, complex(z0), float(S), "extremal", bits, mp_coeffs)


def evaluate(poly: BieberbachPoly, z):
    values = polyval(poly.working_coeffs(), z, poly.precision_bits)
    return complex(values[0]) if np.ndim(z) == 0 else values


def derivative(poly: BieberbachPoly) -> np.ndarray:
    """Double coefficients of B_n'."""
    return poly.coeffs[1:] * np.arange(1, poly.coeffs.size)


def evaluate_derivative(poly: BieberbachPoly, z):
    if poly.mp_coeffs is None:
        coeffs = derivative(poly)
    else:
        coeffs = [c * k for k, c in enumerate(poly.mp_coeffs)][1:]
    values = polyval(coeffs, z, poly.precision_bits)
    return complex(values[0]) if np.ndim(z) == 0 else values


def inner_radius_estimate(basis: OrthoBasis, n: int, z0: complex) -> float:
    """R0_n = (pi * S_n) ** -1/2."""
    kernel = kernel_partial_sum(basis, n, z0)
    return 1 / math.sqrt(math.pi * kernel.S_n)


def l2_error_identity(basis: OrthoBasis, n: int, z0: complex, reference=None,
                      rule: Optional[QuadratureRule] = None):
    """
    (||phi' - B_n'||_2^2, 1/S_n - pi*R0^2).

    The left side is (1/2i) * contour integral of conj(f) f' dz with
    f = phi - B_n; the right side is evaluated at the basis precision.
    """
    if reference is None:
        raise ReferenceMapMissing("l2_error_identity needs a reference map")
    poly = bieberbach_from_basis(basis, n, z0)
    rule = rule or build_rule(reference.domain)

    def integrand(z, zb):
        f = reference.phi(z) - evaluate(poly, z)
        df = reference.dphi(z) - evaluate_derivative(poly, z)
        return np.conj(f) * df

    lhs = float((contour_integral(rule, integrand) / 2j).real)
    if basis.mp_coeffs is None:
        rhs = 1 / poly.S_n - math.pi * reference.R0 ** 2
    else:
        with working_precision(basis.precision_bits):
            S = mpmath.fsum(abs(v) ** 2 for v in basis_values(basis, z0, n))
            rhs = float(1 / S - mpmath.pi * mpmath.mpf(reference.R0) ** 2)
    logger.debug(f"L2 identity n={n}: lhs={lhs:.6e} rhs={rhs:.6e}")
    return lhs, rhs


def _antiderivative_values(basis: OrthoBasis, x, z0, count: int):
    """I_k = int_{z0}^{x} K_k for k < count."""
    if basis.mp_coeffs is None:
        j = np.arange(count)
        lift = (complex(x) ** (j + 1) - complex(z0) ** (j + 1)) / (j + 1)
        return lift @ basis.coeffs[:count, :count]
    xx, zz = mpmath.mpc(x), mpmath.mpc(z0)
    lift = [(xx ** (j + 1) - zz ** (j + 1)) / (j + 1) for j in range(count)]
    return [mpmath.fdot(lift[:k + 1], [basis.mp_coeffs[j][k] for j in range(k + 1)])
            for k in range(count)]


def bieberbach_values_on_ray(basis: OrthoBasis, z0: complex, x, n_max: int) -> np.ndarray:
    """
    |B_n(x)| for n = 1..n_max from cumulative sums of conj(K_k(z0)) * int K_k.
    """
    _check_n(basis, n_max)
    if basis.mp_coeffs is None:
        values = basis_values(basis, z0, n_max)
        lifts = _antiderivative_values(basis, x, z0, n_max)
        numer = np.cumsum(np.conj(values) * lifts)
        S = np.cumsum(np.abs(values) ** 2)
        return np.abs(numer / S)
    with working_precision(basis.precision_bits):
        values = basis_values(basis, z0, n_max)
        lifts = _antiderivative_values(basis, x, z0, n_max)
        out = np.empty(n_max)
        numer = mpmath.mpc(0)
        S = mpmath.mpf(0)
        for k in range(n_max):
            numer += mpmath.conj(values[k]) * lifts[k]
            S += abs(values[k]) ** 2
            out[k] = float(abs(numer / S))
    return out


def write_poly_csv(poly: BieberbachPoly, path) -> None:
    frame = pd.DataFrame({'power': np.arange(poly.coeffs.size),
                          're': poly.coeffs.real, 'im': poly.coeffs.imag})
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(f"# n={poly.n},z0={poly.z0.real!r}{poly.z0.imag:+.17g}j,"
                     f"S_n={poly.S_n!r},method={poly.method}\n")
        frame.to_csv(handle, index=False, float_format='%.17g')

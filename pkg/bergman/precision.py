"""
Working-precision arithmetic and multi-limb storage.

Arithmetic above 53 bits runs in mpmath at the requested precision. Results
are stored as unevaluated sums of float64 limbs: one limb at 53 bits, two
(a double-double) at 106 bits, four at 212 bits. Limb arrays have the shape
``value_shape + (2, k)``: real and imaginary parts, each split into ``k``
non-overlapping doubles, leading limb first.
"""

import math
from contextlib import contextmanager
from typing import Iterable, List, Sequence

import mpmath
import numpy as np

from .conf import SUPPORTED_PRECISIONS
from .errors import ValidationError

DOUBLE_BITS = 53


def limb_count(bits: int) -> int:
    return max(1, math.ceil(bits / DOUBLE_BITS))


def check_precision(bits: int) -> int:
    bits = int(bits)
    if bits < DOUBLE_BITS:
        raise ValidationError(f"precision must be at least {DOUBLE_BITS} bits, got {bits}")
    if bits not in SUPPORTED_PRECISIONS:
        raise ValidationError(
            f"precision {bits} not supported; choose one of {SUPPORTED_PRECISIONS}"
        )
    return bits


def is_double(bits: int) -> bool:
    return bits <= DOUBLE_BITS


@contextmanager
def working_precision(bits: int):
    """Run mpmath arithmetic at ``bits`` bits (plus guard bits)."""
    with mpmath.workprec(bits + 8):
        yield


def split_real(x, k: int) -> List[float]:
    """Round an mpf to ``k`` float64 limbs whose sum approximates it."""
    limbs = []
    remainder = mpmath.mpf(x)
    for _ in range(k):
        limb = float(remainder)
        limbs.append(limb)
        remainder = remainder - limb
    return limbs


def join_real(limbs: Iterable[float]):
    return mpmath.fsum(mpmath.mpf(float(limb)) for limb in limbs)


def to_limbs(values, bits: int) -> np.ndarray:
    """Pack a nested sequence of complex/mpc values into a limb array."""
    k = limb_count(bits)
    if isinstance(values, np.ndarray) and values.dtype.kind in 'cf':
        out = np.zeros(values.shape + (2, k))
        out[..., 0, 0] = values.real
        out[..., 1, 0] = values.imag
        return out

    array = np.empty(np.shape(values) + (2, k))
    flat = array.reshape(-1, 2, k)
    for index, value in enumerate(_flatten(values)):
        value = mpmath.mpc(value)
        flat[index, 0, :] = split_real(value.real, k)
        flat[index, 1, :] = split_real(value.imag, k)
    return array


def leading(limbs: np.ndarray) -> np.ndarray:
    """Nearest complex128 view of a limb array."""
    return limbs[..., 0, 0] + 1j * limbs[..., 1, 0]


def from_limbs(limbs: np.ndarray):
    """Return nested lists of mpc (or a complex128 array for a single limb)."""
    if limbs.shape[-1] == 1:
        return leading(limbs)
    shape = limbs.shape[:-2]
    flat = limbs.reshape(-1, 2, limbs.shape[-1])
    values = [mpmath.mpc(join_real(row[0]), join_real(row[1])) for row in flat]
    return _unflatten(values, shape)


def _flatten(values):
    if isinstance(values, (list, tuple, np.ndarray)):
        for item in values:
            yield from _flatten(item)
    else:
        yield values


def _unflatten(values: list, shape: tuple):
    if not shape:
        return values[0]
    if len(shape) == 1:
        return list(values)
    step = int(np.prod(shape[1:]))
    return [_unflatten(values[i * step:(i + 1) * step], shape[1:]) for i in range(shape[0])]


def polyval(coeffs: Sequence, points, bits: int) -> np.ndarray:
    """
    Horner evaluation of ascending-order coefficients at ``points``.

    Double-precision coefficients are evaluated vectorized in numpy; mpmath
    coefficients are evaluated point by point at ``bits`` bits and rounded.
    """
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    if is_double(bits) or isinstance(coeffs, np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        result = np.zeros_like(points)
        for c in coeffs[::-1]:
            result = result * points + c
        return result

    out = np.empty(points.shape, dtype=complex)
    with working_precision(bits):
        for index, z in enumerate(points.flat):
            zz = mpmath.mpc(z)
            acc = mpmath.mpc(0)
            for c in reversed(coeffs):
                acc = acc * zz + c
            out.flat[index] = complex(acc)
    return out


def polyval_mp(coeffs: Sequence, z, bits: int):
    """Horner evaluation returning an mpc at ``bits`` bits."""
    with working_precision(bits):
        zz = mpmath.mpc(z)
        acc = mpmath.mpc(0)
        for c in reversed(coeffs):
            acc = acc * zz + c
        return acc

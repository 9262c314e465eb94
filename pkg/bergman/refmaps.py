"""
Closed-form normalized conformal maps phi with phi(z0) = 0, phi'(z0) = 1.

Each map evaluates vectorized in numpy and as scalars in mpmath at any
precision; the same formula serves both through a ``lib`` argument. The
normalization constant is u'(z0) of the unnormalized disk map u, so
phi = u / u'(z0) and R0 = 1 / |u'(z0)|.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import BoundaryProximityError, NewtonError, ValidationError
from .geometry import (DomainSpec, boundary_distance, boundary_sample, contains,
                       find_self_intersection)
from .geometry import disk as disk_domain
from .geometry import ellipse as ellipse_domain
from .geometry import lens as lens_domain
from .geometry import lune as lune_domain
from .geometry import psi_image as psi_domain
from .precision import DOUBLE_BITS, working_precision

logger = logging.getLogger(__name__)

KINDS = ("disk-mobius", "psi-image", "lune", "lens", "ellipse")
CAUCHY_NODES = 256
NEWTON_MAX_ITER = 100
HORN_BITS = 4096


def _const(value, lib):
    return mpmath.mpc(value) if lib is mpmath else complex(value)


@dataclass(frozen=True)
class Approach:
    """A path z(t) -> vertex as t -> 0+ inside the domain."""
    vertex: complex
    path: Callable
    limit: Callable


class ReferenceMap:
    """Exact normalized map of ``domain`` onto the disk of radius ``R0``."""

    kind = None

    def __init__(self, domain: DomainSpec, z0: complex, params: Dict):
        self.domain = domain
        self.z0 = complex(z0)
        self.params = dict(params)
        self.approaches: Dict[str, Approach] = {}
        with working_precision(106):
            scale = self._scale(mpmath)
            self.R0 = float(1 / abs(scale))

    def __repr__(self):
        return f"<ReferenceMap {self.kind} z0={self.z0} R0={self.R0:.15g}>"

    # -- subclass hooks ----------------------------------------------------

    def _unnormalized(self, z, lib) -> Tuple:
        """(u(z), u'(z)) for the map onto the unit disk with u(z0) = 0."""
        raise NotImplementedError

    def _scale(self, lib):
        return self._unnormalized(_const(self.z0, lib), lib)[1]

    # -- evaluation --------------------------------------------------------

    def _evaluate(self, z, lib):
        u, du = self._unnormalized(z, lib)
        scale = self._scale(lib)
        return u / scale, du / scale

    def _numpy(self, z, which: int):
        array = np.asarray(z, dtype=complex)
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            value = self._evaluate(np.atleast_1d(array), np)[which]
        return complex(value[0]) if array.ndim == 0 else value

    def phi(self, z):
        return self._numpy(z, 0)

    def dphi(self, z):
        return self._numpy(z, 1)

    def phi_mp(self, z, bits: int = 106):
        with working_precision(bits):
            return self._evaluate(mpmath.mpc(z), mpmath)[0]

    def dphi_mp(self, z, bits: int = 106):
        with working_precision(bits):
            return self._evaluate(mpmath.mpc(z), mpmath)[1]

    # -- singular vertices ---------------------------------------------------

    def approach_points(self, name: str, ts: Sequence[float], bits: int = HORN_BITS):
        """Points z(t) on an approach path, at ``bits`` bits."""
        approach = self._approach(name)
        with working_precision(bits):
            return [approach.path(mpmath.mpf(t)) for t in ts]

    def approach_values(self, name: str, ts: Sequence[float], bits: int = HORN_BITS):
        """
        Distances |z(t) - vertex| (floats) and gaps |phi(z(t)) - phi(vertex)|
        (mpf, so values far below the double range survive).
        """
        approach = self._approach(name)
        distances, gaps = [], []
        with working_precision(bits):
            limit = approach.limit()
            for t in ts:
                z = approach.path(mpmath.mpf(t))
                distances.append(float(abs(z - approach.vertex)))
                gaps.append(abs(self._evaluate(z, mpmath)[0] - limit))
        return np.array(distances), gaps

    def approach_limit(self, name: str, bits: int = 106):
        with working_precision(bits):
            return self._approach(name).limit()

    def _approach(self, name: str) -> Approach:
        try:
            return self.approaches[name]
        except KeyError:
            raise ValidationError(
                f"{self.kind} map has no approach path {name!r}; "
                f"available: {sorted(self.approaches)}") from None


class DiskMap(ReferenceMap):
    kind = "disk-mobius"

    def _unnormalized(self, z, lib):
        R = self.params['radius']
        a = _const(self.z0, lib)
        denom = R * R - lib.conj(a) * z
        return R * (z - a) / denom, R * (R * R - a * lib.conj(a)) / denom ** 2


class PsiImageMap(ReferenceMap):
    """phi = psi'(0) * psi^{-1}; the inverse by Newton from grid seeds."""
    kind = "psi-image"

    def __init__(self, domain: DomainSpec, coeffs: Sequence[complex]):
        self.coeffs = [complex(c) for c in coeffs]
        self.dcoeffs = [k * c for k, c in enumerate(self.coeffs)][1:]
        radii = np.arange(1, 65) / 64
        angles = 2 * np.pi * np.arange(64) / 64
        seeds = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
        self._seeds = np.concatenate([[0j], seeds])
        self._seed_images = self._psi(self._seeds, np)
        super().__init__(domain, self.coeffs[0], {'coeffs': self.coeffs})

    def _psi(self, w, lib):
        acc = 0 * w
        for c in reversed(self.coeffs):
            acc = acc * w + _const(c, lib)
        return acc

    def _dpsi(self, w, lib):
        acc = 0 * w
        for c in reversed(self.dcoeffs):
            acc = acc * w + _const(c, lib)
        return acc

    def _scale(self, lib):
        return 1 / _const(self.coeffs[1], lib)

    def inverse(self, z) -> np.ndarray:
        """psi^{-1}(z) in double precision (vectorized)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = np.empty_like(z)
        for start in range(0, z.size, 512):
            block = z[start:start + 512]
            nearest = np.argmin(np.abs(block[:, None] - self._seed_images[None, :]), axis=1)
            w[start:start + 512] = self._seeds[nearest]
        scale = 1 + np.abs(z)
        for _ in range(NEWTON_MAX_ITER):
            step = (self._psi(w, np) - z) / self._dpsi(w, np)
            w = w - step
            if np.all(np.abs(step) <= 1e-15 * (1 + np.abs(w))):
                break
        residual = np.abs(self._psi(w, np) - z)
        if not np.all(residual <= 1e-13 * scale):
            worst = int(np.argmax(residual / scale))
            raise NewtonError(f"psi inversion did not converge at z={z[worst]:.6g} "
                              f"(residual {residual[worst]:.2e})")
        return w

    def _inverse_mp(self, z):
        w = mpmath.mpc(self.inverse(complex(z))[0])
        tolerance = mpmath.mpf(2) ** (-mpmath.mp.prec + 4)
        for _ in range(NEWTON_MAX_ITER):
            step = (self._psi(w, mpmath) - z) / self._dpsi(w, mpmath)
            w -= step
            if abs(step) <= tolerance * (1 + abs(w)):
                return w
        raise NewtonError(f"psi inversion did not converge at z={complex(z):.6g} "
                          f"at {mpmath.mp.prec} bits")

    def _unnormalized(self, z, lib):
        w = self._inverse_mp(z) if lib is mpmath else self.inverse(z)
        return w, 1 / self._dpsi(w, lib)


class LuneMap(ReferenceMap):
    """
    s = 1/z sends the lune to the strip 1/2 < Re s < 1; v = 2*pi*i*(s - 1/2)
    straightens it to 0 < Im v < pi, E = exp(v) opens it to the upper half
    plane and a Moebius map takes E(z0) to 0.
    """
    kind = "lune"

    def _E0(self, lib):
        return lib.exp(2j * lib.pi * (1 / _const(self.z0, lib) - _const(0.5, lib)))

    def _unnormalized(self, z, lib):
        E0 = self._E0(lib)
        E0b = lib.conj(E0)
        v = 2j * lib.pi * (1 / z - _const(0.5, lib))
        if lib is mpmath:
            E = mpmath.exp(v)
            u = (E - E0) / (E - E0b)
            dudv = (E0 - E0b) * E / (E - E0b) ** 2
        else:
            # near the cusp |E| leaves the double range; use exp(-v) there
            upper = v.real > 0
            w = np.exp(np.where(upper, -v, v))
            u = np.where(upper, (1 - E0 * w) / (1 - E0b * w), (w - E0) / (w - E0b))
            dudv = (E0 - E0b) * np.where(upper, w / (1 - E0b * w) ** 2, w / (w - E0b) ** 2)
        return u, dudv * (-2j * lib.pi / z ** 2)

    def _limit(self, upper: bool):
        E0 = self._E0(mpmath)
        u = mpmath.mpc(1) if upper else E0 / mpmath.conj(E0)
        return u / self._scale(mpmath)


class LensMap(ReferenceMap):
    """
    w = (xi - z)/(z - left) opens the lens to the sector |arg w| < alpha*pi/2,
    zeta = w**(1/alpha) to the right half plane, then a Moebius map to the disk.
    """
    kind = "lens"

    def _zeta(self, z, lib):
        xi, left = self.params['xi'], self.params['left']
        exponent = 1 / (mpmath.mpf(self.params['alpha']) if lib is mpmath else self.params['alpha'])
        w = (xi - z) / (z - left)
        zeta = w ** exponent
        dw = -(xi - left) / (z - left) ** 2
        return zeta, exponent * zeta / w * dw

    def _unnormalized(self, z, lib):
        zeta, dzeta = self._zeta(z, lib)
        zeta0 = self._zeta(_const(self.z0, lib), lib)[0]
        u = (zeta - zeta0) / (zeta + lib.conj(zeta0))
        return u, (zeta0 + lib.conj(zeta0)) / (zeta + lib.conj(zeta0)) ** 2 * dzeta

    def _limit(self, vertex: str):
        zeta0 = self._zeta(mpmath.mpc(self.z0), mpmath)[0]
        u = -zeta0 / mpmath.conj(zeta0) if vertex == "xi" else mpmath.mpc(1)
        return u / self._scale(mpmath)


class EllipseMap(ReferenceMap):
    """
    f(z) = sqrt(k) * sn((2K/pi) * asin(z/c); k) with c**2 = a**2 - b**2 and
    nome ((a-b)/(a+b))**2 maps the ellipse onto the unit disk, f(0) = 0.
    """
    kind = "ellipse"

    def _moduli(self):
        a, b = self.params['a'], self.params['b']
        q = (mpmath.mpf(a - b) / (a + b)) ** 2
        m = mpmath.kfrom(q=q) ** 2
        c = mpmath.sqrt(mpmath.mpf(a) ** 2 - mpmath.mpf(b) ** 2)
        return m, c, 2 * mpmath.ellipk(m) / mpmath.pi

    def _f(self, z):
        m, c, sigma = self._moduli()
        x = z / c
        arg = sigma * mpmath.asin(x)
        sn = mpmath.ellipfun('sn', arg, m=m)
        cn = mpmath.ellipfun('cn', arg, m=m)
        dn = mpmath.ellipfun('dn', arg, m=m)
        root_k = m ** mpmath.mpf(0.25)
        return root_k * sn, root_k * sigma * cn * dn / (c * mpmath.sqrt(1 - x * x))

    def _unnormalized(self, z, lib):
        if lib is mpmath:
            return self._f(z)
        z = np.asarray(z, dtype=complex)
        values = np.empty(z.shape, dtype=complex)
        derivs = np.empty(z.shape, dtype=complex)
        with working_precision(DOUBLE_BITS + 11):
            for index, point in enumerate(z.flat):
                f, df = self._f(mpmath.mpc(point))
                values.flat[index] = complex(f)
                derivs.flat[index] = complex(df)
        return values, derivs


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def disk_map(R: float = 1.0, z0: complex = 0j) -> ReferenceMap:
    """phi = R0 * Moebius(z0 -> 0) on the disk |z| < R; R0 = (R**2 - |z0|**2)/R."""
    if not R > 0:
        raise ValidationError(f"disk radius must be positive, got {R}")
    if not abs(complex(z0)) < R:
        raise ValidationError(f"z0={z0} is not inside the disk of radius {R}")
    return DiskMap(disk_domain(R, 0j, z0), z0, {'radius': float(R)})


def psi_image_map(coeffs: Sequence[complex], samples: int = 4096) -> ReferenceMap:
    """Map of G = psi(D) with phi = psi'(0) * psi^{-1}; injectivity checked on the boundary."""
    domain = psi_domain(coeffs)
    points, owners = boundary_sample(domain, samples, return_arcs=True)
    if find_self_intersection(points, owners) is not None:
        raise ValidationError("psi is not injective: the image of the unit circle self-intersects")
    return PsiImageMap(domain, coeffs)


def lune_map(z0: complex = 1.5) -> ReferenceMap:
    reference = LuneMap(lune_domain(z0), z0, {})
    reference.approaches = {
        'upper': Approach(0j, lambda t: 1 / (mpmath.mpf(3) / 4 - 1j / t),
                          lambda: reference._limit(True)),
        'lower': Approach(0j, lambda t: 1 / (mpmath.mpf(3) / 4 + 1j / t),
                          lambda: reference._limit(False)),
    }
    return reference


def lens_map(xi: float = 0.6, alpha: float = 1 / math.sqrt(2), left: float = -1.0,
             z0: complex = 0j) -> ReferenceMap:
    """
    Reference for the lens gallery domain. Irrational alpha is represented by
    its double; phi is non-analytic at the corners whenever 1/alpha is not an
    integer.
    """
    if not 0 < alpha < 1:
        raise ValidationError(f"lens angle factor must lie in (0, 1), got {alpha}")
    domain = lens_domain(xi, alpha, left, z0)
    reference = LensMap(domain, z0, {'xi': float(xi), 'alpha': float(alpha), 'left': float(left)})
    reference.approaches = {
        'xi': Approach(complex(xi), lambda t: mpmath.mpc(xi) - t, lambda: reference._limit("xi")),
        'left': Approach(complex(left), lambda t: mpmath.mpc(left) + t,
                         lambda: reference._limit("left")),
    }
    return reference


def ellipse_map(a: float = 1.0, b: float = 0.5) -> ReferenceMap:
    if not a > b > 0:
        raise ValidationError(f"ellipse map needs a > b > 0, got a={a}, b={b}")
    return EllipseMap(ellipse_domain(a, b, 0j), 0j, {'a': float(a), 'b': float(b)})


def reference_for(domain: DomainSpec) -> Optional[ReferenceMap]:
    """The reference map of a gallery domain, or None when it has none."""
    params = domain.gallery_params
    if domain.gallery == "disk" and complex(params.get('center', 0j)) == 0:
        return disk_map(params['radius'], domain.z0)
    if domain.gallery == "psi":
        return psi_image_map(params['coeffs'])
    if domain.gallery == "lune":
        return lune_map(domain.z0)
    if domain.gallery == "lens":
        return lens_map(params['xi'], params['alpha'], params['left'], domain.z0)
    if domain.gallery == "ellipse" and domain.z0 == 0 and params['a'] > params['b']:
        return ellipse_map(params['a'], params['b'])
    return None


def green_disk_exterior(x: float) -> float:
    """g(x, inf) = log x for the exterior of the unit disk."""
    if x < 1:
        raise ValidationError(f"green_disk_exterior needs x >= 1, got {x}")
    return math.log(x)


def derivative_k(reference: ReferenceMap, k: int, z: complex, bits: Optional[int] = None):
    """
    k-th derivative of phi by the trapezoid rule on a Cauchy circle of radius
    min(1e-2, dist/2) with 256 nodes. With ``bits`` the samples are taken in
    mpmath and the result is an mpc.
    """
    if k < 0:
        raise ValidationError(f"derivative order must be non-negative, got {k}")
    z = complex(z)
    distance = boundary_distance(reference.domain, z)
    if distance <= 1e-12 or not contains(reference.domain, [z])[0]:
        raise BoundaryProximityError(f"z={z} is not strictly inside the domain")
    radius = min(1e-2, distance / 2)
    if bits is None:
        theta = 2 * np.pi * np.arange(CAUCHY_NODES) / CAUCHY_NODES
        values = reference.phi(z + radius * np.exp(1j * theta))
        return complex(math.factorial(k) * np.mean(values * np.exp(-1j * k * theta)) / radius ** k)
    with working_precision(bits):
        r = mpmath.mpf(radius)
        total = mpmath.mpc(0)
        for j in range(CAUCHY_NODES):
            turn = mpmath.expjpi(mpmath.mpf(2 * j) / CAUCHY_NODES)
            point = mpmath.mpc(z) + r * turn
            total += reference._evaluate(point, mpmath)[0] / turn ** k
        return mpmath.factorial(k) * total / (CAUCHY_NODES * r ** k)

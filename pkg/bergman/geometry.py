"""
Jordan domains as ordered parametric boundary arcs.

Arc kinds have fixed closed-form parametrizations so every arc can be
evaluated both vectorized (numpy, double precision) and as a scalar at any
mpmath working precision. Circular arcs are parametrized over [0, 1] either
from a center/radius/start-turn or from exact endpoints plus a sweep, so a
closed chain of arcs closes at every working precision.
"""

import hashlib
import json
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .conf import get_setting
from .errors import BoundaryProximityError, ValidationError

logger = logging.getLogger(__name__)

ARC_KINDS = ("segment", "circle", "power_cusp", "series")
ARC_REQUIRED = {
    "segment": ("start", "end"),
    "circle": ("sweep",),
    "power_cusp": ("c", "p"),
    "series": ("coeffs",),
}
REAL_PARAMS = ("radius", "start_turn", "sweep", "c", "p", "sign", "k_min")
CLOSURE_TOLERANCE = 1e-14
SYMMETRY_TOLERANCE = 1e-12
ANGLE_TOLERANCE = 1e-6


def _two_pi(lib):
    return 2 * lib.pi


def _is_real(value) -> bool:
    if isinstance(value, (str, bytes, bool)):
        return False
    try:
        float(value)
    except (TypeError, ValueError):
        return False
    return True


@dataclass(frozen=True)
class ArcSpec:
    """
    One boundary arc.

    ``params`` depend on ``kind``:
      segment     start, end
      circle      center, radius, start_turn, sweep   (center form) or
                  start, end, sweep                    (chord form)
      power_cusp  c, p, sign     local curve x + i*sign*c*x**p, x in [t_start, t_end]
      series      coeffs, k_min  sum_j coeffs[j] * exp(2*pi*i*(k_min + j)*t)
    Sweeps are in turns (1 = full counterclockwise circle). The local curve
    is placed by ``shift + exp(i*rotation) * local`` and traversed backwards
    when ``reverse`` is set.
    """
    kind: str
    params: Dict[str, Any]
    t_start: float = 0.0
    t_end: float = 1.0
    reverse: bool = False
    shift: complex = 0j
    rotation: float = 0.0

    def __post_init__(self):
        if self.kind not in ARC_KINDS:
            raise ValidationError(f"unknown arc kind {self.kind!r}; expected one of {ARC_KINDS}")
        if not self.t_end > self.t_start:
            raise ValidationError(f"empty parameter interval [{self.t_start}, {self.t_end}]")
        required = ARC_REQUIRED[self.kind]
        if self.kind == "circle":
            chord = "center" not in self.params
            required += ("start", "end") if chord else ("center", "radius", "start_turn")
        missing = [key for key in required if key not in self.params]
        if missing:
            raise ValidationError(f"{self.kind} arc missing field {missing[0]!r}")
        for key in REAL_PARAMS:
            if key in self.params and not _is_real(self.params[key]):
                raise ValidationError(f"{self.kind} arc field {key!r} must be a real number, "
                                      f"got {self.params[key]!r}")

    # -- parametrization -------------------------------------------------

    def _local_param(self, t):
        return self.t_start + self.t_end - t if self.reverse else t

    def _circle_frame(self, lib):
        p = self.params
        theta = _two_pi(lib) * p['sweep']
        if 'center' in p:
            center = _as_lib_complex(p['center'], lib)
            first = center + p['radius'] * lib.exp(1j * _two_pi(lib) * p['start_turn'])
        else:
            first = _as_lib_complex(p['start'], lib)
            last = _as_lib_complex(p['end'], lib)
            rot = lib.exp(1j * theta)
            center = (first * rot - last) / (rot - 1)
        return center, first, theta

    def _local(self, t, lib):
        p = self.params
        if self.kind == "segment":
            start = _as_lib_complex(p['start'], lib)
            end = _as_lib_complex(p['end'], lib)
            return start + t * (end - start), (end - start) + 0 * t
        if self.kind == "circle":
            center, first, theta = self._circle_frame(lib)
            turn = lib.exp(1j * theta * t)
            return center + (first - center) * turn, 1j * theta * (first - center) * turn
        if self.kind == "power_cusp":
            c, power, sign = p['c'], p['p'], p.get('sign', 1)
            return t + 1j * sign * c * t ** power, 1 + 1j * sign * c * power * t ** (power - 1)
        # series
        k_min = p.get('k_min', 0)
        z = 0j * t
        dz = 0j * t
        for j, coeff in enumerate(p['coeffs']):
            k = k_min + j
            if coeff == 0:
                continue
            term = _as_lib_complex(coeff, lib) * lib.exp(1j * _two_pi(lib) * k * t)
            z = z + term
            dz = dz + 1j * _two_pi(lib) * k * term
        return z, dz

    def evaluate(self, t, lib=np) -> Tuple[Any, Any]:
        """Position and velocity at parameter ``t`` (array for numpy, scalar for mpmath)."""
        local_t = self._local_param(t)
        z, dz = self._local(local_t, lib)
        frame = lib.exp(1j * self.rotation) if self.rotation else 1
        if self.reverse:
            dz = -dz
        return _as_lib_complex(self.shift, lib) + frame * z, frame * dz

    def point(self, t) -> complex:
        z, _ = self.evaluate(np.asarray(t, dtype=float))
        return complex(z)

    @property
    def start_point(self) -> complex:
        return complex(self.evaluate(np.array(self.t_start))[0])

    @property
    def end_point(self) -> complex:
        return complex(self.evaluate(np.array(self.t_end))[0])

    def sample(self, count: int, include_end: bool = False) -> np.ndarray:
        t = np.linspace(self.t_start, self.t_end, count + 1)
        if not include_end:
            t = t[:-1]
        return np.asarray(self.evaluate(t)[0], dtype=complex)

    def length_estimate(self, count: int = 256) -> float:
        pts = self.sample(count, include_end=True)
        return float(np.abs(np.diff(pts)).sum())

    # -- metric queries --------------------------------------------------

    def distance(self, z: complex) -> float:
        """Distance from ``z`` to this arc."""
        if self.kind == "segment" and not self.rotation and not self.shift:
            a, b = complex(self.params['start']), complex(self.params['end'])
            ab = b - a
            s = ((z - a) * ab.conjugate()).real / abs(ab) ** 2
            s = min(1.0, max(0.0, s))
            return abs(z - (a + s * ab))
        if self.kind == "circle" and not self.rotation and not self.shift:
            center, first, theta = self._circle_frame(np)
            rel = (z - center) / (first - center)
            angle = math.atan2(rel.imag, rel.real)
            sweep = abs(theta)
            angle = angle if theta > 0 else -angle
            angle %= 2 * math.pi
            if angle <= sweep + 1e-15:
                return abs(abs(z - center) - abs(first - center))
            return min(abs(z - self.start_point), abs(z - self.end_point))
        return self._sampled_distance(z)

    def _sampled_distance(self, z: complex, count: int = 512) -> float:
        t = np.linspace(self.t_start, self.t_end, count + 1)
        pts = np.asarray(self.evaluate(t)[0], dtype=complex)
        i = int(np.argmin(np.abs(pts - z)))
        best = abs(pts[i] - z)

        def slope(s):
            zs, dzs = self.evaluate(np.array(s))
            return (np.conj(complex(zs) - z) * complex(dzs)).real

        # stationary points of the squared distance in the neighbouring cells
        for lo, hi in ((max(i - 1, 0), i), (i, min(i + 1, count))):
            if lo == hi:
                continue
            a, b = slope(t[lo]), slope(t[hi])
            if a < 0 < b:
                s = optimize.brentq(slope, t[lo], t[hi], xtol=1e-16)
                best = min(best, abs(complex(self.evaluate(np.array(s))[0]) - z))
        return float(best)

    def conjugate(self) -> "ArcSpec":
        """Mirror image in the real axis, traversed so orientation is preserved."""
        p = dict(self.params)
        if self.kind == "segment":
            p['start'], p['end'] = complex(p['start']).conjugate(), complex(p['end']).conjugate()
        elif self.kind == "circle":
            p['sweep'] = -p['sweep']
            if 'center' in p:
                p['center'] = complex(p['center']).conjugate()
                p['start_turn'] = -p['start_turn']
            else:
                p['start'] = complex(p['start']).conjugate()
                p['end'] = complex(p['end']).conjugate()
        elif self.kind == "power_cusp":
            p['sign'] = -p.get('sign', 1)
        else:
            coeffs = [complex(c).conjugate() for c in p['coeffs']]
            p['coeffs'] = coeffs[::-1]
            p['k_min'] = -(p.get('k_min', 0) + len(coeffs) - 1)
        return replace(self, params=p, reverse=not self.reverse,
                       shift=complex(self.shift).conjugate(), rotation=-self.rotation)

    def to_config(self) -> Dict[str, Any]:
        params = {key: _encode(value) for key, value in sorted(self.params.items())}
        return {
            'kind': self.kind,
            'params': params,
            't_start': self.t_start,
            't_end': self.t_end,
            'reverse': self.reverse,
            'shift': _encode(self.shift),
            'rotation': self.rotation,
        }


@dataclass(frozen=True)
class CuspAnnotation:
    """
    x^p-type interior zero angle at ``vertex``.

    ``axis`` is the direction (radians) of the local x-axis; the local
    coordinates of a boundary point z are x + iy = exp(-i*axis)*(z - vertex).
    Envelope: c1*|x|**P <= |y| <= c2*|x|**p for |x| <= x_check.
    """
    vertex: complex
    p: float
    P: float
    c1: float
    c2: float
    axis: float = 0.0
    x_check: float = 0.1

    def __post_init__(self):
        if not (self.P >= self.p > 1):
            raise ValidationError(f"cusp exponents need P >= p > 1, got p={self.p}, P={self.P}")
        if not (0 < self.c1 <= self.c2):
            raise ValidationError(f"cusp constants need 0 < c1 <= c2, got {self.c1}, {self.c2}")


@dataclass(frozen=True)
class CornerAnnotation:
    vertex: complex
    alpha: float

    @property
    def interior_angle(self) -> float:
        return self.alpha * math.pi


@dataclass(frozen=True)
class DomainSpec:
    arcs: Tuple[ArcSpec, ...]
    cusps: Tuple[CuspAnnotation, ...]
    corners: Tuple[CornerAnnotation, ...]
    z0: complex
    symmetric: bool = False
    gallery: Optional[str] = None
    gallery_params: Dict[str, Any] = field(default_factory=dict)
    id_hash: str = ""

    @property
    def singular_vertices(self) -> List[complex]:
        return [c.vertex for c in self.cusps] + [c.vertex for c in self.corners]

    @property
    def short_hash(self) -> str:
        return self.id_hash[:12]

    def to_config(self) -> Dict[str, Any]:
        """Canonical, JSON-ready serialization (the hash is computed over it)."""
        return {
            'arcs': [arc.to_config() for arc in self.arcs],
            'cusps': [{'vertex': _encode(c.vertex), 'p': c.p, 'P': c.P, 'c1': c.c1,
                       'c2': c.c2, 'axis': c.axis, 'x_check': c.x_check} for c in self.cusps],
            'corners': [{'vertex': _encode(c.vertex), 'alpha': c.alpha} for c in self.corners],
            'z0': _encode(self.z0),
            'symmetric': self.symmetric,
            'gallery': self.gallery,
            'gallery_params': {k: _encode(v) for k, v in sorted(self.gallery_params.items())},
        }


def _encode(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _decode_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        re, im = value
        return complex(float(re), float(im))
    return complex(value)


def _as_lib_complex(value, lib):
    if lib is mpmath:
        return mpmath.mpc(value)
    return value


def canonical_digest(payload: Dict[str, Any]) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Boundary queries
# ---------------------------------------------------------------------------

def boundary_point(domain: DomainSpec, arc_index: int, t: float) -> Tuple[complex, complex]:
    """Position and complex velocity of arc ``arc_index`` at parameter ``t``."""
    if not 0 <= arc_index < len(domain.arcs):
        raise ValidationError(f"arc index {arc_index} out of range 0..{len(domain.arcs) - 1}")
    arc = domain.arcs[arc_index]
    slack = 1e-14 * max(1.0, abs(arc.t_end - arc.t_start))
    if not (arc.t_start - slack <= t <= arc.t_end + slack):
        raise ValidationError(
            f"parameter {t} outside [{arc.t_start}, {arc.t_end}]", arc_index=arc_index)
    z, dz = arc.evaluate(np.array(float(t)))
    return complex(z), complex(dz)


def boundary_sample(domain: DomainSpec, count: Optional[int] = None,
                    return_arcs: bool = False):
    """
    ``count`` boundary points split between arcs by approximate length.

    Each arc contributes at least eight points and omits its end point
    (the start of the next arc).
    """
    count = count or get_setting('BOUNDARY_SAMPLES')
    lengths = np.array([arc.length_estimate(64) for arc in domain.arcs])
    shares = np.maximum(8, np.round(count * lengths / lengths.sum()).astype(int))
    points, owners = [], []
    for index, (arc, share) in enumerate(zip(domain.arcs, shares)):
        pts = arc.sample(int(share))
        points.append(pts)
        owners.append(np.full(pts.shape, index))
    points = np.concatenate(points)
    if return_arcs:
        return points, np.concatenate(owners)
    return points


def boundary_distance(domain: DomainSpec, z: complex) -> float:
    return min(arc.distance(complex(z)) for arc in domain.arcs)


def _winding_polygon(vertices: np.ndarray, points: np.ndarray, chunk: int = 256) -> np.ndarray:
    x0, y0 = vertices.real, vertices.imag
    nxt = np.roll(vertices, -1)
    x1, y1 = nxt.real, nxt.imag
    result = np.zeros(points.shape, dtype=int)
    for start in range(0, points.size, chunk):
        p = points[start:start + chunk]
        x, y = p.real[:, None], p.imag[:, None]
        is_left = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
        up = (y0 <= y) & (y1 > y) & (is_left > 0)
        down = (y0 > y) & (y1 <= y) & (is_left < 0)
        result[start:start + chunk] = up.sum(axis=1) - down.sum(axis=1)
    return result


def winding_numbers(domain: DomainSpec, points, samples: Optional[int] = None) -> np.ndarray:
    """Vectorized winding numbers on a dense boundary polygon (no proximity check)."""
    polygon = boundary_sample(domain, samples or get_setting('WINDING_SAMPLES'))
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    return _winding_polygon(polygon, pts)


def winding_number(domain: DomainSpec, z: complex, samples: Optional[int] = None) -> int:
    """Winding number of the boundary about ``z``: 1 inside, 0 outside."""
    distance = boundary_distance(domain, z)
    if distance <= 1e-12:
        raise BoundaryProximityError(f"point {z} lies within {distance:.1e} of the boundary")
    return int(winding_numbers(domain, [z], samples)[0])


def contains(domain: DomainSpec, points, margin: float = 0.0,
             samples: Optional[int] = None) -> np.ndarray:
    """Boolean mask of points inside ``domain`` and at least ``margin`` from its boundary."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    inside = winding_numbers(domain, pts, samples) == 1
    if margin > 0:
        for index in np.flatnonzero(inside):
            if boundary_distance(domain, pts[index]) < margin:
                inside[index] = False
    return inside


def diameter(domain: DomainSpec, samples: Optional[int] = None) -> float:
    pts = boundary_sample(domain, samples or get_setting('BOUNDARY_SAMPLES'))
    xy = np.column_stack([pts.real, pts.imag])
    hull = ConvexHull(xy)
    return float(pdist(xy[hull.vertices]).max())


def area(domain: DomainSpec) -> float:
    """Area from the boundary rule: (1/2i) * contour integral of conj(z) dz."""
    from .quadrature import build_rule, contour_integral

    rule = build_rule(domain)
    return float((contour_integral(rule, lambda z, zb: zb) / 2j).real)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_closure(arcs: Sequence[ArcSpec]) -> None:
    for index, arc in enumerate(arcs):
        following = arcs[(index + 1) % len(arcs)]
        gap = abs(arc.end_point - following.start_point)
        scale = max(1.0, abs(arc.end_point))
        if gap > CLOSURE_TOLERANCE * scale:
            raise ValidationError(
                f"boundary not closed: end of arc {index} misses start of arc "
                f"{(index + 1) % len(arcs)} by {gap:.2e}", arc_index=index)


def _orientation(a, b, c):
    return (b.real - a.real) * (c.imag - a.imag) - (b.imag - a.imag) * (c.real - a.real)


def find_self_intersection(points: np.ndarray, owners: np.ndarray,
                           chunk: int = 128) -> Optional[Tuple[int, int]]:
    """Return owning arc indices of the first pair of properly crossing sample segments."""
    a = points
    b = np.roll(points, -1)
    m = points.size
    scale = float(np.abs(points).max()) or 1.0
    eps = 1e-13 * scale * scale
    idx = np.arange(m)
    for start in range(0, m, chunk):
        i = idx[start:start + chunk][:, None]
        ai, bi = a[i], b[i]
        o1 = _orientation(ai, bi, a[None, :])
        o2 = _orientation(ai, bi, b[None, :])
        o3 = _orientation(a[None, :], b[None, :], ai)
        o4 = _orientation(a[None, :], b[None, :], bi)
        crossing = ((o1 > eps) & (o2 < -eps) | (o1 < -eps) & (o2 > eps)) & \
                   ((o3 > eps) & (o4 < -eps) | (o3 < -eps) & (o4 > eps))
        gap = np.abs(i - idx[None, :])
        crossing &= (gap > 1) & (gap < m - 1)
        hits = np.argwhere(crossing)
        if hits.size:
            row, col = hits[0]
            return int(owners[start + row]), int(owners[col])
    return None


def _local_coordinates(cusp: CuspAnnotation, z):
    w = np.exp(-1j * cusp.axis) * (np.asarray(z) - cusp.vertex)
    return w.real, w.imag


def cusp_local_samples(domain: DomainSpec, cusp: CuspAnnotation, per_end: int = 50) -> np.ndarray:
    """Boundary points approaching the cusp vertex geometrically from each adjacent arc end."""
    points = []
    for arc in domain.arcs:
        span = arc.t_end - arc.t_start
        offsets = 0.5 * span * np.logspace(0, -4, per_end)
        if abs(arc.start_point - cusp.vertex) < 1e-12:
            points.append(np.asarray(arc.evaluate(arc.t_start + offsets)[0], dtype=complex))
        if abs(arc.end_point - cusp.vertex) < 1e-12:
            points.append(np.asarray(arc.evaluate(arc.t_end - offsets)[0], dtype=complex))
    if not points:
        return np.array([], dtype=complex)
    pts = np.concatenate(points)
    x, _ = _local_coordinates(cusp, pts)
    keep = (np.abs(x) > 0) & (np.abs(x) <= cusp.x_check) & \
           (np.abs(pts - cusp.vertex) <= 2 * cusp.x_check)
    return pts[keep]


def check_cusp_envelope(domain: DomainSpec, cusp: CuspAnnotation) -> int:
    """Verify c1|x|^P <= |y| <= c2|x|^p on local samples; returns the sample count."""
    pts = cusp_local_samples(domain, cusp)
    if pts.size == 0:
        raise ValidationError(f"no boundary arc ends at cusp vertex {cusp.vertex}")
    x, y = _local_coordinates(cusp, pts)
    ax, ay = np.abs(x), np.abs(y)
    slack = 1e-9
    low = cusp.c1 * ax ** cusp.P * (1 - slack)
    high = cusp.c2 * ax ** cusp.p * (1 + slack)
    bad = np.flatnonzero((ay < low) | (ay > high))
    if bad.size:
        worst = pts[bad[0]]
        raise ValidationError(
            f"cusp envelope violated at {worst:.6g} (x={x[bad[0]]:.3e}, |y|={ay[bad[0]]:.3e})")
    return int(pts.size)


def corner_angle(domain: DomainSpec, vertex: complex) -> float:
    """Interior angle (radians) at a joint of two arcs, from one-sided tangents."""
    arcs = domain.arcs
    for index, arc in enumerate(arcs):
        if abs(arc.start_point - vertex) < 1e-12:
            previous = arcs[index - 1]
            _, d_in = previous.evaluate(np.array(previous.t_end))
            _, d_out = arc.evaluate(np.array(arc.t_start))
            turn = np.angle(complex(d_out) / complex(d_in))
            return float(math.pi - turn)
    raise ValidationError(f"no arc starts at corner vertex {vertex}")


def _check_symmetry(domain: DomainSpec) -> None:
    pts = boundary_sample(domain, 256)
    scale = max(1.0, float(np.abs(pts).max()))
    for z in pts:
        distance = boundary_distance(domain, z.conjugate())
        if distance > SYMMETRY_TOLERANCE * scale:
            raise ValidationError(
                f"domain marked symmetric but conj({z:.6g}) is {distance:.2e} from the boundary")


def validate_domain(domain: DomainSpec) -> DomainSpec:
    """Check every DomainSpec invariant; raise ValidationError on the first failure."""
    if not domain.arcs:
        raise ValidationError("domain has no arcs")
    _check_closure(domain.arcs)

    points, owners = boundary_sample(domain, get_setting('BOUNDARY_SAMPLES'), return_arcs=True)
    hit = find_self_intersection(points, owners)
    if hit is not None:
        raise ValidationError(f"boundary self-intersects (arcs {hit[0]} and {hit[1]})",
                              arc_index=hit[0])

    try:
        winding = winding_number(domain, domain.z0)
    except BoundaryProximityError as exc:
        raise ValidationError(f"base point z0 on the boundary: {exc}") from exc
    if winding == -1:
        raise ValidationError("boundary is negatively oriented about z0")
    if winding != 1:
        raise ValidationError(f"base point z0={domain.z0} lies outside the domain")

    for cusp in domain.cusps:
        check_cusp_envelope(domain, cusp)
    for corner in domain.corners:
        measured = corner_angle(domain, corner.vertex)
        if abs(measured - corner.interior_angle) > ANGLE_TOLERANCE:
            raise ValidationError(
                f"corner at {corner.vertex} has interior angle {measured:.9f}, "
                f"annotated {corner.interior_angle:.9f}")
    if domain.symmetric:
        _check_symmetry(domain)
    return domain


def _finalize(arcs, cusps=(), corners=(), z0=0j, symmetric=False,
              gallery=None, gallery_params=None) -> DomainSpec:
    draft = DomainSpec(arcs=tuple(arcs), cusps=tuple(cusps), corners=tuple(corners),
                       z0=complex(z0), symmetric=bool(symmetric), gallery=gallery,
                       gallery_params=dict(gallery_params or {}))
    domain = replace(draft, id_hash=canonical_digest(draft.to_config()))
    validate_domain(domain)
    logger.debug(f"built domain {gallery or 'custom'} ({domain.short_hash}) with {len(arcs)} arcs")
    return domain


# ---------------------------------------------------------------------------
# Gallery
# ---------------------------------------------------------------------------

def disk(radius: float = 1.0, center: complex = 0j, z0: Optional[complex] = None) -> DomainSpec:
    arc = ArcSpec("circle", {'center': complex(center), 'radius': float(radius),
                             'start_turn': 0.0, 'sweep': 1.0})
    z0 = complex(center) if z0 is None else complex(z0)
    return _finalize([arc], z0=z0, symmetric=complex(center).imag == 0, gallery="disk",
                     gallery_params={'radius': float(radius), 'center': complex(center)})


def ellipse(a: float = 1.0, b: float = 0.5, z0: complex = 0j) -> DomainSpec:
    if a <= 0 or b <= 0:
        raise ValidationError("ellipse semi-axes must be positive")
    arc = ArcSpec("series", {'coeffs': [complex((a - b) / 2), 0j, complex((a + b) / 2)],
                             'k_min': -1})
    return _finalize([arc], z0=z0, symmetric=True, gallery="ellipse",
                     gallery_params={'a': float(a), 'b': float(b)})


def square(half: float = 1.0, z0: complex = 0j) -> DomainSpec:
    h = float(half)
    vertices = [complex(h, -h), complex(h, h), complex(-h, h), complex(-h, -h)]
    arcs = [ArcSpec("segment", {'start': vertices[i], 'end': vertices[(i + 1) % 4]})
            for i in range(4)]
    corners = [CornerAnnotation(v, 0.5) for v in vertices]
    return _finalize(arcs, corners=corners, z0=z0, symmetric=True, gallery="square",
                     gallery_params={'half': h})


def lune(z0: complex = 1.5) -> DomainSpec:
    """
    Region inside |z-1| < 1 and outside |z-1/2| <= 1/2.

    The circles are tangent at 0; both horns of the crescent end there and
    the single cusp annotation (axis along the imaginary direction) covers
    them: the outer circle has |y| ~ x**2/2, the inner one |y| ~ x**2.
    """
    outer = ArcSpec("circle", {'center': 1 + 0j, 'radius': 1.0, 'start_turn': 0.5, 'sweep': 1.0})
    inner = ArcSpec("circle", {'center': 0.5 + 0j, 'radius': 0.5, 'start_turn': 0.5, 'sweep': -1.0})
    cusp = CuspAnnotation(vertex=0j, p=2.0, P=2.0, c1=0.45, c2=1.1, axis=math.pi / 2, x_check=0.2)
    return _finalize([outer, inner], cusps=[cusp], z0=z0, symmetric=True, gallery="lune")


def lens(xi: float = 0.6, alpha: float = 1 / math.sqrt(2), left: float = -1.0,
         z0: complex = 0j) -> DomainSpec:
    """
    Lens between two circular arcs through ``left`` and ``xi`` meeting at
    interior angle alpha*pi. Each arc subtends alpha*pi at its center.
    """
    if not 0 < alpha < 1:
        raise ValidationError(f"lens angle factor must lie in (0, 1), got {alpha}")
    if not left < xi:
        raise ValidationError("lens vertices must satisfy left < xi")
    sweep = alpha / 2
    lower = ArcSpec("circle", {'start': complex(left), 'end': complex(xi), 'sweep': sweep})
    upper = ArcSpec("circle", {'start': complex(xi), 'end': complex(left), 'sweep': sweep})
    corners = [CornerAnnotation(complex(left), alpha), CornerAnnotation(complex(xi), alpha)]
    return _finalize([lower, upper], corners=corners, z0=z0, symmetric=True, gallery="lens",
                     gallery_params={'xi': float(xi), 'alpha': float(alpha), 'left': float(left)})


def psi_image(coeffs: Sequence[complex] = (0, 1, 0.25)) -> DomainSpec:
    """Image of the unit disk under psi(w) = sum coeffs[k] w**k."""
    coeffs = [complex(c) for c in coeffs]
    if len(coeffs) < 2 or coeffs[1].imag != 0 or coeffs[1].real <= 0:
        raise ValidationError("psi'(0) = coeffs[1] must be real and positive")
    arc = ArcSpec("series", {'coeffs': coeffs, 'k_min': 0})
    symmetric = all(c.imag == 0 for c in coeffs)
    return _finalize([arc], z0=coeffs[0], symmetric=symmetric, gallery="psi",
                     gallery_params={'coeffs': coeffs})


def horn(p: float = 1.5, c: float = 0.5, z0: complex = 0.6) -> DomainSpec:
    """
    Outward-pointing cusp |y| < c*x**p, 0 < x < 1, closed by a half circle.
    """
    if not p > 1:
        raise ValidationError(f"horn exponent must exceed 1, got {p}")
    lower = ArcSpec("power_cusp", {'c': float(c), 'p': float(p), 'sign': -1})
    cap = ArcSpec("circle", {'start': complex(1, -c), 'end': complex(1, c), 'sweep': 0.5})
    upper = ArcSpec("power_cusp", {'c': float(c), 'p': float(p), 'sign': 1}, reverse=True)
    cusp = CuspAnnotation(vertex=0j, p=float(p), P=float(p), c1=float(c), c2=float(c),
                          axis=0.0, x_check=0.5)
    draft = DomainSpec(arcs=(lower, cap, upper), cusps=(), corners=(), z0=complex(z0))
    corners = [CornerAnnotation(v, corner_angle(draft, v) / math.pi)
               for v in (complex(1, -c), complex(1, c))]
    return _finalize([lower, cap, upper], cusps=[cusp], corners=corners, z0=z0, symmetric=True,
                     gallery="horn", gallery_params={'p': float(p), 'c': float(c)})


def spiked_lens(xi: float = 0.6, alpha: float = 1 / math.sqrt(2), tips: Sequence[float] = (),
                attach: Sequence[float] = (), left: float = -1.0, z0: complex = 0j) -> DomainSpec:
    """
    Lens whose right corner is extended by straight spikes to successive tips.

    Spike k leaves the current boundary at the points a distance ``attach[k]``
    (along the boundary) before the current corner and runs straight to
    ``tips[k]`` on the real axis, so each new domain contains the previous one
    and the segment between consecutive tips.
    """
    if len(attach) != len(tips):
        raise ValidationError("spiked_lens needs one attach distance per tip")
    base = lens(xi, alpha, left, z0)
    if not tips:
        return base
    corner = float(xi)
    lower_arc = base.arcs[0]
    pieces: List[ArcSpec] = [lower_arc]
    for tip, delta in zip(tips, attach):
        if not tip > corner:
            raise ValidationError(f"spike tip {tip} must lie right of the corner {corner}")
        last = pieces.pop()
        if last.kind == "circle":
            center, first, theta = last._circle_frame(np)
            radius = abs(first - center)
            keep = 1 - delta / (radius * abs(theta))
            if not 0 < keep < 1:
                raise ValidationError(f"attach distance {delta} does not fit on the lens arc")
            attach_point = complex(last.evaluate(np.array(keep))[0])
            pieces.append(ArcSpec("circle", {'start': last.params['start'], 'end': attach_point,
                                             'sweep': last.params['sweep'] * keep}))
        else:
            a, b = complex(last.params['start']), complex(last.params['end'])
            keep = 1 - delta / abs(b - a)
            if not 0 < keep < 1:
                raise ValidationError(f"attach distance {delta} does not fit on the spike")
            attach_point = a + keep * (b - a)
            pieces.append(ArcSpec("segment", {'start': a, 'end': attach_point}))
        pieces.append(ArcSpec("segment", {'start': attach_point, 'end': complex(tip)}))
        corner = float(tip)

    upper = []
    for piece in reversed(pieces):
        if piece.kind == "circle":
            upper.append(ArcSpec("circle", {'start': complex(piece.params['end']).conjugate(),
                                            'end': complex(piece.params['start']).conjugate(),
                                            'sweep': piece.params['sweep']}))
        else:
            upper.append(ArcSpec("segment", {'start': complex(piece.params['end']).conjugate(),
                                             'end': complex(piece.params['start']).conjugate()}))
    arcs = pieces + upper
    draft = DomainSpec(arcs=tuple(arcs), cusps=(), corners=(), z0=complex(z0))
    joints = [arc.start_point for arc in arcs]
    corners = [CornerAnnotation(v, corner_angle(draft, v) / math.pi) for v in joints]
    return _finalize(arcs, corners=corners, z0=z0, symmetric=True, gallery="spiked-lens",
                     gallery_params={'xi': float(xi), 'alpha': float(alpha), 'left': float(left),
                                     'tips': [float(t) for t in tips],
                                     'attach': [float(d) for d in attach]})


GALLERY = {
    'disk': disk,
    'ellipse': ellipse,
    'square': square,
    'lune': lune,
    'lens': lens,
    'psi': psi_image,
    'horn': horn,
    'spiked-lens': spiked_lens,
}


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

_ARC_FIELDS = ('kind', 't_start', 't_end', 'reverse', 'shift', 'rotation', 'params')


def _arc_from_config(index: int, entry: Dict[str, Any]) -> ArcSpec:
    try:
        raw = dict(entry.get('params', {}))
        raw.update({k: v for k, v in entry.items() if k not in _ARC_FIELDS})
        params = {}
        for key, value in raw.items():
            if key in ('start', 'end', 'center'):
                params[key] = _decode_complex(value)
            elif key == 'coeffs':
                params[key] = [_decode_complex(v) for v in value]
            else:
                params[key] = value
        return ArcSpec(kind=entry.get('kind'), params=params,
                       t_start=float(entry.get('t_start', 0.0)),
                       t_end=float(entry.get('t_end', 1.0)),
                       reverse=bool(entry.get('reverse', False)),
                       shift=_decode_complex(entry.get('shift', 0)),
                       rotation=float(entry.get('rotation', 0.0)))
    except ValidationError as exc:
        raise ValidationError(str(exc), arc_index=index) from exc
    except (TypeError, KeyError, ValueError) as exc:
        raise ValidationError(f"malformed arc entry: {_describe(exc)}", arc_index=index) from exc


def _describe(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return f"missing field {exc.args[0]!r}"
    return str(exc)


def _cusp_from_config(index: int, entry: Dict[str, Any]) -> CuspAnnotation:
    try:
        return CuspAnnotation(vertex=_decode_complex(entry['vertex']), p=float(entry['p']),
                              P=float(entry.get('P', entry['p'])), c1=float(entry['c1']),
                              c2=float(entry['c2']), axis=float(entry.get('axis', 0.0)),
                              x_check=float(entry.get('x_check', 0.1)))
    except ValidationError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise ValidationError(f"malformed cusp entry {index}: {_describe(exc)}") from exc


def _corner_from_config(index: int, entry: Dict[str, Any]) -> CornerAnnotation:
    try:
        return CornerAnnotation(vertex=_decode_complex(entry['vertex']), alpha=float(entry['alpha']))
    except ValidationError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise ValidationError(f"malformed corner entry {index}: {_describe(exc)}") from exc


def build_domain(config: Dict[str, Any]) -> DomainSpec:
    """
    Build and validate a DomainSpec from a structured description.

    ``config`` either names a gallery domain (``gallery`` plus its keyword
    parameters, optional ``z0``) or lists ``arcs`` explicitly together with
    ``z0``, ``cusps``, ``corners`` and ``symmetric``.
    """
    config = dict(config)
    if 'gallery' in config:
        name = config.pop('gallery')
        builder = GALLERY.get(name)
        if builder is None:
            raise ValidationError(f"unknown gallery domain {name!r}; choose from {sorted(GALLERY)}")
        kwargs = {}
        try:
            for key, value in config.items():
                if key in ('z0', 'center'):
                    kwargs[key] = _decode_complex(value)
                elif key == 'coeffs':
                    kwargs[key] = [_decode_complex(v) for v in value]
                else:
                    kwargs[key] = value
            return builder(**kwargs)
        except ValidationError:
            raise
        except (TypeError, KeyError, ValueError) as exc:
            raise ValidationError(
                f"bad parameters for gallery domain {name!r}: {_describe(exc)}") from exc

    if 'arcs' not in config:
        raise ValidationError("domain config needs either 'gallery' or 'arcs'")
    if 'z0' not in config:
        raise ValidationError("explicit domain config needs z0")
    arcs = [_arc_from_config(i, entry) for i, entry in enumerate(config['arcs'])]
    cusps = [_cusp_from_config(i, c) for i, c in enumerate(config.get('cusps', []))]
    corners = [_corner_from_config(i, c) for i, c in enumerate(config.get('corners', []))]
    try:
        z0 = _decode_complex(config['z0'])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed z0: {exc}") from exc
    return _finalize(arcs, cusps=cusps, corners=corners, z0=z0,
                     symmetric=bool(config.get('symmetric', False)))


def load_domain(path, z0: Optional[complex] = None) -> DomainSpec:
    """Read a TOML (.cfg/.toml) or JSON domain config; ``z0`` overrides the file."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"domain config {path} does not exist")
    text = path.read_text(encoding='utf-8')
    try:
        if path.suffix == '.json':
            config = json.loads(text)
        else:
            config = tomllib.loads(text)
    except ValueError as exc:
        raise ValidationError(f"malformed domain config {path}: {exc}") from exc
    if z0 is not None:
        config['z0'] = [complex(z0).real, complex(z0).imag]
    return build_domain(config)

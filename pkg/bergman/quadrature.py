"""
Boundary quadrature for contour integrals of f(z, conj z) dz.

Composite Gauss-Legendre on parameter panels, geometrically graded toward
every cusp and corner vertex. Rules carry their panel record so they can be
rebuilt at any supported working precision.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss

from .conf import get_setting
from .errors import NumericalError, ValidationError
from .geometry import ArcSpec, DomainSpec
from .precision import DOUBLE_BITS, check_precision, is_double, working_precision

logger = logging.getLogger(__name__)

VERTEX_MATCH = 1e-12


@dataclass(frozen=True)
class Panel:
    arc_index: int
    start: float
    end: float
    order: int


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Nodes and complex weights (Gauss weight times dz/dt) on the boundary.

    ``nodes``/``weights`` are always complex128; above 53 bits the working
    precision values are kept in ``mp_nodes``/``mp_weights``.
    """
    nodes: np.ndarray
    weights: np.ndarray
    panels: Tuple[Panel, ...]
    arcs: Tuple[ArcSpec, ...]
    order: int
    grading_ratio: float
    depth: int
    bits: int = DOUBLE_BITS
    mp_nodes: Optional[tuple] = None
    mp_weights: Optional[tuple] = None

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def length(self) -> float:
        return float(np.abs(self.weights).sum())

    def at_precision(self, bits: int) -> "QuadratureRule":
        """The same panels with nodes and weights recomputed at ``bits`` bits."""
        bits = check_precision(bits)
        if bits == self.bits:
            return self
        return _assemble(self.arcs, self.panels, self.order, self.grading_ratio, self.depth, bits)

    def conjugate(self) -> "QuadratureRule":
        """Mirror rule (positively oriented) for the conjugate domain."""
        mp_nodes = mp_weights = None
        if self.mp_nodes is not None:
            mp_nodes = tuple(mpmath.conj(z) for z in self.mp_nodes)
            mp_weights = tuple(-mpmath.conj(w) for w in self.mp_weights)
        return replace(self, nodes=np.conj(self.nodes), weights=-np.conj(self.weights),
                       arcs=tuple(arc.conjugate() for arc in self.arcs),
                       mp_nodes=mp_nodes, mp_weights=mp_weights)


# ---------------------------------------------------------------------------
# Gauss-Legendre
# ---------------------------------------------------------------------------

def _legendre(n: int, x):
    p_prev, p = 1, x
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1)
    return p, dp


@lru_cache(maxsize=None)
def gauss_legendre(order: int, bits: int = DOUBLE_BITS):
    """
    Gauss-Legendre nodes and weights on [-1, 1].

    Returns read-only numpy arrays at 53 bits; above that, tuples of mpf
    obtained by Newton refinement of the double-precision nodes.
    """
    if order < 1:
        raise ValidationError(f"Gauss order must be positive, got {order}")
    x, w = leggauss(order)
    if is_double(bits):
        x.setflags(write=False)
        w.setflags(write=False)
        return x, w
    if order == 1:
        return (mpmath.mpf(0),), (mpmath.mpf(2),)

    nodes, weights = [], []
    with working_precision(bits):
        tol = mpmath.ldexp(1, -bits - 4)
        for seed in x:
            t = mpmath.mpf(seed)
            for _ in range(50):
                p, dp = _legendre(order, t)
                step = p / dp
                t -= step
                if abs(step) < tol:
                    break
            else:
                raise NumericalError(f"Legendre root refinement stalled near {seed} (order {order})")
            _, dp = _legendre(order, t)
            nodes.append(t)
            weights.append(2 / ((1 - t * t) * dp * dp))
    return tuple(nodes), tuple(weights)


# ---------------------------------------------------------------------------
# Panels
# ---------------------------------------------------------------------------

def _graded_breaks(a: float, b: float, grade_start: bool, grade_end: bool,
                   ratio: float, depth: int) -> List[float]:
    """Break points of [a, b] refined geometrically toward the flagged ends."""
    if grade_start and grade_end:
        mid = 0.5 * (a + b)
        left = _graded_breaks(a, mid, True, False, ratio, depth)
        right = _graded_breaks(mid, b, False, True, ratio, depth)
        return left[:-1] + right
    h = b - a
    if grade_start:
        inner = [a + h * ratio ** k for k in range(depth, 0, -1)]
        return [a] + inner + [b]
    if grade_end:
        inner = [b - h * ratio ** k for k in range(1, depth + 1)]
        return [a] + inner + [b]
    return [a, b]


def _arc_panels(index: int, arc: ArcSpec, panels: int, grade_start: bool, grade_end: bool,
                ratio: float, depth: int, order: int) -> List[Panel]:
    edges = np.linspace(arc.t_start, arc.t_end, panels + 1)
    out = []
    for j in range(panels):
        first, last = j == 0, j == panels - 1
        breaks = _graded_breaks(float(edges[j]), float(edges[j + 1]),
                                grade_start and first, grade_end and last, ratio, depth)
        out.extend(Panel(index, lo, hi, order) for lo, hi in zip(breaks[:-1], breaks[1:]))
    return out


def _graded_ends(domain: DomainSpec) -> List[Tuple[bool, bool]]:
    vertices = domain.singular_vertices
    ends = []
    for arc in domain.arcs:
        start, end = arc.start_point, arc.end_point
        ends.append((any(abs(start - v) < VERTEX_MATCH for v in vertices),
                     any(abs(end - v) < VERTEX_MATCH for v in vertices)))
    return ends


def _assemble(arcs: Sequence[ArcSpec], panels: Sequence[Panel], order: int, ratio: float,
              depth: int, bits: int) -> QuadratureRule:
    node_parts, weight_parts = [], []
    for panel in panels:
        x, w = gauss_legendre(panel.order)
        arc = arcs[panel.arc_index]
        half = 0.5 * (panel.end - panel.start)
        t = panel.start + half * (x + 1)
        z, dz = arc.evaluate(t)
        node_parts.append(np.asarray(z, dtype=complex))
        weight_parts.append(np.asarray(half * w * dz, dtype=complex))
    nodes = np.concatenate(node_parts)
    weights = np.concatenate(weight_parts)

    mp_nodes = mp_weights = None
    if not is_double(bits):
        mp_nodes, mp_weights = [], []
        with working_precision(bits):
            for panel in panels:
                x, w = gauss_legendre(panel.order, bits)
                arc = arcs[panel.arc_index]
                start, end = mpmath.mpf(panel.start), mpmath.mpf(panel.end)
                half = (end - start) / 2
                for xk, wk in zip(x, w):
                    z, dz = arc.evaluate(start + half * (xk + 1), mpmath)
                    mp_nodes.append(z)
                    mp_weights.append(half * wk * dz)
        mp_nodes, mp_weights = tuple(mp_nodes), tuple(mp_weights)

    return QuadratureRule(nodes=nodes, weights=weights, panels=tuple(panels), arcs=tuple(arcs),
                          order=order, grading_ratio=ratio, depth=depth, bits=bits,
                          mp_nodes=mp_nodes, mp_weights=mp_weights)


def _check_knobs(order: int, panels_per_arc: int, ratio: float, depth: int) -> None:
    if order < 2:
        raise ValidationError(f"quadrature order must be at least 2, got {order}")
    if panels_per_arc < 1:
        raise ValidationError(f"panels per arc must be at least 1, got {panels_per_arc}")
    if not 0 < ratio < 1:
        raise ValidationError(f"grading ratio must lie in (0, 1), got {ratio}")
    if depth < 0:
        raise ValidationError(f"grading depth must be non-negative, got {depth}")


def build_rule(domain: DomainSpec, order: Optional[int] = None,
               panels_per_arc: Optional[int] = None, grading_ratio: Optional[float] = None,
               depth: Optional[int] = None, bits: int = DOUBLE_BITS) -> QuadratureRule:
    """Composite Gauss rule with panels graded toward cusp and corner vertices."""
    order = order or get_setting('QUADRATURE_ORDER')
    panels_per_arc = panels_per_arc or get_setting('PANELS_PER_ARC')
    ratio = grading_ratio or get_setting('GRADING_RATIO')
    depth = get_setting('GRADING_DEPTH') if depth is None else depth
    _check_knobs(order, panels_per_arc, ratio, depth)
    bits = check_precision(bits)

    panels: List[Panel] = []
    for index, (arc, (g0, g1)) in enumerate(zip(domain.arcs, _graded_ends(domain))):
        panels.extend(_arc_panels(index, arc, panels_per_arc, g0, g1, ratio, depth, order))
    rule = _assemble(domain.arcs, panels, order, ratio, depth, bits)
    logger.debug(f"rule for {domain.short_hash}: {len(panels)} panels, {rule.size} nodes, {bits} bits")
    return rule


def arc_rule(arc: ArcSpec, order: int, panels: int = 1, grade_start: bool = False,
             grade_end: bool = False, grading_ratio: float = 0.5, depth: int = 0,
             bits: int = DOUBLE_BITS) -> QuadratureRule:
    """Rule on a single arc (open contour)."""
    _check_knobs(order, panels, grading_ratio, depth)
    record = _arc_panels(0, arc, panels, grade_start, grade_end, grading_ratio, depth, order)
    return _assemble((arc,), record, order, grading_ratio, depth, check_precision(bits))


def _panel_order(phase: float, order: int, bits: int) -> int:
    """Smallest Gauss order whose error bound for exp(i*phase*x) on [-1, 1] is below 2**-bits."""
    target = -(bits + 10) * math.log(2)
    for n in range(2, order + 1):
        if phase == 0 or 2 * n * math.log(math.e * phase / (4 * n)) < target:
            return n
    return order


def adapted_rule(domain: DomainSpec, degree: int, bits: int = DOUBLE_BITS,
                 grading_ratio: Optional[float] = None, depth: Optional[int] = None) -> QuadratureRule:
    """
    Rule sized for integrands z**m * conj(z)**(n+1) with m, n <= ``degree``.

    The order grows with the precision and the panel count with the phase
    variation of the integrand along each arc. Graded panels on arcs that
    are analytic up to their ends get the lowest order meeting the bound;
    power-cusp arcs keep the full order.
    """
    bits = check_precision(bits)
    order = max(get_setting('QUADRATURE_ORDER'), math.ceil(bits / 4))
    ratio = grading_ratio or get_setting('GRADING_RATIO')
    depth = get_setting('GRADING_DEPTH') if depth is None else depth
    frequency = 2 * degree + 2
    omega_max = 4 * order / math.e * 2 ** (-(bits + 10) / (2 * order))

    panels: List[Panel] = []
    for index, (arc, (g0, g1)) in enumerate(zip(domain.arcs, _graded_ends(domain))):
        pts = arc.sample(256, include_end=True)
        turning = float(np.abs(np.diff(pts)).sum()) / max(float(np.abs(pts).max()), 1e-300)
        count = max(get_setting('PANELS_PER_ARC'),
                    math.ceil(frequency * turning / (2 * omega_max)))
        span = arc.t_end - arc.t_start
        for panel in _arc_panels(index, arc, count, g0, g1, ratio, depth, order):
            if arc.kind != "power_cusp":
                phase = frequency * turning * (panel.end - panel.start) / (2 * span)
                panel = replace(panel, order=_panel_order(phase, order, bits))
            panels.append(panel)
    rule = _assemble(domain.arcs, panels, order, ratio, depth, bits)
    logger.debug(f"adapted rule for {domain.short_hash}, degree {degree}: "
                 f"{len(panels)} panels, {rule.size} nodes, order {order}")
    return rule


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def contour_integral(rule: QuadratureRule, f: Callable):
    """
    Sum of f(node, conj node) * weight.

    ``f`` is called once with node arrays on a 53-bit rule and once per node
    with mpc scalars otherwise (the result is then an mpc).
    """
    if rule.mp_nodes is None:
        values = np.asarray(f(rule.nodes, np.conj(rule.nodes)), dtype=complex)
        values = np.broadcast_to(values, rule.nodes.shape)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise NumericalError(f"integrand not finite at node {rule.nodes[bad[0]]}")
        return complex(np.dot(values, rule.weights))

    with working_precision(rule.bits):
        values = []
        for z in rule.mp_nodes:
            value = mpmath.mpc(f(z, mpmath.conj(z)))
            if not mpmath.isfinite(value):
                raise NumericalError(f"integrand not finite at node {complex(z)}")
            values.append(value)
        return mpmath.fdot(values, rule.mp_weights)


def rule_digest(rule: QuadratureRule) -> str:
    """Digest of the rule construction (not of its floating-point output)."""
    payload = {
        'arcs': [arc.to_config() for arc in rule.arcs],
        'panels': [[p.arc_index, p.start, p.end, p.order] for p in rule.panels],
        'order': rule.order,
        'grading_ratio': rule.grading_ratio,
        'depth': rule.depth,
    }
    text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode()).hexdigest()


def write_rule_csv(rule: QuadratureRule, path) -> None:
    frame = pd.DataFrame({
        'node_re': rule.nodes.real,
        'node_im': rule.nodes.imag,
        'weight_re': rule.weights.real,
        'weight_im': rule.weights.imag,
    })
    frame.to_csv(path, index=False, float_format='%.17g')


# ---------------------------------------------------------------------------
# Discrete area measures (interior nodes, positive weights)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AreaRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.points.size)

    def integrate(self, values) -> complex:
        return complex(np.dot(np.asarray(values), self.weights))


def _unit_gauss(order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    return 0.5 * (x + 1), 0.5 * w


def star_area_rule(domain: DomainSpec, rule: Optional[QuadratureRule] = None,
                   radial_order: int = 16) -> AreaRule:
    """
    Area rule from the boundary rule by radial Gauss along segments z0 -> node.

    dA = s * Im(conj(z - z0) dz) ds, which needs the domain star-shaped
    about z0.
    """
    rule = rule or build_rule(domain)
    z0 = domain.z0
    rel = rule.nodes - z0
    fan = (np.conj(rel) * rule.weights).imag
    scale = float(np.abs(fan).max())
    if fan.min() < -1e-12 * scale:
        raise ValidationError(f"domain is not star-shaped about z0={z0}")
    fan = np.clip(fan, 0.0, None)
    s, ws = _unit_gauss(radial_order)
    points = z0 + np.outer(rel, s)
    weights = np.outer(fan, ws * s)
    keep = weights > 0
    return AreaRule(points[keep], weights[keep])


def polar_area_rule(radius: float = 1.0, center: complex = 0j, radial: int = 64,
                    angular: int = 64) -> AreaRule:
    r, wr = _unit_gauss(radial)
    r, wr = radius * r, radius * wr
    theta = 2 * np.pi * np.arange(angular) / angular
    points = center + np.outer(r, np.exp(1j * theta))
    weights = np.outer(wr * r, np.full(angular, 2 * np.pi / angular))
    return AreaRule(points.ravel(), weights.ravel())


def lune_area_rule(order: int = 16, levels: int = 30) -> AreaRule:
    """
    Area rule for the lune pulled back through z = 1/s.

    The lune is the image of the strip 1/2 < Re s < 1; dA_z = |s|**-4 dA_s.
    The strip is cut at |Im s| = 2**levels into cells [0, 1] and
    [2**k, 2**(k+1)], mirrored.
    """
    u, wu = _unit_gauss(order)
    x, wx = 0.5 + 0.5 * u, 0.5 * wu
    cells_y, cells_w = [u], [wu]
    for k in range(levels):
        cells_y.append(2.0 ** k * (1 + u))
        cells_w.append(2.0 ** k * wu)
    y = np.concatenate(cells_y)
    wy = np.concatenate(cells_w)
    y = np.concatenate([-y[::-1], y])
    wy = np.concatenate([wy[::-1], wy])
    s = x[:, None] + 1j * y[None, :]
    weights = np.outer(wx, wy) * np.abs(s) ** -4
    return AreaRule((1 / s).ravel(), weights.ravel())

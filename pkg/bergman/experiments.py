"""
Quantitative probes of Bieberbach-polynomial behaviour.

Sup-norm error curves and their q**(n**r) rate fit, exponential decay of
phi at a cusp, growth of |B_n(x0)| beyond a non-analytic corner, and a
finite Keldysh-style iteration of spiked lenses with re-checkable
certificates. Sup norms are sample based.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import stats

from .bieberbach import (BieberbachPoly, bieberbach_from_basis, bieberbach_values_on_ray,
                         evaluate)
from .cache import GramCache
from .conf import get_setting
from .errors import (ContainmentError, DegreeBudgetExceeded, PrecisionError, ReferenceMapMissing,
                     ValidationError)
from .geometry import DomainSpec, boundary_sample, contains, lens, spiked_lens
from .gram import compute_gram
from .orthopoly import OrthoBasis, eval_K, orthonormalize_cholesky
from .performance import performance_monitor
from .quadrature import adapted_rule, rule_digest
from .refmaps import ReferenceMap, green_disk_exterior

logger = logging.getLogger(__name__)

R_GRID = tuple(round(0.05 * j, 2) for j in range(1, 20))
CUSP_TS = tuple(0.2 * 2.0 ** -j for j in range(7))


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def basis_for(domain: DomainSpec, degree: int, bits: Optional[int] = None,
              cache: Optional[GramCache] = None) -> OrthoBasis:
    """Orthonormal basis to ``degree`` from an adapted rule, through the Gram cache if given."""
    bits = bits or get_setting('DEFAULT_PRECISION')
    rule = adapted_rule(domain, degree, bits)

    def compute():
        return compute_gram(domain, rule, degree, bits)

    if cache is None:
        gram = compute()
    else:
        gram = cache.get_or_compute(domain.id_hash, degree, bits, rule_digest(rule), compute)
    return orthonormalize_cholesky(gram)


# ---------------------------------------------------------------------------
# Sup-norm error and rate fit
# ---------------------------------------------------------------------------

def interior_probe_points(domain: DomainSpec, boundary: int = 2048, interior: int = 512,
                          offset: float = 1e-3, seed: int = 0) -> np.ndarray:
    """
    Boundary points pushed inward along the normal by ``offset`` times the
    boundary scale, plus uniform random interior points (fixed seed).
    """
    lengths = np.array([arc.length_estimate(64) for arc in domain.arcs])
    scale = float(lengths.sum()) / (2 * math.pi)
    shares = np.maximum(8, np.round(boundary * lengths / lengths.sum()).astype(int))
    pushed = []
    for arc, share in zip(domain.arcs, shares):
        t = arc.t_start + (arc.t_end - arc.t_start) * (np.arange(share) + 0.5) / share
        z, dz = arc.evaluate(t)
        pushed.append(z + offset * scale * 1j * dz / np.abs(dz))
    pushed = np.concatenate(pushed)
    pushed = pushed[contains(domain, pushed)]

    outline = boundary_sample(domain, 1024)
    low = complex(outline.real.min(), outline.imag.min())
    high = complex(outline.real.max(), outline.imag.max())
    rng = np.random.default_rng(seed)
    found: List[np.ndarray] = []
    total = 0
    while total < interior:
        u = rng.random((2, 2 * interior))
        candidates = low.real + u[0] * (high - low).real + 1j * (low.imag + u[1] * (high - low).imag)
        inside = candidates[contains(domain, candidates)]
        found.append(inside)
        total += inside.size
    return np.concatenate([pushed] + found)[:pushed.size + interior]


@performance_monitor.time_function('sup_error_curve')
def sup_error_curve(domain: DomainSpec, basis: OrthoBasis, reference: Optional[ReferenceMap],
                    n_list: Sequence[int], points: Optional[np.ndarray] = None) -> List[Tuple[int, float]]:
    """[(n, max |phi - B_n|)] over the probe points, n ascending."""
    if reference is None:
        raise ReferenceMapMissing(f"domain {domain.short_hash} has no reference map")
    n_list = sorted(int(n) for n in n_list)
    points = interior_probe_points(domain) if points is None else np.asarray(points, dtype=complex)
    exact = reference.phi(points)
    curve = []
    for n in n_list:
        poly = bieberbach_from_basis(basis, n, reference.z0)
        error = float(np.abs(exact - evaluate(poly, points)).max())
        curve.append((n, error))
        logger.debug(f"sup error n={n}: {error:.3e}")
    return curve


@dataclass(frozen=True)
class RateFit:
    """e_n ~ C * q**(n**r)."""
    C: float
    q: float
    r: float
    r_squared: float
    n_min: int
    n_max: int

    def predict(self, n) -> np.ndarray:
        return self.C * self.q ** (np.asarray(n, dtype=float) ** self.r)


def fit_rate(curve: Sequence[Tuple[int, float]], r_grid: Sequence[float] = R_GRID) -> RateFit:
    """Grid search over r; for each r regress log e_n on n**r and keep the best R^2."""
    usable = [(n, e) for n, e in curve if 1e-14 < e < 1]
    if len(usable) < 6:
        raise ValidationError(f"rate fit needs at least 6 errors in (1e-14, 1), got {len(usable)}")
    n = np.array([u[0] for u in usable], dtype=float)
    log_e = np.log([u[1] for u in usable])

    best = None
    for r in r_grid:
        fit = stats.linregress(n ** r, log_e)
        if fit.slope >= 0:
            continue
        r_squared = fit.rvalue ** 2
        if best is None or r_squared > best.r_squared:
            best = RateFit(C=math.exp(fit.intercept), q=math.exp(fit.slope), r=float(r),
                           r_squared=float(r_squared), n_min=int(n.min()), n_max=int(n.max()))
    if best is None:
        raise ValidationError("errors do not decrease; no rate to fit")
    logger.info(f"rate fit C={best.C:.4g} q={best.q:.4g} r={best.r:.2f} R^2={best.r_squared:.4f}")
    return best


# ---------------------------------------------------------------------------
# Cusp decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CuspFit:
    """|phi(t) - phi(vertex)| ~ C * exp(-c / |t - vertex|**(p-1))."""
    C: float
    c: float
    p: float
    r_squared: float
    points: int


def log_magnitude(value) -> Optional[float]:
    if isinstance(value, (mpmath.mpf, mpmath.mpc)):
        return float(mpmath.log(abs(value))) if value != 0 else None
    value = abs(float(value))
    return math.log(value) if value > 0 and math.isfinite(value) else None


def fit_decay(distances: Sequence[float], gaps: Sequence, p: float) -> CuspFit:
    """Regress log gap on -distance**-(p-1); zero (underflowed) gaps are dropped."""
    xs, ys = [], []
    for d, gap in zip(distances, gaps):
        log_gap = log_magnitude(gap)
        if log_gap is None or not d > 0:
            continue
        xs.append(-float(d) ** -(p - 1))
        ys.append(log_gap)
    if len(xs) < 4:
        raise PrecisionError(f"only {len(xs)} decay samples above the working precision")
    fit = stats.linregress(xs, ys)
    return CuspFit(C=math.exp(fit.intercept), c=float(fit.slope), p=float(p),
                   r_squared=float(fit.rvalue ** 2), points=len(xs))


def fit_cusp_decay(reference: ReferenceMap, approach: str = "upper", p: float = 2.0,
                   ts: Sequence[float] = CUSP_TS, bits: int = 4096) -> CuspFit:
    """Decay fit along one of the reference map's approach paths."""
    distances, gaps = reference.approach_values(approach, ts, bits)
    fit = fit_decay(distances, gaps, p)
    logger.info(f"cusp decay {reference.kind}/{approach} p={p}: "
                f"c={fit.c:.4g} C={fit.C:.4g} R^2={fit.r_squared:.5f}")
    return fit


# ---------------------------------------------------------------------------
# Divergence beyond a corner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DivergenceReport:
    x0: float
    xi: float
    values: List[Tuple[int, float]]
    sups: List[Tuple[int, float]]
    growth: float
    verdict: str


def rightmost_point(domain: DomainSpec) -> float:
    starts = [arc.start_point.real for arc in domain.arcs]
    return float(max(max(starts), boundary_sample(domain, 4096).real.max()))


@performance_monitor.time_function('divergence_probe')
def divergence_probe(domain: DomainSpec, basis: OrthoBasis, x0: float,
                     N_list: Sequence[int]) -> DivergenceReport:
    """
    |B_n(x0)| for n up to max(N_list) and sup_{n<=N} |B_n(x0)| per N.

    Verdict: growth factor (last sup / first sup) >= 10 is "diverging",
    below 2 "bounded", otherwise "inconclusive".
    """
    if not domain.symmetric:
        raise ValidationError("divergence probe needs a domain symmetric about the real axis")
    xi = rightmost_point(domain)
    if not x0 > xi:
        raise ValidationError(f"probe point x0={x0} must lie right of the vertex xi={xi:.15g}")
    N_list = sorted(int(N) for N in N_list)
    if not N_list:
        raise ValidationError("divergence probe needs at least one N")
    bad = [N for N in N_list if not 1 <= N <= basis.degree + 1]
    if bad:
        raise ValidationError(f"N must lie in 1..{basis.degree + 1} for a degree-{basis.degree} "
                              f"basis, got {bad}")
    n_max = N_list[-1]
    tolerance = get_setting('ORTHONORMALITY_TOLERANCE')
    if basis.residual > tolerance:
        raise PrecisionError(f"basis orthonormality residual {basis.residual:.2e} exceeds "
                             f"{tolerance:.0e} at degree {basis.degree}; raise the precision")
    magnitudes = bieberbach_values_on_ray(basis, domain.z0, x0, n_max)
    running = np.maximum.accumulate(magnitudes)
    sups = [(N, float(running[N - 1])) for N in N_list]
    growth = sups[-1][1] / sups[0][1]
    if growth >= 10:
        verdict = "diverging"
    elif growth < 2:
        verdict = "bounded"
    else:
        verdict = "inconclusive"
    logger.info(f"divergence probe at x0={x0}: sup grows by {growth:.3g} "
                f"from N={N_list[0]} to N={n_max} ({verdict})")
    return DivergenceReport(x0=float(x0), xi=xi,
                            values=[(n + 1, float(v)) for n, v in enumerate(magnitudes)],
                            sups=sups, growth=float(growth), verdict=verdict)


# ---------------------------------------------------------------------------
# Keldysh iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KeldyshStage:
    stage: int
    domain: DomainSpec
    xi_next: float
    n: int
    value: float
    target: float
    poly: BieberbachPoly
    stability_bound: float
    stable: bool

    @property
    def certified(self) -> bool:
        return self.value > self.target

    def to_dict(self) -> dict:
        return {
            'stage': self.stage,
            'domain_hash': self.domain.id_hash,
            'xi_next': self.xi_next,
            'n': self.n,
            'value': self.value,
            'target': self.target,
            'certified': self.certified,
            'stability_bound': self.stability_bound,
            'stable': self.stable,
            'coeffs': [[c.real, c.imag] for c in self.poly.coeffs],
        }


def recheck_certificate(stage: KeldyshStage) -> bool:
    """Re-evaluate the stored polynomial at the stored point."""
    return abs(evaluate(stage.poly, stage.xi_next)) > stage.target


def disk_samples(radius: float = 1.0, radial: int = 16, angular: int = 32) -> np.ndarray:
    r = radius * np.arange(1, radial + 1) / radial
    theta = 2 * np.pi * np.arange(angular) / angular
    return np.concatenate([[0j], (r[:, None] * np.exp(1j * theta)[None, :]).ravel()])


def bieberbach_stability(basis_a: OrthoBasis, basis_b: OrthoBasis, n_max: int, z0: complex,
                         samples: Optional[np.ndarray] = None) -> float:
    """max over n <= n_max and the samples of |B_n^a - B_n^b|."""
    points = disk_samples() if samples is None else np.asarray(samples, dtype=complex)
    worst = 0.0
    for n in range(1, n_max + 1):
        a = evaluate(bieberbach_from_basis(basis_a, n, z0), points)
        b = evaluate(bieberbach_from_basis(basis_b, n, z0), points)
        worst = max(worst, float(np.abs(a - b).max()))
    return worst


def check_containment(inner: DomainSpec, outer: DomainSpec, segment: Tuple[float, float]) -> None:
    """Raise ContainmentError unless ``outer`` holds ``inner`` and the open real segment."""
    rim = boundary_sample(inner, 1024)
    probe = inner.z0 + (1 - 1e-6) * (rim - inner.z0)
    a, b = segment
    track = a + (b - a) * np.linspace(0.01, 0.99, 99)
    points = np.concatenate([probe, track.astype(complex)])
    inside = contains(outer, points)
    if not inside.all():
        worst = points[np.flatnonzero(~inside)[0]]
        raise ContainmentError(f"point {worst:.6g} of the previous stage lies outside the next domain")


def _attach_distance(stage: int, tip: float, corners: Sequence[float]) -> float:
    corner = corners[-1]
    if stage == 1:
        return min(0.1, 0.5 * (tip - corner))
    return 0.5 * (corner - corners[-2])


@performance_monitor.time_function('keldysh_iterate')
def keldysh_iterate(stages: int, xi: float = 0.6, alpha: float = 1 / math.sqrt(2),
                    tip_grid: int = 9, budget: Optional[int] = None, bits: Optional[int] = None,
                    cache: Optional[GramCache] = None) -> List[KeldyshStage]:
    """
    Stage m starts from G_m (the lens for m = 1), takes the smallest grid tip
    xi_{m+1} in (xi_m, 1) where some B_{n,m} with n <= budget exceeds 2m at
    the tip, and builds G_{m+1} with a spike out to that tip. The stability
    bound between B_{n,m} and B_{n,m+1} (n <= n_m) is measured and recorded.
    """
    if not 0 <= stages <= 3:
        raise ValidationError(f"the iteration runs 0 to 3 stages, got {stages}")
    if stages == 0:
        return []
    budget = budget or get_setting('KELDYSH_DEGREE_BUDGET')
    bits = bits or get_setting('DIVERGENCE_PRECISION')
    corners = [float(xi)]
    tips: List[float] = []
    attach: List[float] = []
    domain = lens(xi, alpha)
    basis = basis_for(domain, budget - 1, bits, cache)
    results = []

    for m in range(1, stages + 1):
        target = 2.0 * m
        corner = corners[-1]
        candidates = corner + (1 - corner) * np.arange(1, tip_grid + 1) / (tip_grid + 1)
        found = None
        best = 0.0
        for tip in candidates:
            magnitudes = bieberbach_values_on_ray(basis, domain.z0, float(tip), budget)
            hits = np.flatnonzero(magnitudes > target)
            best = max(best, float(magnitudes.max()))
            if hits.size:
                found = (float(tip), int(hits[0]) + 1)
                break
        if found is None:
            raise DegreeBudgetExceeded(
                f"stage {m}: no n <= {budget} reaches |B_n| > {target:g} on the tip grid "
                f"(largest value {best:.4g})")
        tip, n_m = found
        poly = bieberbach_from_basis(basis, n_m, domain.z0)
        value = abs(evaluate(poly, tip))

        tips.append(tip)
        attach.append(_attach_distance(m, tip, corners))
        corners.append(tip)
        next_domain = spiked_lens(xi, alpha, tips=tips, attach=attach, z0=domain.z0)
        check_containment(domain, next_domain, (corner, tip))
        next_basis = basis_for(next_domain, budget - 1, bits, cache)
        bound = bieberbach_stability(basis, next_basis, n_m, domain.z0)
        stable = bound < 2.0 ** -(m + 1)
        logger.info(f"stage {m}: tip {tip:.6g}, n={n_m}, |B_n|={value:.6g} > {target:g}; "
                    f"stability bound {bound:.3e} ({'met' if stable else 'not met'})")
        results.append(KeldyshStage(stage=m, domain=domain, xi_next=tip, n=n_m, value=float(value),
                                    target=target, poly=poly, stability_bound=bound, stable=stable))
        domain, basis = next_domain, next_basis
    return results


# ---------------------------------------------------------------------------
# Root asymptotics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootAsymptotics:
    n: int
    x: float
    nth_root: float
    target: float

    @property
    def relative_error(self) -> float:
        return abs(self.nth_root - self.target) / self.target


def root_asymptotics(basis: OrthoBasis, x: float, n: int,
                     green: Callable[[float], float] = green_disk_exterior) -> RootAsymptotics:
    """|K_n(x)|**(1/n) against exp(g(x, inf))."""
    if n < 1:
        raise ValidationError("root asymptotics need n >= 1")
    value = abs(eval_K(basis, n, complex(x)))
    return RootAsymptotics(n=n, x=float(x), nth_root=value ** (1 / n), target=math.exp(green(x)))


def sup_norm_root(basis: OrthoBasis, domain: DomainSpec, n: int,
                  samples: Optional[int] = None) -> float:
    """||K_n||_inf ** (1/n) over boundary samples."""
    if n < 1:
        raise ValidationError("sup-norm root needs n >= 1")
    points = boundary_sample(domain, samples or 4 * get_setting('BOUNDARY_SAMPLES'))
    return float(np.abs(eval_K(basis, n, points)).max() ** (1 / n))

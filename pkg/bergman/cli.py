"""
Command-line front end.

``run(argv)`` parses a subcommand, loads the domain config, computes through
the Gram cache and writes ``<command>-<hash>-<N>.{csv,json}`` artifacts.
Exit status: 0 success, 1 validation error, 2 numerical failure.
"""

import argparse
import logging
import math
import sys
import traceback
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .artifacts import aggregate_reports, artifact_stem, write_json, write_pair, write_table
from .bieberbach import bieberbach_from_basis, evaluate, solve_extremal
from .cache import GramCache
from .conf import SUPPORTED_PRECISIONS, get_setting
from .errors import BergmanError, NumericalError, ReferenceMapMissing, ValidationError
from .experiments import (CUSP_TS, divergence_probe, fit_cusp_decay, fit_rate, keldysh_iterate,
                          log_magnitude, recheck_certificate, sup_error_curve)
from .geometry import GALLERY, area, boundary_sample, diameter, load_domain
from .gram import compute_gram, write_gram_csv
from .orthopoly import (interior_measure, orthonormalize_arnoldi, orthonormalize_cholesky,
                        write_basis_csv, zeros_in_hull_check)
from .quadrature import adapted_rule, build_rule, rule_digest
from .refmaps import reference_for

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    domain_path: Optional[str] = None
    degree: int = 1
    precision_bits: int = 106
    order: Optional[int] = None
    panels: Optional[int] = None
    grading: Optional[float] = None
    depth: Optional[int] = None
    z0: Optional[complex] = None
    output_dir: str = 'artifacts'
    cache_dir: str = '.gram_cache'

    def validate(self) -> "RunConfig":
        if self.domain_path is not None and not Path(self.domain_path).exists():
            raise ValidationError(f"domain config {self.domain_path} does not exist")
        if self.degree < 1:
            raise ValidationError(f"degree must be at least 1, got {self.degree}")
        if self.precision_bits not in SUPPORTED_PRECISIONS:
            raise ValidationError(
                f"precision {self.precision_bits} not supported; choose one of {SUPPORTED_PRECISIONS}")
        return self

    @property
    def explicit_rule(self) -> bool:
        return any(v is not None for v in (self.order, self.panels, self.grading, self.depth))

    def to_dict(self) -> Dict:
        data = asdict(self)
        data.pop('output_dir')
        data.pop('cache_dir')
        return data


class ArgumentParser(argparse.ArgumentParser):
    """Raise instead of exiting so bad flags map to the validation exit code."""

    def error(self, message):
        raise ValidationError(message)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _complex_list(text: str) -> List[complex]:
    try:
        return [complex(v.replace(' ', '')) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='bieberbach',
                            description='Bieberbach polynomials and area-orthonormal polynomials')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', parser_class=ArgumentParser)
    commands.required = True

    def add(name, help_text, domain=True, degree=False):
        sub = commands.add_parser(name, help=help_text)
        if domain:
            sub.add_argument('--domain', dest='domain_path', required=name != 'domains',
                             help='domain config (.cfg/.toml or .json)')
            sub.add_argument('--z0', type=complex, help='override the base point')
        if degree:
            sub.add_argument('--degree', type=int, help='polynomial degree N')
        sub.add_argument('--precision', dest='precision_bits', type=int,
                         help='working precision in bits (53, 106 or 212)')
        sub.add_argument('--order', type=int, help='Gauss-Legendre order per panel')
        sub.add_argument('--panels', type=int, help='panels per arc')
        sub.add_argument('--grading', type=float, help='geometric grading ratio')
        sub.add_argument('--depth', type=int, help='grading depth')
        sub.add_argument('--output', dest='output_dir', help='artifact directory')
        sub.add_argument('--cache-dir', dest='cache_dir', help='Gram cache directory')
        return sub

    add('domains', 'validate and describe a domain (or list the gallery)')
    add('gram', 'Gram matrix of monomials', degree=True)
    sub = add('basis', 'area-orthonormal polynomials', degree=True)
    sub.add_argument('--method', choices=('cholesky', 'arnoldi'), default='cholesky')
    sub.add_argument('--hull', action='store_true', help='check zeros against the convex hull')
    sub = add('bieberbach', 'Bieberbach polynomial B_n', degree=True)
    sub.add_argument('--n', type=int, required=True)
    sub.add_argument('--method', choices=('formula', 'extremal'), default='formula')
    sub.add_argument('--eval', type=_complex_list, default=[], help='points to evaluate B_n at')
    for name, help_text in (('error-curve', 'sup-norm error against the reference map'),
                            ('rate-fit', 'fit C*q**(n**r) to the error curve')):
        sub = add(name, help_text, degree=True)
        sub.add_argument('--n-list', type=_int_list, required=True)
    sub = add('cusp-fit', 'exponential decay of phi at a cusp')
    sub.add_argument('--approach', default='upper')
    sub.add_argument('--p', type=float, default=2.0)
    sub.add_argument('--t', dest='ts', type=_float_list)
    sub = add('diverge', 'growth of |B_n(x0)| right of the vertex', degree=True)
    sub.add_argument('--x0', type=float, required=True)
    sub.add_argument('--N', dest='N_list', type=_int_list, required=True)
    sub = add('keldysh', 'spiked-lens iteration with growth certificates', domain=False)
    sub.add_argument('--stages', type=int, default=1)
    sub.add_argument('--xi', type=float, default=0.6)
    sub.add_argument('--alpha', type=float, default=1 / math.sqrt(2))
    sub.add_argument('--budget', type=int)
    sub.add_argument('--tip-grid', type=int, default=9)
    add('report', 'aggregate JSON artifacts into one table', domain=False)
    return parser


class Runner:
    """Executes one parsed command."""

    def __init__(self, options: argparse.Namespace):
        self.options = options
        default_bits = get_setting('DIVERGENCE_PRECISION') if options.command in (
            'diverge', 'keldysh') else get_setting('DEFAULT_PRECISION')
        self.config = RunConfig(
            command=options.command,
            domain_path=getattr(options, 'domain_path', None),
            degree=getattr(options, 'degree', None) or self._default_degree(),
            precision_bits=options.precision_bits or default_bits,
            order=options.order, panels=options.panels, grading=options.grading,
            depth=options.depth, z0=getattr(options, 'z0', None),
            output_dir=options.output_dir or get_setting('OUTPUT_DIR'),
            cache_dir=options.cache_dir or get_setting('CACHE_DIR'),
        ).validate()
        self.cache = GramCache(self.config.cache_dir)
        self.output = Path(self.config.output_dir)
        self._domain = None

    def _default_degree(self) -> int:
        o = self.options
        if o.command == 'bieberbach':
            return max(o.n - 1, 1)
        if o.command in ('error-curve', 'rate-fit'):
            return max(max(o.n_list) - 1, 1)
        if o.command == 'diverge':
            return max(max(o.N_list) - 1, 1)
        return 8

    # -- pipeline ------------------------------------------------------------

    @property
    def domain(self):
        if self._domain is None:
            self._domain = load_domain(self.config.domain_path, self.config.z0)
        return self._domain

    def rule(self, degree: int):
        c = self.config
        if c.explicit_rule:
            return build_rule(self.domain, c.order, c.panels, c.grading, c.depth, c.precision_bits)
        return adapted_rule(self.domain, degree, c.precision_bits)

    def gram(self, degree: Optional[int] = None):
        degree = degree or self.config.degree
        bits = self.config.precision_bits
        rule = self.rule(degree)
        return self.cache.get_or_compute(self.domain.id_hash, degree, bits, rule_digest(rule),
                                         lambda: compute_gram(self.domain, rule, degree, bits))

    def basis(self, degree: Optional[int] = None):
        return orthonormalize_cholesky(self.gram(degree))

    def stem(self, N: int, domain_hash: Optional[str] = None) -> str:
        return artifact_stem(self.config.command, domain_hash or self.domain.id_hash, N)

    def write(self, N, frame, payload, header=None, domain_hash=None):
        payload = dict(payload, command=self.config.command)
        return write_pair(self.output, self.stem(N, domain_hash), frame, payload,
                          self.config.to_dict(), header)

    # -- commands ------------------------------------------------------------

    def cmd_domains(self):
        if self.config.domain_path is None:
            gallery = {}
            for name, builder in sorted(GALLERY.items()):
                domain = builder()
                gallery[name] = {'id_hash': domain.id_hash, 'z0': domain.z0,
                                 'arcs': len(domain.arcs),
                                 'singular_vertices': domain.singular_vertices}
            return write_json({'command': 'domains', 'gallery': gallery},
                              self.output / 'domains-gallery-0.json', self.config.to_dict())
        domain = self.domain
        points, owners = boundary_sample(domain, get_setting('BOUNDARY_SAMPLES'), return_arcs=True)
        frame = pd.DataFrame({'x': points.real, 'y': points.imag, 'arc': owners})
        payload = {'id_hash': domain.id_hash, 'domain': domain.to_config(),
                   'area': area(domain), 'diameter': diameter(domain),
                   'singular_vertices': domain.singular_vertices}
        return self.write(0, frame, payload)

    def cmd_gram(self):
        gram = self.gram()
        path = self.output / f"{self.stem(gram.degree)}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_gram_csv(gram, path)
        payload = {'degree': gram.degree, 'precision_bits': gram.precision_bits,
                   'rule_digest': gram.rule_digest, 'M00': gram.entries[0, 0].real,
                   'cache_key': self.cache.generate_cache_key(
                       gram.domain_hash, gram.degree, gram.precision_bits, gram.rule_digest)}
        return self.write(gram.degree, None, payload)

    def cmd_basis(self):
        degree = self.config.degree
        if self.options.method == 'arnoldi':
            basis = orthonormalize_arnoldi(self.domain, interior_measure(self.domain), degree)
        else:
            basis = self.basis()
        path = self.output / f"{self.stem(degree)}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_basis_csv(basis, path)
        payload = {'method': basis.method, 'residual': basis.residual,
                   'condition_estimate': basis.condition_estimate,
                   'leading_coefficients': [basis.leading_coefficient(n) for n in range(degree + 1)]}
        if self.options.hull:
            checks = [zeros_in_hull_check(basis, self.domain, n) for n in range(1, degree + 1)]
            payload['zeros_in_hull'] = [{'n': n, 'inside': h.inside, 'excess': h.excess}
                                        for n, h in enumerate(checks, start=1)]
        return self.write(degree, None, payload)

    def cmd_bieberbach(self):
        n = self.options.n
        degree = self.config.degree
        if not 1 <= n <= degree + 1:
            raise ValidationError(f"n must lie in 1..{degree + 1} for degree {degree}")
        z0 = self.domain.z0
        if self.options.method == 'extremal':
            poly = solve_extremal(self.gram(), n, z0)
        else:
            poly = bieberbach_from_basis(self.basis(), n, z0)
        frame = pd.DataFrame({'power': np.arange(poly.coeffs.size),
                              're': poly.coeffs.real, 'im': poly.coeffs.imag})
        points = self.options.eval
        values = [evaluate(poly, z) for z in points]
        payload = {'n': n, 'z0': z0, 'S_n': poly.S_n, 'method': poly.method,
                   'evaluations': [{'z': z, 'value': v} for z, v in zip(points, values)]}
        for z, v in zip(points, values):
            print(f"B_{n}({z}) = {v.real:.17g}{v.imag:+.17g}j")
        return self.write(n, frame, payload,
                          header=f"n={n},z0={z0.real!r}{z0.imag:+.17g}j,S_n={poly.S_n!r},"
                                 f"method={poly.method}")

    def _curve(self):
        reference = reference_for(self.domain)
        if reference is None:
            raise ReferenceMapMissing(f"no reference map for domain {self.domain.short_hash}")
        n_list = sorted(self.options.n_list)
        if n_list[0] < 1 or n_list[-1] > self.config.degree + 1:
            raise ValidationError(f"n-list must lie in 1..{self.config.degree + 1}")
        return sup_error_curve(self.domain, self.basis(), reference, n_list)

    def cmd_error_curve(self):
        curve = self._curve()
        frame = pd.DataFrame(curve, columns=['n', 'error'])
        return self.write(self.config.degree, frame, {'curve': curve})

    def cmd_rate_fit(self):
        curve = self._curve()
        fit = fit_rate(curve)
        frame = pd.DataFrame(curve, columns=['n', 'error'])
        frame['predicted'] = fit.predict(frame['n'].to_numpy())
        return self.write(self.config.degree, frame, {'fit': asdict(fit), 'curve': curve})

    def cmd_cusp_fit(self):
        reference = reference_for(self.domain)
        if reference is None:
            raise ReferenceMapMissing(f"no reference map for domain {self.domain.short_hash}")
        ts = self.options.ts or CUSP_TS
        fit = fit_cusp_decay(reference, self.options.approach, self.options.p, ts)
        distances, gaps = reference.approach_values(self.options.approach, ts)
        frame = pd.DataFrame({'t': list(ts), 'distance': distances,
                              'log_gap': [log_magnitude(g) for g in gaps]})
        return self.write(len(ts), frame, {'fit': asdict(fit), 'approach': self.options.approach})

    def cmd_diverge(self):
        basis = self.basis()
        report = divergence_probe(self.domain, basis, self.options.x0, self.options.N_list)
        frame = pd.DataFrame(report.values, columns=['n', 'abs_value'])
        payload = asdict(report)
        payload.pop('values')
        return self.write(max(self.options.N_list), frame, payload)

    def cmd_keldysh(self):
        o = self.options
        stages = keldysh_iterate(o.stages, o.xi, o.alpha, tip_grid=o.tip_grid, budget=o.budget,
                                 bits=self.config.precision_bits, cache=self.cache)
        documents = [dict(stage.to_dict(), rechecked=recheck_certificate(stage)) for stage in stages]
        frame = pd.DataFrame([{k: d[k] for k in ('stage', 'xi_next', 'n', 'value', 'target',
                                                  'certified', 'stability_bound', 'stable')}
                              for d in documents])
        domain_hash = stages[0].domain.id_hash if stages else 'none'
        return self.write(o.stages, frame if documents else None, {'stages': documents},
                          domain_hash=domain_hash)

    def cmd_report(self):
        frame, summary = aggregate_reports(self.output)
        write_table(frame, self.output / 'report-all-0.csv')
        return write_json(dict(summary, command='report'), self.output / 'report-all-0.json',
                          self.config.to_dict())

    def execute(self):
        handler = getattr(self, 'cmd_' + self.config.command.replace('-', '_'))
        return handler()


def _failing_module(exc: BaseException) -> str:
    frames = traceback.extract_tb(exc.__traceback__)
    if not frames:
        return 'bergman'
    return Path(frames[-1].filename).stem


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit status."""
    try:
        options = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
        Runner(options).execute()
    except ValidationError as exc:
        print(f"validation error [{_failing_module(exc)}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure [{_failing_module(exc)}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BergmanError as exc:
        print(f"error [{_failing_module(exc)}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK

import contextlib
import io
import json
import tempfile
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from bergman import __version__
from bergman.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, run
from bergman.errors import CholeskyBreakdown
from bergman.geometry import disk
from bergman.management.commands.bieberbach import Command as BieberbachCommand


class CliTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        root = Path(self.tmp.name)
        self.output = root / 'out'
        self.cache = root / 'cache'
        self.domain_path = root / 'disk.json'
        self.domain_path.write_text(json.dumps({'gallery': 'disk'}))
        self.stem = disk().id_hash[:12]

    def tearDown(self):
        self.tmp.cleanup()

    def invoke(self, *argv, output=None, cache=None):
        stdout, stderr = io.StringIO(), io.StringIO()
        argv = list(argv) + ['--output', str(output or self.output),
                             '--cache-dir', str(cache or self.cache)]
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            status = run(argv)
        return status, stdout.getvalue(), stderr.getvalue()

    def document(self, name, output=None):
        return json.loads(((output or self.output) / name).read_text())


class GramCommandTests(CliTestCase):
    def test_gram_artifacts(self):
        status, _, _ = self.invoke('gram', '--domain', str(self.domain_path), '--degree', '8',
                                   '--precision', '53')
        self.assertEqual(status, EXIT_OK)
        doc = self.document(f'gram-{self.stem}-8.json')
        self.assertAlmostEqual(doc['M00'], 3.141592653589793, places=12)
        self.assertEqual(doc['version'], __version__)
        self.assertEqual(doc['config']['degree'], 8)
        self.assertNotIn('output_dir', doc['config'])
        self.assertEqual(len(doc['config_digest']), 64)
        self.assertTrue((self.output / f'gram-{self.stem}-8.csv').exists())

    def test_reruns_are_byte_identical(self):
        other = Path(self.tmp.name) / 'again'
        args = ('gram', '--domain', str(self.domain_path), '--degree', '5', '--precision', '106')
        self.invoke(*args)
        self.invoke(*args, output=other, cache=Path(self.tmp.name) / 'cache2')
        for suffix in ('json', 'csv'):
            name = f'gram-{self.stem}-5.{suffix}'
            self.assertEqual((self.output / name).read_bytes(), (other / name).read_bytes())

    def test_second_run_hits_cache(self):
        args = ('gram', '--domain', str(self.domain_path), '--degree', '4', '--precision', '53')
        self.invoke(*args)
        with self.assertLogs('bergman.cache', level='INFO') as logs:
            self.invoke(*args)
        self.assertTrue(any('Cache hit' in line for line in logs.output))

    def test_numerical_failure_exit_code(self):
        with mock.patch('bergman.cli.compute_gram', side_effect=CholeskyBreakdown(3, 106)):
            status, _, stderr = self.invoke('gram', '--domain', str(self.domain_path),
                                            '--degree', '6')
        self.assertEqual(status, EXIT_NUMERICAL)
        self.assertIn('numerical failure', stderr)
        self.assertIn('pivot 3', stderr)


class ValidationExitTests(CliTestCase):
    def test_unknown_flag(self):
        status, _, stderr = self.invoke('gram', '--domain', str(self.domain_path), '--bogus')
        self.assertEqual(status, EXIT_VALIDATION)
        self.assertIn('validation error', stderr)

    def test_missing_domain_file(self):
        status, _, _ = self.invoke('gram', '--domain', '/nonexistent/domain.cfg')
        self.assertEqual(status, EXIT_VALIDATION)

    def test_unsupported_precision(self):
        status, _, _ = self.invoke('gram', '--domain', str(self.domain_path), '--precision', '80')
        self.assertEqual(status, EXIT_VALIDATION)

    def test_unknown_command(self):
        self.assertEqual(run(['fourier']), EXIT_VALIDATION)

    def test_n_beyond_degree(self):
        status, _, _ = self.invoke('bieberbach', '--domain', str(self.domain_path), '--n', '9',
                                   '--degree', '4', '--precision', '53')
        self.assertEqual(status, EXIT_VALIDATION)

    def test_curve_without_reference_map(self):
        square = Path(self.tmp.name) / 'square.json'
        square.write_text(json.dumps({'gallery': 'square'}))
        status, _, stderr = self.invoke('error-curve', '--domain', str(square), '--n-list', '2,4',
                                        '--precision', '53')
        self.assertEqual(status, EXIT_VALIDATION)
        self.assertIn('reference map', stderr)


class MalformedDomainTests(CliTestCase):
    SQUARE_ARCS = [
        {'kind': 'segment', 'start': [1, -1], 'end': [1, 1]},
        {'kind': 'segment', 'start': [1, 1], 'end': [-1, 1]},
        {'kind': 'segment', 'start': [-1, 1], 'end': [-1, -1]},
        {'kind': 'segment', 'start': [-1, -1], 'end': [1, -1]},
    ]

    def run_config(self, config):
        path = Path(self.tmp.name) / 'bad.json'
        path.write_text(json.dumps(config))
        return self.invoke('gram', '--domain', str(path), '--degree', '2', '--precision', '53')

    def test_non_numeric_gallery_parameter(self):
        status, _, stderr = self.run_config({'gallery': 'disk', 'radius': 'abc'})
        self.assertEqual(status, EXIT_VALIDATION)
        self.assertIn('disk', stderr)

    def test_corner_without_alpha(self):
        status, _, stderr = self.run_config({'arcs': self.SQUARE_ARCS, 'z0': [0, 0],
                                             'corners': [{'vertex': [1, 1]}]})
        self.assertEqual(status, EXIT_VALIDATION)
        self.assertIn("'alpha'", stderr)

    def test_cusp_without_exponent(self):
        status, _, stderr = self.run_config({'arcs': self.SQUARE_ARCS, 'z0': [0, 0],
                                             'cusps': [{'vertex': [1, 1], 'c1': 0.1, 'c2': 1.0}]})
        self.assertEqual(status, EXIT_VALIDATION)
        self.assertIn("'p'", stderr)

    def test_malformed_base_point(self):
        status, _, _ = self.run_config({'arcs': self.SQUARE_ARCS, 'z0': 'center'})
        self.assertEqual(status, EXIT_VALIDATION)


class BieberbachCommandTests(CliTestCase):
    def test_identity_on_centered_disk(self):
        status, stdout, _ = self.invoke('bieberbach', '--domain', str(self.domain_path),
                                        '--n', '3', '--eval', '0.3,0.1j', '--precision', '53')
        self.assertEqual(status, EXIT_OK)
        self.assertIn('B_3(', stdout)
        doc = self.document(f'bieberbach-{self.stem}-3.json')
        first = doc['evaluations'][0]['value']
        self.assertAlmostEqual(first[0], 0.3, places=12)
        self.assertAlmostEqual(first[1], 0.0, places=12)
        self.assertEqual(doc['method'], 'formula')
        csv = (self.output / f'bieberbach-{self.stem}-3.csv').read_text().splitlines()
        self.assertTrue(csv[0].startswith('# n=3,'))
        self.assertEqual(csv[1], 'power,re,im')

    def test_extremal_method(self):
        status, _, _ = self.invoke('bieberbach', '--domain', str(self.domain_path), '--n', '3',
                                   '--method', 'extremal', '--precision', '106')
        self.assertEqual(status, EXIT_OK)
        self.assertEqual(self.document(f'bieberbach-{self.stem}-3.json')['method'], 'extremal')


class ReportCommandTests(CliTestCase):
    def test_aggregates_artifacts(self):
        self.invoke('gram', '--domain', str(self.domain_path), '--degree', '3', '--precision', '53')
        self.invoke('basis', '--domain', str(self.domain_path), '--degree', '3', '--precision', '53')
        status, _, _ = self.invoke('report')
        self.assertEqual(status, EXIT_OK)
        summary = self.document('report-all-0.json')
        self.assertEqual(summary['artifacts'], 2)
        self.assertEqual(summary['by_command'], {'basis': 1, 'gram': 1})
        self.assertTrue((self.output / 'report-all-0.csv').exists())

    def test_gallery_listing(self):
        status, _, _ = self.invoke('domains')
        self.assertEqual(status, EXIT_OK)
        gallery = self.document('domains-gallery-0.json')['gallery']
        self.assertIn('lune', gallery)
        self.assertEqual(gallery['disk']['id_hash'], disk().id_hash)


class ManagementCommandTests(CliTestCase):
    def test_bieberbach_command_failure(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(CommandError):
                BieberbachCommand().handle('gram', '--domain', '/nonexistent/domain.cfg')

    def test_clear_gram_cache(self):
        self.invoke('gram', '--domain', str(self.domain_path), '--degree', '3', '--precision', '53')
        self.assertEqual(len(list(self.cache.glob('gram-*.bin'))), 1)
        out = io.StringIO()
        call_command('clear_gram_cache', confirm=True, cache_dir=str(self.cache), stdout=out)
        self.assertIn('Successfully deleted 1', out.getvalue())
        self.assertEqual(list(self.cache.glob('gram-*.bin')), [])

    def test_clear_empty_cache(self):
        out = io.StringIO()
        call_command('clear_gram_cache', confirm=True, cache_dir=str(self.cache), stdout=out)
        self.assertIn('No cached Gram matrices', out.getvalue())

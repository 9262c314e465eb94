import math
import tempfile
from pathlib import Path

import mpmath
import numpy as np
from django.test import SimpleTestCase

from bergman.errors import CholeskyBreakdown, ValidationError
from bergman.geometry import disk, ellipse, square
from bergman.gram import (GramMatrix, check_positive_definite, compute_gram, gram_from_bytes,
                          gram_to_bytes, inner_product, read_gram_binary, write_gram_binary,
                          write_gram_csv)
from bergman.precision import to_limbs
from bergman.quadrature import adapted_rule, build_rule


class DiskGramTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.domain = disk()
        cls.gram = compute_gram(cls.domain, adapted_rule(cls.domain, 20), 20, 53)

    def test_diagonal_moments(self):
        expected = np.diag([math.pi / (m + 1) for m in range(21)])
        np.testing.assert_allclose(self.gram.entries, expected, atol=1e-12)

    def test_exactly_hermitian(self):
        M = self.gram.entries
        self.assertTrue(np.array_equal(M, M.conj().T))
        self.assertTrue(np.all(np.diag(M).imag == 0))

    def test_inner_product(self):
        self.assertAlmostEqual(inner_product(self.gram, [1], [1]), math.pi, places=12)
        self.assertAlmostEqual(inner_product(self.gram, [0, 1], [1, 1j]), -0.5j * math.pi, places=12)
        with self.assertRaises(ValidationError):
            inner_product(self.gram, [0] * 22, [1])

    def test_truncate(self):
        small = self.gram.truncate(4)
        self.assertEqual(small.entries.shape, (5, 5))
        self.assertEqual(small.domain_hash, self.domain.id_hash)
        with self.assertRaises(ValidationError):
            self.gram.truncate(30)


class ExtendedPrecisionTests(SimpleTestCase):
    def test_disk_moments_at_106_bits(self):
        domain = disk()
        gram = compute_gram(domain, adapted_rule(domain, 6, 106), 6, 106)
        self.assertEqual(gram.limbs.shape, (7, 7, 2, 2))
        entries = gram.mp_entries()
        with mpmath.workprec(120):
            self.assertLess(abs(entries[3][3] - mpmath.pi / 4), mpmath.mpf(10) ** -28)
            self.assertLess(abs(entries[3][1]), mpmath.mpf(10) ** -28)

    def test_ellipse_second_moment(self):
        domain = ellipse(1.0, 0.5)
        gram = compute_gram(domain, adapted_rule(domain, 4, 106), 4, 106)
        self.assertAlmostEqual(gram.entries[0, 0].real, math.pi / 2, places=14)
        self.assertAlmostEqual(gram.entries[1, 1].real, math.pi * 0.5 * 1.25 / 4, places=14)


class InnerProductPropertyTests(SimpleTestCase):
    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(7)
        for domain, degree in ((disk(), 20), (ellipse(1.0, 0.5), 12), (square(), 10)):
            gram = compute_gram(domain, adapted_rule(domain, degree), degree, 53)
            for _ in range(100):
                p = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
                q = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
                lhs = abs(inner_product(gram, p, q)) ** 2
                rhs = inner_product(gram, p, p).real * inner_product(gram, q, q).real
                self.assertLessEqual(lhs, rhs * (1 + 1e-10))

    def test_dilation_scales_moments(self):
        base_domain, scaled_domain = ellipse(1.0, 0.5), ellipse(2.0, 1.0)
        base = compute_gram(base_domain, adapted_rule(base_domain, 6), 6, 53).entries
        scaled = compute_gram(scaled_domain, adapted_rule(scaled_domain, 6), 6, 53).entries
        powers = np.add.outer(np.arange(7), np.arange(7)) + 2
        expected = base * 2.0 ** powers
        np.testing.assert_allclose(scaled, expected, rtol=1e-11,
                                   atol=1e-11 * np.abs(expected).max())


class FailureTests(SimpleTestCase):
    def test_rule_for_other_domain(self):
        with self.assertRaises(ValidationError):
            compute_gram(disk(), build_rule(ellipse()), 4, 53)

    def test_negative_degree(self):
        with self.assertRaises(ValidationError):
            compute_gram(disk(), build_rule(disk()), -1, 53)

    def test_inner_product_keeps_extended_precision_for_arrays(self):
        limbs = to_limbs(np.ones((2, 2), dtype=complex), 106)
        limbs[0, 0, 0, 1] = 2.0 ** -80
        gram = GramMatrix(limbs, 1, 106, 'x' * 64)
        value = inner_product(gram, np.array([1.0, -1.0]), np.array([1.0, 0.0]))
        self.assertEqual(value, complex(2.0 ** -80))

    def test_indefinite_matrix_reports_pivot(self):
        values = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 1.0]], dtype=complex)
        gram = GramMatrix(to_limbs(values, 53), 2, 53, 'x' * 64)
        with self.assertRaises(CholeskyBreakdown) as ctx:
            check_positive_definite(gram)
        self.assertEqual(ctx.exception.pivot, 2)
        self.assertEqual(ctx.exception.suggested_bits, 106)


class FileFormatTests(SimpleTestCase):
    def setUp(self):
        domain = disk()
        self.gram = compute_gram(domain, adapted_rule(domain, 3, 106), 3, 106)

    def test_binary_file_preserves_limbs(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'gram.bin'
            write_gram_binary(self.gram, path)
            loaded = read_gram_binary(path)
        self.assertTrue(np.array_equal(loaded.limbs, self.gram.limbs))
        self.assertEqual(loaded.rule_digest, self.gram.rule_digest)

    def test_corrupted_bytes_rejected(self):
        data = bytearray(gram_to_bytes(self.gram))
        data[60] ^= 0xFF
        with self.assertRaises(ValidationError):
            gram_from_bytes(bytes(data))
        with self.assertRaises(ValidationError):
            gram_from_bytes(b'not a gram file at all, definitely not one')

    def test_csv_layout(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'gram.csv'
            write_gram_csv(self.gram, path)
            lines = path.read_text().splitlines()
        self.assertTrue(lines[0].startswith('# domain_hash='))
        self.assertEqual(lines[1], 'm,n,re,im')
        self.assertEqual(len(lines), 2 + 16)


class TensorGaussOracleTests(SimpleTestCase):
    """Ellipse moments against a mapped tensor-product rule on the interior."""

    def test_ellipse_gram_to_degree_12(self):
        a, b = 1.0, 0.5
        r, wr = np.polynomial.legendre.leggauss(200)
        r, wr = 0.5 * (r + 1), 0.5 * wr
        theta = 2 * np.pi * np.arange(200) / 200
        z = (a * np.outer(r, np.cos(theta)) + 1j * b * np.outer(r, np.sin(theta))).ravel()
        w = (a * b * np.outer(wr * r, np.full(200, 2 * np.pi / 200))).ravel()
        powers = np.vander(z, 13, increasing=True)
        oracle = powers.T @ (np.conj(powers) * w[:, None])

        domain = ellipse(a, b)
        gram = compute_gram(domain, adapted_rule(domain, 12, 106), 12, 106)
        np.testing.assert_allclose(gram.entries, oracle, atol=1e-10)

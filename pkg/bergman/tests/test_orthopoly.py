import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from bergman.errors import RootFinderError, ValidationError
from bergman.experiments import basis_for
from bergman.geometry import disk, ellipse, lens, lune
from bergman.gram import compute_gram
from bergman.orthopoly import (eval_K, interior_measure, orthonormalize_arnoldi,
                               orthonormalize_cholesky, orthonormality_residual,
                               polynomial_roots, sup_norm, write_basis_csv, zeros_in_hull_check)
from bergman.quadrature import adapted_rule, polar_area_rule

from . import slow


class DiskBasisTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.domain = disk()
        cls.gram = compute_gram(cls.domain, adapted_rule(cls.domain, 10), 10, 53)
        cls.basis = orthonormalize_cholesky(cls.gram)

    def test_monomial_basis(self):
        expected = np.diag([math.sqrt((n + 1) / math.pi) for n in range(11)])
        np.testing.assert_allclose(self.basis.coeffs, expected, atol=1e-10)
        self.assertAlmostEqual(self.basis.leading_coefficient(4), math.sqrt(5 / math.pi), places=10)

    def test_residual(self):
        self.assertLess(self.basis.residual, 1e-12)
        self.assertLess(orthonormality_residual(self.basis, self.gram), 1e-12)

    def test_evaluation(self):
        value = eval_K(self.basis, 3, 0.5)
        self.assertIsInstance(value, complex)
        self.assertAlmostEqual(value, math.sqrt(4 / math.pi) * 0.125, places=12)
        self.assertAlmostEqual(sup_norm(self.basis, 2, [1, 1j, 0.5]), math.sqrt(3 / math.pi),
                               places=12)
        self.assertAlmostEqual(eval_K(self.basis, 3, 2), math.sqrt(4 / math.pi) * 8, places=9)
        with self.assertRaises(ValidationError):
            eval_K(self.basis, 11, 0.5)

    def test_arnoldi_agrees_with_cholesky(self):
        arnoldi = orthonormalize_arnoldi(self.domain, interior_measure(self.domain), 10)
        np.testing.assert_allclose(arnoldi.coeffs, self.basis.coeffs, atol=1e-10)
        self.assertEqual(arnoldi.method, 'arnoldi')

    def test_arnoldi_needs_enough_nodes(self):
        with self.assertRaises(ValidationError):
            orthonormalize_arnoldi(self.domain, polar_area_rule(radial=4, angular=4), 10)

    def test_zeros_at_origin(self):
        check = zeros_in_hull_check(self.basis, self.domain, 5)
        self.assertTrue(check.inside)
        self.assertEqual(check.roots.size, 5)

    def test_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'basis.csv'
            write_basis_csv(self.basis, path)
            frame = pd.read_csv(path, comment='#')
        self.assertEqual(list(frame.columns), ['power', 'n', 're', 'im'])
        self.assertEqual(len(frame), 11 * 12 // 2)


class EllipseBasisTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.domain = ellipse(1.0, 0.5)
        gram = compute_gram(cls.domain, adapted_rule(cls.domain, 12, 106), 12, 106)
        cls.basis = orthonormalize_cholesky(gram)

    def test_extended_precision_basis(self):
        basis, domain = self.basis, self.domain
        self.assertEqual(basis.precision_bits, 106)
        self.assertIsNotNone(basis.mp_coeffs)
        self.assertLess(basis.residual, 1e-20)
        self.assertTrue(np.all(np.diag(basis.coeffs).real > 0))
        # symmetric domain: real coefficients, even/odd parity
        self.assertLess(float(np.abs(basis.coeffs.imag).max()), 1e-12)
        self.assertLess(abs(basis.coeffs[0, 3]), 1e-12)
        self.assertTrue(zeros_in_hull_check(basis, domain, 12).inside)

    def test_positive_right_of_domain(self):
        for n in range(13):
            for x in (1.01, 1.2, 1.5, 2.0, 3.0):
                value = eval_K(self.basis, n, x)
                self.assertGreater(value.real, 0, msg=f"K_{n}({x})")
                self.assertLessEqual(abs(value.imag), 1e-12 * value.real)


class RootTests(SimpleTestCase):
    def test_quadratic_roots(self):
        roots = np.sort_complex(polynomial_roots([2, -3, 1]))
        np.testing.assert_allclose(roots, [1, 2], atol=1e-12)

    def test_zero_leading_coefficient(self):
        with self.assertRaises(RootFinderError):
            polynomial_roots([1, 2, 0])


class AcceptanceBasisTests(SimpleTestCase):
    @slow
    def test_orthonormal_to_degree_25_at_106_bits(self):
        for domain in (disk(), ellipse(1.0, 0.5), lens(), lune()):
            with self.subTest(domain=domain.gallery):
                basis = basis_for(domain, 25, 106)
                self.assertLess(basis.residual, 1e-8)

    @slow
    def test_lens_zeros_in_hull_and_positive_beyond_corner(self):
        domain = lens()
        basis = basis_for(domain, 20, 106)
        for n in range(1, 21):
            check = zeros_in_hull_check(basis, domain, n)
            self.assertTrue(check.inside, msg=f"K_{n} zero {check.worst} outside by {check.excess:.2e}")
            for x in (0.65, 0.8, 1.0, 1.5):
                self.assertGreater(eval_K(basis, n, x).real, 0, msg=f"K_{n}({x})")

import math
import tempfile
from pathlib import Path

import mpmath
import numpy as np
from django.test import SimpleTestCase

from bergman.bieberbach import (bieberbach_from_basis, bieberbach_values_on_ray, derivative,
                                evaluate, evaluate_derivative, inner_radius_estimate,
                                kernel_partial_sum, l2_error_identity, solve_extremal,
                                write_poly_csv)
from bergman.errors import ReferenceMapMissing, ValidationError
from bergman.geometry import disk, ellipse
from bergman.gram import compute_gram
from bergman.orthopoly import orthonormalize_cholesky
from bergman.quadrature import adapted_rule
from bergman.refmaps import disk_map, psi_image_map


class DiskBieberbachTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.domain = disk(z0=0.5)
        cls.gram = compute_gram(cls.domain, adapted_rule(cls.domain, 30), 30, 53)
        cls.basis = orthonormalize_cholesky(cls.gram)

    def test_centered_disk_gives_identity(self):
        poly = bieberbach_from_basis(self.basis, 6, 0)
        np.testing.assert_allclose(poly.coeffs, [0, 1, 0, 0, 0, 0, 0], atol=1e-12)
        self.assertAlmostEqual(poly.S_n, 1 / math.pi, places=12)

    def test_centered_disk_exact_to_degree_30(self):
        expected = np.zeros(31)
        expected[1] = 1.0
        for n in range(1, 31):
            poly = bieberbach_from_basis(self.basis, n, 0)
            np.testing.assert_allclose(poly.coeffs, expected[:n + 1], rtol=0, atol=1e-12)
        leading = np.array([self.basis.leading_coefficient(n) for n in range(31)])
        np.testing.assert_allclose(leading, np.sqrt(np.arange(1, 32) / math.pi), rtol=0, atol=1e-12)
        off_diagonal = self.basis.coeffs - np.diag(np.diag(self.basis.coeffs))
        self.assertLess(float(np.abs(off_diagonal).max()), 1e-12)

    def test_inner_radius_decreases_to_moebius_value(self):
        radii = [inner_radius_estimate(self.basis, n, 0.5) for n in range(1, 32)]
        for previous, current in zip(radii, radii[1:]):
            self.assertLessEqual(current, previous * (1 + 1e-14))
        self.assertLess(abs(radii[29] - 0.75), 1e-6)
        self.assertGreaterEqual(radii[29], 0.75 - 1e-14)

    def test_normalization(self):
        poly = bieberbach_from_basis(self.basis, 8, 0.5)
        self.assertEqual(poly.coeffs.size, 9)
        self.assertAlmostEqual(abs(evaluate(poly, 0.5)), 0.0, places=12)
        self.assertAlmostEqual(evaluate_derivative(poly, 0.5), 1.0, places=11)
        np.testing.assert_allclose(derivative(poly), poly.coeffs[1:] * np.arange(1, 9))

    def test_kernel_partial_sum(self):
        kernel = kernel_partial_sum(self.basis, 3, 0.5)
        expected = sum((k + 1) / math.pi * 0.25 ** k for k in range(3))
        self.assertAlmostEqual(kernel.S_n, expected, places=12)
        with self.assertRaises(ValidationError):
            kernel_partial_sum(self.basis, 0, 0.5)
        with self.assertRaises(ValidationError):
            kernel_partial_sum(self.basis, 32, 0.5)

    def test_converges_to_moebius_map(self):
        poly = bieberbach_from_basis(self.basis, 31, 0.5)
        self.assertAlmostEqual(evaluate(poly, 0), -0.375, places=6)
        self.assertAlmostEqual(inner_radius_estimate(self.basis, 31, 0.5), 0.75, places=8)

    def test_extremal_solution_matches_formula(self):
        formula = bieberbach_from_basis(self.basis, 8, 0.5)
        extremal = solve_extremal(self.gram, 8, 0.5)
        np.testing.assert_allclose(extremal.coeffs, formula.coeffs, atol=1e-9)
        self.assertAlmostEqual(extremal.S_n, formula.S_n, places=9)
        self.assertEqual(extremal.method, 'extremal')

    def test_l2_identity(self):
        lhs, rhs = l2_error_identity(self.basis, 10, 0.5, reference=disk_map(1.0, 0.5))
        self.assertGreater(rhs, 0)
        self.assertAlmostEqual(lhs, rhs, delta=1e-9)
        with self.assertRaises(ReferenceMapMissing):
            l2_error_identity(self.basis, 10, 0.5)

    def test_values_on_ray(self):
        values = bieberbach_values_on_ray(self.basis, 0.5, 0.9, 12)
        self.assertEqual(values.shape, (12,))
        for n in (1, 5, 12):
            poly = bieberbach_from_basis(self.basis, n, 0.5)
            self.assertAlmostEqual(values[n - 1], abs(evaluate(poly, 0.9)), places=11)

    def test_csv(self):
        poly = bieberbach_from_basis(self.basis, 4, 0.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'poly.csv'
            write_poly_csv(poly, path)
            lines = path.read_text().splitlines()
        self.assertTrue(lines[0].startswith('# n=4,z0='))
        self.assertTrue(lines[0].endswith('method=formula'))
        self.assertEqual(lines[1], 'power,re,im')
        self.assertEqual(len(lines), 2 + 5)


class ExtendedPrecisionTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.domain = ellipse(1.0, 0.5)
        cls.gram = compute_gram(cls.domain, adapted_rule(cls.domain, 12, 106), 12, 106)
        cls.basis = orthonormalize_cholesky(cls.gram)

    def test_constructions_agree(self):
        formula = bieberbach_from_basis(self.basis, 10, 0.0)
        extremal = solve_extremal(self.gram, 10, 0.0)
        self.assertEqual(formula.precision_bits, 106)
        with mpmath.workprec(120):
            worst = max(abs(a - b) for a, b in zip(formula.mp_coeffs, extremal.mp_coeffs))
        self.assertLess(float(worst), 1e-20)

    def test_real_coefficients_on_symmetric_domain(self):
        poly = bieberbach_from_basis(self.basis, 9, 0.0)
        self.assertLess(float(np.abs(poly.coeffs.imag).max()), 1e-14)
        # odd map: even powers vanish
        self.assertLess(float(np.abs(poly.coeffs[::2]).max()), 1e-14)


class PsiImageIdentityTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.reference = psi_image_map((0, 1, 0.25))
        domain = cls.reference.domain
        gram = compute_gram(domain, adapted_rule(domain, 16, 106), 16, 106)
        cls.basis = orthonormalize_cholesky(gram)
        cls.rule = adapted_rule(domain, 40)

    def test_l2_identity(self):
        previous = math.inf
        for n in (4, 8, 16):
            lhs, rhs = l2_error_identity(self.basis, n, 0j, reference=self.reference,
                                         rule=self.rule)
            self.assertGreater(rhs, 0)
            self.assertLess(rhs, previous)
            self.assertLessEqual(abs(lhs - rhs), 1e-6 * rhs)
            previous = rhs

import mpmath
import numpy as np
from django.test import SimpleTestCase

from bergman.errors import CholeskyBreakdown
from bergman.linalg import cholesky, inverse_lower


class CholeskyTests(SimpleTestCase):
    def setUp(self):
        self.L = np.array([[2.0, 0, 0], [1 - 1j, 3.0, 0], [0.5j, -1.0, 1.5]])
        self.A = self.L @ np.conj(self.L).T

    def test_double_factor(self):
        L = cholesky(self.A, 53)
        np.testing.assert_allclose(L, self.L, atol=1e-14)
        self.assertTrue(np.all(np.triu(L, 1) == 0))

    def test_extended_factor(self):
        L = cholesky([[mpmath.mpc(complex(x)) for x in row] for row in self.A], 106)
        for i in range(3):
            for j in range(i + 1):
                self.assertLess(abs(complex(L[i][j]) - self.L[i, j]), 1e-14)

    def test_inverse(self):
        X = inverse_lower(cholesky(self.A, 53), 53)
        np.testing.assert_allclose(X @ self.L, np.eye(3), atol=1e-14)

    def test_breakdown_pivot_matches_across_precisions(self):
        A = np.array([[4.0, 2.0, 0.0], [2.0, 1.0, 1.0], [0.0, 1.0, 3.0]], dtype=complex)
        with self.assertRaises(CholeskyBreakdown) as double:
            cholesky(A, 53)
        with self.assertRaises(CholeskyBreakdown) as extended:
            cholesky([[mpmath.mpc(complex(x)) for x in row] for row in A], 106)
        self.assertEqual(double.exception.pivot, 1)
        self.assertEqual(extended.exception.pivot, 1)
        self.assertEqual(double.exception.suggested_bits, 106)

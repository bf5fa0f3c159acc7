"""
Test suite for second-order jets
Values, gradients and Hessians against closed forms and finite differences
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

try:
    from app.services.jets import Jet, stack
except ImportError:
    from mppgeo.app.services.jets import Jet, stack


def fd_hessian(f, x, h=1e-4):
    n = len(x)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


class TestJetArithmetic:
    """Test cases for jet arithmetic"""

    def setup_method(self):
        """Setup test fixtures"""
        self.x = np.array([0.3, -0.7])
        self.q = Jet.variables(self.x)

    def test_variables_seed(self):
        """Test that seeded variables carry the identity gradient"""
        np.testing.assert_array_equal(self.q.val, self.x)
        np.testing.assert_array_equal(self.q.grad, np.eye(2))
        assert self.q.hess.shape == (2, 2, 2)
        assert not self.q.hess.any()

    def test_product_hessian(self):
        """Test that x·y has the off-diagonal unit Hessian"""
        f = self.q[0] * self.q[1]
        assert f.val == pytest.approx(self.x[0] * self.x[1])
        np.testing.assert_allclose(f.grad, [self.x[1], self.x[0]])
        np.testing.assert_allclose(f.hess, [[0.0, 1.0], [1.0, 0.0]])

    def test_rational_function(self):
        """Test the reciprocal used by the stereographic chart"""
        f = lambda p: 1.0 / (1.0 + p[0] ** 2 + p[1] ** 2)
        jet = 1.0 / (1.0 + self.q[0] * self.q[0] + self.q[1] * self.q[1])
        s = 1.0 + np.sum(self.x ** 2)
        assert jet.val == pytest.approx(1.0 / s)
        np.testing.assert_allclose(jet.grad, -2.0 * self.x / s ** 2, rtol=1e-12)
        np.testing.assert_allclose(jet.hess, fd_hessian(f, self.x), atol=1e-6)

    def test_elementwise_functions(self):
        """Test exp, sin, cos and sqrt through the chain rule"""
        f = lambda p: np.exp(p[0]) * np.sin(p[1]) + np.cos(p[0] * p[1]) + np.sqrt(2.0 + p[0])
        q = self.q
        jet = q[0].exp() * q[1].sin() + (q[0] * q[1]).cos() + (2.0 + q[0]).sqrt()
        assert jet.val == pytest.approx(f(self.x))
        np.testing.assert_allclose(jet.hess, fd_hessian(f, self.x), atol=1e-6)

    def test_power_and_division(self):
        """Test powers and jet-by-jet division"""
        f = lambda p: p[0] ** 3 / (1.5 + p[1])
        jet = self.q[0] ** 3 / (1.5 + self.q[1])
        assert jet.val == pytest.approx(f(self.x))
        np.testing.assert_allclose(jet.hess, fd_hessian(f, self.x), atol=1e-6)


class TestJetLinearAlgebra:
    """Test cases for matrix jets"""

    def setup_method(self):
        """Setup test fixtures"""
        self.x = np.array([0.2, 0.5])
        q = Jet.variables(self.x)
        self.A = stack([q[0], q[0] * q[1], 1.0, q[1] ** 2, q[0] - q[1], 2.0], shape=(3, 2))

    def matrix(self, p):
        return np.array([[p[0], p[0] * p[1]], [1.0, p[1] ** 2], [p[0] - p[1], 2.0]])

    def test_stack_shapes(self):
        """Test that stacking keeps the derivative axes trailing"""
        assert self.A.shape == (3, 2)
        assert self.A.grad.shape == (3, 2, 2)
        assert self.A.hess.shape == (3, 2, 2, 2)

    def test_gram_matrix_hessian(self):
        """Test AᵀA against finite differences entry by entry"""
        G = self.A.T @ self.A
        gram = lambda p: self.matrix(p).T @ self.matrix(p)
        np.testing.assert_allclose(G.val, gram(self.x))
        for i in range(2):
            for j in range(2):
                np.testing.assert_allclose(G.hess[i, j], fd_hessian(lambda p: gram(p)[i, j], self.x), atol=1e-6)

    def test_constant_operand(self):
        """Test products with plain arrays on either side"""
        B = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]])
        left = B @ self.A
        np.testing.assert_allclose(left.val, B @ self.matrix(self.x))
        np.testing.assert_allclose(left.grad, np.einsum("ip,pjk->ijk", B, self.A.grad))

    def test_transpose_requires_matrix(self):
        """Test that transposing a vector jet is rejected"""
        with pytest.raises(ValueError):
            Jet.variables(self.x).T

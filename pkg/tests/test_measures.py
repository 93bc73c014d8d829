import numpy as np
import pytest

from qnlab.linalg import NotPD, SymMatrix, psd_order_holds
from qnlab.measures import eta_trace_ratio, lambda_measure, sigma_measure, tau_measure
from qnlab.objectives import QuadraticObjective

from oracles import numpy_spd


class TestSigma:
    def test_identity_target(self):
        # trace of diag(1, 2)
        assert np.isclose(sigma_measure(np.eye(2), np.diag([2.0, 3.0])), 3.0)

    def test_exact_match_is_zero(self):
        rng = np.random.default_rng(0)
        m = numpy_spd(rng, 6)
        assert abs(sigma_measure(m, m)) < 1e-12

    def test_diagonal_case(self):
        # elementwise (g - a)/a on the diagonals: 1 + 1
        assert np.isclose(sigma_measure(np.diag([1.0, 4.0]), np.diag([2.0, 8.0])), 2.0)

    def test_not_pd_target(self):
        with pytest.raises(NotPD):
            sigma_measure(np.diag([1.0, -1.0]), np.eye(2))

    def test_rank_one_against_inverse_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = numpy_spd(rng, 7)
            p = rng.standard_normal(7)
            g = a + np.outer(p, p)
            expected = np.trace((g - a) @ np.linalg.inv(a))
            assert abs(sigma_measure(a, g) - expected) <= 1e-9 * abs(expected)


class TestTau:
    def test_examples(self):
        assert tau_measure(np.eye(2), np.diag([2.0, 3.0])) == 3.0
        assert tau_measure(np.diag([1.0, 4.0]), np.diag([2.0, 8.0])) == 5.0

    def test_exact_match(self):
        m = SymMatrix.diag([2.0, 7.0])
        assert tau_measure(m, m) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            tau_measure(np.eye(2), np.eye(3))


class TestLambda:
    def test_zero_gradient(self):
        assert lambda_measure(np.zeros(3), np.eye(3)) == 0.0

    def test_diagonal_weighting(self):
        # 1/1 + 16/4 = 5
        assert np.isclose(lambda_measure([1.0, 4.0], np.diag([1.0, 4.0])), np.sqrt(5.0))

    def test_identity_is_euclidean(self):
        assert np.isclose(lambda_measure([3.0, 4.0], np.eye(2)), 5.0)

    def test_not_pd(self):
        with pytest.raises(NotPD):
            lambda_measure([1.0, 1.0], np.diag([1.0, -1.0]))

    def test_quadratic_residual_identity(self):
        # lambda^2 equals twice the functional residual for quadratics
        rng = np.random.default_rng(2)
        obj = QuadraticObjective(numpy_spd(rng, 6), rng.standard_normal(6))
        f_star = obj.eval(obj.x_star)
        for _ in range(20):
            x = rng.standard_normal(6)
            lam = lambda_measure(obj.grad(x), obj.a)
            expected = 2.0 * (obj.eval(x) - f_star)
            assert abs(lam ** 2 - expected) <= 1e-9 * max(abs(expected), 1e-300)


class TestEtaTraceRatio:
    def test_examples(self):
        m = SymMatrix.diag([4.0, 6.0])
        assert eta_trace_ratio(m, m) == 0.0
        assert np.isclose(eta_trace_ratio(np.eye(2), np.diag([2.0, 3.0])), 1.5)
        assert np.isclose(eta_trace_ratio(np.diag([2.0, 2.0]), np.diag([3.0, 5.0])), 1.0)


class TestSignAndOrder:
    def test_nonnegative_when_dominating(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = numpy_spd(rng, 6)
            p = rng.standard_normal((6, 3))
            g = a + p @ p.T
            assert psd_order_holds(a, g)
            assert sigma_measure(a, g) >= 0.0
            assert tau_measure(a, g) >= 0.0

    def test_signed_values_detect_violations(self):
        a = np.diag([2.0, 2.0])
        g = np.diag([1.0, 1.0])
        assert sigma_measure(a, g) < 0.0
        assert tau_measure(a, g) < 0.0

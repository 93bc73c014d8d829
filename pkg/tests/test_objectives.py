import io

import numpy as np
import pytest

from qnlab.objectives import (
    LogisticObjective,
    LogSumExpObjective,
    LibsvmFormatError,
    QuadraticObjective,
    initial_point_on_sphere,
    load_libsvm,
    make_logistic_synthetic,
    make_logsumexp_synthetic,
    parse_libsvm,
    samples_to_dense,
)

from oracles import fd_directional, fd_hess_vec, numpy_spd, rel_err


def check_first_order(obj, rng, points=50, tol=1e-6):
    for _ in range(points):
        x = rng.standard_normal(obj.dim) * 0.5
        v = rng.standard_normal(obj.dim)
        v /= np.linalg.norm(v)
        fd = fd_directional(obj.eval, x, v, h=1e-6)
        exact = obj.grad(x) @ v
        assert abs(fd - exact) <= tol * max(abs(exact), 1.0)


def check_second_order(obj, rng, points=50, tol=1e-5):
    for _ in range(points):
        x = rng.standard_normal(obj.dim) * 0.5
        v = rng.standard_normal(obj.dim)
        v /= np.linalg.norm(v)
        fd = fd_hess_vec(obj.grad, x, v, h=1e-5)
        exact = obj.hess_vec(x, v)
        assert rel_err(exact, fd) <= tol


def check_curvature_sandwich(obj, rng, points=25):
    for _ in range(points):
        x = rng.standard_normal(obj.dim) * 0.5
        v = rng.standard_normal(obj.dim)
        v /= np.linalg.norm(v)
        quad = v @ obj.hess_vec(x, v)
        assert obj.mu * (1.0 - 1e-9) <= quad <= obj.lip_L * (1.0 + 1e-9)


class TestQuadratic:
    def test_minimizer_and_constants(self):
        rng = np.random.default_rng(0)
        a = numpy_spd(rng, 5)
        b = rng.standard_normal(5)
        obj = QuadraticObjective(a, b)
        assert rel_err(a @ obj.x_star, b) < 1e-10
        assert np.allclose(obj.grad(obj.x_star), 0.0, atol=1e-10)
        lo = np.linalg.eigvalsh(a)[0]
        hi = np.linalg.eigvalsh(a)[-1]
        assert np.isclose(obj.mu, lo) and np.isclose(obj.lip_L, hi)
        assert obj.self_concordant_M == 0.0

    def test_derivatives(self):
        rng = np.random.default_rng(1)
        obj = QuadraticObjective(numpy_spd(rng, 6), rng.standard_normal(6))
        check_first_order(obj, rng, points=20)
        check_second_order(obj, rng, points=20)
        check_curvature_sandwich(obj, rng)

    def test_hess_parts_consistent(self):
        rng = np.random.default_rng(2)
        obj = QuadraticObjective(numpy_spd(rng, 6), rng.standard_normal(6))
        x = rng.standard_normal(6)
        dense = obj.hess(x).mat
        assert np.array_equal(obj.hess_diag(x), dense.diagonal())
        v = rng.standard_normal(6)
        assert np.allclose(obj.hess_vec(x, v), dense @ v)

    def test_detached_from_caller_arrays(self):
        rng = np.random.default_rng(7)
        a = numpy_spd(rng, 4)
        b = rng.standard_normal(4)
        obj = QuadraticObjective(a, b)
        before = obj.eval(np.ones(4))
        a[0, 0] += 100.0
        b[0] += 100.0
        assert obj.eval(np.ones(4)) == before


class TestLogSumExp:
    def test_synthetic_gradient_vanishes_at_origin(self):
        for seed in (0, 1, 7, 2024):
            obj = make_logsumexp_synthetic(12, 18, 1.0, seed)
            assert np.linalg.norm(obj.grad(np.zeros(12))) <= 1e-10

    def test_single_zero_column_is_pure_ridge(self):
        obj = LogSumExpObjective(np.zeros((3, 1)), [0.0], gamma=1.0)
        x = np.array([1.0, -2.0, 0.5])
        assert np.isclose(obj.eval(x), 0.5 * x @ x)
        assert np.allclose(obj.grad(x), x)
        assert np.allclose(obj.hess(x).mat, np.eye(3))

    def test_synthetic_single_column_shifts_to_zero(self):
        obj = make_logsumexp_synthetic(4, 1, 1.0, seed=3)
        assert np.allclose(obj.c, 0.0)

    def test_derivatives(self):
        obj = make_logsumexp_synthetic(5, 7, 0.8, seed=11)
        rng = np.random.default_rng(3)
        check_first_order(obj, rng)
        check_second_order(obj, rng)
        check_curvature_sandwich(obj, rng)

    def test_hess_diag_matches_dense(self):
        obj = make_logsumexp_synthetic(6, 9, 1.3, seed=4)
        rng = np.random.default_rng(4)
        for _ in range(10):
            x = rng.standard_normal(6) * 0.4
            dense = obj.hess(x).mat
            assert rel_err(obj.hess_diag(x), dense.diagonal()) < 1e-10

    def test_overflow_safety(self):
        obj = make_logsumexp_synthetic(4, 6, 1.0, seed=5)
        x = 200.0 * np.ones(4)
        assert np.isfinite(obj.eval(x))
        assert np.all(np.isfinite(obj.grad(x)))

    def test_synthetic_condition_number_magnitude(self):
        # d = m = 100 at gamma 1 lands in the hundreds; allow one order slack
        obj = make_logsumexp_synthetic(100, 100, 1.0, seed=0)
        assert 10.0 <= obj.kappa <= 1e4


class TestLogistic:
    def test_empty_data_is_pure_ridge(self):
        obj = LogisticObjective(np.zeros((4, 0)), np.zeros(0), gamma=1.0)
        w = np.array([1.0, 2.0, -1.0, 0.0])
        assert np.isclose(obj.eval(w), 0.5 * w @ w)
        assert np.allclose(obj.grad(w), w)
        assert obj.lip_L == 1.0

    def test_single_sample_gradient_at_zero(self):
        # sigmoid(0) = 1/2, so the data term contributes -e1/2
        obj = LogisticObjective(np.array([[1.0], [0.0]]), [1.0], gamma=1.0)
        assert np.allclose(obj.grad(np.zeros(2)), [-0.5, 0.0])

    def test_derivatives(self):
        obj = make_logistic_synthetic(6, 20, 0.5, seed=6)
        rng = np.random.default_rng(5)
        check_first_order(obj, rng)
        check_second_order(obj, rng)
        check_curvature_sandwich(obj, rng)

    def test_hess_diag_matches_dense(self):
        obj = make_logistic_synthetic(6, 20, 1.0, seed=7)
        rng = np.random.default_rng(6)
        for _ in range(10):
            w = rng.standard_normal(6) * 0.5
            dense = obj.hess(w).mat
            assert rel_err(obj.hess_diag(w), dense.diagonal()) < 1e-10

    def test_overflow_safety(self):
        obj = make_logistic_synthetic(3, 5, 1.0, seed=8)
        w = 500.0 * np.ones(3)
        assert np.isfinite(obj.eval(w))
        assert np.all(np.isfinite(obj.grad(w)))

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            LogisticObjective(np.ones((2, 1)), [2.0], gamma=1.0)

    def test_dense_guard(self):
        obj = LogisticObjective(np.zeros((1025, 0)), np.zeros(0), gamma=1.0)
        with pytest.raises(ValueError, match="dense Hessian"):
            obj.hess(np.zeros(1025))


class TestInitialPoint:
    def test_dim_one_is_signed_radius(self):
        for seed in range(6):
            x = initial_point_on_sphere(1, 0.25, seed)
            assert abs(x[0]) == 0.25

    def test_norm_contract(self):
        x = initial_point_on_sphere(9, 0.125, 3)
        assert abs(np.linalg.norm(x) - 0.125) <= 1e-12

    def test_determinism_and_center(self):
        a = initial_point_on_sphere(5, 1.0, 42)
        b = initial_point_on_sphere(5, 1.0, 42)
        assert np.array_equal(a, b)
        center = np.ones(5)
        shifted = initial_point_on_sphere(5, 1.0, 42, center=center)
        assert np.allclose(shifted - center, a)

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            initial_point_on_sphere(3, 0.0, 0)


class TestLibsvmParsing:
    def test_basic_line(self):
        samples, dim = parse_libsvm(["+1 1:0.5 3:1.2"])
        assert samples[0].label == 1
        assert samples[0].features == ((1, 0.5), (3, 1.2))
        assert dim == 3

    def test_label_only_line(self):
        samples, dim = parse_libsvm(["-1"])
        assert samples[0].label == -1
        assert samples[0].features == ()
        assert dim == 0

    def test_zero_label_maps_to_negative(self):
        samples, _ = parse_libsvm(["0 1:1", "1 1:2"])
        assert [s.label for s in samples] == [-1, 1]

    def test_non_increasing_indices_rejected(self):
        with pytest.raises(LibsvmFormatError, match="line 1"):
            parse_libsvm(["+1 3:1 2:1"])

    def test_malformed_feature_reports_line(self):
        with pytest.raises(LibsvmFormatError, match="line 2"):
            parse_libsvm(["+1 1:1", "-1 2:abc"])

    def test_unknown_label_rejected(self):
        with pytest.raises(LibsvmFormatError, match="label"):
            parse_libsvm(["+2 1:1"])

    def test_query_id_rejected(self):
        with pytest.raises(LibsvmFormatError, match="query-id"):
            parse_libsvm(["+1 qid:3 1:1"])

    def test_comments_and_blanks(self):
        samples, dim = parse_libsvm(["# header", "", "+1 2:1.5  # trailing"])
        assert len(samples) == 1 and dim == 2

    def test_expected_dim(self):
        _, dim = parse_libsvm(["+1 1:1"], expected_dim=7)
        assert dim == 7
        with pytest.raises(LibsvmFormatError, match="exceeds"):
            parse_libsvm(["+1 9:1"], expected_dim=7)

    def test_stream_and_file_loading(self, tmp_path):
        text = "+1 1:0.5 3:1.2\n-1 2:2.0\n"
        stream_samples, _ = parse_libsvm(io.StringIO(text))
        path = tmp_path / "tiny.txt"
        path.write_text(text, encoding="utf-8")
        file_samples, dim = load_libsvm(path)
        assert stream_samples == file_samples
        assert dim == 3

    def test_dense_conversion(self):
        samples, dim = parse_libsvm(["+1 1:0.5 3:1.2", "-1 2:2.0"])
        x, y = samples_to_dense(samples, dim)
        assert x.shape == (3, 2)
        assert np.array_equal(y, [1.0, -1.0])
        assert x[0, 0] == 0.5 and x[2, 0] == 1.2 and x[1, 1] == 2.0

    def test_parsed_data_feeds_logistic(self):
        samples, dim = parse_libsvm(["+1 1:1.0 2:0.5", "-1 1:-1.0", "+1 2:0.25"])
        x, y = samples_to_dense(samples, dim)
        obj = LogisticObjective(x, y, gamma=0.5)
        assert obj.dim == 2 and obj.n_samples == 3
        assert np.isfinite(obj.eval(np.zeros(2)))

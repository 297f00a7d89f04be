import math

import numpy as np
import pytest

import symlqr as sq
from symlqr.lti import _step_op

from conftest import motor_system
from oracles import forward_matrix, weighted_gain


class TestStateSpace:
    def test_dimensions(self, motor):
        assert motor.n == 2
        assert motor.m == 1

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            sq.StateSpace(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), np.zeros((1, 1)))
        with pytest.raises(ValueError):
            sq.StateSpace(np.eye(2), np.ones((2, 1)), np.ones((1, 3)), np.zeros((1, 1)))
        with pytest.raises(ValueError):
            # D must be square: equal input and output counts
            sq.StateSpace(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), np.zeros((1, 2)))

    def test_transposed(self, motor):
        tr = sq.transposed(motor)
        np.testing.assert_array_equal(tr.A, motor.A.T)
        np.testing.assert_array_equal(tr.B, motor.C.T)
        np.testing.assert_array_equal(tr.C, motor.B.T)

    def test_stability_margin(self, motor):
        assert math.isclose(sq.stability_margin(motor), 1.0, rel_tol=1e-12)


class TestSimulate:
    def test_foh_step_exact(self, scalar_lag):
        # Constant input is inside the FOH class, so y = 1 - e^-t to rounding.
        g = sq.TimeGrid(2.0, 10)
        u = sq.Signal(g, np.ones(11))
        _, y = sq.simulate(scalar_lag, np.zeros(1), u)
        np.testing.assert_allclose(y.values.ravel(), 1.0 - np.exp(-g.nodes), atol=1e-14)

    def test_foh_ramp_exact(self, scalar_lag):
        # y for u = t: t - 1 + e^-t, again exact for piecewise-linear input.
        g = sq.TimeGrid(3.0, 12)
        u = sq.Signal(g, g.nodes.copy())
        _, y = sq.simulate(scalar_lag, np.zeros(1), u)
        np.testing.assert_allclose(y.values.ravel(), g.nodes - 1 + np.exp(-g.nodes), atol=1e-14)

    def test_motor_free_response(self, motor):
        # x0 = (1, 1): y(t) = 3 e^-t - 2 e^-2t
        g = sq.TimeGrid(4.0, 2000)
        _, y = sq.simulate(motor, np.array([1.0, 1.0]), sq.Signal.zeros(g, 1))
        expected = 3.0 * np.exp(-g.nodes) - 2.0 * np.exp(-2.0 * g.nodes)
        np.testing.assert_allclose(y.values.ravel(), expected, atol=1e-13)
        assert math.isclose(y.values[500, 0], 0.8329677570411016, abs_tol=1e-13)

    def test_blocked_scan_matches_plain_loop(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((3, 3)) - 2.0 * np.eye(3)
        B = rng.standard_normal((3, 2))
        op = _step_op(sq.StateSpace(A, B, np.eye(3)[:2], np.zeros((2, 2))), 0.01)
        c = rng.standard_normal((1000, 3))
        x0 = rng.standard_normal(3)
        X = op.scan(x0, c)  # N = 1000 takes the blocked path
        ref = np.empty((1001, 3))
        ref[0] = x0
        for i in range(1000):
            ref[i + 1] = op.Ad @ ref[i] + c[i]
        np.testing.assert_allclose(X, ref, atol=1e-11)

    def test_zero_steps_boundary(self, scalar_lag):
        g = sq.TimeGrid(1.0, 2)
        u = sq.Signal(g, np.zeros(3))
        x, y = sq.simulate(scalar_lag, np.array([2.0]), u)
        np.testing.assert_allclose(y.values.ravel(), 2.0 * np.exp(-g.nodes), atol=1e-14)

    def test_feedthrough(self):
        sys = sq.StateSpace(np.array([[-1.0]]), np.zeros((1, 1)), np.zeros((1, 1)), np.array([[2.5]]))
        g = sq.TimeGrid(1.0, 5)
        u = sq.Signal(g, np.arange(6.0))
        _, y = sq.simulate(sys, np.zeros(1), u)
        np.testing.assert_array_equal(y.values, 2.5 * u.values)


class TestImpulseResponse:
    def test_motor_kernel(self, motor):
        # g(t) = 2 (e^-t - e^-2t)
        grid = sq.TimeGrid(4.0, 400)
        h, D = sq.impulse_response(motor, grid)
        expected = 2.0 * (np.exp(-grid.nodes) - np.exp(-2.0 * grid.nodes))
        np.testing.assert_allclose(h.values.ravel(), expected, atol=1e-12)
        np.testing.assert_array_equal(D, motor.D)

    def test_channel_layout(self):
        rng = np.random.default_rng(5)
        A = -np.eye(3) + 0.1 * rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 2))
        C = rng.standard_normal((2, 3))
        sys = sq.StateSpace(A, B, C, np.zeros((2, 2)))
        grid = sq.TimeGrid(1.0, 50)
        h, _ = sq.impulse_response(sys, grid)
        assert h.m == 4
        # entry (i, j) lives in channel i * m + j
        k = 17
        E = np.asarray(h.values[k]).reshape(2, 2)
        from scipy.linalg import expm

        np.testing.assert_allclose(E, C @ expm(A * grid.nodes[k]) @ B, atol=1e-12)


class TestGains:
    def test_motor_peak_gain_is_one(self, motor):
        # integral of |g| = 2 int (e^-t - e^-2t) = 1 on [0, inf)
        assert math.isclose(sq.gain_pk(motor), 1.0, abs_tol=1e-5)

    def test_finite_horizon_peak_gain(self, motor):
        # int_0^4 |g| dt, computed analytically
        expected = 2.0 * (1.0 - math.exp(-4.0)) - (1.0 - math.exp(-8.0))
        assert math.isclose(sq.gain_pk(motor, 4.0), expected, abs_tol=1e-5)

    def test_peak_gain_infinite_requires_stability(self):
        sys = sq.StateSpace([[1.0]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(ValueError):
            sq.gain_pk(sys)

    def test_pure_feedthrough_peak(self):
        sys = sq.StateSpace(np.array([[-1.0]]), np.zeros((1, 1)), np.zeros((1, 1)), np.array([[-3.0]]))
        assert math.isclose(sq.gain_pk(sys), 3.0, abs_tol=1e-9)

    def test_motor_hinf_is_one(self, motor):
        # |G(0)| = |C A^-1 B| = 1 and the peak sits at dc
        assert math.isclose(sq.hinf_norm(motor), 1.0, abs_tol=1e-9)

    def test_hinf_interior_peak(self):
        # Lightly damped oscillator peaks off dc: check against a fine sweep.
        A = np.array([[0.0, 1.0], [-4.0, -0.2]])
        sys = sq.StateSpace(A, np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]), np.zeros((1, 1)))
        w = np.linspace(1.5, 2.5, 200001)
        vals = np.abs(1.0 / (-(w**2) + 0.2j * w + 4.0))
        assert math.isclose(sq.hinf_norm(sys), vals.max(), rel_tol=1e-6)

    def test_gain_l2_matches_dense_svd(self, motor):
        grid = sq.TimeGrid(4.0, 800)
        dense = weighted_gain(forward_matrix(motor, grid), grid, 1)
        assert math.isclose(sq.gain_l2(motor, 4.0, n_steps=800), dense, abs_tol=1e-6)

    def test_gain_l2_asymmetric_route_matches_dense(self):
        # Not externally symmetric: exercises the transposed-realization adjoint.
        sys = sq.StateSpace(
            np.array([[-1.0, 0.7], [0.0, -2.0]]),
            np.array([[1.0], [0.5]]),
            np.array([[1.0, -0.3]]),
            np.zeros((1, 1)),
        )
        grid = sq.TimeGrid(2.0, 400)
        dense = weighted_gain(forward_matrix(sys, grid), grid, 1)
        assert math.isclose(sq.gain_l2(sys, 2.0, n_steps=400), dense, abs_tol=1e-6)

    def test_gain_l2_grows_with_horizon(self, motor):
        gains = [sq.gain_l2(motor, tf, n_steps=600) for tf in (0.5, 1.0, 2.0, 4.0)]
        assert all(b > a for a, b in zip(gains, gains[1:]))
        assert gains[-1] <= 1.0 + 1e-9


class TestSymmetry:
    def test_motor_externally_symmetric(self, motor):
        assert sq.check_external_symmetry(motor, np.eye(1)) < 1e-12

    def test_asymmetric_system_flagged(self):
        sys = sq.StateSpace(
            np.array([[-1.0, 0.7], [0.0, -2.0]]),
            np.array([[1.0, 0.0], [0.0, 1.0]]),
            np.array([[1.0, 0.0], [0.3, 1.0]]),
            np.zeros((2, 2)),
        )
        assert sq.check_external_symmetry(sys, np.eye(2)) > 1e-3

    def test_generator_completely_symmetric(self):
        for seed in range(4):
            sys, si, se = sq.random_symmetric_system(5, 2, seed, "completely_symmetric")
            assert sq.check_external_symmetry(sys, se) < 1e-10
            assert sq.check_internal_symmetry(sys, si, se) < 1e-12
            assert sq.stability_margin(sys) > 0.45
            np.testing.assert_array_equal(se, np.eye(2))

    def test_generator_signature_symmetric(self):
        for seed in range(4):
            sys, si, se = sq.random_symmetric_system(6, 2, seed, "signature_symmetric")
            assert sq.check_external_symmetry(sys, se) < 1e-10
            assert sq.check_internal_symmetry(sys, si, se) < 1e-12
            assert sq.stability_margin(sys) > 0.45

    def test_generator_rejects_bad_kind(self):
        with pytest.raises(ValueError):
            sq.random_symmetric_system(4, 2, 0, "full")

    def test_internal_implies_external(self):
        sys, si, se = sq.random_symmetric_system(5, 3, 11, "signature_symmetric")
        # perturb A away from internal symmetry: external residual must react
        A2 = sys.A.copy()
        A2[0, 1] += 0.2
        broken = sq.StateSpace(A2, sys.B, sys.C, sys.D)
        assert sq.check_external_symmetry(broken, se) > 1e-4

import math
import warnings

import numpy as np
import pytest

import symlqr as sq

from conftest import MOTOR_CLOSED_LOOP_EIGS, MOTOR_K_INF, motor_problem


@pytest.fixture
def integrator_prob():
    """Scalar integrator with unit weights: P(t) = tanh(t_f - t)."""
    return sq.LqrProblem(
        sys=sq.StateSpace([[0.0]], [[1.0]], [[1.0]], [[0.0]]),
        Q=np.eye(1),
        R=np.eye(1),
        x0=np.array([1.0]),
        t_f=2.0,
    )


class TestProblemValidation:
    def test_rejects_indefinite_R(self):
        with pytest.raises(ValueError):
            sq.LqrProblem(
                sys=sq.StateSpace([[0.0]], [[1.0]], [[1.0]], [[0.0]]),
                Q=np.eye(1),
                R=np.array([[0.0]]),
                x0=np.array([1.0]),
                t_f=1.0,
            )

    def test_rejects_negative_Q(self):
        with pytest.raises(ValueError):
            sq.LqrProblem(
                sys=sq.StateSpace([[0.0]], [[1.0]], [[1.0]], [[0.0]]),
                Q=-np.eye(1),
                R=np.eye(1),
                x0=np.array([1.0]),
                t_f=1.0,
            )

    def test_rejects_wrong_x0(self):
        with pytest.raises(ValueError):
            sq.LqrProblem(
                sys=sq.StateSpace([[0.0]], [[1.0]], [[1.0]], [[0.0]]),
                Q=np.eye(1),
                R=np.eye(1),
                x0=np.array([1.0, 2.0]),
                t_f=1.0,
            )

    def test_generalized_weights_with_feedthrough(self):
        sys = sq.StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.5]])
        prob = sq.LqrProblem(sys=sys, Q=np.eye(1), R=np.eye(1), x0=np.array([1.0]), t_f=1.0)
        assert not prob.strictly_proper
        np.testing.assert_allclose(prob.Rt, np.array([[1.25]]))
        np.testing.assert_allclose(prob.Sc, np.array([[0.5]]))


class TestFiniteHorizonSweep:
    @pytest.mark.parametrize("t_f", [0.5, 1.0, 2.0])
    def test_integrator_matches_tanh(self, integrator_prob, t_f):
        from dataclasses import replace

        prob = replace(integrator_prob, t_f=t_f)
        grid = sq.TimeGrid(t_f, 400)
        P = sq.solve_riccati_fh(prob, grid)
        expected = np.tanh(t_f - grid.nodes)
        np.testing.assert_allclose(P[:, 0, 0], expected, atol=1e-8)

    def test_trajectory_symmetric(self, motor_prob):
        grid = sq.TimeGrid(4.0, 200)
        P = sq.solve_riccati_fh(motor_prob, grid)
        assert np.max(np.abs(P - P.transpose(0, 2, 1))) == 0.0
        assert np.max(np.abs(P[-1])) == 0.0  # terminal condition


class TestStationarySolution:
    def test_motor_closed_forms(self, motor_prob):
        sol = sq.solve_are_hamiltonian(motor_prob)
        np.testing.assert_allclose(sol.K_inf, MOTOR_K_INF, atol=1e-12)
        assert sol.are_residual < 1e-12
        got = sorted(sol.Lambda.real)
        # stationary closed-loop modes mirrored into the right half plane
        assert math.isclose(got[0], -MOTOR_CLOSED_LOOP_EIGS[0], abs_tol=1e-10)
        assert math.isclose(got[1], -MOTOR_CLOSED_LOOP_EIGS[1], abs_tol=1e-10)
        assert math.isclose(sol.l2_rate, 2.0 * math.sqrt(2.0), abs_tol=1e-10)

    def test_p_inf_is_limit_of_sweep(self, motor_prob):
        from dataclasses import replace

        sol = sq.solve_are_hamiltonian(motor_prob)
        long_prob = replace(motor_prob, t_f=8.0)
        P = sq.solve_riccati_fh(long_prob, sq.TimeGrid(8.0, 1600))
        assert np.max(np.abs(P[0] - sol.P_inf)) < 1e-8

    def test_rejects_feedthrough(self):
        sys = sq.StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.5]])
        prob = sq.LqrProblem(sys=sys, Q=np.eye(1), R=np.eye(1), x0=np.array([1.0]), t_f=1.0)
        with pytest.raises(ValueError):
            sq.solve_are_hamiltonian(prob)

    def test_rejects_undetectable_axis_modes(self):
        # xdot = u with Q = 0: the Hamiltonian has eigenvalues on the axis.
        prob = sq.LqrProblem(
            sys=sq.StateSpace([[0.0]], [[1.0]], [[1.0]], [[0.0]]),
            Q=np.zeros((1, 1)),
            R=np.eye(1),
            x0=np.array([1.0]),
            t_f=1.0,
        )
        with pytest.raises(ValueError):
            sq.solve_are_hamiltonian(prob)


class TestAnalyticFormula:
    def test_matches_tanh(self, integrator_prob):
        sol = sq.solve_are_hamiltonian(integrator_prob)
        for t in (0.0, 0.7, 1.9):
            P = sq.analytic_P(sol, 2.0, t)
            assert math.isclose(P[0, 0], math.tanh(2.0 - t), abs_tol=1e-12)

    def test_matches_ode_sweep_on_motor(self):
        prob = motor_problem(t_f=6.0)
        sol = sq.solve_are_hamiltonian(prob)
        grid = sq.TimeGrid(6.0, 2400)
        P_ode = sq.solve_riccati_fh(prob, grid)
        for i in (0, 400, 1200, 2000):
            P_w = sq.analytic_P(sol, 6.0, float(grid.nodes[i]))
            assert np.max(np.abs(P_w - P_ode[i])) < 1e-6


class TestOptimalControl:
    def test_stationarity_along_trajectory(self, motor_prob):
        # u = -K(t) x must hold pointwise for the joint-flow trajectory.
        grid = sq.TimeGrid(4.0, 2000)
        fh = sq.optimal_control_fh(motor_prob, grid)
        u_fb = -np.einsum("tij,tj->ti", fh.K_traj, fh.x.values)
        np.testing.assert_allclose(fh.u.values, u_fb, atol=2e-6)

    def test_cost_below_free_response(self, motor_prob):
        grid = sq.TimeGrid(4.0, 2000)
        fh = sq.optimal_control_fh(motor_prob, grid)
        _, y_free = sq.simulate(motor_prob.sys, motor_prob.x0, sq.Signal.zeros(grid, 1))
        J_free = sq.cost_J(y_free, sq.Signal.zeros(grid, 1), motor_prob.Q, motor_prob.R)
        assert fh.J < J_free

    def test_cost_stationary_under_perturbation(self, motor_prob):
        grid = sq.TimeGrid(4.0, 1000)
        fh = sq.optimal_control_fh(motor_prob, grid)

        def cost_of(u):
            _, y = sq.simulate(motor_prob.sys, motor_prob.x0, u)
            return sq.cost_J(y, u, motor_prob.Q, motor_prob.R)

        rng = np.random.default_rng(0)
        for _ in range(3):
            d = sq.Signal(grid, 0.01 * rng.standard_normal((grid.n_nodes, 1)))
            assert cost_of(fh.u + d) > fh.J - 1e-10

    def test_cost_value(self):
        # J = 0.5 x0' P(0) x0 for the strictly proper case
        prob = motor_problem(t_f=6.0)
        grid = sq.TimeGrid(6.0, 3000)
        fh = sq.optimal_control_fh(prob, grid)
        sol = sq.solve_are_hamiltonian(prob)
        P0 = sq.analytic_P(sol, 6.0, 0.0)
        expected = 0.5 * prob.x0 @ P0 @ prob.x0
        assert math.isclose(fh.J, expected, rel_tol=1e-6)


class TestTailError:
    def test_slope_tracks_l2_rate(self, motor_prob):
        rep = sq.riccati_tail_error(motor_prob, [1.0, 2.0, 3.0, 4.0], t_bar=0.25)
        assert rep.l2_rate == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-9)
        assert rep.slope == pytest.approx(-rep.l2_rate, rel=0.25)

    def test_errors_decrease(self, motor_prob):
        rep = sq.riccati_tail_error(motor_prob, [1.0, 2.0, 4.0], t_bar=0.25)
        assert rep.errors[0] > rep.errors[1] > rep.errors[2]

    def test_t_bar_must_fit(self, motor_prob):
        with pytest.raises(ValueError):
            sq.riccati_tail_error(motor_prob, [1.0, 2.0], t_bar=1.0)

import math

import numpy as np
import pytest

import symlqr as sq

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
SQRT6 = math.sqrt(6.0)

# Closed-form stationary quantities for the motor problem (Q = 1, R = 2):
# P solves the ARE with p12 from 2 p12^2 + 4 p12 - 1 = 0.
MOTOR_K_INF = np.array([[(SQRT6 - 2.0) / 2.0, (SQRT2 + SQRT3 - 3.0) / 2.0]])
MOTOR_CLOSED_LOOP_EIGS = (-SQRT2, -SQRT3)


def motor_system() -> sq.StateSpace:
    return sq.StateSpace(
        A=np.array([[0.0, 1.0], [-2.0, -3.0]]),
        B=np.array([[0.0], [2.0]]),
        C=np.array([[1.0, 0.0]]),
        D=np.zeros((1, 1)),
    )


def motor_problem(t_f: float = 4.0) -> sq.LqrProblem:
    return sq.LqrProblem(
        sys=motor_system(),
        Q=np.eye(1),
        R=2.0 * np.eye(1),
        x0=np.array([1.0, 1.0]),
        t_f=t_f,
    )


@pytest.fixture
def motor():
    return motor_system()


@pytest.fixture
def motor_prob():
    return motor_problem()


@pytest.fixture
def scalar_lag():
    """First-order lag xdot = -x + u, y = x."""
    return sq.StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.0]])


def tank_system() -> tuple[sq.StateSpace, np.ndarray]:
    base, _, sigma_e = sq.random_symmetric_system(
        6, 6, seed=0, kind="completely_symmetric", stability_margin=0.5
    )
    sys = sq.StateSpace(base.A, np.eye(6), np.eye(6), np.zeros((6, 6)))
    return sys, sigma_e


@pytest.fixture
def tanks():
    return tank_system()

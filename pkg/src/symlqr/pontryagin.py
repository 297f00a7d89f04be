"""Model-free evaluation of the optimality operator.

For an externally symmetric plant, the control that satisfies Pontryagin's
stationarity condition is a fixed point of an affine map that can be
evaluated with two plant experiments and time reversals alone:

    run the plant under u, reverse the output, weight it, run the plant
    again from the origin, reverse once more, and scale.

Everything here talks to the plant exclusively through PlantInterface;
no system matrices are touched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .plant import START_ORIGIN, START_PROBLEM, PlantInterface
from .signals import Signal, TimeGrid, as_signature, inner_product, norm, time_reverse


def _symmetric_eig(M: np.ndarray, name: str, *, positive: bool) -> tuple[np.ndarray, np.ndarray]:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ValueError(f"{name} must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    if positive and np.min(vals) <= 1e-14 * max(1.0, np.max(np.abs(vals))):
        raise ValueError(f"{name} must be positive definite")
    if not positive and np.min(vals) < -1e-12 * max(1.0, np.max(np.abs(vals))):
        raise ValueError(f"{name} must be positive semidefinite")
    return vals, vecs


@dataclass(frozen=True, eq=False)
class OperatorConfig:
    """Weights and signature needed to evaluate the operator on a plant."""

    Q: np.ndarray
    R: np.ndarray
    sigma_e: np.ndarray
    grid: TimeGrid

    def __post_init__(self) -> None:
        m = np.atleast_2d(np.asarray(self.R, dtype=float)).shape[0]
        _symmetric_eig(self.Q, "Q", positive=False)
        _symmetric_eig(self.R, "R", positive=True)
        object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, dtype=float)))
        object.__setattr__(self, "R", np.atleast_2d(np.asarray(self.R, dtype=float)))
        object.__setattr__(self, "sigma_e", as_signature(self.sigma_e, m, "sigma_e"))

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @cached_property
    def R_inv(self) -> np.ndarray:
        vals, vecs = _symmetric_eig(self.R, "R", positive=True)
        return (vecs / vals) @ vecs.T

    @cached_property
    def R_sqrt(self) -> np.ndarray:
        vals, vecs = _symmetric_eig(self.R, "R", positive=True)
        return (vecs * np.sqrt(vals)) @ vecs.T

    @cached_property
    def R_inv_sqrt(self) -> np.ndarray:
        vals, vecs = _symmetric_eig(self.R, "R", positive=True)
        return (vecs / np.sqrt(vals)) @ vecs.T


@dataclass
class OperatorEval:
    """One operator evaluation: the result plus the raw experiment outputs."""

    result: Signal
    y: Signal  # first-run output
    w_hat: Signal  # second-run output
    plant_runs: int = 2


def _apply(plant: PlantInterface, cfg: OperatorConfig, u: Signal, start: str) -> OperatorEval:
    if u.m != plant.m:
        raise ValueError(f"input has {u.m} channels, plant has {plant.m}")
    y = plant.run(start, u)
    v = time_reverse(y).apply_matrix(cfg.sigma_e @ cfg.Q)
    w_hat = plant.run(START_ORIGIN, v)
    result = time_reverse(w_hat).apply_matrix(-cfg.R_inv @ cfg.sigma_e)
    return OperatorEval(result=result, y=y, w_hat=w_hat)


def apply_operator(plant: PlantInterface, cfg: OperatorConfig, u: Signal) -> OperatorEval:
    """Evaluate the affine optimality map at u: two runs, first from x0."""
    return _apply(plant, cfg, u, START_PROBLEM)


def apply_linear_part(plant: PlantInterface, cfg: OperatorConfig, u: Signal) -> OperatorEval:
    """Evaluate the linear part (initial state zeroed): two runs from the origin."""
    return _apply(plant, cfg, u, START_ORIGIN)


def apply_linear_adjoint(plant: PlantInterface, cfg: OperatorConfig, v: Signal) -> OperatorEval:
    """Adjoint of the linear part, again via two runs from the origin.

    Satisfies the similarity identity adj(v) = R S R^-1 v, with S the
    linear part; used for cross-checks, not by the iteration itself.
    """
    if v.m != plant.m:
        raise ValueError(f"input has {v.m} channels, plant has {plant.m}")
    y = plant.run(START_ORIGIN, v.apply_matrix(cfg.R_inv))
    t2 = time_reverse(y).apply_matrix(cfg.sigma_e @ cfg.Q)
    w_hat = plant.run(START_ORIGIN, t2)
    result = time_reverse(w_hat).apply_matrix(-cfg.sigma_e)
    return OperatorEval(result=result, y=y, w_hat=w_hat)


@dataclass
class StepSizeEstimate:
    """Largest admissible relaxation step and the operator norm behind it."""

    alpha_max: float
    operator_norm: float
    rayleigh: float  # final Rayleigh quotient; <= 0 for a well-posed problem
    iterations: int
    plant_runs: int


def estimate_max_step_size(
    plant: PlantInterface,
    cfg: OperatorConfig,
    tol: float = 1e-6,
    max_power_iters: int = 200,
    seed: int = 0,
) -> StepSizeEstimate:
    """Power iteration for the norm of the symmetrized linear part.

    Iterates v -> R^(1/2) S(R^(-1/2) v) on the plant (two runs per step);
    the iteration's Rayleigh quotient converges to the extreme eigenvalue,
    which is nonpositive, and alpha_max = 2 / (norm^2 + 1).
    """
    rng = np.random.default_rng(seed)
    v = Signal(cfg.grid, rng.standard_normal((cfg.grid.n_nodes, cfg.m)))
    v = v * (1.0 / norm(v))
    runs = 0
    est = 0.0
    rayleigh = 0.0
    for it in range(1, max_power_iters + 1):
        Av = (
            apply_linear_part(plant, cfg, v.apply_matrix(cfg.R_inv_sqrt))
            .result.apply_matrix(cfg.R_sqrt)
        )
        runs += 2
        rayleigh = inner_product(v, Av)
        size = norm(Av)
        if size < 1e-300:
            return StepSizeEstimate(
                alpha_max=2.0, operator_norm=0.0, rayleigh=0.0, iterations=it, plant_runs=runs
            )
        new_est = abs(rayleigh)
        v = Av * (1.0 / size)
        if it > 1 and abs(new_est - est) <= tol * max(new_est, 1e-300):
            est = new_est
            break
        est = new_est
    if rayleigh > 1e-8 * max(est, 1.0):
        warnings.warn(
            f"Rayleigh quotient {rayleigh:.3e} is positive; "
            "the plant may not be externally symmetric for this signature"
        )
    return StepSizeEstimate(
        alpha_max=2.0 / (est**2 + 1.0),
        operator_norm=est,
        rayleigh=rayleigh,
        iterations=it,
        plant_runs=runs,
    )


def safe_step_size(hinf_gain: float, Q: np.ndarray, R: np.ndarray) -> float:
    """Frequency-domain fallback step bound needing only an H-infinity gain.

    beta = 2 / (1 + g^4 lmax(Q)^2 / lmin(R)^2); any alpha < min(1, beta)
    converges, e.g. alpha = min(1, beta) * (1 - 1e-6).
    """
    if hinf_gain < 0:
        raise ValueError("hinf_gain must be nonnegative")
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    lmax_q = float(np.max(np.linalg.eigvalsh(0.5 * (Q + Q.T))))
    lmin_r = float(np.min(np.linalg.eigvalsh(0.5 * (R + R.T))))
    if lmin_r <= 0:
        raise ValueError("R must be positive definite")
    return 2.0 / (1.0 + hinf_gain**4 * lmax_q**2 / lmin_r**2)


def contraction_bound(alpha: float, operator_norm: float) -> float:
    """L2 error-contraction factor of the relaxed iteration per step."""
    return float(np.sqrt((1.0 - alpha) ** 2 + alpha**2 * operator_norm**2))

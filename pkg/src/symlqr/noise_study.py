"""Monte Carlo study of how measurement noise propagates into the iterates.

Because the plant is linear and the noise additive, the deviation of a
noisy run from the noise-free iterate evolves linearly in the noise, so
its mean is zero and its covariance admits closed geometric-series bounds.
The study replays the same solve M times with per-trial noise streams and
checks both facts empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import lti
from .plant import NoiseModel, SimulatedPlant, derive_seed
from .pontryagin import OperatorConfig, contraction_bound, estimate_max_step_size
from .riccati import LqrProblem
from .signals import Signal, TimeGrid
from .solver import SolverConfig, solve


@dataclass
class NoiseStudyReport:
    M: int
    k: int
    alpha: float
    noise: NoiseModel
    mean_pass_fraction: float  # fraction of (node, channel) entries within 4 SE of zero
    mean_ok: bool
    var_metric: str  # "integrated_l2", "pointwise_linf", or "none"
    var_empirical: float
    var_bound: float
    var_ok: bool
    rho: float  # contraction factor used in the geometric-series bound
    noise_free_u: Signal
    mean_deviation: np.ndarray
    standard_error: np.ndarray


def _run_fixed_iterations(
    prob: LqrProblem, sigma_e, grid: TimeGrid, alpha: float, noise: NoiseModel, k: int
) -> Signal:
    plant = SimulatedPlant(prob.sys, prob.x0, grid, sigma_e, noise)
    cfg = OperatorConfig(Q=prob.Q, R=prob.R, sigma_e=sigma_e, grid=grid)
    res = solve(plant, cfg, SolverConfig(alpha=alpha, eps0=1e-300, max_iter=k))
    return res.u


def run_unbiasedness_study(
    prob: LqrProblem,
    sigma_e,
    grid: TimeGrid,
    alpha: float,
    noise: NoiseModel,
    k: int,
    M: int,
    seed: int,
) -> NoiseStudyReport:
    """Run M noisy solves of k iterations each against a noise-free reference.

    Checks that the per-node mean deviation stays within 4 standard errors
    of zero on at least 99 percent of entries, and that the empirical
    covariance respects the matching closed-form bound: the integrated
    spectral norm for gaussian noise, the sup-node max row sum for bounded
    noise.  Trial t draws its noise stream from derive_seed(seed, t).
    """
    if noise.kind == "none":
        raise ValueError("the study needs a noisy model; got kind none")
    u_ref = _run_fixed_iterations(prob, sigma_e, grid, alpha, noise=NoiseModel(), k=k)
    deviations = np.empty((M, grid.n_nodes, prob.sys.m))
    for t in range(M):
        trial_noise = replace(noise, seed=derive_seed(seed, t))
        u_t = _run_fixed_iterations(prob, sigma_e, grid, alpha, trial_noise, k)
        deviations[t] = u_t.values - u_ref.values

    mean = deviations.mean(axis=0)
    sd = deviations.std(axis=0, ddof=1)
    se = sd / math.sqrt(M)
    ok = np.where(se > 0, np.abs(mean) <= 4.0 * se, mean == 0.0)
    mean_pass_fraction = float(np.mean(ok))
    mean_ok = mean_pass_fraction >= 0.99

    centered = deviations - mean
    # Per-node covariance matrices over trials, (n_nodes, m, m).
    cov = np.einsum("ati,atj->tij", centered, centered) / (M - 1)

    m = prob.sys.m
    cfg = OperatorConfig(Q=prob.Q, R=prob.R, sigma_e=sigma_e, grid=grid)
    quiet_plant = SimulatedPlant(prob.sys, prob.x0, grid, sigma_e, NoiseModel())
    if noise.kind == "gaussian_l2":
        spectral_norms = np.linalg.svd(cov, compute_uv=False)[:, 0]
        var_empirical = float(np.dot(grid.trapezoid_weights, spectral_norms))
        est = estimate_max_step_size(quiet_plant, cfg)
        rho = contraction_bound(alpha, est.operator_norm)
        if rho >= 1.0:
            raise ValueError(f"contraction bound {rho:.3f} >= 1; the variance bound does not apply")
        g2 = lti.gain_l2(prob.sys, grid.t_f, n_steps=grid.n_steps)
        r_inv_2 = float(np.linalg.norm(np.linalg.inv(prob.R), 2))
        q_2 = float(np.linalg.norm(prob.Q, 2))
        var_bound = (
            m * noise.sigma**2 * alpha**2 * grid.t_f * r_inv_2**2 * (g2**2 * q_2**2 + 1.0)
            / (1.0 - rho**2)
        )
        var_metric = "integrated_l2"
    else:
        row_sums = np.max(np.sum(np.abs(cov), axis=2), axis=1)
        var_empirical = float(np.max(row_sums))
        try:
            g_pk = lti.gain_pk(prob.sys, math.inf)
        except ValueError:
            g_pk = lti.gain_pk(prob.sys, grid.t_f)
        r_inv_inf = float(np.linalg.norm(np.linalg.inv(prob.R), np.inf))
        q_inf = float(np.linalg.norm(prob.Q, np.inf))
        rho = 1.0 - alpha + alpha * r_inv_inf * g_pk**2 * q_inf
        if rho >= 1.0:
            raise ValueError(f"sup-norm contraction {rho:.3f} >= 1; the variance bound does not apply")
        var_bound = (
            m**1.5 * noise.bound**2 * alpha**2 * r_inv_inf**2 * (g_pk**2 * q_inf**2 + 1.0)
            / (1.0 - rho**2)
        )
        var_metric = "pointwise_linf"
    var_ok = var_empirical <= 1.1 * var_bound

    return NoiseStudyReport(
        M=M,
        k=k,
        alpha=alpha,
        noise=noise,
        mean_pass_fraction=mean_pass_fraction,
        mean_ok=mean_ok,
        var_metric=var_metric,
        var_empirical=var_empirical,
        var_bound=var_bound,
        var_ok=var_ok,
        rho=rho,
        noise_free_u=u_ref,
        mean_deviation=mean,
        standard_error=se,
    )

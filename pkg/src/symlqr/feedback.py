"""Static feedback gain recovered from sampled closed-run data.

After the iteration has produced a near-optimal control, one more plant
run supplies state samples X and control samples U on an early window
[0, t_bar]; the stationary gain then solves K X = -U.  Averaging the data
matrices over repeated noisy trials (not the per-trial gains) suppresses
measurement noise.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass

from .plant import START_PROBLEM, NoiseModel
from .signals import Signal


class RankDeficientDataError(RuntimeError):
    """State samples do not span the state space."""


@dataclass
class DataMatrices:
    """Sampled states (n x n_s) and controls (m x n_s) at shared nodes."""

    X: np.ndarray
    U: np.ndarray
    sample_times: np.ndarray
    sample_indices: np.ndarray
    condition_number: float


@dataclass
class GainEstimate:
    K: np.ndarray
    residual: float  # max |K X + U| on the data that produced K
    singular_values: np.ndarray
    provenance: str  # "exact-solve", "least-squares", or "averaged(w)"
    n_trials: int = 1


def collect_data(
    plant,
    u: Signal,
    n_s: int,
    t_bar: float | None = None,
    state_noise: NoiseModel | None = None,
) -> DataMatrices:
    """One data-collection run: apply u from x0 and sample the early window.

    Samples sit at t_i = (i - 1) t_bar / n_s, i = 1..n_s, snapped to grid
    nodes; t_bar defaults to min(1, t_f / 4).  The plant must expose
    run_with_state_samples (the simulated plant does).
    """
    grid = u.grid
    if t_bar is None:
        t_bar = min(1.0, grid.t_f / 4.0)
    if not 0 < t_bar <= grid.t_f:
        raise ValueError(f"t_bar must lie in (0, {grid.t_f}], got {t_bar}")
    if n_s < 1:
        raise ValueError(f"n_s must be positive, got {n_s}")
    times = np.arange(n_s) * (t_bar / n_s)
    indices = np.rint(times / grid.dt).astype(int)
    X = plant.run_with_state_samples(START_PROBLEM, u, indices, state_noise)
    if n_s < X.shape[0]:
        raise ValueError(f"need at least {X.shape[0]} samples, got {n_s}")
    U = u.values[indices].T.copy()
    if X.shape[0] == n_s:
        cond = float(np.linalg.cond(X))
    else:
        cond = float(np.linalg.cond(X @ X.T))
    return DataMatrices(
        X=X,
        U=U,
        sample_times=grid.nodes[indices].copy(),
        sample_indices=indices,
        condition_number=cond,
    )


def recover_gain(data: DataMatrices) -> GainEstimate:
    """Solve K X = -U; exact for n_s = n, least squares for n_s > n.

    Raises RankDeficientDataError when the state samples are rank deficient
    (singular values below 1e-10 of the largest); perturbing the initial
    state or the sample times usually fixes that.
    """
    n, n_s = data.X.shape
    svals = np.linalg.svd(data.X, compute_uv=False)
    if svals[0] == 0.0 or np.sum(svals > 1e-10 * svals[0]) < n:
        raise RankDeficientDataError(
            "state samples are rank deficient; perturb the initial state or sample times"
        )
    if n_s == n:
        K = -np.linalg.solve(data.X.T, data.U.T).T
        provenance = "exact-solve"
    else:
        K = -np.linalg.lstsq(data.X.T, data.U.T, rcond=None)[0].T
        provenance = "least-squares"
    residual = float(np.max(np.abs(K @ data.X + data.U)))
    return GainEstimate(K=K, residual=residual, singular_values=svals, provenance=provenance)


def average_trials(trials: list[DataMatrices]) -> GainEstimate:
    """Recover the gain from element-wise averaged data matrices.

    Averaging happens on (X, U), not on per-trial gains; the per-trial
    estimates are diagnostics only.
    """
    if not trials:
        raise ValueError("need at least one trial")
    first = trials[0]
    for t in trials[1:]:
        if t.X.shape != first.X.shape or not np.array_equal(t.sample_indices, first.sample_indices):
            raise ValueError("trials must share sample times and shapes")
    X = np.mean([t.X for t in trials], axis=0)
    U = np.mean([t.U for t in trials], axis=0)
    cond = float(np.linalg.cond(X) if X.shape[0] == X.shape[1] else np.linalg.cond(X @ X.T))
    est = recover_gain(
        DataMatrices(
            X=X,
            U=U,
            sample_times=first.sample_times,
            sample_indices=first.sample_indices,
            condition_number=cond,
        )
    )
    est.provenance = f"averaged({len(trials)})"
    est.n_trials = len(trials)
    return est

"""Relaxed fixed-point iteration on the plant.

Each iteration blends the current control with one operator evaluation,
u <- (1 - alpha) u + alpha T(u), costing exactly two plant runs.  The
iteration contracts in L2 whenever alpha is below the estimated step
bound, and in the sup norm under the stronger peak-gain condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .plant import PlantInterface
from .pontryagin import OperatorConfig, apply_operator
from .signals import Signal, norm

NORM_KINDS = ("l2", "linf")


class SolverDivergenceError(RuntimeError):
    """Iterates blew past the divergence guard."""

    def __init__(self, iteration: int, size: float):
        super().__init__(f"iterate norm {size:.3e} exceeded the guard at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    """Iteration settings; u0 defaults to the zero signal."""

    alpha: float
    eps0: float = 1e-8
    max_iter: int = 100
    norm_kind: str = "l2"
    record_history: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.eps0 > 0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}")


@dataclass
class SolveResult:
    u: Signal
    iterations: int
    residuals: list[float]
    termination: str  # "tolerance" or "max_iter"
    plant_runs: int
    errors_l2: list[float] | None = None
    errors_linf: list[float] | None = None
    history: list[Signal] | None = field(default=None, repr=False)


def iterate_once(
    plant: PlantInterface, cfg: OperatorConfig, u: Signal, alpha: float
) -> Signal:
    """One relaxed update (1 - alpha) u + alpha T(u); two plant runs."""
    t_u = apply_operator(plant, cfg, u).result
    return (1.0 - alpha) * u + alpha * t_u


def solve(
    plant: PlantInterface,
    op_cfg: OperatorConfig,
    cfg: SolverConfig,
    u0: Signal | None = None,
    oracle_u_star: Signal | None = None,
) -> SolveResult:
    """Iterate until the residual drops below eps0 or max_iter is reached.

    When an oracle control is supplied, the distance to it is recorded in
    both norms at every iterate (index 0 is the initial guess).  Divergence
    past 1e6 * (1 + ||u0||) raises SolverDivergenceError.
    """
    u = Signal.zeros(op_cfg.grid, plant.m) if u0 is None else u0
    p = 2 if cfg.norm_kind == "l2" else math.inf
    guard = 1e6 * (1.0 + norm(u, p))
    residuals: list[float] = []
    errors_l2 = errors_linf = None
    if oracle_u_star is not None:
        errors_l2 = [norm(u - oracle_u_star, 2)]
        errors_linf = [norm(u - oracle_u_star, math.inf)]
    history = [u] if cfg.record_history else None
    termination = "max_iter"
    iterations = 0
    for _ in range(cfg.max_iter):
        u_next = iterate_once(plant, op_cfg, u, cfg.alpha)
        iterations += 1
        residuals.append(norm(u_next - u, p))
        if oracle_u_star is not None:
            errors_l2.append(norm(u_next - oracle_u_star, 2))
            errors_linf.append(norm(u_next - oracle_u_star, math.inf))
        if history is not None:
            history.append(u_next)
        if norm(u_next, p) > guard:
            raise SolverDivergenceError(iterations, norm(u_next, p))
        u = u_next
        if residuals[-1] < cfg.eps0:
            termination = "tolerance"
            break
    return SolveResult(
        u=u,
        iterations=iterations,
        residuals=residuals,
        termination=termination,
        plant_runs=2 * iterations,
        errors_l2=errors_l2,
        errors_linf=errors_linf,
        history=history,
    )

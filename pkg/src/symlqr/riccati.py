"""Riccati-based LQR oracles: finite-horizon ODE, ARE via the Hamiltonian
eigenproblem, the closed-form finite-horizon solution built from the
eigenbasis, and the optimal trajectory itself.

The finite-horizon optimal control is evaluated by propagating the joint
state/costate flow with the exact one-step matrix exponential, seeded with
the initial costate P(0) x0; for strictly proper systems P(0) comes from the
closed-form eigenbasis expression, so the reference control is accurate at
the grid nodes to rounding, not to integration order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .lti import StateSpace, _StepOp
from .signals import Signal, TimeGrid


def _check_symmetric(M: np.ndarray, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    scale = max(1.0, float(np.max(np.abs(M))))
    if M.shape[0] != M.shape[1] or np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ValueError(f"{name} must be symmetric, got {M}")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class LqrProblem:
    """Quadratic tracking-to-zero problem on [0, t_f] for a square system.

    Cost: J = 1/2 int_0^t_f (y'Qy + u'Ru) dt with Q >= 0, R > 0.
    """

    sys: StateSpace
    Q: np.ndarray
    R: np.ndarray
    x0: np.ndarray
    t_f: float

    def __post_init__(self) -> None:
        m, n = self.sys.m, self.sys.n
        Q = _check_symmetric(self.Q, "Q")
        R = _check_symmetric(self.R, "R")
        if Q.shape != (m, m) or R.shape != (m, m):
            raise ValueError(f"Q and R must be {m} x {m}")
        if np.min(np.linalg.eigvalsh(Q)) < -1e-12 * max(1.0, np.max(np.abs(Q))):
            raise ValueError("Q must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(R)) <= 1e-14 * max(1.0, np.max(np.abs(R))):
            raise ValueError("R must be positive definite")
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.shape[0] != n:
            raise ValueError(f"x0 has length {x0.shape[0]}, system has {n} states")
        if not self.t_f > 0:
            raise ValueError(f"t_f must be positive, got {self.t_f}")
        for name, val in (("Q", Q), ("R", R), ("x0", x0)):
            val = np.asarray(val).copy()
            val.flags.writeable = False
            object.__setattr__(self, name, val)
        object.__setattr__(self, "t_f", float(self.t_f))

    # Generalized weights for y = Cx + Du substituted into the cost.
    @cached_property
    def Qx(self) -> np.ndarray:
        return self.sys.C.T @ self.Q @ self.sys.C

    @cached_property
    def Sc(self) -> np.ndarray:
        return self.sys.C.T @ self.Q @ self.sys.D

    @cached_property
    def Rt(self) -> np.ndarray:
        return self.R + self.sys.D.T @ self.Q @ self.sys.D

    @cached_property
    def Rt_inv(self) -> np.ndarray:
        return np.linalg.inv(self.Rt)

    @property
    def strictly_proper(self) -> bool:
        return bool(np.max(np.abs(self.sys.D)) < 1e-12)


@dataclass
class RiccatiSolution:
    """Stationary Riccati data from the Hamiltonian eigenproblem."""

    P_inf: np.ndarray
    K_inf: np.ndarray
    Lambda: np.ndarray  # right-half-plane eigenvalues, sorted by (Re, Im)
    W11: np.ndarray  # eigenvector blocks, complex, columns paired with Lambda
    W12: np.ndarray
    W21: np.ndarray
    W22: np.ndarray
    l2_rate: float  # 2 * min Re Lambda, the horizon-tail decay rate
    are_residual: float
    cond_W11: float
    P_traj: np.ndarray | None = None


def solve_riccati_fh(prob: LqrProblem, grid: TimeGrid) -> np.ndarray:
    """Backward finite-horizon Riccati sweep; returns P at every node.

    Integrates -dP/dt = A'P + PA + Qx - (PB + Sc) Rt^-1 (B'P + Sc') from
    P(t_f) = 0 with fixed-step RK4, symmetrizing after each step.
    """
    if abs(grid.t_f - prob.t_f) > 1e-12 * max(1.0, prob.t_f):
        raise ValueError(f"grid horizon {grid.t_f} differs from problem horizon {prob.t_f}")
    A, B = prob.sys.A, prob.sys.B
    Qx, Sc, Rt_inv = prob.Qx, prob.Sc, prob.Rt_inv

    def f(P: np.ndarray) -> np.ndarray:
        gain = (P @ B + Sc) @ Rt_inv
        return A.T @ P + P @ A + Qx - gain @ (B.T @ P + Sc.T)

    h = grid.dt
    n = prob.sys.n
    # Integrate in the reversed time variable so the sweep runs forward.
    traj = np.empty((grid.n_nodes, n, n))
    P = np.zeros((n, n))
    traj[0] = P
    for k in range(grid.n_steps):
        k1 = f(P)
        k2 = f(P + 0.5 * h * k1)
        k3 = f(P + 0.5 * h * k2)
        k4 = f(P + h * k3)
        P = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        P = 0.5 * (P + P.T)
        traj[k + 1] = P
    return traj[::-1].copy()


def _hamiltonian(prob: LqrProblem) -> np.ndarray:
    A, B = prob.sys.A, prob.sys.B
    Ar = A - B @ prob.Rt_inv @ prob.Sc.T
    Qr = prob.Qx - prob.Sc @ prob.Rt_inv @ prob.Sc.T
    return np.block([[Ar, -B @ prob.Rt_inv @ B.T], [-Qr, -Ar.T]])


def solve_are_hamiltonian(prob: LqrProblem) -> RiccatiSolution:
    """Stationary solution from the eigendecomposition of the Hamiltonian.

    Requires a strictly proper system.  Raises if the Hamiltonian has
    eigenvalues within 1e-9 of the imaginary axis or a singular stable
    eigenvector block; warns when that block is badly conditioned.
    """
    if not prob.strictly_proper:
        raise ValueError("stationary solve requires D = 0")
    n = prob.sys.n
    H = _hamiltonian(prob)
    eigvals, eigvecs = np.linalg.eig(H)
    if np.min(np.abs(eigvals.real)) < 1e-9:
        raise ValueError("Hamiltonian has eigenvalues on the imaginary axis")
    stable = np.flatnonzero(eigvals.real < 0)
    antistable = np.flatnonzero(eigvals.real > 0)
    if len(stable) != n or len(antistable) != n:
        raise ValueError("Hamiltonian spectrum is not split evenly about the axis")
    # Pair the mirrored halves: sort the antistable part by (Re, Im) and the
    # stable part by the same key of its mirror image.
    anti_order = antistable[np.lexsort((eigvals[antistable].imag, eigvals[antistable].real))]
    mirrored = -eigvals[stable]
    stab_order = stable[np.lexsort((mirrored.imag, mirrored.real))]
    lam = eigvals[anti_order]
    W11 = eigvecs[:n, stab_order]
    W21 = eigvecs[n:, stab_order]
    W12 = eigvecs[:n, anti_order]
    W22 = eigvecs[n:, anti_order]

    W11r, W21r = _realified(eigvals[stab_order], W11, W21)
    cond = float(np.linalg.cond(W11r))
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError("stable eigenvector block is singular")
    if cond > 1e8:
        warnings.warn(f"stable eigenvector block badly conditioned: cond = {cond:.2e}")
    P = np.linalg.solve(W11r.T, W21r.T).T
    P = 0.5 * (P + P.T)
    A, B = prob.sys.A, prob.sys.B
    res = A.T @ P + P @ A - P @ B @ prob.Rt_inv @ B.T @ P + prob.Qx
    K = prob.Rt_inv @ B.T @ P
    return RiccatiSolution(
        P_inf=P,
        K_inf=K,
        Lambda=lam,
        W11=W11,
        W12=W12,
        W21=W21,
        W22=W22,
        l2_rate=2.0 * float(np.min(lam.real)),
        are_residual=float(np.max(np.abs(res))),
        cond_W11=cond,
    )


def _realified(lam: np.ndarray, V1: np.ndarray, V2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real basis for the span of complex eigenvector columns."""
    n = len(lam)
    used = np.zeros(n, dtype=bool)
    cols1, cols2 = [], []
    for i in range(n):
        if used[i]:
            continue
        used[i] = True
        if abs(lam[i].imag) <= 1e-9 * (1.0 + abs(lam[i])):
            cols1.append(V1[:, i].real)
            cols2.append(V2[:, i].real)
            continue
        cols1.append(V1[:, i].real)
        cols2.append(V2[:, i].real)
        cols1.append(V1[:, i].imag)
        cols2.append(V2[:, i].imag)
        # Drop the conjugate partner.
        rest = np.flatnonzero(~used)
        j = rest[np.argmin(np.abs(lam[rest] - lam[i].conjugate()))]
        used[j] = True
    return np.column_stack(cols1), np.column_stack(cols2)


def analytic_P(sol: RiccatiSolution, t_f: float, t: float) -> np.ndarray:
    """Closed-form finite-horizon P(t) from the Hamiltonian eigenbasis.

    P(t) = (W21 + W22 V)(W11 + W12 V)^-1 with
    V = -exp(-Lambda tau) W22^-1 W21 exp(-Lambda tau), tau = t_f - t.
    Numerically stable for all tau >= 0: V decays to zero and P to P_inf.
    """
    tau = t_f - t
    if tau < 0:
        raise ValueError(f"t = {t} lies beyond the horizon {t_f}")
    decay = np.exp(-sol.Lambda * tau)
    M0 = np.linalg.solve(sol.W22, sol.W21)
    V = -(decay[:, None] * M0) * decay[None, :]
    P = np.linalg.solve((sol.W11 + sol.W12 @ V).T, (sol.W21 + sol.W22 @ V).T).T
    if np.max(np.abs(P.imag)) > 1e-6 * max(1.0, np.max(np.abs(P.real))):
        warnings.warn("closed-form P(t) has a large imaginary residue")
    P = P.real
    return 0.5 * (P + P.T)


def cost_J(y: Signal, u: Signal, Q: np.ndarray, R: np.ndarray) -> float:
    """Quadratic cost 1/2 int (y'Qy + u'Ru) dt by trapezoidal quadrature."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    integrand = np.einsum("ti,ij,tj->t", y.values, Q, y.values)
    integrand = integrand + np.einsum("ti,ij,tj->t", u.values, R, u.values)
    return 0.5 * float(np.dot(y.grid.trapezoid_weights, integrand))


@dataclass
class FhSolution:
    """Finite-horizon optimal control and its supporting data."""

    u: Signal
    x: Signal
    y: Signal
    J: float
    P_traj: np.ndarray
    K_traj: np.ndarray  # (n_nodes, m, n) time-varying gain


def optimal_control_fh(prob: LqrProblem, grid: TimeGrid) -> FhSolution:
    """Optimal control, trajectory, and cost on the grid.

    P comes from the backward RK4 sweep; the optimal pair is then produced
    by the exact-step propagation of the joint state/costate system, seeded
    with lambda(0) = P(0) x0 (closed-form P(0) when D = 0).
    """
    P_traj = solve_riccati_fh(prob, grid)
    B, C, D = prob.sys.B, prob.sys.C, prob.sys.D
    K_traj = np.einsum("ij,tjk->tik", prob.Rt_inv, np.einsum("ij,tjk->tik", B.T, P_traj) + prob.Sc.T[None, :, :])

    P0 = P_traj[0]
    if prob.strictly_proper:
        try:
            P0 = analytic_P(solve_are_hamiltonian(prob), prob.t_f, 0.0)
        except ValueError:
            pass
    n = prob.sys.n
    H = _hamiltonian(prob)
    flow = _StepOp(H, np.zeros((2 * n, 1)), grid.dt)
    # The joint flow has modes growing like e^{rho(H) t}, so float noise in
    # the stable seed direction is amplified by e^{rho(H) t_f}.  Re-seeding
    # lambda = P(t) x(t) at window boundaries projects that contamination
    # back out; windows are sized to cap the per-window growth near e^8.
    growth = float(np.max(np.abs(np.linalg.eigvals(H))))
    window = grid.n_steps
    if growth * grid.t_f > 8.0:
        window = max(1, int(8.0 / (growth * grid.dt)))
    z = np.empty((grid.n_steps + 1, 2 * n))
    z[0] = np.concatenate([prob.x0, P0 @ prob.x0])
    k = 0
    while k < grid.n_steps:
        j = min(k + window, grid.n_steps)
        z[k : j + 1] = flow.scan(z[k], np.zeros((j - k, 2 * n)))
        k = j
        if k < grid.n_steps:
            z[k, n:] = P_traj[k] @ z[k, :n]
    x_nodes = z[:, :n]
    lam_nodes = z[:, n:]
    lam_scale = float(np.max(np.abs(lam_nodes))) or 1.0
    if float(np.max(np.abs(lam_nodes[-1]))) > 1e-6 * lam_scale:
        warnings.warn("costate fails to vanish at the horizon; trajectory may be inaccurate")
    u_nodes = -(x_nodes @ prob.Sc + lam_nodes @ B) @ prob.Rt_inv.T
    y_nodes = x_nodes @ C.T + u_nodes @ D.T
    u = Signal(grid, u_nodes)
    x = Signal(grid, x_nodes)
    y = Signal(grid, y_nodes)
    return FhSolution(u=u, x=x, y=y, J=cost_J(y, u, prob.Q, prob.R), P_traj=P_traj, K_traj=K_traj)


@dataclass
class TailErrorReport:
    """Horizon-tail study of ||P(0..t_bar) - P_inf|| against t_f."""

    t_f_values: np.ndarray
    errors: np.ndarray
    slope: float  # fitted d log(err) / d t_f
    l2_rate: float  # theoretical decay rate (errors ~ exp(-l2_rate * t_f))


def riccati_tail_error(
    prob: LqrProblem,
    t_f_values,
    t_bar: float = 1.0,
    steps_per_unit: int = 400,
) -> TailErrorReport:
    """Measure how fast the finite-horizon P approaches P_inf as t_f grows."""
    sol = solve_are_hamiltonian(prob)
    t_f_values = np.asarray(t_f_values, dtype=float)
    errors = np.empty_like(t_f_values)
    for i, t_f in enumerate(t_f_values):
        if t_bar >= t_f:
            raise ValueError(f"t_bar = {t_bar} must lie inside the horizon {t_f}")
        grid = TimeGrid(t_f, max(200, int(round(steps_per_unit * t_f))))
        traj = solve_riccati_fh(replace(prob, t_f=float(t_f)), grid)
        keep = grid.nodes <= t_bar + 1e-12
        errors[i] = np.max(np.abs(traj[keep] - sol.P_inf))
    slope = float(np.polyfit(t_f_values, np.log(errors), 1)[0])
    return TailErrorReport(
        t_f_values=t_f_values, errors=errors, slope=slope, l2_rate=sol.l2_rate
    )

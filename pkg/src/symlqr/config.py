"""TOML run configurations.

A config file describes one experiment end to end: the system (inline
matrices or a seeded generator), cost weights, horizon and grid, solver
settings, optional noise, and the output directory.  load_config turns it
into validated objects; anything malformed raises ConfigError with the
offending key.
"""

from __future__ import annotations

import sys as _sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if _sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .lti import StateSpace, random_symmetric_system
from .plant import NOISE_KINDS, NoiseModel
from .riccati import LqrProblem
from .signals import TimeGrid, as_signature
from .solver import NORM_KINDS

GENERATOR_KINDS = ("completely_symmetric", "signature_symmetric")
ALPHA_MODES = ("auto-safe", "auto-power")


class ConfigError(Exception):
    pass


def _require(table: dict, key: str, where: str) -> Any:
    if key not in table:
        label = f"[{where}] {key}" if where else f"[{key}]"
        raise ConfigError(f"missing required {label}")
    return table[key]


def _as_matrix(value: Any, where: str) -> np.ndarray:
    try:
        mat = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] is not a numeric matrix: {exc}") from None
    if mat.ndim != 2:
        raise ConfigError(f"[{where}] must be a list of rows, got shape {mat.shape}")
    return mat


def _as_weight(value: Any, m: int, where: str) -> np.ndarray:
    # Scalar shorthand: q means q * identity on the m channels.
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value) * np.eye(m)
    return _as_matrix(value, where)


def _override_matrix(value: Any, rows: int, cols: int, where: str) -> np.ndarray:
    if value == "identity":
        if rows != cols:
            raise ConfigError(f"[{where}] identity needs a square slot, got {rows}x{cols}")
        return np.eye(rows)
    if value == "zero":
        return np.zeros((rows, cols))
    mat = _as_matrix(value, where)
    if mat.shape != (rows, cols):
        raise ConfigError(f"[{where}] must be {rows}x{cols}, got {mat.shape[0]}x{mat.shape[1]}")
    return mat


@dataclass
class SolverSettings:
    alpha: float | str = "auto-power"
    eps0: float = 1e-8
    max_iter: int = 100
    norm: str = "l2"
    record_history: bool = False


@dataclass
class GainRecoverySettings:
    n_s: int = 0  # 0 means: use the state dimension
    t_bar: float | None = None
    trials: int = 1
    state_noise_sigma: float = 0.0
    state_noise_seed: int = 101


@dataclass
class StudySettings:
    M: int = 100
    k: int = 5


@dataclass
class RunSetup:
    sys: StateSpace
    sigma_e: np.ndarray
    prob: LqrProblem
    grid: TimeGrid
    solver: SolverSettings
    noise: NoiseModel
    gain_recovery: GainRecoverySettings
    study: StudySettings
    output_dir: Path
    oracle_t_f_values: list[float] = field(default_factory=list)
    oracle_t_bar: float = 1.0


def _build_system(table: dict) -> tuple[StateSpace, np.ndarray | None]:
    if "kind" in table:
        kind = table["kind"]
        if kind not in GENERATOR_KINDS:
            raise ConfigError(f"[system] kind must be one of {GENERATOR_KINDS}, got {kind!r}")
        n = int(_require(table, "n", "system"))
        m = int(_require(table, "m", "system"))
        seed = int(_require(table, "seed", "system"))
        margin = float(table.get("stability_margin", 0.5))
        try:
            sys, _, sigma_e = random_symmetric_system(n, m, seed, kind, stability_margin=margin)
        except ValueError as exc:
            raise ConfigError(f"[system] generator rejected the settings: {exc}") from None
        B = sys.B if "B" not in table else _override_matrix(table["B"], n, m, "system.B")
        C = sys.C if "C" not in table else _override_matrix(table["C"], m, n, "system.C")
        D = sys.D if "D" not in table else _override_matrix(table["D"], m, m, "system.D")
        sys = StateSpace(sys.A, B, C, D)
        return sys, sigma_e
    A = _as_matrix(_require(table, "A", "system"), "system.A")
    B = _as_matrix(_require(table, "B", "system"), "system.B")
    C = _as_matrix(_require(table, "C", "system"), "system.C")
    m = C.shape[0]
    D = _as_matrix(table["D"], "system.D") if "D" in table else np.zeros((m, m))
    try:
        sys = StateSpace(A, B, C, D)
    except ValueError as exc:
        raise ConfigError(f"[system] {exc}") from None
    return sys, None


def load_config(path: str | Path) -> RunSetup:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    sys, generated_sigma_e = _build_system(_require(raw, "system", ""))

    sys_table = raw["system"]
    if "sigma_e" in sys_table:
        diag = np.asarray(sys_table["sigma_e"], dtype=float)
        if diag.ndim != 1:
            raise ConfigError("[system] sigma_e must be a flat list of +1/-1 entries")
        try:
            sigma_e = as_signature(np.diag(diag), sys.m, name="sigma_e")
        except ValueError as exc:
            raise ConfigError(f"[system] {exc}") from None
    elif generated_sigma_e is not None:
        sigma_e = generated_sigma_e
    else:
        sigma_e = np.eye(sys.m)

    weights = _require(raw, "weights", "")
    Q = _as_weight(_require(weights, "Q", "weights"), sys.m, "weights.Q")
    R = _as_weight(_require(weights, "R", "weights"), sys.m, "weights.R")

    problem = _require(raw, "problem", "")
    x0 = np.asarray(_require(problem, "x0", "problem"), dtype=float)
    t_f = float(_require(problem, "t_f", "problem"))
    n_steps = int(_require(problem, "n_steps", "problem"))
    try:
        grid = TimeGrid(t_f=t_f, n_steps=n_steps)
        prob = LqrProblem(sys=sys, Q=Q, R=R, x0=x0, t_f=t_f)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    solver_table = raw.get("solver", {})
    solver = SolverSettings(
        alpha=solver_table.get("alpha", "auto-power"),
        eps0=float(solver_table.get("eps0", 1e-8)),
        max_iter=int(solver_table.get("max_iter", 100)),
        norm=solver_table.get("norm", "l2"),
        record_history=bool(solver_table.get("record_history", False)),
    )
    if isinstance(solver.alpha, str) and solver.alpha not in ALPHA_MODES:
        raise ConfigError(f"[solver] alpha must be a number or one of {ALPHA_MODES}, got {solver.alpha!r}")
    if not isinstance(solver.alpha, str):
        solver.alpha = float(solver.alpha)
        if not 0.0 < solver.alpha <= 1.0:
            raise ConfigError(f"[solver] alpha must lie in (0, 1], got {solver.alpha}")
    if solver.norm not in NORM_KINDS:
        raise ConfigError(f"[solver] norm must be one of {NORM_KINDS}, got {solver.norm!r}")
    if solver.eps0 <= 0 or solver.max_iter < 1:
        raise ConfigError("[solver] eps0 must be positive and max_iter at least 1")

    noise_table = raw.get("noise", {})
    kind = noise_table.get("kind", "none")
    if kind not in NOISE_KINDS:
        raise ConfigError(f"[noise] kind must be one of {NOISE_KINDS}, got {kind!r}")
    try:
        noise = NoiseModel(
            kind=kind,
            sigma=float(noise_table.get("sigma", 0.0)),
            bound=float(noise_table.get("bound", 0.0)),
            seed=int(noise_table.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"[noise] {exc}") from None

    gr_table = raw.get("gain_recovery", {})
    gain_recovery = GainRecoverySettings(
        n_s=int(gr_table.get("n_s", 0)),
        t_bar=float(gr_table["t_bar"]) if "t_bar" in gr_table else None,
        trials=int(gr_table.get("trials", 1)),
        state_noise_sigma=float(gr_table.get("state_noise_sigma", 0.0)),
        state_noise_seed=int(gr_table.get("state_noise_seed", 101)),
    )
    if gain_recovery.trials < 1:
        raise ConfigError("[gain_recovery] trials must be at least 1")

    study_table = raw.get("study", {})
    study = StudySettings(M=int(study_table.get("M", 100)), k=int(study_table.get("k", 5)))
    if study.M < 2 or study.k < 1:
        raise ConfigError("[study] needs M >= 2 and k >= 1")

    out_table = raw.get("output", {})
    output_dir = Path(out_table.get("dir", "out"))

    oracle_table = raw.get("oracle", {})
    t_f_values = [float(v) for v in oracle_table.get("t_f_values", [])]
    oracle_t_bar = float(oracle_table.get("t_bar", 1.0))

    return RunSetup(
        sys=sys,
        sigma_e=sigma_e,
        prob=prob,
        grid=grid,
        solver=solver,
        noise=noise,
        gain_recovery=gain_recovery,
        study=study,
        output_dir=output_dir,
        oracle_t_f_values=t_f_values,
        oracle_t_bar=oracle_t_bar,
    )

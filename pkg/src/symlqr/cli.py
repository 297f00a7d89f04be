"""Command-line front end.

Subcommands cover the whole workflow: finite-horizon solves against the
Riccati reference, infinite-horizon solves with static-gain recovery,
the model-based oracle on its own, the Monte Carlo noise study, one-shot
simulation, and symmetry checking.  Every run writes a summary.json with
the resolved step size, contraction estimate, plant-run count, and wall
time; data series are plain CSV and reproduce byte for byte given the
same config and seeds.

Exit codes: 0 success, 2 bad config, 3 solver divergence, 4 I/O failure,
5 rank-deficient recovery data.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import lti
from .config import ConfigError, RunSetup, load_config
from .feedback import RankDeficientDataError, average_trials, collect_data, recover_gain
from .noise_study import run_unbiasedness_study
from .plant import START_ORIGIN, START_PROBLEM, NoiseModel, SimulatedPlant, derive_seed
from .pontryagin import (
    OperatorConfig,
    contraction_bound,
    estimate_max_step_size,
    safe_step_size,
)
from .riccati import cost_J, optimal_control_fh, riccati_tail_error, solve_are_hamiltonian
from .signals import Signal, read_csv, write_csv
from .solver import SolverConfig, SolverDivergenceError, solve


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _quiet_plant(setup: RunSetup) -> SimulatedPlant:
    return SimulatedPlant(setup.sys, setup.prob.x0, setup.grid, setup.sigma_e, NoiseModel())


def _operator_config(setup: RunSetup) -> OperatorConfig:
    return OperatorConfig(Q=setup.prob.Q, R=setup.prob.R, sigma_e=setup.sigma_e, grid=setup.grid)


def _resolve_alpha(setup: RunSetup) -> dict:
    """Fix the step size and estimate the contraction factor that goes with it.

    The power iteration runs on a noise-free twin of the plant in every mode
    so the summary can always report a contraction estimate.
    """
    est = estimate_max_step_size(_quiet_plant(setup), _operator_config(setup))
    mode = setup.solver.alpha
    info = {
        "alpha_mode": mode if isinstance(mode, str) else "fixed",
        "alpha_max_estimate": est.alpha_max,
        "operator_norm_estimate": est.operator_norm,
        "tuning_plant_runs": est.plant_runs,
    }
    if mode == "auto-power":
        alpha = min(1.0, est.alpha_max * (1.0 - 1e-6))
    elif mode == "auto-safe":
        beta = safe_step_size(lti.hinf_norm(setup.sys), setup.prob.Q, setup.prob.R)
        alpha = min(1.0, beta * (1.0 - 1e-6))
        info["beta_safe"] = beta
    else:
        alpha = float(mode)
    info["alpha"] = alpha
    info["contraction_estimate"] = contraction_bound(alpha, est.operator_norm)
    if info["contraction_estimate"] >= 1.0:
        # no shrink guarantee past the estimated admissible range; the run
        # proceeds anyway and the divergence guard has the last word
        warnings.warn(
            f"step size {alpha:.4g} exceeds the estimated admissible bound "
            f"{est.alpha_max:.4g}; no contraction guarantee"
        )
    return info


def _solver_config(setup: RunSetup, alpha: float, record_history: bool | None = None) -> SolverConfig:
    s = setup.solver
    return SolverConfig(
        alpha=alpha,
        eps0=s.eps0,
        max_iter=s.max_iter,
        norm_kind=s.norm,
        record_history=s.record_history if record_history is None else record_history,
    )


def _out_dir(setup: RunSetup, args) -> Path:
    out = Path(args.output_dir) if args.output_dir else setup.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(out: Path | None, payload: dict, t0: float) -> None:
    payload["wall_time_s"] = round(time.perf_counter() - t0, 6)
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if out is not None:
        (out / "summary.json").write_text(text)
    _sys.stdout.write(text)


def _write_series(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{float(x):.17g}" for x in row) + "\n")


def cmd_solve_fh(args) -> int:
    t0 = time.perf_counter()
    setup = load_config(args.config)
    out = _out_dir(setup, args)
    ref = optimal_control_fh(setup.prob, setup.grid)
    info = _resolve_alpha(setup)
    plant = SimulatedPlant(setup.sys, setup.prob.x0, setup.grid, setup.sigma_e, setup.noise)
    res = solve(
        plant,
        _operator_config(setup),
        _solver_config(setup, info["alpha"], record_history=True),
        oracle_u_star=ref.u,
    )
    gaps = []
    for u_k in res.history:
        _, y_k = lti.simulate(setup.sys, setup.prob.x0, u_k)
        gaps.append(cost_J(y_k, u_k, setup.prob.Q, setup.prob.R) - ref.J)
    rows = []
    for k in range(res.iterations + 1):
        resid = res.residuals[k - 1] if k > 0 else float("nan")
        rows.append((k, res.errors_l2[k], res.errors_linf[k], gaps[k], resid))
    _write_series(out / "series.csv", ["iter", "err_l2", "err_linf", "cost_gap", "residual"], rows)
    write_csv(res.u, out / "u_final.csv")
    write_csv(ref.u, out / "u_star.csv")
    _finish(out, {
        "command": "solve-fh",
        "config": str(args.config),
        **info,
        "iterations": res.iterations,
        "termination": res.termination,
        "plant_runs": plant.run_count,
        "final_residual": res.residuals[-1] if res.residuals else None,
        "final_error_l2": res.errors_l2[-1],
        "final_error_linf": res.errors_linf[-1],
        "final_cost_gap": gaps[-1],
        "optimal_cost": ref.J,
        "outputs": ["series.csv", "u_final.csv", "u_star.csv"],
    }, t0)
    return 0


def cmd_solve_ih(args) -> int:
    t0 = time.perf_counter()
    setup = load_config(args.config)
    out = _out_dir(setup, args)
    info = _resolve_alpha(setup)
    plant = SimulatedPlant(setup.sys, setup.prob.x0, setup.grid, setup.sigma_e, setup.noise)
    res = solve(plant, _operator_config(setup), _solver_config(setup, info["alpha"]))

    gr = setup.gain_recovery
    n_s = gr.n_s if gr.n_s > 0 else setup.sys.n
    trials = []
    per_trial = []
    for t in range(gr.trials):
        state_noise = None
        if gr.state_noise_sigma > 0:
            state_noise = NoiseModel(
                kind="gaussian_l2",
                sigma=gr.state_noise_sigma,
                seed=derive_seed(gr.state_noise_seed, t),
            )
        data = collect_data(plant, res.u, n_s, t_bar=gr.t_bar, state_noise=state_noise)
        trials.append(data)
        per_trial.append(recover_gain(data))
    est = average_trials(trials) if len(trials) > 1 else per_trial[0]

    reference = {}
    try:
        sol = solve_are_hamiltonian(setup.prob)
        reference = {
            "K_inf": sol.K_inf,
            "gain_error_inf": float(np.max(np.abs(est.K - sol.K_inf))),
            "are_residual": sol.are_residual,
            "l2_rate": sol.l2_rate,
        }
    except ValueError:
        pass

    _write_series(
        out / "gain.csv",
        [f"k_{j + 1}" for j in range(setup.sys.n)],
        [row for row in est.K],
    )
    _write_series(
        out / "gain_trials.csv",
        ["trial"] + [f"k_{i + 1}_{j + 1}" for i in range(setup.sys.m) for j in range(setup.sys.n)]
        + ["residual"],
        [(t, *g.K.ravel(), g.residual) for t, g in enumerate(per_trial)],
    )
    write_csv(res.u, out / "u_final.csv")
    _finish(out, {
        "command": "solve-ih",
        "config": str(args.config),
        **info,
        "iterations": res.iterations,
        "termination": res.termination,
        "plant_runs": plant.run_count,
        "final_residual": res.residuals[-1] if res.residuals else None,
        "K": est.K,
        "gain_residual": est.residual,
        "provenance": est.provenance,
        "trials": gr.trials,
        "data_condition_number": trials[0].condition_number,
        **reference,
        "outputs": ["gain.csv", "gain_trials.csv", "u_final.csv"],
    }, t0)
    return 0


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    setup = load_config(args.config)
    out = _out_dir(setup, args)
    fh = optimal_control_fh(setup.prob, setup.grid)
    write_csv(fh.u, out / "u_star.csv")
    write_csv(fh.y, out / "y_star.csv")
    n, m = setup.sys.n, setup.sys.m
    _write_series(
        out / "k_traj.csv",
        ["t"] + [f"k_{i + 1}_{j + 1}" for i in range(m) for j in range(n)],
        [(t, *K.ravel()) for t, K in zip(setup.grid.nodes, fh.K_traj)],
    )
    payload = {
        "command": "oracle",
        "config": str(args.config),
        "optimal_cost": fh.J,
        "outputs": ["u_star.csv", "y_star.csv", "k_traj.csv"],
    }
    try:
        sol = solve_are_hamiltonian(setup.prob)
        payload.update(
            P_inf=sol.P_inf,
            K_inf=sol.K_inf,
            are_residual=sol.are_residual,
            l2_rate=sol.l2_rate,
            P0_gap_inf=float(np.max(np.abs(fh.P_traj[0] - sol.P_inf))),
        )
    except ValueError as exc:
        payload["are_note"] = str(exc)
    if setup.oracle_t_f_values:
        rep = riccati_tail_error(setup.prob, setup.oracle_t_f_values, t_bar=setup.oracle_t_bar)
        _write_series(out / "tail.csv", ["t_f", "error"], zip(rep.t_f_values, rep.errors))
        payload["tail_slope"] = rep.slope
        payload["tail_l2_rate"] = rep.l2_rate
        payload["outputs"].append("tail.csv")
    _finish(out, payload, t0)
    return 0


def cmd_noise_study(args) -> int:
    t0 = time.perf_counter()
    setup = load_config(args.config)
    out = _out_dir(setup, args)
    info = _resolve_alpha(setup)
    try:
        rep = run_unbiasedness_study(
            setup.prob,
            setup.sigma_e,
            setup.grid,
            info["alpha"],
            setup.noise,
            k=setup.study.k,
            M=setup.study.M,
            seed=setup.noise.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    m = setup.sys.m
    header = ["t"] + [f"mean_{j + 1}" for j in range(m)] + [f"se_{j + 1}" for j in range(m)]
    rows = [
        (t, *mu, *se)
        for t, mu, se in zip(setup.grid.nodes, rep.mean_deviation, rep.standard_error)
    ]
    _write_series(out / "deviation_stats.csv", header, rows)
    write_csv(rep.noise_free_u, out / "u_ref.csv")
    _finish(out, {
        "command": "noise-study",
        "config": str(args.config),
        **info,
        "M": rep.M,
        "k": rep.k,
        "noise_kind": setup.noise.kind,
        "mean_pass_fraction": rep.mean_pass_fraction,
        "mean_ok": rep.mean_ok,
        "var_metric": rep.var_metric,
        "var_empirical": rep.var_empirical,
        "var_bound": rep.var_bound,
        "var_ok": rep.var_ok,
        "rho_bound_used": rep.rho,
        "plant_runs": 2 * setup.study.k * (setup.study.M + 1),
        "outputs": ["deviation_stats.csv", "u_ref.csv"],
    }, t0)
    return 0


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    setup = load_config(args.config)
    out = _out_dir(setup, args)
    if args.input:
        u = read_csv(args.input)
        if u.grid != setup.grid:
            raise ConfigError(
                f"input grid {u.grid} does not match the configured grid {setup.grid}"
            )
        if u.m != setup.sys.m:
            raise ConfigError(f"input has {u.m} channels, system has {setup.sys.m}")
    else:
        u = Signal.zeros(setup.grid, setup.sys.m)
    start = START_PROBLEM if args.start == "problem" else START_ORIGIN
    plant = SimulatedPlant(setup.sys, setup.prob.x0, setup.grid, setup.sigma_e, setup.noise)
    y = plant.run(start, u)
    x0 = setup.prob.x0 if start == START_PROBLEM else np.zeros(setup.sys.n)
    x, _ = lti.simulate(setup.sys, x0, u)
    write_csv(y, out / "y.csv")
    _write_series(
        out / "x.csv",
        ["t"] + [f"x_{j + 1}" for j in range(setup.sys.n)],
        [(t, *row) for t, row in zip(setup.grid.nodes, x.values)],
    )
    _finish(out, {
        "command": "simulate",
        "config": str(args.config),
        "start": args.start,
        "noise_kind": setup.noise.kind,
        "plant_runs": plant.run_count,
        "cost": cost_J(y, u, setup.prob.Q, setup.prob.R),
        "outputs": ["y.csv", "x.csv"],
    }, t0)
    return 0


def cmd_check_symmetry(args) -> int:
    t0 = time.perf_counter()
    setup = load_config(args.config)
    residual = lti.check_external_symmetry(setup.sys, setup.sigma_e)
    margin = lti.stability_margin(setup.sys)
    payload = {
        "command": "check-symmetry",
        "config": str(args.config),
        "n": setup.sys.n,
        "m": setup.sys.m,
        "sigma_e": np.diag(setup.sigma_e),
        "external_residual": residual,
        "externally_symmetric": bool(residual <= 1e-6),
        "stability_margin": margin,
    }
    if margin > 0:
        payload["hinf_norm"] = lti.hinf_norm(setup.sys)
    _finish(None, payload, t0)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symlqr",
        description="Iterative LQR for externally symmetric systems, plus its oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a TOML run configuration")
        p.add_argument("--output-dir", default=None, help="override [output] dir")
        p.set_defaults(func=func)
        return p

    add("solve-fh", cmd_solve_fh, "finite-horizon solve against the Riccati reference")
    add("solve-ih", cmd_solve_ih, "solve, then recover the static gain from state samples")
    add("oracle", cmd_oracle, "model-based reference solution only, no plant runs")
    add("noise-study", cmd_noise_study, "Monte Carlo unbiasedness and variance study")
    p_sim = add("simulate", cmd_simulate, "run the plant once and record the response")
    p_sim.add_argument("--input", default=None, help="CSV control signal (default: zero input)")
    p_sim.add_argument("--start", choices=["problem", "origin"], default="problem")
    p_chk = sub.add_parser("check-symmetry", help="report the external symmetry residual")
    p_chk.add_argument("config", help="path to a TOML run configuration")
    p_chk.set_defaults(func=cmd_check_symmetry)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except SolverDivergenceError as exc:
        print(f"solver diverged: {exc}", file=_sys.stderr)
        return 3
    except RankDeficientDataError as exc:
        print(f"gain recovery failed: {exc}", file=_sys.stderr)
        return 5
    except OSError as exc:
        print(f"i/o error: {exc}", file=_sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line interface: chain inspection, pulse design, noise sweeps,
direct evaluation, and brute-force verification.

Exit codes: 0 success; 1 validation or input error; 2 optimizer
non-convergence (best-effort artifacts are still written). All file writes
go through a temp-file-then-rename so partial artifacts never appear, and
all emitted JSON/CSV is deterministic (no timestamps, repr-exact floats).
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, RunConfig
from .coupling_integrals import ResonanceError, evaluate_couplings
from .dynamics_oracle import (
    OracleError,
    gate_fidelity_exact,
    oracle_space_from_chain,
    propagate,
)
from .fidelity import ThermalEnv, ms_fidelity
from .noise_sweep import SweepSpec, sweep as run_sweep
from .optimizer import optimize
from .pulse_schedule import PulseSchedule, ScheduleError

VARIANT_ALIASES = {
    "normal": "normal",
    "beta": "beta_robust",
    "full": "fully_robust",
}

_USER_ERRORS = (ConfigError, ScheduleError, ResonanceError, OracleError, OSError)


class CliError(Exception):
    """Input or validation failure signalled to the user (exit code 1)."""


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    partially written artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        mode="w", dir=path.parent, prefix=f".{path.name}.", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        try:
            os.unlink(handle.name)
        except OSError:
            pass
        raise


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig.from_dict({})
    return RunConfig.load(path)


def _load_pulse(path: str) -> PulseSchedule:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read pulse file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from exc
    return PulseSchedule.from_json_dict(data)


def _parse_range(text: str, name: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"--{name} expects A:B:n, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise CliError(f"--{name} expects numeric A:B:n, got {text!r}") from exc
    if count < 2:
        raise CliError(f"--{name} needs n >= 2, got {count}")
    return lo, hi, count


def _apply_overrides(config: RunConfig, seed, threads, variant) -> RunConfig:
    if seed is not None:
        config = config.with_seed(seed)
    if threads is not None:
        config = config.with_threads(threads)
    if variant is not None:
        config = config.with_variant(VARIANT_ALIASES[variant])
    return config


def _sweep_spec(config: RunConfig, drift_khz, time_scale) -> SweepSpec:
    spec = config.sweep
    if drift_khz is None and time_scale is None:
        return spec
    kwargs = {
        "drift_min_hz": spec.drift_min_hz,
        "drift_max_hz": spec.drift_max_hz,
        "drift_points": spec.drift_points,
        "time_scale_min": spec.time_scale_min,
        "time_scale_max": spec.time_scale_max,
        "time_points": spec.time_points,
    }
    if drift_khz is not None:
        lo, hi, count = _parse_range(drift_khz, "drift-khz")
        kwargs.update(
            drift_min_hz=lo * 1e3, drift_max_hz=hi * 1e3, drift_points=count
        )
    if time_scale is not None:
        lo, hi, count = _parse_range(time_scale, "time-scale")
        kwargs.update(
            time_scale_min=lo, time_scale_max=hi, time_points=count
        )
    mode = "combined_2d"
    if time_scale is None:
        mode = "drift_1d"
    elif drift_khz is None:
        mode = "time_1d"
    try:
        return SweepSpec(mode=mode, **kwargs)
    except ValueError as exc:
        raise CliError(f"invalid sweep range: {exc}") from exc


def _echo_error(message: str) -> None:
    click.echo(f"error: {message}", err=True)


def _guard(func, *args, **kwargs):
    """Run a command body, converting known input errors to exit code 1."""
    try:
        return func(*args, **kwargs)
    except CliError as exc:
        _echo_error(str(exc))
        sys.exit(1)
    except _USER_ERRORS as exc:
        _echo_error(str(exc))
        sys.exit(1)


@click.group()
def main():
    """Design and analyse drift-robust entangling-gate pulse sequences."""


_config_opt = click.option(
    "-c", "--config", "config_path", type=click.Path(), default=None,
    help="JSON run configuration (defaults used when omitted).",
)


@main.command()
@_config_opt
@click.option("-o", "--out", "out_path", type=click.Path(), default=None,
              help="Write the output to a file instead of stdout.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]),
              default="table", help="Output format.")
def modes(config_path, out_path, fmt):
    """Print chain mode frequencies, mode vectors, and couplings."""

    def body():
        config = _load_config(config_path)
        chain = config.build_chain_model()
        n = chain.ion_count
        if fmt == "json":
            payload = {
                "mode_freqs_mhz": [nu / (2e6 * np.pi) for nu in chain.mode_freqs],
                "mode_matrix": [list(row) for row in chain.mode_matrix],
                "lamb_dicke": [list(row) for row in chain.lamb_dicke],
                "equilibrium_positions_um": [
                    x * 1e6 for x in chain.equilibrium_positions
                ],
            }
            text = json.dumps(payload, indent=2) + "\n"
        else:
            lines = [
                f"{'mode':>4}  {'nu_mhz':>10}  "
                + "  ".join(f"{f'b[{j}]':>9}" for j in range(n))
                + "  "
                + "  ".join(f"{f'eta[{j}]':>9}" for j in range(n))
            ]
            for k in range(n):
                nu_mhz = chain.mode_freqs[k] / (2e6 * np.pi)
                bs = "  ".join(f"{chain.mode_matrix[j, k]:9.5f}" for j in range(n))
                etas = "  ".join(f"{chain.lamb_dicke[j, k]:9.5f}" for j in range(n))
                lines.append(f"{k:>4}  {nu_mhz:10.6f}  {bs}  {etas}")
            text = "\n".join(lines) + "\n"
        if out_path is None:
            click.echo(text, nl=False)
        else:
            atomic_write_text(out_path, text)

    _guard(body)


@main.command(name="optimize")
@_config_opt
@click.option("-o", "--out", "out_path", type=click.Path(), default="pulse.json",
              help="Pulse JSON output path (report goes next to it).")
@click.option("--seed", type=int, default=None, help="Override the optimizer seed.")
@click.option("--threads", type=int, default=None,
              help="Restart parallelism (results are thread-count invariant).")
@click.option("--variant", type=click.Choice(sorted(VARIANT_ALIASES)),
              default=None, help="Override the cost variant.")
def cmd_optimize(config_path, out_path, seed, threads, variant):
    """Design a pulse by multi-start cost minimization."""

    def body():
        config = _apply_overrides(_load_config(config_path), seed, threads, variant)
        chain = config.build_chain_model()
        drive = config.build_drive(chain)
        layout = config.build_layout()
        result = optimize(layout, chain, drive, config.cost, config.optimizer)

        pulse_text = json.dumps(result.schedule.to_json_dict(), indent=2) + "\n"
        atomic_write_text(out_path, pulse_text)

        best = result.restarts[result.best_restart]
        report = {
            "seed": config.optimizer.seed,
            "variant": config.cost.variant,
            "converged": result.converged,
            "best_restart": result.best_restart,
            "iterations": best.iterations,
            "final_cost": result.cost.total,
            "groups": dict(result.cost.groups),
            "restarts": [
                {
                    "index": record.index,
                    "final_cost": record.final_cost,
                    "iterations": record.iterations,
                    "converged": record.converged,
                }
                for record in result.restarts
            ],
        }
        report_path = Path(out_path).with_name(Path(out_path).stem + "_report.json")
        atomic_write_text(report_path, json.dumps(report, indent=2) + "\n")

        click.echo(
            f"variant={config.cost.variant} cost={result.cost.total:.6e} "
            f"converged={result.converged} restart={result.best_restart} "
            f"pulse={out_path} report={report_path}"
        )
        if not result.converged:
            click.echo(
                "warning: no restart reached the cost tolerance; "
                "best-effort pulse written",
                err=True,
            )
            sys.exit(2)

    _guard(body)


@main.command(name="sweep")
@_config_opt
@click.option("--pulse", "pulse_path", type=click.Path(), required=True,
              help="Pulse JSON produced by `ionpulse optimize`.")
@click.option("-o", "--out", "out_path", type=click.Path(), default="grid.csv",
              help="Grid output path.")
@click.option("--drift-khz", default=None,
              help="Drift grid A:B:n in kHz (overrides the config).")
@click.option("--time-scale", default=None,
              help="Duration-scale grid A:B:n (overrides the config).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", help="Grid file format.")
@click.option("--threads", type=int, default=None, help="Grid-point parallelism.")
def cmd_sweep(config_path, pulse_path, out_path, drift_khz, time_scale, fmt,
              threads):
    """Evaluate a pulse over a drift/time noise grid."""

    def body():
        config = _load_config(config_path)
        schedule = _load_pulse(pulse_path)
        chain = config.build_chain_model()
        drive = config.build_drive(chain)
        env = config.build_env(chain)
        spec = _sweep_spec(config, drift_khz, time_scale)
        grid = run_sweep(
            schedule, chain, drive, env, spec,
            threads=threads if threads is not None else 1,
        )
        text = (
            grid.to_csv() if fmt == "csv"
            else json.dumps(grid.to_json_dict(), indent=2) + "\n"
        )
        atomic_write_text(out_path, text)
        flagged = int(np.sum(grid.flag))
        click.echo(
            f"points={len(grid)} max_infidelity={grid.max_infidelity():.6e} "
            f"flagged={flagged} out={out_path}"
        )

    _guard(body)


@main.command(name="evaluate")
@_config_opt
@click.option("--pulse", "pulse_path", type=click.Path(), required=True)
@click.option("--delta-hz", type=float, default=0.0,
              help="Sideband drift delta/2pi in Hz.")
@click.option("--tau-scale", type=float, default=1.0,
              help="Duration scale factor s.")
def cmd_evaluate(config_path, pulse_path, delta_hz, tau_scale):
    """Evaluate couplings and fidelity of a pulse at one operating point."""

    def body():
        config = _load_config(config_path)
        schedule = _load_pulse(pulse_path)
        chain = config.build_chain_model()
        drive = config.build_drive(chain, delta=2.0 * np.pi * delta_hz)
        env = config.build_env(chain)
        report = evaluate_couplings(schedule, chain, drive, time_scale=tau_scale)
        result = ms_fidelity(report, env)
        payload = {
            "delta_hz": delta_hz,
            "tau_scale": tau_scale,
            "fidelity": result.fidelity,
            "infidelity": result.infidelity,
            "phase_factor": result.phase_factor,
            "phonon_factor": result.phonon_factor,
            "beta_sq_total": report.beta_sq_total,
            "theta_total": report.theta_total,
            "theta_tilde_total": report.theta_tilde_total,
        }
        click.echo(json.dumps(payload, indent=2))

    _guard(body)


def _load_oracle_options(path: str | None) -> dict:
    defaults = {
        "mode_indices": None,
        "n_max": 10,
        "steps_per_period": 50,
        "use_spin_blocks": True,
        "time_scale": 1.0,
    }
    if path is None:
        return defaults
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read oracle file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise CliError(f"{path}: oracle options must be a JSON object")
    for key in data:
        if key not in defaults:
            raise CliError(f"{path}: unknown oracle option $.{key}")
    defaults.update(data)
    return defaults


@main.command(name="verify")
@_config_opt
@click.option("--pulse", "pulse_path", type=click.Path(), required=True)
@click.option("--oracle", "oracle_path", type=click.Path(), default=None,
              help="Oracle options JSON: mode_indices, n_max, "
                   "steps_per_period, use_spin_blocks, time_scale.")
@click.option("-o", "--out", "out_path", type=click.Path(), default=None,
              help="Also write the comparison as JSON.")
def cmd_verify(config_path, pulse_path, oracle_path, out_path):
    """Compare the analytic fidelity against brute-force propagation.

    By default the two modes nearest the drive are propagated with a Fock
    cutoff of 10; an options file can widen the mode set and cutoff.
    """

    def body():
        config = _load_config(config_path)
        schedule = _load_pulse(pulse_path)
        chain = config.build_chain_model()
        drive = config.build_drive(chain)
        env = config.build_env(chain)
        options = _load_oracle_options(oracle_path)

        mode_indices = options["mode_indices"]
        if mode_indices is None:
            order = np.argsort(np.abs(drive.effective_sidebands()))
            count = min(2, chain.ion_count)
            mode_indices = tuple(sorted(int(k) for k in order[:count]))
        else:
            mode_indices = tuple(int(k) for k in mode_indices)

        space = oracle_space_from_chain(
            chain, drive, schedule.addressed, mode_indices,
            n_max=int(options["n_max"]),
        )
        propagation = propagate(
            schedule,
            space,
            time_scale=float(options["time_scale"]),
            steps_per_period=int(options["steps_per_period"]),
            use_spin_blocks=bool(options["use_spin_blocks"]),
        )
        occupations = env.occupations[list(mode_indices)]
        oracle = gate_fidelity_exact(propagation, occupations)

        # Analytic fidelity over the full chain, plus one restricted to the
        # oracle's mode subset so the gap compares like with like.
        scale = float(options["time_scale"])
        analytic = ms_fidelity(
            evaluate_couplings(schedule, chain, drive, time_scale=scale), env
        )
        env_subset = ThermalEnv(env.temperature, occupations)
        subset = ms_fidelity(
            evaluate_couplings(
                schedule, chain, drive, time_scale=scale,
                mode_indices=mode_indices,
            ),
            env_subset,
        )

        payload = {
            "mode_indices": list(mode_indices),
            "n_max": space.n_max,
            "steps": propagation.steps,
            "analytic_fidelity": analytic.fidelity,
            "analytic_fidelity_subset": subset.fidelity,
            "oracle_magnitude_plus": oracle.magnitude_plus,
            "oracle_magnitude_minus": oracle.magnitude_minus,
            "oracle_squared_plus": oracle.squared_plus,
            "oracle_squared_minus": oracle.squared_minus,
            "gap": abs(subset.fidelity - oracle.canonical_magnitude),
            "unitarity_defect": propagation.unitarity_defect,
            "leakage": oracle.leakage,
        }
        text = json.dumps(payload, indent=2)
        click.echo(text)
        if out_path is not None:
            atomic_write_text(out_path, text + "\n")

    _guard(body)


if __name__ == "__main__":
    main()

"""Drift-noise and time-noise sweeps of an optimized pulse.

Every grid point re-evaluates the closed-form couplings at the perturbed
operating point (B_k + delta, s*tau) and the analytic fidelity; no
first-order shortcut is involved, so the sweep measures the true model, not
the expansion the cost optimizes. Points that land on a sideband resonance
are recorded with flag=1 and NaN infidelity instead of aborting the sweep.

Output rows carry the exact column set
(delta_hz, tau_scale, infidelity, beta_sq_total, theta_total, phase_factor,
phonon_factor, flag), where delta_hz is the drift as an ordinary frequency
(delta/2pi).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain_model import ChainModel
from .coupling_integrals import (
    DriveConfig,
    ResonanceError,
    evaluate_couplings,
    theta_trajectory,
)
from .fidelity import ThermalEnv, ms_fidelity
from .pulse_schedule import PulseSchedule

MODES = ("drift_1d", "time_1d", "combined_2d")

CSV_COLUMNS = (
    "delta_hz",
    "tau_scale",
    "infidelity",
    "beta_sq_total",
    "theta_total",
    "phase_factor",
    "phonon_factor",
    "flag",
)


@dataclass(frozen=True)
class SweepSpec:
    """Grid specification; defaults are the +/-10 kHz, +/-2% windows."""

    drift_min_hz: float = -1e4
    drift_max_hz: float = 1e4
    drift_points: int = 201
    time_scale_min: float = 0.98
    time_scale_max: float = 1.02
    time_points: int = 201
    mode: str = "drift_1d"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (
            np.isfinite(self.drift_min_hz)
            and np.isfinite(self.drift_max_hz)
            and np.isfinite(self.time_scale_min)
            and np.isfinite(self.time_scale_max)
        ):
            raise ValueError("sweep ranges must be finite")
        if self.drift_min_hz > self.drift_max_hz:
            raise ValueError("drift_min_hz must be <= drift_max_hz")
        if not 0 < self.time_scale_min <= self.time_scale_max:
            raise ValueError("time-scale range must be positive and ordered")
        if self.drift_points < 2 or self.time_points < 2:
            raise ValueError("point counts must be >= 2")

    def drift_grid(self) -> np.ndarray:
        """Drift values in Hz; values within round-off of 0 snap to 0.0
        exactly so the zero-noise point is hit when the range brackets it."""
        if self.mode == "time_1d":
            return np.array([0.0])
        grid = np.linspace(self.drift_min_hz, self.drift_max_hz, self.drift_points)
        span = max(abs(self.drift_min_hz), abs(self.drift_max_hz), 1.0)
        grid[np.abs(grid) < 1e-9 * span] = 0.0
        return grid

    def time_grid(self) -> np.ndarray:
        if self.mode == "drift_1d":
            return np.array([1.0])
        grid = np.linspace(self.time_scale_min, self.time_scale_max, self.time_points)
        grid[np.abs(grid - 1.0) < 1e-12] = 1.0
        return grid


@dataclass(frozen=True)
class SweepGrid:
    """Column arrays for every grid point, row-major over (drift, time)."""

    spec: SweepSpec
    delta_hz: np.ndarray
    tau_scale: np.ndarray
    infidelity: np.ndarray
    beta_sq_total: np.ndarray
    theta_total: np.ndarray
    phase_factor: np.ndarray
    phonon_factor: np.ndarray
    flag: np.ndarray

    def __len__(self) -> int:
        return len(self.delta_hz)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def max_infidelity(self) -> float:
        clean = self.infidelity[self.flag == 0]
        return float(np.max(clean)) if clean.size else float("nan")

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for i in range(len(self)):
            cells = []
            for name in CSV_COLUMNS:
                value = self.column(name)[i]
                cells.append(str(int(value)) if name == "flag" else repr(float(value)))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "columns": list(CSV_COLUMNS),
            "rows": [
                [
                    int(self.column(name)[i]) if name == "flag"
                    else float(self.column(name)[i])
                    for name in CSV_COLUMNS
                ]
                for i in range(len(self))
            ],
        }


def _evaluate_point(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    env: ThermalEnv,
    delta_hz: float,
    tau_scale: float,
) -> tuple[float, float, float, float, float, int]:
    try:
        report = evaluate_couplings(
            schedule,
            chain,
            drive.with_delta(2.0 * np.pi * delta_hz),
            time_scale=tau_scale,
        )
    except ResonanceError:
        nan = float("nan")
        return nan, nan, nan, nan, nan, 1
    result = ms_fidelity(report, env)
    return (
        result.infidelity,
        report.beta_sq_total,
        report.theta_total,
        result.phase_factor,
        result.phonon_factor,
        0,
    )


def sweep(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    env: ThermalEnv,
    spec: SweepSpec | None = None,
    threads: int = 1,
) -> SweepGrid:
    """Evaluate the pulse over the requested noise grid.

    Rows are ordered drift-major then time-scale, independent of the thread
    count. ``drive.delta`` is ignored; the grid supplies the drift.
    """
    spec = spec if spec is not None else SweepSpec()
    drifts = spec.drift_grid()
    scales = spec.time_grid()
    points = [(d, s) for d in drifts for s in scales]

    def _run(point):
        return _evaluate_point(schedule, chain, drive, env, *point)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run, points))
    else:
        rows = [_run(point) for point in points]

    columns = np.array(rows, dtype=float)
    return SweepGrid(
        spec=spec,
        delta_hz=np.array([p[0] for p in points]),
        tau_scale=np.array([p[1] for p in points]),
        infidelity=columns[:, 0],
        beta_sq_total=columns[:, 1],
        theta_total=columns[:, 2],
        phase_factor=columns[:, 3],
        phonon_factor=columns[:, 4],
        flag=columns[:, 5].astype(int),
    )


def coupling_trajectory(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    times: np.ndarray,
) -> np.ndarray:
    """Entangling phase accumulated up to each time, theta_total(t)."""
    return theta_trajectory(schedule, chain, drive, times)

"""Seeded multi-start constrained minimization of the pulse cost.

Each restart draws an independent initial point (amplitude fractions uniform
in [0.1, 0.9], phases uniform in (-pi, pi]) from a child stream of one
seeded PCG64 generator, runs SLSQP with the analytic gradient under the box
bounds, then polishes with a bounded Gauss-Newton pass on the coupling
residuals (kept only if it lowers the cost). All restarts always run to
completion and the best final cost wins, ties broken by restart index, so
results are identical for any thread count and bitwise-reproducible for a
fixed seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .chain_model import ChainModel
from .cost import CostFunction, CostResult, CostSpec
from .coupling_integrals import DriveConfig
from .pulse_schedule import ParamLayout, PulseSchedule, build_schedule

DEFAULT_SEED = 171


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 2000
    cost_tol: float = 1e-10
    step_tol: float = 1e-12
    restarts: int = 16
    seed: int = DEFAULT_SEED
    threads: int = 1

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if not (self.cost_tol > 0 and self.step_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class RestartRecord:
    """Outcome of one restart: final cost and the per-iteration trace."""

    index: int
    final_cost: float
    iterations: int
    converged: bool
    trace: list = field(repr=False)


@dataclass(frozen=True)
class OptimizeResult:
    params: np.ndarray
    schedule: PulseSchedule
    cost: CostResult
    converged: bool
    best_restart: int
    restarts: list


def _initial_point(layout: ParamLayout, rng: np.random.Generator) -> np.ndarray:
    point = np.empty(layout.n_free)
    for block in range(layout.free_ion_count):
        start = block * layout.block_size
        na = layout.amps_per_ion
        point[start:start + na] = rng.uniform(0.1, 0.9, na)
        point[start + na:start + layout.block_size] = rng.uniform(
            -np.pi, np.pi, layout.phases_per_ion
        )
    return point


def optimize(
    layout: ParamLayout,
    chain: ChainModel,
    drive: DriveConfig,
    spec: CostSpec | None = None,
    config: OptimizerConfig | None = None,
) -> OptimizeResult:
    """Best-of-restarts cost minimization; never raises on non-convergence.

    The result's ``converged`` flag records whether the best final cost beat
    ``cost_tol``; a non-converged run still carries the best-effort pulse.
    """
    config = config if config is not None else OptimizerConfig()
    function = CostFunction(layout, chain, drive, spec)
    lo, hi = layout.bounds()
    bounds = list(zip(lo, hi))
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)

    def _run(index: int) -> tuple[RestartRecord, np.ndarray]:
        rng = np.random.Generator(np.random.PCG64(seeds[index]))
        x0 = _initial_point(layout, rng)
        trace: list = []
        if config.max_iterations == 0:
            value = function.value(x0)
            return (
                RestartRecord(index, value.total, 0, False, trace),
                x0,
            )

        def _record(xk):
            value = function.value(xk)
            trace.append(
                {
                    "iteration": len(trace) + 1,
                    "total": value.total,
                    "groups": dict(value.groups),
                }
            )

        result = minimize(
            function.value_and_grad,
            x0,
            jac=True,
            method="SLSQP",
            bounds=bounds,
            callback=_record,
            options={"maxiter": config.max_iterations, "ftol": config.step_tol},
        )
        best_x = np.clip(np.asarray(result.x, dtype=float), lo, hi)
        final = function.value(best_x).total
        iterations = int(result.nit)

        # Gauss-Newton polish: the kinked absolute-value cost terms stall
        # SLSQP near a solution, but the couplings themselves form a smooth
        # residual system with the same zero set, which a bounded
        # least-squares step drives to machine precision when feasible.
        if final > config.cost_tol:
            polish = least_squares(
                lambda x: function.residuals_and_jacobian(x)[0],
                best_x,
                jac=lambda x: function.residuals_and_jacobian(x)[1],
                bounds=(lo, hi),
                method="trf",
                xtol=1e-15,
                ftol=1e-15,
                gtol=1e-15,
                max_nfev=200,
            )
            polished = np.clip(np.asarray(polish.x, dtype=float), lo, hi)
            polished_cost = function.value(polished).total
            iterations += int(polish.nfev)
            if polished_cost < final:
                best_x, final = polished, polished_cost
                trace.append(
                    {
                        "iteration": len(trace) + 1,
                        "total": final,
                        "groups": dict(function.value(best_x).groups),
                    }
                )

        record = RestartRecord(
            index=index,
            final_cost=final,
            iterations=iterations,
            converged=final < config.cost_tol,
            trace=trace,
        )
        return record, best_x

    indices = range(config.restarts)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(_run, indices))
    else:
        outcomes = [_run(i) for i in indices]

    best_index = 0
    for i in range(1, config.restarts):
        if outcomes[i][0].final_cost < outcomes[best_index][0].final_cost:
            best_index = i
    record, best_params = outcomes[best_index]
    best_cost = function.value(best_params)
    return OptimizeResult(
        params=best_params,
        schedule=build_schedule(best_params, layout),
        cost=best_cost,
        converged=record.converged if config.max_iterations > 0 else False,
        best_restart=best_index,
        restarts=[outcome[0] for outcome in outcomes],
    )

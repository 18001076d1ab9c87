#!/usr/bin/env python3
"""Run the full pipeline at the shipped default configuration.

modes -> optimize (both cost variants) -> noise sweep -> propagator check,
all from ``configs/default.json``, writing artifacts under --out-dir.

This is the honest end-to-end record of the default operating point: the
plain variant converges to machine floor, while the fully robust variant
stalls near cost 2.4e-2 — with 20 segments the first-order drift terms
never close at a 3.15 MHz drive — and the drift window stays far above
the 1e-3 infidelity target. Adding segments does not rescue it: a
32-segment control reaches the cost floor but still shows a ~0.2 window,
because the drive sits 68 kHz from a transverse mode and higher-order
drift terms dominate there (run ``feasibility_map.py`` for the full
landscape). Run ``wide_window_demo.py`` for the operating point where the
robust variant succeeds. Runtime: under a minute single-threaded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import time
from pathlib import Path

import numpy as np

import ionpulse as ip
from ionpulse import dynamics_oracle as do

REPO_ROOT = Path(__file__).resolve().parents[1]


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--config", default=str(REPO_ROOT / "configs" / "default.json")
    )
    parser.add_argument(
        "--out-dir", default=str(REPO_ROOT / "results" / "default_run")
    )
    parser.add_argument("--threads", type=int, default=1)
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = ip.RunConfig.load(args.config)

    chain = config.build_chain_model()
    drive = config.build_drive(chain)
    env = config.build_env(chain)
    layout = config.build_layout()

    print("transverse modes (MHz):")
    for k, freq in enumerate(chain.mode_freqs):
        print(f"  mode {k}: {freq / (2 * np.pi * 1e6):.6f}")
    print(f"drive: {drive.mu / (2 * np.pi * 1e6):.4f} MHz  ions {layout.addressed}")

    summary = {}
    pulses = {}
    for variant in ("normal", "fully_robust"):
        spec = dataclasses.replace(config.cost, variant=variant)
        started = time.perf_counter()
        result = ip.optimize(
            layout,
            chain,
            drive,
            spec,
            dataclasses.replace(config.optimizer, threads=args.threads),
        )
        elapsed = time.perf_counter() - started
        grid = ip.sweep(
            result.schedule, chain, drive, env,
            ip.SweepSpec(mode="drift_1d"), args.threads,
        )
        print(
            f"[{variant}] cost {result.cost.total:.3e}"
            f"  converged={result.converged}"
            f"  drift-window max infidelity {grid.max_infidelity():.3e}"
            f"  ({elapsed:.1f} s)"
        )
        (out_dir / f"pulse_{variant}.json").write_text(
            json.dumps(result.schedule.to_json_dict(), indent=2) + "\n"
        )
        (out_dir / f"sweep_{variant}.csv").write_text(grid.to_csv())
        summary[variant] = {
            "cost": result.cost.total,
            "converged": result.converged,
            "groups": result.cost.groups,
            "drift_window_max_infidelity": grid.max_infidelity(),
            "seconds": elapsed,
        }
        pulses[variant] = result.schedule

    # Independent check of the analytic fidelity model: propagate the robust
    # pulse on the two modes nearest the drive in a truncated Fock space.
    schedule = pulses["fully_robust"]
    nearest = tuple(
        int(k) for k in np.argsort(np.abs(drive.mu - chain.mode_freqs))[:2]
    )
    modes = tuple(sorted(nearest))
    report = ip.evaluate_couplings(schedule, chain, drive, mode_indices=modes)
    analytic = ip.ms_fidelity(
        report, ip.ThermalEnv(temperature=0.0, occupations=np.zeros(len(modes)))
    ).fidelity
    space = do.oracle_space_from_chain(
        chain, drive, layout.addressed, mode_indices=modes, n_max=10
    )
    propagated = do.propagate(schedule, space)
    oracle = do.gate_fidelity_exact(propagated).canonical_magnitude
    print(
        f"propagator check on modes {modes}: analytic {analytic:.6f}"
        f"  oracle {oracle:.6f}  gap {abs(analytic - oracle):.2e}"
        f"  unitarity defect {propagated.unitarity_defect:.1e}"
    )
    summary["propagator_check"] = {
        "modes": list(modes),
        "analytic_fidelity": analytic,
        "oracle_fidelity": oracle,
        "gap": abs(analytic - oracle),
        "unitarity_defect": propagated.unitarity_defect,
    }

    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"artifacts in {out_dir}")

    robust = summary["fully_robust"]
    if robust["drift_window_max_infidelity"] >= 1e-3:
        print(
            "\nresult: as expected at this operating point, the robust pulse "
            "does NOT reach the 1e-3 drift window "
            f"(max infidelity {robust['drift_window_max_infidelity']:.3e}); "
            "see wide_window_demo.py for a feasible drive frequency"
        )


if __name__ == "__main__":
    main()

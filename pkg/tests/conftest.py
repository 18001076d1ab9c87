"""Shared fixtures and deterministic case generators for the test suite.

The expensive pulse optimizations (the shipped default operating point in
both cost variants, plus the wide-window demonstration point) run once per
session and are reused by the unit and acceptance tests.
"""

from __future__ import annotations

import dataclasses
import time
from pathlib import Path

import numpy as np
import pytest

import ionpulse as ip

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"

# Spread the multi-start work across workers when the host allows it; the
# optimizer's result is independent of the thread count by construction.
OPT_THREADS = 1


@dataclasses.dataclass(frozen=True)
class OptimizedRun:
    """An optimization outcome bundled with everything needed to evaluate it."""

    config: ip.RunConfig
    chain: ip.ChainModel
    drive: ip.DriveConfig
    env: ip.ThermalEnv
    layout: ip.ParamLayout
    result: "ip.OptimizeResult"
    elapsed: float


def run_optimization(config: ip.RunConfig) -> OptimizedRun:
    chain = config.build_chain_model()
    drive = config.build_drive(chain)
    env = config.build_env(chain)
    layout = config.build_layout()
    started = time.perf_counter()
    result = ip.optimize(
        layout,
        chain,
        drive,
        config.cost,
        dataclasses.replace(config.optimizer, threads=OPT_THREADS),
    )
    elapsed = time.perf_counter() - started
    return OptimizedRun(config, chain, drive, env, layout, result, elapsed)


@pytest.fixture(scope="session")
def default_config() -> ip.RunConfig:
    return ip.RunConfig.load(CONFIG_DIR / "default.json")


@pytest.fixture(scope="session")
def wide_config() -> ip.RunConfig:
    return ip.RunConfig.load(CONFIG_DIR / "wide_window.json")


@pytest.fixture(scope="session")
def default_chain(default_config) -> ip.ChainModel:
    return default_config.build_chain_model()


@pytest.fixture(scope="session")
def default_drive(default_config, default_chain) -> ip.DriveConfig:
    return default_config.build_drive(default_chain)


@pytest.fixture(scope="session")
def default_env(default_config, default_chain) -> ip.ThermalEnv:
    return default_config.build_env(default_chain)


@pytest.fixture(scope="session")
def default_layout(default_config) -> ip.ParamLayout:
    return default_config.build_layout()


@pytest.fixture(scope="session")
def default_robust_run(default_config) -> OptimizedRun:
    return run_optimization(default_config)


@pytest.fixture(scope="session")
def default_normal_run(default_config) -> OptimizedRun:
    return run_optimization(default_config.with_variant("normal"))


@pytest.fixture(scope="session")
def wide_robust_run(wide_config) -> OptimizedRun:
    return run_optimization(wide_config)


@pytest.fixture(scope="session")
def wide_normal_run(wide_config) -> OptimizedRun:
    return run_optimization(wide_config.with_variant("normal"))


# ---------------------------------------------------------------------------
# Small, fast problem instances
# ---------------------------------------------------------------------------

def toy_two_ion_problem() -> tuple[ip.ChainModel, ip.DriveConfig, ip.ParamLayout]:
    """A two-ion design problem the optimizer solves in well under a second.

    The drive sits between the two transverse modes so both loop quickly,
    and eight shared symmetric segments leave enough freedom to close both
    displacements and hit the target angle exactly.
    """
    trap = ip.TrapConfig(
        ion_count=2,
        axial_freq=0.3e6,
        transverse_freq=3.0e6,
        lamb_dicke_scale=0.04,
    )
    chain = ip.build_chain(trap)
    mu = 0.5 * (chain.mode_freqs[0] + chain.mode_freqs[1]) + 2 * np.pi * 5e3
    drive = ip.DriveConfig.for_chain(mu, chain)
    layout = ip.ParamLayout(8, 400e-6, (0, 1), 2 * np.pi * 100e3)
    return chain, drive, layout


# ---------------------------------------------------------------------------
# Random-case generators (deterministic per seed)
# ---------------------------------------------------------------------------

def random_chain(rng: np.random.Generator) -> ip.ChainModel:
    """A random physically sensible chain with 2 to 4 ions."""
    ion_count = int(rng.integers(2, 5))
    transverse = float(rng.uniform(2.5e6, 4.5e6))
    # Keep the chain linear: the zigzag threshold tightens as the chain grows.
    axial = float(rng.uniform(0.25e6, 0.12 * transverse * 4 / ion_count))
    trap = ip.TrapConfig(
        ion_count=ion_count,
        axial_freq=axial,
        transverse_freq=transverse,
    )
    return ip.build_chain(trap)


def random_drive(rng: np.random.Generator, chain: ip.ChainModel) -> ip.DriveConfig:
    """A drive frequency near the transverse band, clear of exact resonance."""
    freqs = chain.mode_freqs
    lo = freqs.min() - 2 * np.pi * 300e3
    hi = freqs.max() + 2 * np.pi * 300e3
    while True:
        mu = float(rng.uniform(lo, hi))
        if np.min(np.abs(mu - freqs)) > 2 * np.pi * 2e3:
            return ip.DriveConfig.for_chain(mu, chain)


def random_schedule(
    rng: np.random.Generator,
    chain: ip.ChainModel,
    max_segments: int = 8,
    shared: bool | None = None,
) -> ip.PulseSchedule:
    """A random piecewise-constant pulse on a random addressed ion pair."""
    segments = int(rng.integers(2, max_segments + 1))
    duration = float(rng.uniform(50e-6, 250e-6))
    ions = sorted(rng.choice(chain.ion_count, size=2, replace=False).tolist())
    if shared is None:
        shared = bool(rng.integers(0, 2))
    omega = 2 * np.pi * rng.uniform(0.0, 300e3, size=(2, segments))
    if shared:
        omega[1] = omega[0]
    phi = rng.uniform(-np.pi, np.pi, size=(2, segments))
    if shared:
        phi[1] = phi[0]
    return ip.PulseSchedule(
        duration, (int(ions[0]), int(ions[1])), omega, phi, shared=shared
    )

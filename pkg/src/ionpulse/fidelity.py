"""Thermal phonon occupations and the analytic MS-gate fidelity.

The gate fidelity of a pulse with couplings (beta, theta_total) against the
maximally-entangling target splits into a phase factor |cos(theta - pi/4)|
and a phonon factor prod_k exp(-sum_j |beta[j][k]|^2 (nbar_k + 1/2)), the
thermal average of the residual displacement overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_model import ChainModel
from .constants import HBAR, KB
from .coupling_integrals import TARGET_ANGLE, CouplingReport

# exp(x) overflows float64 near 709; occupations there are exactly 0 anyway.
_MAX_EXPONENT = 700.0


def thermal_occupations(mode_freqs: np.ndarray, temperature: float) -> np.ndarray:
    """Bose-Einstein mean occupation per mode; T = 0 handled as the limit.

    ``mode_freqs`` are angular (rad/s), so the Boltzmann ratio is
    hbar*nu/(k_B*T) with nu already containing the 2*pi.
    """
    freqs = np.asarray(mode_freqs, dtype=float)
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0.0:
        return np.zeros_like(freqs)
    ratio = HBAR * freqs / (KB * temperature)
    return np.where(
        ratio > _MAX_EXPONENT,
        0.0,
        1.0 / np.expm1(np.minimum(ratio, _MAX_EXPONENT)),
    )


@dataclass(frozen=True)
class ThermalEnv:
    """Motional temperature and the resulting per-mode occupations."""

    temperature: float
    occupations: np.ndarray

    @classmethod
    def for_chain(cls, chain: ChainModel, temperature: float) -> "ThermalEnv":
        return cls(
            temperature=temperature,
            occupations=thermal_occupations(chain.mode_freqs, temperature),
        )


@dataclass(frozen=True)
class FidelityResult:
    fidelity: float
    phase_factor: float
    phonon_factor: float

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


def ms_fidelity(report: CouplingReport, env: ThermalEnv) -> FidelityResult:
    """F = |cos(theta_total - pi/4)| * prod_k exp(-sum_j |beta|^2 (nbar+1/2))."""
    occupations = np.asarray(env.occupations, dtype=float)
    if occupations.shape[0] != report.beta.shape[1]:
        raise ValueError(
            f"occupations cover {occupations.shape[0]} modes but the report "
            f"has {report.beta.shape[1]}"
        )
    phase_factor = float(np.abs(np.cos(report.theta_total - TARGET_ANGLE)))
    exponent = float(
        np.sum((occupations + 0.5) * np.sum(np.abs(report.beta) ** 2, axis=0))
    )
    phonon_factor = float(np.exp(-exponent))
    return FidelityResult(
        fidelity=phase_factor * phonon_factor,
        phase_factor=phase_factor,
        phonon_factor=phonon_factor,
    )

"""Ion-chain geometry, transverse normal modes, and Lamb-Dicke parameters.

An N-ion linear chain in a harmonic trap (axial frequency omega_z, transverse
frequency omega_x) has equilibrium positions set by the balance of the trap
force and mutual Coulomb repulsion, and transverse phonon modes given by the
eigenproblem of the dimensionless coupling matrix

    A[j][j] = (omega_x/omega_z)^2 - sum_{m != j} 1/|u_j - u_m|^3
    A[i][j] = +1/|u_i - u_j|^3                      (i != j)

in units of the Coulomb length l = (e^2/(4 pi eps0 M omega_z^2))^(1/3), with
mode frequencies nu_k = omega_z*sqrt(lambda_k). The Lamb-Dicke parameter of
ion j on mode k is eta[j][k] = DK * b[j][k] * sqrt(hbar/(2 M nu_k)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    COULOMB_K,
    DEFAULT_WAVEVECTOR_DIFFERENCE,
    ELEMENTARY_CHARGE,
    HBAR,
    YB171_MASS_KG,
)

NEWTON_MAX_ITER = 200
NEWTON_TOL = 1e-12


class ChainModelError(ValueError):
    """Invalid trap configuration or failed chain computation."""


class EquilibriumConvergenceError(ChainModelError):
    """Newton iteration on the equilibrium equations did not converge."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(
            f"equilibrium solve did not reach tolerance {NEWTON_TOL:g} "
            f"within {NEWTON_MAX_ITER} iterations (residual {residual:.3e})"
        )


class ZigzagInstabilityError(ChainModelError):
    """The linear chain is transversally unstable for this trap anisotropy."""

    def __init__(self, mode_index: int, eigenvalue: float):
        self.mode_index = mode_index
        self.eigenvalue = eigenvalue
        super().__init__(
            f"transverse mode {mode_index} has non-positive stiffness "
            f"(lambda = {eigenvalue:.6g}); the chain is not linear at this "
            "transverse/axial frequency ratio"
        )


@dataclass(frozen=True)
class TrapConfig:
    """Static trap and laser-geometry parameters for one ion chain.

    Frequencies are ordinary frequencies in Hz (converted to angular
    internally). ``lamb_dicke_scale``, when given, replaces the
    wavevector-based Lamb-Dicke magnitude: it is interpreted as the
    center-of-mass-mode eta, with other modes scaled by sqrt(nu_N/nu_k).
    """

    ion_count: int = 4
    ion_mass: float = YB171_MASS_KG
    axial_freq: float = 1.2e6
    transverse_freq: float = 3.6e6
    wavevector_difference: float = DEFAULT_WAVEVECTOR_DIFFERENCE
    lamb_dicke_scale: float | None = None

    def __post_init__(self):
        if self.ion_count < 1:
            raise ChainModelError(f"ion_count must be >= 1, got {self.ion_count}")
        for name in ("ion_mass", "axial_freq", "transverse_freq"):
            value = getattr(self, name)
            if not value > 0:
                raise ChainModelError(f"{name} must be positive, got {value!r}")
        if self.lamb_dicke_scale is None and not self.wavevector_difference > 0:
            raise ChainModelError(
                f"wavevector_difference must be positive, got "
                f"{self.wavevector_difference!r}"
            )

    @property
    def axial_freq_rad(self) -> float:
        return 2.0 * np.pi * self.axial_freq

    @property
    def transverse_freq_rad(self) -> float:
        return 2.0 * np.pi * self.transverse_freq


@dataclass(frozen=True)
class ChainModel:
    """Computed chain geometry and mode data.

    equilibrium_positions : meters, ascending, length N
    mode_freqs            : angular frequencies rad/s, ascending, length N
    mode_matrix           : b[j][k], ion j participation in mode k, N x N
    lamb_dicke            : eta[j][k], dimensionless, N x N
    """

    config: TrapConfig
    equilibrium_positions: np.ndarray
    mode_freqs: np.ndarray
    mode_matrix: np.ndarray
    lamb_dicke: np.ndarray = field(repr=False)

    @property
    def ion_count(self) -> int:
        return self.config.ion_count


def length_scale(config: TrapConfig) -> float:
    """Coulomb length l = (e^2/(4 pi eps0 M omega_z^2))^(1/3) in meters."""
    wz = config.axial_freq_rad
    return (COULOMB_K * ELEMENTARY_CHARGE**2 / (config.ion_mass * wz**2)) ** (1.0 / 3.0)


def _force(u: np.ndarray) -> np.ndarray:
    """Dimensionless net force on each ion at positions u (ascending)."""
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    coulomb = np.sign(diff) / diff**2
    return u - coulomb.sum(axis=1)


def _force_jacobian(u: np.ndarray) -> np.ndarray:
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    inv3 = 1.0 / np.abs(diff) ** 3
    jac = -2.0 * inv3
    np.fill_diagonal(jac, 1.0 + 2.0 * inv3.sum(axis=1))
    return jac


def solve_equilibrium(config: TrapConfig) -> np.ndarray:
    """Equilibrium ion positions in meters, sorted ascending.

    Damped Newton iteration on the dimensionless force equations from a
    uniform-spacing initial guess; the damping halves the step until the
    residual norm decreases.
    """
    n = config.ion_count
    if n == 1:
        return np.zeros(1)
    # Uniform spacing spanning roughly the known chain extent.
    half_span = 0.5 * 1.3 * n**0.57
    u = np.linspace(-half_span, half_span, n)
    res = _force(u)
    norm = np.linalg.norm(res, np.inf)
    for _ in range(NEWTON_MAX_ITER):
        if norm < NEWTON_TOL:
            break
        step = np.linalg.solve(_force_jacobian(u), res)
        scale = 1.0
        while scale > 1e-6:
            trial = u - scale * step
            trial_res = _force(trial)
            trial_norm = np.linalg.norm(trial_res, np.inf)
            if trial_norm < norm and np.all(np.diff(trial) > 0):
                u, res, norm = trial, trial_res, trial_norm
                break
            scale *= 0.5
        else:
            raise EquilibriumConvergenceError(norm)
    if norm >= NEWTON_TOL:
        raise EquilibriumConvergenceError(norm)
    # The physics is mirror-symmetric; symmetrize away the solver's rounding.
    u = 0.5 * (u - u[::-1])
    return u * length_scale(config)


def transverse_modes(
    config: TrapConfig, positions: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Transverse mode frequencies (rad/s, ascending) and mode matrix.

    Each eigenvector (column of the mode matrix) is normalized and sign-fixed
    so its largest-magnitude entry is positive. The highest mode is the
    center-of-mass mode at exactly the transverse trap frequency.
    """
    n = config.ion_count
    u = positions / length_scale(config)
    ratio2 = (config.transverse_freq / config.axial_freq) ** 2
    if n == 1:
        return np.array([config.transverse_freq_rad]), np.ones((1, 1))
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    inv3 = 1.0 / np.abs(diff) ** 3
    a_mat = inv3.copy()
    np.fill_diagonal(a_mat, ratio2 - inv3.sum(axis=1))
    eigvals, eigvecs = np.linalg.eigh(a_mat)
    for k, lam in enumerate(eigvals):
        if lam <= 0:
            raise ZigzagInstabilityError(k, float(lam))
    for k in range(n):
        col = eigvecs[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            eigvecs[:, k] = -col
    return config.axial_freq_rad * np.sqrt(eigvals), eigvecs


def lamb_dicke_matrix(
    config: TrapConfig, mode_freqs: np.ndarray, mode_matrix: np.ndarray
) -> np.ndarray:
    """eta[j][k] = DK * b[j][k] * sqrt(hbar/(2 M nu_k)).

    With ``lamb_dicke_scale`` set, the magnitude is anchored to the
    center-of-mass mode instead: eta[j][k] = scale * b[j][k] * sqrt(nu_N/nu_k).
    """
    if config.lamb_dicke_scale is not None:
        per_mode = config.lamb_dicke_scale * np.sqrt(mode_freqs[-1] / mode_freqs)
    else:
        per_mode = config.wavevector_difference * np.sqrt(
            HBAR / (2.0 * config.ion_mass * mode_freqs)
        )
    eta = mode_matrix * per_mode[None, :]
    max_eta = np.max(np.abs(eta))
    if max_eta >= 0.3:
        warnings.warn(
            f"largest |eta| = {max_eta:.3f} is outside the Lamb-Dicke regime",
            stacklevel=2,
        )
    return eta


def build_chain(config: TrapConfig) -> ChainModel:
    """Solve the chain end to end: positions, modes, Lamb-Dicke matrix."""
    positions = solve_equilibrium(config)
    freqs, vecs = transverse_modes(config, positions)
    eta = lamb_dicke_matrix(config, freqs, vecs)
    return ChainModel(
        config=config,
        equilibrium_positions=positions,
        mode_freqs=freqs,
        mode_matrix=vecs,
        lamb_dicke=eta,
    )

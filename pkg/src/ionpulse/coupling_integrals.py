"""Ion-phonon and ion-ion coupling integrals for piecewise-constant pulses.

For a drive with detuning mu near transverse modes nu_k, define the sideband
frequencies B_k = mu - nu_k and per-ion complex segment weights
w[l] = Omega_l * exp(i*phi_l). Over the gate the pulse accumulates

    beta[j][k]  = eta[j][k] * integral( w_j(t) * exp(i B_k t) dt )
    theta[j][j'] = sum_k eta[j][k] eta[j'][k] *
                   iint_{t1>t2} Omega_j(t1) Omega_j'(t2)
                       sin(B_k (t1-t2) + phi_j(t1) - phi_j'(t2)) dt2 dt1

plus their first derivatives in a common sideband drift delta (B_k -> B_k +
delta): beta_tilde = d beta/d B_k and theta_tilde = d theta_total/d delta.

Everything is evaluated in closed form per segment (the integrands are
complex exponentials), which is what the optimizer differentiates; an
independent numerical-quadrature route exists for every quantity and is used
as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .chain_model import ChainModel
from .constants import RESONANCE_THRESHOLD
from .pulse_schedule import PulseSchedule

TARGET_ANGLE = np.pi / 4.0


class ResonanceError(ValueError):
    """A sideband frequency is too close to zero for the closed forms."""

    def __init__(self, mode_index: int, value: float):
        self.mode_index = mode_index
        self.value = value
        super().__init__(
            f"sideband frequency for mode {mode_index} is {value:.6g} rad/s, "
            f"within the resonance threshold {RESONANCE_THRESHOLD:.6g} rad/s"
        )


@dataclass(frozen=True)
class DriveConfig:
    """Bichromatic drive: detuning, per-mode sidebands, and a drift offset.

    ``sideband_freqs`` are B_k = mu - nu_k (rad/s); ``delta`` is the common
    quasi-static drift added to every B_k when evaluating couplings.
    """

    mu: float
    sideband_freqs: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "sideband_freqs", np.asarray(self.sideband_freqs, dtype=float)
        )

    @classmethod
    def for_chain(cls, mu: float, chain: ChainModel, delta: float = 0.0):
        return cls(mu=mu, sideband_freqs=mu - chain.mode_freqs, delta=delta)

    def effective_sidebands(self) -> np.ndarray:
        """B_k + delta, after checking the resonance guard."""
        shifted = self.sideband_freqs + self.delta
        small = np.flatnonzero(np.abs(shifted) < RESONANCE_THRESHOLD)
        if small.size:
            k = int(small[0])
            raise ResonanceError(k, float(shifted[k]))
        return shifted

    def with_delta(self, delta: float) -> "DriveConfig":
        return replace(self, delta=delta)


class Kernels(NamedTuple):
    """Per-mode segment integrals for one (sidebands, boundaries) pair.

    seg_phase : (K, L)  integral of exp(i B t) over each segment
    seg_time  : (K, L)  integral of t exp(i B t) over each segment
    pair      : (K, L, L) ordered double integral of
                exp(i B (t1 - t2)) over segment pairs (lower triangular;
                the diagonal holds the within-segment ordered integral)
    pair_drift: (K, L, L) d(pair)/dB
    """

    sidebands: np.ndarray
    boundaries: np.ndarray
    seg_phase: np.ndarray
    seg_time: np.ndarray
    pair: np.ndarray
    pair_drift: np.ndarray


def build_kernels(sidebands: np.ndarray, boundaries: np.ndarray) -> Kernels:
    """Closed-form segment integrals for arbitrary segment boundaries."""
    bv = np.asarray(sidebands, dtype=float)
    bounds = np.asarray(boundaries, dtype=float)
    a, b = bounds[:-1], bounds[1:]
    p = bv[:, None]

    eb = np.exp(1j * bv[:, None] * bounds[None, :])
    seg_phase = (eb[:, 1:] - eb[:, :-1]) / (1j * bv[:, None])

    # Antiderivative of t exp(iBt): exp(iBt) (1/B^2 - i t / B).
    anti = np.exp(1j * p * bounds[None, :]) * (1.0 / p**2 - 1j * bounds[None, :] / p)
    seg_time = anti[:, 1:] - anti[:, :-1]

    e_b, e_a = np.exp(1j * p * b[None, :]), np.exp(1j * p * a[None, :])
    d1 = e_b - e_a
    d1p = 1j * (b[None, :] * e_b - a[None, :] * e_a)
    rect = d1[:, :, None] * np.conj(d1)[:, None, :] / (bv[:, None, None] ** 2)
    rect_p = (
        d1p[:, :, None] * np.conj(d1)[:, None, :]
        + d1[:, :, None] * np.conj(d1p)[:, None, :]
    ) / (bv[:, None, None] ** 2) - 2.0 * rect / bv[:, None, None]

    lower = np.tril(np.ones((len(a), len(a))), -1)
    pair = rect * lower[None, :, :]
    pair_drift = rect_p * lower[None, :, :]

    h = (b - a)[None, :]
    eh = np.exp(1j * p * h)
    tri = 1j * h / p - (eh - 1.0) / p**2
    tri_p = -1j * h / p**2 - 1j * h * eh / p**2 + 2.0 * (eh - 1.0) / p**3
    diag = np.arange(len(a))
    pair[:, diag, diag] = tri
    pair_drift[:, diag, diag] = tri_p

    return Kernels(bv, bounds, seg_phase, seg_time, pair, pair_drift)


@dataclass(frozen=True)
class CouplingReport:
    """Couplings of one pulse: residual displacements and entangling phase.

    beta/beta_tilde are indexed (addressed ion, mode). theta_total counts
    both ordered ion pairs, so the gate target is theta_total = pi/4;
    theta_tilde_total = d theta_total / d delta (units of seconds).
    """

    beta: np.ndarray
    beta_tilde: np.ndarray
    theta_total: float
    theta_tilde_total: float

    @property
    def beta_sq_total(self) -> float:
        return float(np.sum(np.abs(self.beta) ** 2))


def _weights(schedule: PulseSchedule) -> np.ndarray:
    """Complex segment weights w = Omega exp(i phi), shape (2, L)."""
    return schedule.omega * np.exp(1j * schedule.phi)


def _eta_rows(schedule: PulseSchedule, chain: ChainModel) -> np.ndarray:
    idx = list(schedule.addressed)
    if min(idx) < 0 or max(idx) >= chain.ion_count:
        raise ValueError(
            f"addressed ions {schedule.addressed} outside chain of "
            f"{chain.ion_count} ions"
        )
    return chain.lamb_dicke[idx, :]


def couplings_from_kernels(
    kernels: Kernels, eta: np.ndarray, weights: np.ndarray
) -> CouplingReport:
    """Assemble a CouplingReport from precomputed kernels.

    eta: (2, K) Lamb-Dicke rows of the addressed ions; weights: (2, L).
    """
    w_a, w_b = weights
    beta = eta * (kernels.seg_phase @ weights.T).T
    beta_tilde = eta * (1j * (kernels.seg_time @ weights.T)).T
    e_pair = eta[0] * eta[1]

    def _bilinear(mat: np.ndarray) -> float:
        fwd = np.einsum("l,klm,m->k", w_a, mat, np.conj(w_b))
        rev = np.einsum("l,klm,m->k", w_b, mat, np.conj(w_a))
        return float(np.sum(e_pair * (fwd.imag + rev.imag)))

    return CouplingReport(
        beta=beta,
        beta_tilde=beta_tilde,
        theta_total=_bilinear(kernels.pair),
        theta_tilde_total=_bilinear(kernels.pair_drift),
    )


def evaluate_couplings(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    time_scale: float = 1.0,
    mode_indices: tuple[int, ...] | None = None,
) -> CouplingReport:
    """Closed-form beta, beta_tilde, theta, theta_tilde for one pulse.

    ``time_scale`` stretches every segment uniformly (tau -> s*tau) at fixed
    amplitudes and phases, the gate-time-noise model. ``mode_indices``
    restricts the evaluation to a subset of modes (all by default), for
    comparison against truncated-space propagation.
    """
    sidebands = drive.effective_sidebands()
    eta = _eta_rows(schedule, chain)
    if mode_indices is not None:
        idx = list(mode_indices)
        sidebands = sidebands[idx]
        eta = eta[:, idx]
    kernels = build_kernels(sidebands, schedule.segment_boundaries(time_scale))
    return couplings_from_kernels(kernels, eta, _weights(schedule))


def theta_trajectory(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    times: np.ndarray,
) -> np.ndarray:
    """Accumulated entangling phase theta_total(t) with upper limit t."""
    eta = _eta_rows(schedule, chain)
    weights = _weights(schedule)
    sidebands = drive.effective_sidebands()
    full_bounds = schedule.segment_boundaries()
    out = np.empty(len(times))
    for i, t in enumerate(np.asarray(times, dtype=float)):
        if not 0.0 <= t <= schedule.duration * (1 + 1e-12):
            raise ValueError(f"trajectory time {t!r} outside [0, tau]")
        if t == 0.0:
            out[i] = 0.0
            continue
        n_full = int(np.searchsorted(full_bounds, t, side="left"))
        bounds = np.concatenate([full_bounds[:n_full], [t]])
        kernels = build_kernels(sidebands, bounds)
        report = couplings_from_kernels(kernels, eta, weights[:, : len(bounds) - 1])
        out[i] = report.theta_total
    return out


# ----------------------------------------------------------------------
# Independent quadrature oracles. These never touch the closed forms above:
# 1D integrals go through adaptive Gauss-Kronrod per segment, 2D integrals
# through tensor Gauss-Legendre on segment-aligned panels subdivided so no
# panel spans more than ~pi of sideband phase.
# ----------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = leggauss(16)


def beta_quadrature(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    time_scale: float = 1.0,
    tol: float = 1e-13,
) -> np.ndarray:
    """beta by direct numerical integration of the defining integral."""
    eta = _eta_rows(schedule, chain)
    sidebands = drive.effective_sidebands()
    bounds = schedule.segment_boundaries(time_scale)
    beta = np.zeros((2, len(sidebands)), dtype=complex)
    for j in range(2):
        for k, b_k in enumerate(sidebands):
            total = 0.0 + 0.0j
            for l in range(schedule.segment_count):
                w = schedule.omega[j, l] * np.exp(1j * schedule.phi[j, l])
                re, _ = quad(
                    lambda t: np.cos(b_k * t), bounds[l], bounds[l + 1],
                    epsabs=tol, epsrel=tol, limit=200,
                )
                im, _ = quad(
                    lambda t: np.sin(b_k * t), bounds[l], bounds[l + 1],
                    epsabs=tol, epsrel=tol, limit=200,
                )
                total += w * (re + 1j * im)
            beta[j, k] = eta[j, k] * total
    return beta


def _panel_nodes(lo: float, hi: float, max_phase: float, abs_b: float):
    """Gauss-Legendre nodes/weights on [lo, hi], split so each sub-panel
    carries at most ``max_phase`` radians of exp(iBt) phase."""
    n_panels = max(1, int(np.ceil(abs_b * (hi - lo) / max_phase)))
    edges = np.linspace(lo, hi, n_panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(0.5 * (a + b) + half * _GL_NODES)
        weights.append(half * _GL_WEIGHTS)
    return np.concatenate(nodes), np.concatenate(weights)


def theta_quadrature(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    time_scale: float = 1.0,
    drift_weighted: bool = False,
) -> float:
    """theta_total (or theta_tilde_total with ``drift_weighted``) by nested
    Gauss-Legendre quadrature of the ordered double integral.

    With ``drift_weighted`` the integrand gains the drift-derivative kernel
    cos(...) * (t1 - t2) in place of sin(...).
    """
    eta = _eta_rows(schedule, chain)
    sidebands = drive.effective_sidebands()
    bounds = schedule.segment_boundaries(time_scale)
    omega, phi = schedule.omega, schedule.phi
    e_pair = eta[0] * eta[1]
    total = 0.0
    for k, b_k in enumerate(sidebands):
        abs_b = abs(b_k)
        mode_sum = 0.0
        for l1 in range(schedule.segment_count):
            t1_nodes, t1_weights = _panel_nodes(
                bounds[l1], bounds[l1 + 1], np.pi, abs_b
            )
            for l2 in range(l1 + 1):
                for jt, jp in ((0, 1), (1, 0)):
                    amp = omega[jt, l1] * omega[jp, l2]
                    if amp == 0.0:
                        continue
                    dphi = phi[jt, l1] - phi[jp, l2]
                    inner = np.zeros_like(t1_nodes)
                    for i, t1 in enumerate(t1_nodes):
                        hi = min(t1, bounds[l2 + 1])
                        if hi <= bounds[l2]:
                            continue
                        t2_nodes, t2_weights = _panel_nodes(
                            bounds[l2], hi, np.pi, abs_b
                        )
                        arg = b_k * (t1 - t2_nodes) + dphi
                        if drift_weighted:
                            vals = np.cos(arg) * (t1 - t2_nodes)
                        else:
                            vals = np.sin(arg)
                        inner[i] = np.dot(t2_weights, vals)
                    mode_sum += amp * np.dot(t1_weights, inner)
        total += e_pair[k] * mode_sum
    return total


def theta_tilde_quadrature(
    schedule: PulseSchedule,
    chain: ChainModel,
    drive: DriveConfig,
    time_scale: float = 1.0,
) -> float:
    """theta_tilde_total by quadrature of the cos(...)(t1 - t2) kernel."""
    return theta_quadrature(
        schedule, chain, drive, time_scale=time_scale, drift_weighted=True
    )

"""Piecewise-constant pulse schedules and the free-parameter layout.

A schedule holds, for each of the two addressed ions, L equal-duration
segments of constant Rabi amplitude Omega and phase phi. The optimizer works
on a flat vector of free parameters; ``ParamLayout`` defines the mapping
between that vector and the full segment table under two structural options:

* shared pulse: both addressed ions are driven by one common segment table;
* symmetry ansatz: Omega(t) = Omega(tau - t) and phi(t) = -phi(tau - t),
  realized exactly by mirroring segment entries (for odd L the center
  segment's phase is pinned to 0).

Amplitude entries of the free vector are stored as fractions of omega_max in
[0, 1] (well-conditioned next to phase entries in (-pi, pi]); the physical
amplitude bound [0, omega_max] is enforced through these box bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ScheduleError(ValueError):
    """Invalid schedule construction or sampling request."""


def wrap_phase(phi):
    """Wrap angles to (-pi, pi]."""
    wrapped = np.mod(np.asarray(phi, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


@dataclass(frozen=True)
class ParamLayout:
    """Mapping between the free parameter vector and full segment tables.

    The free vector is [amps, phases] for a shared pulse, and
    [amps_0, phases_0, amps_1, phases_1] for independent per-ion pulses.
    """

    segment_count: int
    duration: float
    addressed: tuple[int, int]
    omega_max: float
    shared: bool = True
    symmetric: bool = True
    # Per-segment source index into the free block and sign, built once.
    _amp_src: np.ndarray = field(init=False, repr=False)
    _phase_src: np.ndarray = field(init=False, repr=False)
    _phase_sign: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ns = self.segment_count
        if ns < 1:
            raise ScheduleError(f"segment_count must be >= 1, got {ns}")
        if self.duration <= 0:
            raise ScheduleError(f"duration must be positive, got {self.duration}")
        if self.omega_max <= 0:
            raise ScheduleError(f"omega_max must be positive, got {self.omega_max}")
        if len(set(self.addressed)) != 2:
            raise ScheduleError(
                f"addressed must name two distinct ions, got {self.addressed}"
            )
        if self.symmetric:
            half = ns // 2
            amp_src = np.concatenate([np.arange((ns + 1) // 2),
                                      np.arange(half)[::-1]]).astype(int)
            phase_src = np.concatenate([np.arange(half),
                                        np.full(ns % 2, -1),
                                        np.arange(half)[::-1]]).astype(int)
            phase_sign = np.concatenate([np.ones(half),
                                         np.zeros(ns % 2),
                                         -np.ones(half)])
        else:
            amp_src = np.arange(ns)
            phase_src = np.arange(ns)
            phase_sign = np.ones(ns)
        object.__setattr__(self, "_amp_src", amp_src)
        object.__setattr__(self, "_phase_src", phase_src)
        object.__setattr__(self, "_phase_sign", phase_sign)

    @property
    def amps_per_ion(self) -> int:
        return (self.segment_count + 1) // 2 if self.symmetric else self.segment_count

    @property
    def phases_per_ion(self) -> int:
        return self.segment_count // 2 if self.symmetric else self.segment_count

    @property
    def free_ion_count(self) -> int:
        return 1 if self.shared else 2

    @property
    def block_size(self) -> int:
        return self.amps_per_ion + self.phases_per_ion

    @property
    def n_free(self) -> int:
        return self.free_ion_count * self.block_size

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Elementwise (lower, upper) box bounds for the free vector."""
        na, nph = self.amps_per_ion, self.phases_per_ion
        lo_block = np.concatenate([np.zeros(na), -np.pi * np.ones(nph)])
        hi_block = np.concatenate([np.ones(na), np.pi * np.ones(nph)])
        reps = self.free_ion_count
        return np.tile(lo_block, reps), np.tile(hi_block, reps)

    def entry_name(self, index: int) -> str:
        block, offset = divmod(index, self.block_size)
        ion = "shared" if self.shared else f"ion {self.addressed[block]}"
        if offset < self.amps_per_ion:
            return f"amplitude[{offset}] ({ion})"
        return f"phase[{offset - self.amps_per_ion}] ({ion})"

    def validate(self, params: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Check shape and box bounds (with a small tolerance for optimizer
        round-off); out-of-bound entries are reported by name."""
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_free,):
            raise ScheduleError(
                f"expected {self.n_free} free parameters, got shape {params.shape}"
            )
        lo, hi = self.bounds()
        bad = np.flatnonzero((params < lo - tol) | (params > hi + tol))
        if bad.size:
            i = int(bad[0])
            raise ScheduleError(
                f"parameter {i} = {params[i]:.6g} violates bound "
                f"[{lo[i]:.6g}, {hi[i]:.6g}]: {self.entry_name(i)}"
            )
        return params

    def unpack(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Free vector -> (omega, phi), each shaped (2, L) in physical units."""
        params = self.validate(params)
        omega_rows, phi_rows = [], []
        for block in range(self.free_ion_count):
            chunk = params[block * self.block_size:(block + 1) * self.block_size]
            amps = np.clip(chunk[:self.amps_per_ion], 0.0, 1.0)
            phases = np.clip(chunk[self.amps_per_ion:], -np.pi, np.pi)
            omega_rows.append(self.omega_max * amps[self._amp_src])
            if phases.size:
                full_phase = np.where(
                    self._phase_src >= 0,
                    phases[np.maximum(self._phase_src, 0)] * self._phase_sign,
                    0.0,
                )
            else:
                full_phase = np.zeros(self.segment_count)
            phi_rows.append(full_phase)
        if self.shared:
            omega_rows.append(omega_rows[0])
            phi_rows.append(phi_rows[0])
        return np.vstack(omega_rows), np.vstack(phi_rows)

    def pack(self, omega: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Inverse of unpack for tables that satisfy the layout's structure."""
        blocks = []
        na = self.amps_per_ion
        for block in range(self.free_ion_count):
            blocks.append(omega[block, :na] / self.omega_max)
            blocks.append(phi[block, :self.phases_per_ion])
        return np.concatenate(blocks)

    def fold_gradient(self, d_omega: np.ndarray, d_phi: np.ndarray) -> np.ndarray:
        """Fold per-segment gradients (2, L) back onto the free vector.

        d_omega is the derivative with respect to the physical amplitude
        (rad/s); the chain rule to the stored fraction multiplies by
        omega_max. Mirrored slots accumulate; mirrored phases flip sign.
        """
        out = np.zeros(self.n_free)
        rows = [0] if self.shared else [0, 1]
        if self.shared:
            d_omega = d_omega.sum(axis=0, keepdims=True)
            d_phi = d_phi.sum(axis=0, keepdims=True)
        for block, row in enumerate(rows):
            amp_grad = np.zeros(self.amps_per_ion)
            np.add.at(amp_grad, self._amp_src, d_omega[row] * self.omega_max)
            phase_grad = np.zeros(self.phases_per_ion)
            mask = self._phase_src >= 0
            np.add.at(
                phase_grad,
                self._phase_src[mask],
                d_phi[row, mask] * self._phase_sign[mask],
            )
            start = block * self.block_size
            out[start:start + self.amps_per_ion] = amp_grad
            out[start + self.amps_per_ion:start + self.block_size] = phase_grad
        return out


@dataclass(frozen=True)
class PulseSchedule:
    """A concrete two-ion pulse: per-ion segment tables plus timing.

    omega : (2, L) Rabi amplitudes, rad/s, rows in ``addressed`` order
    phi   : (2, L) phases, radians in (-pi, pi]
    """

    duration: float
    addressed: tuple[int, int]
    omega: np.ndarray
    phi: np.ndarray
    shared: bool = True
    omega_max: float | None = None

    def __post_init__(self):
        omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        if omega.shape != phi.shape or omega.shape[0] != 2 or omega.shape[1] < 1:
            raise ScheduleError(
                f"omega/phi must both be (2, L), got {omega.shape} and {phi.shape}"
            )
        if np.any(omega < 0):
            raise ScheduleError("amplitudes must be non-negative")
        if self.omega_max is not None and np.any(omega > self.omega_max * (1 + 1e-12)):
            raise ScheduleError(
                f"amplitude {omega.max():.6g} exceeds omega_max {self.omega_max:.6g}"
            )
        if self.duration <= 0:
            raise ScheduleError(f"duration must be positive, got {self.duration}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "phi", wrap_phase(phi))

    @property
    def segment_count(self) -> int:
        return self.omega.shape[1]

    @property
    def segment_duration(self) -> float:
        return self.duration / self.segment_count

    def segment_boundaries(self, time_scale: float = 1.0) -> np.ndarray:
        """Segment edge times [0, tau_s, 2 tau_s, ..., tau], optionally
        stretched uniformly by ``time_scale`` (the time-noise model)."""
        return time_scale * self.duration * np.linspace(
            0.0, 1.0, self.segment_count + 1
        )

    def sample(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(Omega, phi) per addressed ion at time t.

        Right-continuous at interior boundaries; the final segment is closed
        at t = tau.
        """
        if not 0.0 <= t <= self.duration:
            raise ScheduleError(
                f"sample time {t!r} outside [0, {self.duration!r}]"
            )
        idx = min(int(t / self.segment_duration), self.segment_count - 1)
        return self.omega[:, idx].copy(), self.phi[:, idx].copy()

    def to_json_dict(self) -> dict:
        """Serializable form: segment durations in us, amplitudes in MHz.

        Shared pulses use scalar omega_mhz/phi_rad per segment; independent
        per-ion pulses store a two-element list in each field.
        """
        segments = []
        for l in range(self.segment_count):
            if self.shared:
                segments.append({
                    "omega_mhz": self.omega[0, l] / (2.0 * np.pi * 1e6),
                    "phi_rad": self.phi[0, l],
                })
            else:
                segments.append({
                    "omega_mhz": [w / (2.0 * np.pi * 1e6) for w in self.omega[:, l]],
                    "phi_rad": list(self.phi[:, l]),
                })
        return {
            "tau_s_us": self.segment_duration * 1e6,
            "segments": segments,
            "addressed": list(self.addressed),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PulseSchedule":
        try:
            tau_s = float(data["tau_s_us"]) * 1e-6
            segments = data["segments"]
            addressed = tuple(int(i) for i in data["addressed"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScheduleError(f"malformed pulse JSON: {exc}") from exc
        if not segments:
            raise ScheduleError("pulse JSON has no segments")
        shared = np.isscalar(segments[0]["omega_mhz"])
        omega, phi = [], []
        for seg in segments:
            w, p = seg["omega_mhz"], seg["phi_rad"]
            if shared:
                omega.append([w, w])
                phi.append([p, p])
            else:
                omega.append(list(w))
                phi.append(list(p))
        omega = 2.0 * np.pi * 1e6 * np.asarray(omega, dtype=float).T
        phi = np.asarray(phi, dtype=float).T
        return cls(
            duration=tau_s * len(segments),
            addressed=addressed,
            omega=omega,
            phi=phi,
            shared=shared,
        )


def build_schedule(params: np.ndarray, layout: ParamLayout) -> PulseSchedule:
    """Materialize the full schedule for a free parameter vector."""
    omega, phi = layout.unpack(params)
    return PulseSchedule(
        duration=layout.duration,
        addressed=layout.addressed,
        omega=omega,
        phi=phi,
        shared=layout.shared,
        omega_max=layout.omega_max,
    )

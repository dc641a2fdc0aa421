"""Split-step pseudospectral integrator for the scaled Lugiato-Lefever
equation on a periodic grid.

One step of size dt is the symmetric composition

    [loss+drive dt/2] [phase dt/2] [linear dt] [phase dt/2] [loss+drive dt/2]

where every factor is the exact flow of its own sub-equation: the
loss/drive update is the exact affine solution of dpsi/dtau =
-gamma(psi - psi_d), the phase factor is the exact exponential of the
|psi|^2 + potential rotation (|psi| is invariant under it), and the
linear step multiplies mode K by exp(i(delta - K^2) dt) in spectral
space. The composition is time-symmetric, hence globally O(dt^2), and
conserves the norm exactly (up to rounding) when gamma = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numba
import numpy as np

from . import _fft
from .errors import (CommensurabilityError, ConfigError, NumericalBlowupError)
from .grids import ComplexField, GridSpec, require_same_grid
from .meanfield import ScaledParams

LINEAR_PHASE_BOUND = math.pi / 4.0
NONLINEAR_PHASE_BOUND = 0.1
MIN_DOMAIN_IN_HEALING_WAVELENGTHS = 8.0


@numba.njit(cache=True)
def _rotate(psi, coef):
    """psi *= exp(i * coef * |psi|^2), in place."""
    n, m = psi.shape
    for i in range(n):
        for j in range(m):
            z = psi[i, j]
            t = coef * (z.real * z.real + z.imag * z.imag)
            psi[i, j] = z * complex(math.cos(t), math.sin(t))


@numba.njit(cache=True)
def _rotate_with_potential(psi, coef, pot, pot_coef):
    """psi *= exp(i * (coef * |psi|^2 + pot_coef * pot)), in place."""
    n, m = psi.shape
    for i in range(n):
        for j in range(m):
            z = psi[i, j]
            t = coef * (z.real * z.real + z.imag * z.imag) + pot_coef * pot[i, j]
            psi[i, j] = z * complex(math.cos(t), math.sin(t))


@dataclass
class RunConfig:
    """Everything one deterministic run needs."""

    dt: float
    n_steps: int
    snapshot_every: int
    params: ScaledParams
    initial: ComplexField
    potential: Optional[np.ndarray] = None        # real (nx, ny), >= 0 barrier
    drive: Optional[ComplexField] = None          # overrides params.drive
    potential_drift: Optional[tuple] = None       # (vx, vy): potential translates rigidly
    validate_domain: bool = True
    nan_check_every: int = 16
    dealias: bool = False                         # 2/3-rule mask, stress tests only

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.n_steps < 1 or self.snapshot_every < 1:
            raise ConfigError("n_steps and snapshot_every must be >= 1")
        grid = self.initial.grid
        if self.potential is not None:
            self.potential = np.ascontiguousarray(self.potential, dtype=np.float64)
            if self.potential.shape != (grid.nx, grid.ny):
                raise ConfigError("potential shape does not match the grid")
        if self.drive is not None:
            require_same_grid(self.initial, self.drive)

        lin_max = float(np.max(np.abs(self.params.delta - grid.k_squared())))
        if self.dt * lin_max >= LINEAR_PHASE_BOUND:
            raise ConfigError(
                f"step size too large: dt*max|linear phase| = {self.dt * lin_max:.3g} "
                f">= pi/4; reduce dt below {LINEAR_PHASE_BOUND / lin_max:.3g}"
            )
        amp_sq = float(np.max(self.initial.data.real**2 + self.initial.data.imag**2))
        if self.dt * amp_sq >= NONLINEAR_PHASE_BOUND:
            raise ConfigError(
                f"step size too large: dt*|psi|^2_max = {self.dt * amp_sq:.3g} >= 0.1"
            )
        if self.validate_domain and amp_sq > 0:
            # healing wavelength 2*pi/K_c on the |initial|-max background
            lam_c = 2.0 * math.pi / (math.sqrt(2.0) * math.sqrt(amp_sq))
            need = MIN_DOMAIN_IN_HEALING_WAVELENGTHS * lam_c
            if min(grid.lx, grid.ly) < need:
                raise ConfigError(
                    f"domain {min(grid.lx, grid.ly):.3g} shorter than "
                    f"{MIN_DOMAIN_IN_HEALING_WAVELENGTHS:g} healing wavelengths "
                    f"({need:.3g}); wrap-around sound would contaminate "
                    "measurements (set validate_domain=False for linear runs)"
                )


class Stepper:
    """Precomputed operators for repeated steps of one RunConfig.

    ``potential_ramp`` optionally scales the potential by a factor
    ramp(tau), evaluated at the step midpoint (used to switch obstacles
    on smoothly).
    """

    def __init__(self, config: RunConfig, potential_ramp=None):
        self.config = config
        self.potential_ramp = potential_ramp
        grid = config.initial.grid
        p = config.params
        self.grid = grid
        self.dt = config.dt
        self.h = 0.5 * config.dt
        self.nl_coef = -p.sign * self.h
        self.linear_phase = np.exp(1j * (p.delta - grid.k_squared()) * config.dt)
        if config.dealias:
            kx = np.abs(grid.kx())[:, None]
            ky = np.abs(grid.ky())[None, :]
            keep = (kx <= (2.0 / 3.0) * kx.max()) & (ky <= (2.0 / 3.0) * ky.max())
            self.linear_phase = self.linear_phase * keep
        self.gamma = p.gamma
        self.decay_half = math.exp(-p.gamma * self.h) if p.gamma > 0 else 1.0
        if config.drive is not None:
            self.drive = config.drive.data
        else:
            self.drive = complex(p.drive)
        self.potential = config.potential
        self._drift = config.potential_drift
        if self._drift is not None:
            if self.potential is None:
                raise ConfigError("potential_drift given without a potential")
            self._pot_hat = np.fft.rfft2(self.potential)
            kx = grid.kx()[:, None]
            ky = 2.0 * np.pi * np.fft.rfftfreq(grid.ny, d=grid.dy)[None, :]
            self._drift_phase = kx * self._drift[0] + ky * self._drift[1]

    def _potential_at(self, tau_mid):
        if self._drift is None:
            return self.potential
        shift = np.exp(-1j * self._drift_phase * tau_mid)
        return np.fft.irfft2(self._pot_hat * shift, s=(self.grid.nx, self.grid.ny))

    def _loss_drive_half(self, psi):
        if self.gamma == 0.0:
            return psi
        psi -= self.drive
        psi *= self.decay_half
        psi += self.drive
        return psi

    def advance(self, psi: np.ndarray, tau: float) -> np.ndarray:
        """One step in place; tau is the time at the start of the step."""
        pot = self._potential_at(tau + self.h)
        pot_coef = -self.h
        if self.potential_ramp is not None:
            pot_coef *= self.potential_ramp(tau + self.h)
        psi = self._loss_drive_half(psi)
        if pot is None:
            _rotate(psi, self.nl_coef)
        else:
            _rotate_with_potential(psi, self.nl_coef, pot, pot_coef)
        psi = _fft.ifft2(_fft.fft2(psi) * self.linear_phase)
        if pot is None:
            _rotate(psi, self.nl_coef)
        else:
            _rotate_with_potential(psi, self.nl_coef, pot, pot_coef)
        psi = self._loss_drive_half(psi)
        return psi


def step(field: ComplexField, config: RunConfig) -> ComplexField:
    """Advance a field by one dt (convenience wrapper around Stepper)."""
    require_same_grid(field, config.initial)
    psi = Stepper(config).advance(field.data.copy(), 0.0)
    return ComplexField(field.grid, psi)


def energy(field: ComplexField, params: ScaledParams, potential=None) -> float:
    """Conserved functional of the gamma = 0 flow:

        E = integral |grad psi|^2 + s/2 |psi|^4 - delta |psi|^2 + V |psi|^2
    """
    grid = field.grid
    psi = field.data
    psi_hat = _fft.fft2(psi)
    spec_weight = grid.cell_area / (grid.nx * grid.ny)
    kin = spec_weight * float(
        np.sum(grid.k_squared() * (psi_hat.real**2 + psi_hat.imag**2))
    )
    dens = psi.real**2 + psi.imag**2
    e = kin + grid.cell_area * float(
        np.sum(0.5 * params.sign * dens**2 - params.delta * dens)
    )
    if potential is not None:
        e += grid.cell_area * float(np.sum(potential * dens))
    return e


@dataclass
class Trajectory:
    """Snapshots plus diagnostics from one run."""

    times: np.ndarray
    snapshots: list                      # ComplexField per snapshot (may be empty)
    norms: np.ndarray                    # N(tau) at snapshot times
    energies: Optional[np.ndarray]       # E(tau) when gamma = 0, else None
    final: ComplexField = dc_field(repr=False, default=None)


def run(config: RunConfig, keep_fields=True) -> Trajectory:
    """Deterministic time evolution with diagnostics at snapshot times."""
    grid = config.initial.grid
    stepper = Stepper(config)
    psi = config.initial.data.copy()
    track_energy = config.params.gamma == 0.0

    times, snaps, norms, energies = [], [], [], []

    def record(step_index):
        tau = step_index * config.dt
        f = ComplexField(grid, psi.copy())
        times.append(tau)
        if keep_fields:
            snaps.append(f)
        norms.append(f.norm())
        if track_energy:
            energies.append(energy(f, config.params, config.potential))

    record(0)
    for n in range(1, config.n_steps + 1):
        psi = stepper.advance(psi, (n - 1) * config.dt)
        if n % config.nan_check_every == 0 or n % config.snapshot_every == 0 \
                or n == config.n_steps:
            if not np.all(np.isfinite(psi.view(np.float64))):
                mags = np.abs(psi)
                finite = mags[np.isfinite(mags)]
                peak = float(finite.max()) if finite.size else math.nan
                raise NumericalBlowupError(
                    f"non-finite field at step {n} (tau = {n * config.dt:.6g}, "
                    f"largest finite |psi| = {peak:.3g})",
                    step_index=n,
                )
        if n % config.snapshot_every == 0 or n == config.n_steps:
            record(n)

    return Trajectory(
        times=np.asarray(times),
        snapshots=snaps,
        norms=np.asarray(norms),
        energies=np.asarray(energies) if track_energy else None,
        final=ComplexField(grid, psi),
    )


# --------------------------------------------------------------------------
# flowing backgrounds
# --------------------------------------------------------------------------

def scaled_sound_speed(amplitude: float) -> float:
    """Sound speed sqrt(2)*|psi0| of the scaled defocusing fluid."""
    return math.sqrt(2.0) * abs(amplitude)


def speed_quantum(grid: GridSpec, amplitude=1.0) -> float:
    """Smallest nonzero v/v_s commensurate with the periodic domain."""
    return 2.0 * (2.0 * math.pi / grid.lx) / scaled_sound_speed(amplitude)


def nearest_commensurate_speed(grid: GridSpec, speed_ratio, amplitude=1.0):
    """Round v/v_s to the grid's ladder; returns (ratio, winding_number)."""
    quantum = speed_quantum(grid, amplitude)
    winding = int(round(speed_ratio / quantum))
    return winding * quantum, winding


def flowing_background(grid: GridSpec, speed_ratio: float,
                       amplitude=1.0) -> ComplexField:
    """Uniform flow psi0*exp(i k x) at velocity (v/v_s)*sqrt(2)*psi0.

    The local fluid velocity of exp(i k x) is 2k, so the flow wavenumber
    is k = speed_ratio * v_s / 2 and must wind an integer number of times
    around the periodic domain.
    """
    vs = scaled_sound_speed(amplitude)
    k_flow = speed_ratio * vs / 2.0
    winding = k_flow * grid.lx / (2.0 * math.pi)
    n = round(winding)
    if abs(winding - n) > 1e-9 * max(1.0, abs(winding)):
        nearest, _ = nearest_commensurate_speed(grid, speed_ratio, amplitude)
        raise CommensurabilityError(
            f"flow speed ratio {speed_ratio:g} winds {winding:.6g} (non-integer) "
            f"times around the domain; nearest valid ratio is {nearest:.6g}",
            nearest_speed=nearest,
        )
    k_exact = 2.0 * math.pi * n / grid.lx
    x = grid.x()[:, None]
    data = amplitude * np.exp(1j * k_exact * x) * np.ones((1, grid.ny))
    return ComplexField(grid, data)

"""Quantum Bogoliubov theory of the weakly interacting photon gas.

Closed-form scalar relations for the cavity photon fluid: effective mass,
chemical potential, quasiparticle dispersion and coefficients, sound
speed, and the derived momentum/length scales. Everything is CGS and
pure-functional; no state is shared between calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, HBAR
from .errors import ConfigError, FixedPointError, NumericalError


# --------------------------------------------------------------------------
# parameter records and interaction kernels
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantumParams:
    """Photon-gas parameters: hbar, c, laser frequency, effective mass,
    condensate number and quantization volume (all CGS)."""

    hbar: float
    c: float
    omega: float      # rad/s
    mass: float       # g
    n_condensate: float
    v_cav: float      # cm^3

    def __post_init__(self):
        for name in ("hbar", "c", "omega", "mass", "v_cav"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"QuantumParams.{name} must be positive")
        if self.n_condensate < 0:
            raise ConfigError("QuantumParams.n_condensate must be >= 0")

    @classmethod
    def paraxial(cls, wavelength, n_condensate, v_cav, hbar=HBAR, c=C_LIGHT):
        """Construct with the paraxial effective mass hbar*omega/c^2."""
        omega = 2.0 * math.pi * c / wavelength
        return cls(hbar=hbar, c=c, omega=omega,
                   mass=hbar * omega / c**2,
                   n_condensate=n_condensate, v_cav=v_cav)


@dataclass(frozen=True)
class ConstantKernel:
    """Momentum-independent repulsive pair interaction V(kappa) = V0."""

    v0: float

    def __post_init__(self):
        if self.v0 < 0:
            raise ConfigError("interaction kernel must be repulsive: V0 >= 0")

    def at(self, kappa):
        return self.v0 * np.ones_like(np.asarray(kappa, dtype=float))


@dataclass(frozen=True)
class TabulatedKernel:
    """V(kappa) sampled on a kappa >= 0 grid, evaluated by linear
    interpolation of |kappa| (V is even in kappa). Values outside the
    sampled range clamp to the end samples."""

    kappas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        kappas = np.asarray(self.kappas, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if kappas.ndim != 1 or kappas.shape != values.shape or kappas.size < 2:
            raise ConfigError("tabulated kernel needs matching 1D kappa/value arrays")
        if np.any(kappas < 0) or np.any(np.diff(kappas) <= 0):
            raise ConfigError("kernel kappa samples must be >= 0 and strictly increasing")
        if np.any(values < 0):
            raise ConfigError("interaction kernel must be repulsive: V(kappa) >= 0")
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "values", values)

    def at(self, kappa):
        return np.interp(np.abs(kappa), self.kappas, self.values)


@dataclass(frozen=True)
class QuasiparticleMode:
    """One Bogoliubov mode: momentum, energy and mixing coefficients."""

    kappa: float   # g cm/s
    energy: float  # erg
    u: float
    v: float

    def __post_init__(self):
        if self.energy < 0:
            raise NumericalError("quasiparticle energy must be >= 0")
        norm = self.u**2 - self.v**2
        if abs(norm - 1.0) > 1e-12:
            raise NumericalError(f"u^2 - v^2 = {norm!r}, violates normalization")


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def effective_mass(n_longitudinal, cavity_length, wavelength=None,
                   hbar=HBAR, c=C_LIGHT):
    """Effective photon mass hbar*n*pi/(L*c) set by the mirror quantization.

    With n = 2L/wavelength this equals the paraxial form
    ``effective_mass_paraxial(wavelength)``.
    """
    if n_longitudinal < 1:
        raise ConfigError("longitudinal index must be >= 1")
    if cavity_length <= 0:
        raise ConfigError("cavity length must be positive")
    del wavelength
    return hbar * n_longitudinal * math.pi / (cavity_length * c)


def effective_mass_paraxial(wavelength, hbar=HBAR, c=C_LIGHT):
    """Paraxial effective mass hbar*omega/c^2 at the optical wavelength."""
    if wavelength <= 0:
        raise ConfigError("wavelength must be positive")
    omega = 2.0 * math.pi * c / wavelength
    return hbar * omega / c**2


def free_dispersion(p_perp, mass):
    """Free transverse kinetic energy p^2/(2m)."""
    if mass <= 0:
        raise ConfigError("mass must be positive")
    return np.asarray(p_perp, dtype=float) ** 2 / (2.0 * mass)


def chemical_potential(params: QuantumParams, kernel) -> float:
    """Energy to add one photon to the fluid: N0 * V(0)."""
    return params.n_condensate * float(kernel.at(0.0))


def hartree_energy(p, params: QuantumParams, kernel):
    """Single-photon energy with the mean-field shift: eps(p) + N0*V(p)."""
    return free_dispersion(p, params.mass) + params.n_condensate * kernel.at(p)


def bogoliubov_dispersion(kappa, params: QuantumParams, kernel):
    """Quasiparticle energy sqrt(kappa^2 N0 V(kappa)/m + kappa^4/(4 m^2))."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise ConfigError("kappa must be >= 0")
    m = params.mass
    n0v = params.n_condensate * kernel.at(kappa)
    return np.sqrt(kappa**2 * n0v / m + kappa**4 / (4.0 * m**2))


def bogoliubov_coefficients(kappa, params: QuantumParams, kernel) -> QuasiparticleMode:
    """Mixing coefficients diagonalizing the quadratic Hamiltonian.

    u^2 = (1 + eps'/w)/2 and v^2 = (-1 + eps'/w)/2, positive roots.
    v^2 is evaluated in the equivalent form (N0 V)^2 / (2 w (eps' + w)),
    which avoids the eps'/w - 1 cancellation on the free-particle branch,
    and u^2 = 1 + v^2 keeps the normalization exact. Both coefficients
    diverge as 1/sqrt(kappa) in the infrared, so kappa = 0 is rejected
    rather than patched with a limit value.
    """
    kappa = float(kappa)
    if kappa <= 0:
        raise NumericalError(
            "Bogoliubov coefficients are infrared-divergent: v(kappa) -> inf "
            "as kappa -> 0; evaluate at kappa > 0"
        )
    w = float(bogoliubov_dispersion(kappa, params, kernel))
    ep = float(hartree_energy(kappa, params, kernel))
    if w == 0.0:
        # only possible for V(kappa)=0 with kappa=0, excluded above
        raise NumericalError("zero quasiparticle energy at kappa > 0")
    n0v = params.n_condensate * float(kernel.at(kappa))
    v_sq = n0v**2 / (2.0 * w * (ep + w))
    u = math.sqrt(1.0 + v_sq)
    v = math.sqrt(v_sq)
    return QuasiparticleMode(kappa=kappa, energy=w, u=u, v=v)


def sound_speed(params: QuantumParams, kernel) -> float:
    """Long-wavelength phonon speed sqrt(N0 V(0)/m) = sqrt(mu/m)."""
    return math.sqrt(chemical_potential(params, kernel) / params.mass)


def transition_momentum(params: QuantumParams, kernel,
                        max_iter=100, rtol=1e-12) -> float:
    """Momentum where the linear and quadratic branches meet.

    Solves kappa_c = 2*sqrt(m N0 V(kappa_c)): closed form for constant
    kernels, damped fixed-point iteration otherwise.
    """
    m = params.mass
    n0 = params.n_condensate
    if isinstance(kernel, ConstantKernel):
        if kernel.v0 <= 0 or n0 <= 0:
            raise ConfigError("transition momentum requires a repulsive, occupied fluid")
        return 2.0 * math.sqrt(m * n0 * kernel.v0)
    v_origin = float(kernel.at(0.0))
    if v_origin <= 0 or n0 <= 0:
        raise ConfigError("transition momentum requires V(0) > 0 and N0 > 0")
    kappa = 2.0 * math.sqrt(m * n0 * v_origin)
    trace = [kappa]
    for _ in range(max_iter):
        target = 2.0 * math.sqrt(m * n0 * float(kernel.at(kappa)))
        nxt = 0.5 * (kappa + target)  # damping keeps monotone kernels stable
        trace.append(nxt)
        if abs(nxt - kappa) <= rtol * abs(nxt):
            return nxt
        kappa = nxt
    raise FixedPointError(
        f"transition-momentum iteration did not reach rtol={rtol} in "
        f"{max_iter} steps; last iterates {trace[-4:]}",
        trace=trace,
    )


def healing_length(params: QuantumParams, kernel) -> float:
    """Collective-to-single-particle crossover length 2*pi*hbar/kappa_c."""
    vs = sound_speed(params, kernel)
    if vs <= 0:
        raise ConfigError("healing length undefined for a zero-sound-speed fluid")
    return math.pi * params.hbar / (params.mass * vs)


def interaction_from_kerr(physical, quantum: QuantumParams) -> ConstantKernel:
    """Constant kernel V0 = 8*pi*(hbar*omega)^2*|n2|/V_cav.

    This is the unique constant interaction for which the quantum sound
    speed equals the classical Kerr one under the intensity <-> N0
    mapping E0^2 = 8*pi*N0*hbar*omega/V_cav.
    """
    if physical.n2 == 0.0:
        raise ConfigError("zero Kerr nonlinearity gives a degenerate kernel")
    hw = quantum.hbar * quantum.omega
    return ConstantKernel(8.0 * math.pi * hw**2 * abs(physical.n2) / quantum.v_cav)


def condensate_number(e0_squared, omega, v_cav, hbar=HBAR) -> float:
    """Invert the intensity mapping: N0 = E0^2 * V_cav / (8 pi hbar omega)."""
    return e0_squared * v_cav / (8.0 * math.pi * hbar * omega)

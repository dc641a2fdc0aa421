"""Classical mean-field layer: Lugiato-Lefever dynamics of the cavity
envelope, plane-wave steady states, the linearized fluctuation operator,
and the analytic dispersion of intensity fluctuations.

Physical quantities are CGS. The solver works in scaled units:

    time unit   t0 = 1/(omega |n2| E0^2)
    length unit x0 = sqrt(c t0 / 2k)
    field unit  E0

which puts the equation in the form

    dpsi/dtau = i lap psi - i s |psi|^2 psi + i delta psi
                - i V(x,y) psi - gamma (psi - psi_d)

with s = +1 for a self-defocusing medium (n2 < 0, repulsive photons)
and s = -1 for focusing. V(x, y) >= 0 is an obstacle potential
(a negative space-dependent detuning). The scaled dispersion on a
background |psi0| is Omega(K) = sqrt(K^4 + 2 s |psi0|^2 K^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.special import j0

from .constants import C_LIGHT
from .errors import ConfigError, ModelValidityError
from .grids import ComplexField, require_same_grid


# --------------------------------------------------------------------------
# parameter records
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalParams:
    """Cavity, medium and drive constants in CGS lab units."""

    wavelength: float            # cm
    cavity_length: float         # cm
    mirror_reflectivity: float   # R in (0, 1); T = 1 - R
    n2: float                    # cm^3/erg, signed; n2 < 0 = self-defocusing
    background_intensity: float  # erg s^-1 cm^-2
    detuning: float              # rad/s, omega - omega_cav
    beam_area: float             # cm^2

    def __post_init__(self):
        if self.wavelength <= 0 or self.cavity_length <= 0 or self.beam_area <= 0:
            raise ConfigError("wavelength, cavity_length and beam_area must be positive")
        if not (0.0 < self.mirror_reflectivity < 1.0):
            raise ConfigError("mirror reflectivity must lie strictly inside (0, 1)")
        if self.background_intensity < 0:
            raise ConfigError("background intensity must be >= 0")
        if self.delta_n >= 1e-2:
            raise ConfigError(
                f"nonlinear index shift delta_n = {self.delta_n:.3g} violates the "
                "weak-nonlinearity bound (< 1e-2)"
            )

    # -- derived quantities -------------------------------------------------

    @property
    def transmissivity(self) -> float:
        return 1.0 - self.mirror_reflectivity

    @property
    def loss_rate(self) -> float:
        """Cavity decay rate Gamma = c*T/(2L), 1/s."""
        return C_LIGHT * self.transmissivity / (2.0 * self.cavity_length)

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def omega(self) -> float:
        return C_LIGHT * self.wavenumber

    @property
    def e0_squared(self) -> float:
        """Background field amplitude squared, erg/cm^3.

        Uses the traveling-wave energy-density convention u = I/c,
        i.e. E0^2 = 8*pi*I/c.
        """
        return 8.0 * math.pi * self.background_intensity / C_LIGHT

    @property
    def delta_n(self) -> float:
        return abs(self.n2) * self.e0_squared

    @property
    def v_cav(self) -> float:
        return self.beam_area * self.cavity_length


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless solver constants plus the scale factors back to CGS."""

    delta: float          # scaled detuning, Delta_omega * t0
    gamma: float          # scaled loss, Gamma * t0
    drive: complex        # scaled drive amplitude psi_d
    x_scale: float        # cm per scaled length unit
    t_scale: float        # s per scaled time unit
    field_scale: float    # (erg/cm^3)^(1/2) per scaled field unit
    sign: int             # +1 defocusing, -1 focusing

    def __post_init__(self):
        if self.sign not in (+1, -1):
            raise ConfigError("sign must be +1 (defocusing) or -1 (focusing)")
        if self.x_scale <= 0 or self.t_scale <= 0 or self.field_scale <= 0:
            raise ConfigError("scale factors must be positive")
        if self.gamma < 0:
            raise ConfigError("scaled loss must be >= 0")

    # unit conversions; K and Omega convert contravariantly to x and t
    def length_to_cgs(self, x):
        return x * self.x_scale

    def length_from_cgs(self, x):
        return x / self.x_scale

    def time_to_cgs(self, t):
        return t * self.t_scale

    def time_from_cgs(self, t):
        return t / self.t_scale

    def wavenumber_to_cgs(self, k):
        return k / self.x_scale

    def wavenumber_from_cgs(self, k):
        return k * self.x_scale

    def frequency_to_cgs(self, w):
        return w / self.t_scale

    def frequency_from_cgs(self, w):
        return w * self.t_scale


def unit_scaled_params(delta=0.0, gamma=0.0, drive=0.0, sign=+1) -> ScaledParams:
    """ScaledParams for runs that are already dimensionless."""
    return ScaledParams(delta=delta, gamma=gamma, drive=drive,
                        x_scale=1.0, t_scale=1.0, field_scale=1.0, sign=sign)


def scale_parameters(params: PhysicalParams) -> ScaledParams:
    """Build the nondimensionalization contract from lab parameters.

    The scaled drive is the amplitude sustaining the unit plane wave:
    psi_d = 1 + i(s - delta)/gamma (zero when the cavity is lossless).
    """
    e0sq = params.e0_squared
    if e0sq <= 0 or params.n2 == 0:
        raise ConfigError("scaling requires a nonzero background and Kerr index")
    omega_nl = params.omega * abs(params.n2) * e0sq
    t0 = 1.0 / omega_nl
    x0 = math.sqrt(C_LIGHT * t0 / (2.0 * params.wavenumber))
    sign = +1 if params.n2 < 0 else -1
    delta = params.detuning * t0
    gamma = params.loss_rate * t0
    drive = 1.0 + 1j * (sign - delta) / gamma if gamma > 0 else 0.0
    return ScaledParams(delta=delta, gamma=gamma, drive=drive,
                        x_scale=x0, t_scale=t0,
                        field_scale=math.sqrt(e0sq), sign=sign)


@dataclass(frozen=True)
class SteadyState:
    """Plane-wave solution: real amplitude and its phase rotation rate."""

    amplitude: float      # field units, >= 0
    rotation_rate: float  # rad/s, omega*n2*E0^2 + Delta_omega

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigError("steady-state amplitude must be >= 0")


def plane_wave_state(params: PhysicalParams, allow_loss=False) -> SteadyState:
    """Nonlinear plane-wave steady state, valid when the loss is negligible.

    Refuses when the scaled loss gamma = Gamma*t0 exceeds 1e-2 unless the
    caller acknowledges with ``allow_loss=True``.
    """
    e0sq = params.e0_squared
    if e0sq > 0 and params.n2 != 0:
        gamma_scaled = params.loss_rate / (params.omega * abs(params.n2) * e0sq)
        if gamma_scaled > 1e-2 and not allow_loss:
            raise ModelValidityError(
                f"scaled loss gamma = {gamma_scaled:.3g} > 1e-2: the lossless "
                "plane-wave solution is not a valid model here "
                "(pass allow_loss=True to override)"
            )
    return SteadyState(
        amplitude=math.sqrt(e0sq),
        rotation_rate=params.omega * params.n2 * e0sq + params.detuning,
    )


# --------------------------------------------------------------------------
# dynamics definition
# --------------------------------------------------------------------------

def lle_rhs(field: ComplexField, params: ScaledParams,
            potential=None, drive_field=None) -> ComplexField:
    """Scaled Lugiato-Lefever right-hand side, d(psi)/d(tau).

    ``potential`` is an optional real (nx, ny) array acting as
    -i V(x,y) psi (an obstacle); ``drive_field`` overrides the uniform
    params.drive.
    """
    psi = field.data
    if potential is not None:
        potential = np.asarray(potential, dtype=float)
        if potential.shape != psi.shape:
            raise ConfigError(
                f"potential shape {potential.shape} does not match field {psi.shape}"
            )
    if drive_field is not None:
        require_same_grid(field, drive_field)

    lap = sfft.ifft2(-field.grid.k_squared() * sfft.fft2(psi))
    rhs = 1j * lap
    rhs += -1j * params.sign * (psi.real**2 + psi.imag**2) * psi
    rhs += 1j * params.delta * psi
    if potential is not None:
        rhs += -1j * potential * psi
    if params.gamma != 0.0:
        psi_d = drive_field.data if drive_field is not None else params.drive
        rhs += -params.gamma * (psi - psi_d)
    return ComplexField(field.grid, rhs)


def linearized_rhs(a: ComplexField, e0: float, params: ScaledParams) -> ComplexField:
    """Fluctuation equation around a real background e0 (scaled units):

        da/dtau = i lap a - i s e0^2 (a + a*)

    Real-linear but not complex-linear because of the conjugate term.
    """
    data = a.data
    lap = sfft.ifft2(-a.grid.k_squared() * sfft.fft2(data))
    nl = -1j * params.sign * e0**2 * (data + np.conj(data))
    return ComplexField(a.grid, 1j * lap + nl)


# --------------------------------------------------------------------------
# analytic dispersion
# --------------------------------------------------------------------------

def classical_dispersion(k_transverse, params: PhysicalParams):
    """Angular frequency of small intensity fluctuations at wavenumber K:

        Omega(K) = sqrt(c^2 K^2 |n2| E0^2 + c^4 K^4 / (4 omega^2))   [rad/s]
    """
    k = np.asarray(k_transverse, dtype=float)
    if np.any(k < 0):
        raise ConfigError("transverse wavenumber must be >= 0")
    c2 = C_LIGHT**2
    return np.sqrt(c2 * k**2 * params.delta_n + c2**2 * k**4 / (4.0 * params.omega**2))


def dispersion_scaled(k, psi0=1.0, sign=+1):
    """Scaled form Omega'(K') = sqrt(K'^4 + 2 s psi0^2 K'^2)."""
    k = np.asarray(k, dtype=float)
    arg = k**4 + 2.0 * sign * psi0**2 * k**2
    if np.any(arg < 0):
        raise ModelValidityError(
            "imaginary fluctuation frequency (modulational instability of the "
            "focusing branch); the fluid interpretation needs a defocusing medium"
        )
    return np.sqrt(arg)


def classical_sound_speed(params: PhysicalParams) -> float:
    """Long-wavelength phase velocity c*sqrt(|n2| E0^2), cm/s."""
    if params.n2 > 0:
        raise ModelValidityError(
            "focusing medium (n2 > 0): small-K fluctuations are modulationally "
            "unstable and no real sound speed exists"
        )
    return C_LIGHT * math.sqrt(params.delta_n)


def transition_wavelength(params: PhysicalParams) -> float:
    """Crossover transverse wavelength Lambda_c = wavelength/sqrt(delta_n)."""
    dn = params.delta_n
    if dn <= 0:
        raise ConfigError("transition wavelength undefined for delta_n = 0")
    return params.wavelength / math.sqrt(dn)


def bessel_probe(rho, t, k_transverse, params: PhysicalParams,
                 alpha=1.0, beta=0.0):
    """Cylindrical trial fluctuation alpha*J0(K rho)e^{i Omega t} +
    beta*J0(K rho)e^{-i Omega t} with Omega from classical_dispersion."""
    if k_transverse <= 0:
        raise ConfigError("probe wavenumber must be positive")
    omega = classical_dispersion(k_transverse, params)
    radial = j0(k_transverse * np.asarray(rho, dtype=float))
    t = np.asarray(t, dtype=float)
    return radial * (alpha * np.exp(1j * omega * t) + beta * np.exp(-1j * omega * t))

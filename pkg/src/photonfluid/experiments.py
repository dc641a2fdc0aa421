"""In-silico experiments on the scaled photon fluid.

Two measurement campaigns: (1) seed weak density modulations on a uniform
background, evolve, and extract the oscillation frequency per wavenumber
(the dispersion measurement); (2) flow the fluid past a cylindrical
obstacle and watch for quantized vortex shedding (the superfluidity
test). A dense eigendecomposition of the linearized fluctuation operator
on small grids serves as the independent oracle for the dispersion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from .errors import (ConfigError, DomainTooSmallError, MeasurementQualityError,
                     ModelValidityError, NumericalBlowupError, NumericalError,
                     OutOfBandError)
from .grids import ComplexField, GridSpec, uniform_field
from .meanfield import ScaledParams, dispersion_scaled, linearized_rhs, unit_scaled_params
from .solver import (RunConfig, Stepper, nearest_commensurate_speed,
                     scaled_sound_speed, speed_quantum)

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# single-frequency fitting
# --------------------------------------------------------------------------

def fit_single_frequency(times, values):
    """Least-squares fit of y(t) = C + A cos(wt) + B sin(wt).

    The frequency is seeded by the peak of a padded Hann periodogram and
    refined by minimizing the projection residual. Returns
    (omega, amplitude, residual_fraction) with residual_fraction the
    unexplained share of the demeaned signal power.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size < 8:
        raise MeasurementQualityError("too few samples for a frequency fit")
    dt = t[1] - t[0]
    y0 = y - y.mean()
    power = float(np.sum(y0**2))
    if power == 0.0:
        raise MeasurementQualityError("signal has zero power, nothing to fit")

    pad = 8
    spec = np.abs(np.fft.rfft(y0 * np.hanning(y0.size), pad * y0.size))
    freqs = TWO_PI * np.fft.rfftfreq(pad * y0.size, d=dt)
    peak = int(np.argmax(spec[1:])) + 1
    w0 = freqs[peak]
    half_bin = TWO_PI / (t[-1] - t[0])  # raw resolution

    def residual(w):
        basis = np.column_stack([np.ones_like(t), np.cos(w * t), np.sin(w * t)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        r = y - basis @ coef
        return float(np.sum(r**2))

    res = minimize_scalar(residual,
                          bounds=(max(w0 - 1.5 * half_bin, 0.25 * half_bin),
                                  w0 + 1.5 * half_bin),
                          method="bounded",
                          options={"xatol": 1e-12 * max(w0, half_bin)})
    w = float(res.x)
    basis = np.column_stack([np.ones_like(t), np.cos(w * t), np.sin(w * t)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    amp = math.hypot(coef[1], coef[2])
    return w, amp, residual(w) / power


# --------------------------------------------------------------------------
# dispersion measurement
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DispersionCurve:
    """Per-wavenumber records of the measured and analytic dispersion."""

    k: np.ndarray
    omega_measured: np.ndarray
    omega_theory: np.ndarray
    rel_err: np.ndarray
    fit_residual: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        if np.any(np.diff(k) <= 0):
            raise ConfigError("dispersion curve wavenumbers must be strictly increasing")

    @property
    def max_rel_err(self) -> float:
        return float(np.max(self.rel_err))

    def rows(self):
        for i in range(self.k.size):
            yield (self.k[i], self.omega_measured[i], self.omega_theory[i],
                   self.rel_err[i], self.fit_residual[i])


def _mode_indices(k_values, grid: GridSpec):
    """Map requested wavenumbers onto distinct x-axis grid modes."""
    base = TWO_PI / grid.lx
    indices = []
    for k in k_values:
        j = k / base
        if abs(j - round(j)) > 1e-9 * max(1.0, j):
            raise ConfigError(
                f"K = {k:g} is not commensurate with the grid (K/dK = {j:.6g}); "
                f"grid modes are multiples of {base:.6g}"
            )
        j = int(round(j))
        if not (1 <= j < grid.nx // 2):
            raise ConfigError(f"K = {k:g} (mode {j}) outside the resolvable band")
        indices.append(j)
    if len(set(indices)) != len(indices):
        raise ConfigError("requested K values collapse onto duplicate grid modes")
    return indices


def measure_dispersion(k_values, grid: GridSpec, params: ScaledParams,
                       psi0=1.0, seed_amplitude=5e-4, dt=None,
                       min_periods=6.0, residual_limit=1e-3) -> DispersionCurve:
    """Measure the intensity-fluctuation dispersion from full nonlinear runs.

    Seeds psi0*(1 + eps*sum_j cos(K_j x)) on the uniform background,
    evolves with gamma = 0 and no drive, records the K-mode amplitude of
    |psi|^2, and fits one sinusoid per mode over at least ``min_periods``
    periods of the slowest mode.
    """
    if params.gamma != 0.0:
        raise ConfigError("dispersion runs need gamma = 0 for a clean oscillation")
    if not (0 < seed_amplitude <= 1e-3):
        raise ConfigError("seed amplitude must lie in (0, 1e-3] of the background")
    k_values = np.sort(np.asarray(k_values, dtype=float))
    modes = _mode_indices(k_values, grid)

    omega_est = dispersion_scaled(k_values, psi0, params.sign)
    if dt is None:
        # splitting bias ~ (Omega dt)^2/24: 0.1 rad/step keeps it < 5e-4
        lin_bound = 0.9 * (math.pi / 4.0) / float(np.max(grid.k_squared()) + abs(params.delta))
        dt = min(lin_bound, 0.1 / float(np.max(omega_est)), 0.05 / psi0**2)
    n_steps = int(math.ceil(min_periods * TWO_PI / float(np.min(omega_est)) / dt))
    sample_every = max(1, int(math.floor(TWO_PI / float(np.max(omega_est)) / dt / 16.0)))

    x = grid.x()[:, None]
    seed = np.zeros((grid.nx, 1))
    for k in k_values:
        seed += seed_amplitude * np.cos(k * x)
    psi = (psi0 * (1.0 + seed)).astype(np.complex128) * np.ones((1, grid.ny))
    initial = ComplexField(grid, psi)

    # standing commensurate modes: wrap-around protection is moot here
    config = RunConfig(dt=dt, n_steps=n_steps, snapshot_every=n_steps,
                       params=params, initial=initial, validate_domain=False)
    stepper = Stepper(config)
    psi = initial.data.copy()

    times = []
    signal = [[] for _ in modes]

    def sample(step_index):
        times.append(step_index * dt)
        dens_profile = np.mean(psi.real**2 + psi.imag**2, axis=1)
        spectrum = np.fft.rfft(dens_profile)
        for row, j in zip(signal, modes):
            row.append(2.0 * spectrum[j].real / grid.nx)

    sample(0)
    for n in range(1, n_steps + 1):
        psi = stepper.advance(psi, (n - 1) * dt)
        if n % sample_every == 0:
            if not np.isfinite(psi[0, 0]):
                raise NumericalBlowupError(f"non-finite field at step {n}", step_index=n)
            sample(n)

    times = np.asarray(times)
    measured = np.empty_like(k_values)
    residuals = np.empty_like(k_values)
    for i, row in enumerate(signal):
        w, _, resid = fit_single_frequency(times, np.asarray(row))
        if resid > residual_limit:
            raise MeasurementQualityError(
                f"fit residual {resid:.3g} at K = {k_values[i]:g} exceeds "
                f"{residual_limit:g} of signal power; adjust dt or the window"
            )
        measured[i] = w
        residuals[i] = resid

    theory = dispersion_scaled(k_values, psi0, params.sign)
    rel = np.abs(measured - theory) / theory
    return DispersionCurve(k=k_values, omega_measured=measured,
                           omega_theory=theory, rel_err=rel,
                           fit_residual=residuals)


# --------------------------------------------------------------------------
# dense operator oracle
# --------------------------------------------------------------------------

def dense_bdg_oracle(grid: GridSpec, psi0=1.0,
                     params: Optional[ScaledParams] = None) -> np.ndarray:
    """Spectrum of the linearized fluctuation operator, assembled densely.

    Builds the real-linear operator da/dtau = i lap a - i s psi0^2 (a + a*)
    on the doubled (a, a*) basis, one column per grid point, and returns
    the sorted frequencies i*lambda (the +/-Omega(K) pairs).
    """
    if params is None:
        params = unit_scaled_params()
    if params.sign != +1:
        raise ModelValidityError("the dense oracle covers the defocusing branch only")
    n_modes = grid.nx * grid.ny
    if n_modes > 32 * 32:
        raise ConfigError("oracle grids are limited to 32x32 (dense eigensolve)")

    a_block = np.empty((n_modes, n_modes), dtype=np.complex128)
    b_block = np.empty_like(a_block)
    basis = np.zeros((grid.nx, grid.ny), dtype=np.complex128)
    for j in range(n_modes):
        basis.flat[j] = 1.0
        l_real = linearized_rhs(ComplexField(grid, basis), psi0, params).data.ravel()
        basis.flat[j] = 1j
        l_imag = linearized_rhs(ComplexField(grid, basis), psi0, params).data.ravel()
        basis.flat[j] = 0.0
        a_block[:, j] = 0.5 * (l_real - 1j * l_imag)
        b_block[:, j] = 0.5 * (l_real + 1j * l_imag)

    doubled = np.block([[a_block, b_block],
                        [np.conj(b_block), np.conj(a_block)]])
    lam = scipy.linalg.eigvals(doubled)
    omega = np.real(1j * lam)
    growth = np.imag(1j * lam)
    scale = max(float(np.max(np.abs(omega))), 1.0)
    if float(np.max(np.abs(growth))) > 1e-8 * scale:
        raise NumericalError(
            f"oracle spectrum is not purely oscillatory: max growth rate "
            f"{np.max(np.abs(growth)):.3g}"
        )
    return np.sort(omega)


def oracle_expected_spectrum(grid: GridSpec, psi0=1.0) -> np.ndarray:
    """Closed-form +/-Omega(K) over every grid mode, sorted."""
    k = np.sqrt(grid.k_squared()).ravel()
    omega = dispersion_scaled(k, psi0)
    return np.sort(np.concatenate([omega, -omega]))


# --------------------------------------------------------------------------
# vortex detection
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VortexSet:
    """Detected vortices at one instant: positions and integer charges."""

    time: float
    x: np.ndarray
    y: np.ndarray
    charge: np.ndarray

    def __post_init__(self):
        if np.any(self.charge == 0):
            raise NumericalError("vortex charges must be nonzero integers")

    def __len__(self):
        return self.charge.size

    @property
    def total_charge(self) -> int:
        return int(np.sum(self.charge))


def _principal_value(d):
    return np.mod(d + math.pi, TWO_PI) - math.pi


def plaquette_windings(field: ComplexField) -> np.ndarray:
    """Phase winding (radians) around each elementary cell, periodic."""
    phase = np.angle(field.data)
    dpx = _principal_value(np.roll(phase, -1, axis=0) - phase)
    dpy = _principal_value(np.roll(phase, -1, axis=1) - phase)
    return dpx + np.roll(dpy, -1, axis=0) - np.roll(dpx, -1, axis=1) - dpy


def detect_vortices(field: ComplexField, time=0.0, mask=None) -> VortexSet:
    """Quantized vortices as plaquettes with +/-2 pi (or multiple) winding.

    ``mask`` marks plaquettes to exclude (e.g. an obstacle interior where
    the density is negligible and the phase is undefined); positions are
    plaquette centers.
    """
    vortex_set, _ = _detect_split(field, time, mask)
    return vortex_set


def _detect_split(field: ComplexField, time, mask):
    """Masked vortex set plus the integer charge hidden inside the mask."""
    w = plaquette_windings(field)
    charge = np.rint(w / TWO_PI).astype(int)
    hidden = 0
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        hidden = int(charge[mask].sum())
        charge = np.where(mask, 0, charge)
    ix, iy = np.nonzero(charge)
    grid = field.grid
    return VortexSet(
        time=time,
        x=(ix + 0.5) * grid.dx,
        y=(iy + 0.5) * grid.dy,
        charge=charge[ix, iy],
    ), hidden


def region_boundary_winding(field: ComplexField, i0, i1, j0, j1) -> int:
    """Integer phase winding around the rectangle of plaquettes
    [i0, i1) x [j0, j1), counter-clockwise."""
    total = float(np.sum(plaquette_windings(field)[i0:i1, j0:j1]))
    return int(round(total / TWO_PI))


# --------------------------------------------------------------------------
# obstacle flow
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ObstacleSpec:
    """Super-Gaussian cylinder exp(-(r/radius)^8) of the given height,
    modeled as a static repulsive detuning shift."""

    radius: float                      # scaled length units
    height: float                      # units of the background mu = psi0^2
    center: Optional[tuple] = None     # defaults to the domain center

    def __post_init__(self):
        if self.radius <= 0 or self.height <= 0:
            raise ConfigError("obstacle radius and height must be positive")

    def position(self, grid: GridSpec):
        return self.center if self.center is not None else (grid.lx / 2.0, grid.ly / 2.0)

    def _min_image(self, grid: GridSpec):
        x0, y0 = self.position(grid)
        dx = grid.x()[:, None] - x0
        dy = grid.y()[None, :] - y0
        dx -= grid.lx * np.round(dx / grid.lx)
        dy -= grid.ly * np.round(dy / grid.ly)
        return dx, dy

    def potential(self, grid: GridSpec) -> np.ndarray:
        dx, dy = self._min_image(grid)
        r2 = dx**2 + dy**2
        return self.height * np.exp(-((r2 / self.radius**2) ** 4))

    def potential_gradient(self, grid: GridSpec):
        dx, dy = self._min_image(grid)
        r2 = dx**2 + dy**2
        v = self.height * np.exp(-((r2 / self.radius**2) ** 4))
        common = -8.0 * (r2**3) / self.radius**8 * v
        return common * dx, common * dy

    def interior_mask(self, grid: GridSpec, margin=1.2) -> np.ndarray:
        dx, dy = self._min_image(grid)
        return dx**2 + dy**2 < (margin * self.radius) ** 2


@dataclass
class ObstacleFlowResult:
    """Vortex-set time series plus drag diagnostics from one flow run."""

    speed_ratio: float            # actual (snapped) v/v_s of the run
    requested_speed: float
    window: float                 # observation window in scaled time
    times: np.ndarray
    vortex_sets: list             # visible (mask-excluded) vortices
    interior_charge: np.ndarray   # integer charge hidden inside the mask
    drag: np.ndarray              # (n, 2) force on the obstacle
    first_shedding_time: Optional[float]
    stopped_early: bool
    final: ComplexField = dc_field(repr=False, default=None)

    @property
    def sheds(self) -> bool:
        return self.first_shedding_time is not None

    @property
    def max_vortex_count(self) -> int:
        return max((len(v) for v in self.vortex_sets), default=0)

    def total_charges(self) -> np.ndarray:
        """Visible plus mask-interior charge per snapshot (exactly zero on
        the torus: vortices only ever appear in +/- pairs)."""
        visible = np.asarray([v.total_charge for v in self.vortex_sets], dtype=int)
        return visible + self.interior_charge


def obstacle_flow_experiment(speed_ratio, obstacle: ObstacleSpec, duration,
                             grid: GridSpec, params: ScaledParams, psi0=1.0,
                             dt=None, ramp_time=10.0, snapshot_interval=1.0,
                             stop_after_shedding=False,
                             detection_mask="auto") -> ObstacleFlowResult:
    """Flow the fluid past the obstacle and record vortex sets and drag.

    The obstacle potential ramps on smoothly over ``ramp_time`` (about ten
    healing times) to avoid shock transients. The obstacle interior (where
    the density is exponentially small and plaquette windings are noise)
    is masked from the reported sets by default; the integer charge hidden
    there is tracked separately so total-charge conservation stays exact.
    """
    if params.gamma != 0.0:
        raise ConfigError("obstacle runs are lossless: gamma must be 0")
    xi = 1.0 / psi0  # healing length of the scaled fluid
    if obstacle.radius < 4.0 * max(grid.dx, grid.dy) or obstacle.radius < xi:
        raise ConfigError(
            f"obstacle radius {obstacle.radius:g} must cover >= 4 cells and "
            f">= the healing length {xi:g}"
        )
    if min(grid.lx, grid.ly) < 16.0 * obstacle.radius:
        raise ConfigError("domain must span at least 16 obstacle radii")

    speed_actual, winding = nearest_commensurate_speed(grid, speed_ratio, psi0)
    if speed_ratio > 0 and winding == 0:
        raise ConfigError(
            f"speed ratio {speed_ratio:g} is below the grid's speed quantum "
            f"{speed_quantum(grid, psi0):g}"
        )
    if isinstance(detection_mask, str) and detection_mask == "auto":
        detection_mask = obstacle.interior_mask(grid)
    k_flow = TWO_PI * winding / grid.lx
    x = grid.x()[:, None]
    initial = ComplexField(
        grid, psi0 * np.exp(1j * k_flow * x) * np.ones((1, grid.ny)))

    potential = obstacle.potential(grid) * psi0**2  # height is in units of mu
    if dt is None:
        lin_max = float(np.max(grid.k_squared()) + abs(params.delta))
        dt = 0.8 * (math.pi / 4.0) / lin_max
    config = RunConfig(dt=dt, n_steps=1, snapshot_every=1, params=params,
                       initial=initial, potential=potential)

    def ramp(tau):
        if tau >= ramp_time:
            return 1.0
        return math.sin(0.5 * math.pi * tau / ramp_time) ** 2

    stepper = Stepper(config, potential_ramp=ramp)
    gx, gy = obstacle.potential_gradient(grid)
    gx = gx * psi0**2
    gy = gy * psi0**2

    n_steps = int(math.ceil(duration / dt))
    every = max(1, int(round(snapshot_interval / dt)))
    psi = initial.data.copy()

    times, sets, drag, hidden = [], [], [], []
    first_shedding = None
    consecutive = 0
    stopped = False

    def snapshot(step_index):
        nonlocal first_shedding, consecutive
        tau = step_index * dt
        f = ComplexField(grid, psi.copy())
        vs, interior = _detect_split(f, tau, detection_mask)
        dens = psi.real**2 + psi.imag**2
        scale = ramp(tau) * grid.cell_area
        times.append(tau)
        sets.append(vs)
        hidden.append(interior)
        drag.append((scale * float(np.sum(dens * gx)),
                     scale * float(np.sum(dens * gy))))
        if len(vs) > 0:
            consecutive += 1
            if consecutive >= 2 and first_shedding is None:
                first_shedding = tau
        else:
            consecutive = 0

    snapshot(0)
    for n in range(1, n_steps + 1):
        psi = stepper.advance(psi, (n - 1) * dt)
        if n % every == 0 or n == n_steps:
            if not np.all(np.isfinite(psi.view(np.float64))):
                raise NumericalBlowupError(f"non-finite field at step {n}",
                                           step_index=n)
            snapshot(n)
            if stop_after_shedding and first_shedding is not None:
                stopped = n < n_steps
                break

    return ObstacleFlowResult(
        speed_ratio=speed_actual,
        requested_speed=speed_ratio,
        window=duration,
        times=np.asarray(times),
        vortex_sets=sets,
        interior_charge=np.asarray(hidden, dtype=int),
        drag=np.asarray(drag),
        first_shedding_time=first_shedding,
        stopped_early=stopped,
        final=ComplexField(grid, psi),
    )


def vortex_core_radius(field: ComplexField, x0, y0, psi0=1.0, r_max=None):
    """Radius at which the azimuthally averaged |psi| around (x0, y0)
    recovers to psi0/sqrt(2), by linear interpolation between annuli."""
    grid = field.grid
    dx = grid.x()[:, None] - x0
    dy = grid.y()[None, :] - y0
    dx -= grid.lx * np.round(dx / grid.lx)
    dy -= grid.ly * np.round(dy / grid.ly)
    r = np.sqrt(dx**2 + dy**2)
    amp = np.abs(field.data)
    target = psi0 / math.sqrt(2.0)
    if r_max is None:
        r_max = 8.0 / psi0
    width = max(grid.dx, grid.dy)
    edges = np.arange(0.0, r_max, width)
    means = []
    for lo in edges:
        sel = (r >= lo) & (r < lo + width)
        if not np.any(sel):
            means.append(np.nan)
            continue
        means.append(float(np.mean(amp[sel])))
    means = np.asarray(means)
    centers = edges + 0.5 * width
    for i in range(1, means.size):
        if np.isnan(means[i - 1]) or np.isnan(means[i]):
            continue
        if means[i - 1] < target <= means[i]:
            frac = (target - means[i - 1]) / (means[i] - means[i - 1])
            return float(centers[i - 1] + frac * (centers[i] - centers[i - 1]))
    raise MeasurementQualityError(
        f"|psi| does not recover to psi0/sqrt(2) within r = {r_max:g}"
    )


# --------------------------------------------------------------------------
# critical velocity scan
# --------------------------------------------------------------------------

class BracketError(MeasurementQualityError):
    """The shedding predicate does not flip across the starting bracket."""


@dataclass(frozen=True)
class CriticalVelocityResult:
    """Bisection bracket for the onset of vortex shedding."""

    v_lower: float
    v_upper: float
    first_shedding_time: float       # at v_upper
    vortex_counts: dict              # speed ratio -> max detected count
    window: float
    tested: tuple                    # (speed, sheds, first_time) per run
    runs: dict = dc_field(default_factory=dict, repr=False)  # speed -> result

    def __post_init__(self):
        if not (0.0 < self.v_lower < self.v_upper <= 1.5):
            raise NumericalError(
                f"bracket ({self.v_lower:g}, {self.v_upper:g}) violates "
                "0 < v_lower < v_upper <= 1.5"
            )


def critical_velocity_scan(obstacle: ObstacleSpec, grid: GridSpec,
                           params: ScaledParams, window=200.0, psi0=1.0,
                           bracket=(0.1, 1.5), max_bisections=8,
                           **run_kwargs) -> CriticalVelocityResult:
    """Bisect the commensurate speed ladder on "any vortex within window".

    Subcritical runs go the full window; shedding runs stop early once
    the detection is confirmed. Bisection continues until the bracket is
    one speed quantum wide or ``max_bisections`` midpoints were tested.
    """
    quantum = speed_quantum(grid, psi0)
    results = {}

    def probe(ratio):
        _, winding = nearest_commensurate_speed(grid, ratio, psi0)
        if winding in results:
            return results[winding]
        res = obstacle_flow_experiment(
            ratio, obstacle, window, grid, params, psi0=psi0,
            stop_after_shedding=True, **run_kwargs)
        results[winding] = res
        return res

    lo_res = probe(bracket[0])
    if lo_res.sheds:
        raise BracketError(
            f"vortices already shed at the lower bracket v/v_s = "
            f"{lo_res.speed_ratio:g} (first at tau = {lo_res.first_shedding_time:g}); "
            "no subcritical regime found in the bracket"
        )
    hi_res = probe(bracket[1])
    if not hi_res.sheds:
        raise BracketError(
            f"no vortices within tau = {window:g} at the upper bracket "
            f"v/v_s = {hi_res.speed_ratio:g}; obstacle too weak or window too short"
        )

    lo_n = round(lo_res.speed_ratio / quantum)
    hi_n = round(hi_res.speed_ratio / quantum)
    for _ in range(max_bisections):
        if hi_n - lo_n <= 1:
            break
        mid_n = (lo_n + hi_n) // 2
        mid = probe(mid_n * quantum)
        if mid.sheds:
            hi_n = mid_n
        else:
            lo_n = mid_n

    v_lower = lo_n * quantum
    v_upper = hi_n * quantum
    upper_res = results[hi_n]
    return CriticalVelocityResult(
        v_lower=v_lower,
        v_upper=v_upper,
        first_shedding_time=upper_res.first_shedding_time,
        vortex_counts={r.speed_ratio: r.max_vortex_count for r in results.values()},
        window=window,
        tested=tuple((r.speed_ratio, r.sheds, r.first_shedding_time)
                     for r in sorted(results.values(), key=lambda r: r.speed_ratio)),
        runs={r.speed_ratio: r for r in results.values()},
    )


# --------------------------------------------------------------------------
# point-source sound probe
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeResult:
    """Radial wavenumber extracted from a point-driven sound field."""

    omega_mod: float
    k_measured: float
    omega_at_k_measured: float     # dispersion evaluated at k_measured
    rel_err: float                 # |omega(k_meas) - omega_mod| / omega_mod
    radii: np.ndarray
    phase: np.ndarray              # unwrapped demodulated phase along the scan


def invert_dispersion(omega, psi0=1.0) -> float:
    """Scalar inverse K(Omega) of the scaled dispersion by bisection."""
    if omega <= 0:
        raise ConfigError("omega must be positive")
    lo, hi = 0.0, max(1.0, math.sqrt(omega))
    while dispersion_scaled(hi, psi0) < omega:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dispersion_scaled(mid, psi0) < omega:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sound_wave_probe(modulation_freq, source_pos, grid: GridSpec,
                     params: ScaledParams, psi0=1.0, source_amplitude=2e-3,
                     dt=None, settle_periods=None, demod_periods=4,
                     boundary_energy_limit=1e-2) -> ProbeResult:
    """Drive the fluid at one point, modulated at ``modulation_freq``, and
    measure the radial wavenumber of the outgoing density ripples.

    Needs a damped, driven background (gamma > 0 with delta = s*psi0^2 and
    unit drive keeps psi0 stationary) so the ripples decay before wrapping
    around the torus. The wavenumber is the weighted slope of the
    demodulated |psi|^2 phase along a transverse scan from the source.
    """
    omega_mod = float(modulation_freq)
    if omega_mod <= 0:
        raise ConfigError("modulation frequency must be positive")
    k_grid_limit = 0.5 * math.pi / max(grid.dx, grid.dy)
    if omega_mod >= dispersion_scaled(k_grid_limit, psi0):
        raise ConfigError(
            f"modulation frequency {omega_mod:g} is beyond the grid "
            "resolution limit"
        )
    k_expected = invert_dispersion(omega_mod, psi0)
    if TWO_PI / k_expected > grid.lx / 4.0:
        raise OutOfBandError(
            f"expected ripple wavelength {TWO_PI / k_expected:.3g} exceeds a "
            f"quarter of the domain ({grid.lx / 4.0:.3g}); frequency out of band"
        )
    if params.gamma <= 0:
        raise ConfigError(
            "the probe needs gamma > 0 so ripples decay before wrap-around"
        )

    period = TWO_PI / omega_mod
    if dt is None:
        lin_max = float(np.max(grid.k_squared()) + abs(params.delta))
        dt = 0.8 * (math.pi / 4.0) / lin_max
    steps_per_period = int(math.ceil(period / dt))
    dt = period / steps_per_period

    # quasi-steady once the slowest front has crossed and transients decayed
    group_speed = scaled_sound_speed(psi0) * 0.9
    if settle_periods is None:
        settle_time = 0.8 * grid.lx / group_speed + 3.0 / params.gamma
        settle_periods = int(math.ceil(settle_time / period))
    n_settle = settle_periods * steps_per_period
    n_demod = demod_periods * steps_per_period

    x0, y0 = source_pos
    ix0 = int(round(x0 / grid.dx)) % grid.nx
    iy0 = int(round(y0 / grid.dy)) % grid.ny
    dxv = grid.x()[:, None] - ix0 * grid.dx
    dyv = grid.y()[None, :] - iy0 * grid.dy
    dxv -= grid.lx * np.round(dxv / grid.lx)
    dyv -= grid.ly * np.round(dyv / grid.ly)
    sigma = max(grid.dx, grid.dy)
    source = np.exp(-(dxv**2 + dyv**2) / (2.0 * sigma**2))

    initial = uniform_field(grid, psi0)
    config = RunConfig(dt=dt, n_steps=1, snapshot_every=1, params=params,
                       initial=initial)
    stepper = Stepper(config)
    psi = initial.data.copy()
    inject = dt * params.gamma * source_amplitude * source

    demod = np.zeros_like(psi)
    n_total = n_settle + n_demod
    for n in range(n_total):
        tau_mid = (n + 0.5) * dt
        psi = stepper.advance(psi, n * dt)
        psi += inject * math.cos(omega_mod * tau_mid)
        if n >= n_settle:
            tau = (n + 1) * dt
            dens = psi.real**2 + psi.imag**2
            demod += dens * np.exp(1j * omega_mod * tau)
        if n % 1024 == 0 and not np.isfinite(psi[0, 0]):
            raise NumericalBlowupError(f"non-finite field at step {n}", step_index=n)
    demod *= dt

    # wrap-around check: response energy on the domain boundary vs peak
    mag2 = demod.real**2 + demod.imag**2
    boundary = max(float(mag2[0, :].max()), float(mag2[-1, :].max()),
                   float(mag2[:, 0].max()), float(mag2[:, -1].max()))
    if boundary > boundary_energy_limit * float(mag2.max()):
        raise DomainTooSmallError(
            f"demodulated energy at the boundary is {boundary / mag2.max():.3g} "
            "of the peak (> limit); enlarge the domain or increase gamma"
        )

    # transverse scan from the source along +x
    n_scan = grid.nx // 2 - 2
    idx = (ix0 + 1 + np.arange(n_scan)) % grid.nx
    scan = demod[idx, iy0]
    radii = (1 + np.arange(n_scan)) * grid.dx
    phase = np.unwrap(np.angle(scan))
    weight = np.abs(scan)

    # far-field fit window: K r >= 6 using a crude slope bootstrap; the
    # amplitude floor is relative to the far field itself (the near-source
    # peak would otherwise shadow heavily damped scans)
    k_boot = max((phase[-1] - phase[0]) / (radii[-1] - radii[0]), 1e-6)
    r_min = 6.0 / k_boot
    far = radii >= r_min
    if not np.any(far):
        raise MeasurementQualityError(
            "scan line too short to reach the far field; domain too small "
            "for this modulation frequency"
        )
    sel = far & (weight >= 0.02 * weight[far].max())
    if np.count_nonzero(sel) < 8:
        raise MeasurementQualityError(
            "too few usable scan points in the far field; domain too small "
            "for this modulation frequency"
        )
    wsel = weight[sel]
    coeffs = np.polyfit(radii[sel], phase[sel], 1, w=wsel)
    k_measured = float(coeffs[0])
    if k_measured <= 0:
        raise MeasurementQualityError("non-positive phase slope along the scan")

    omega_at_k = float(dispersion_scaled(k_measured, psi0))
    return ProbeResult(
        omega_mod=omega_mod,
        k_measured=k_measured,
        omega_at_k_measured=omega_at_k,
        rel_err=abs(omega_at_k - omega_mod) / omega_mod,
        radii=radii,
        phase=phase,
    )

import math

import numpy as np
import pytest

from photonfluid import _fft
from photonfluid.errors import (CommensurabilityError, ConfigError,
                                GridMismatchError, NumericalBlowupError)
from photonfluid.grids import ComplexField, GridSpec, uniform_field
from photonfluid.meanfield import unit_scaled_params
from photonfluid.solver import (RunConfig, Stepper, energy, flowing_background,
                                nearest_commensurate_speed, run, speed_quantum,
                                step)


def perturbed_field(grid, amplitude=0.05):
    x, y = grid.meshgrid()
    psi = (1.0 + amplitude * np.cos(3 * 2 * np.pi * x / grid.lx)
           * np.cos(2 * 2 * np.pi * y / grid.ly)
           + 0.6 * amplitude * np.cos(5 * 2 * np.pi * x / grid.lx))
    return ComplexField(grid, psi.astype(complex))


class TestGridSpec:
    def test_power_of_two_required(self):
        with pytest.raises(ConfigError):
            GridSpec(48, 64, 10.0, 10.0)
        with pytest.raises(ConfigError):
            GridSpec(8, 64, 10.0, 10.0)

    def test_wavenumber_grid(self):
        grid = GridSpec(64, 32, 16.0, 8.0)
        assert grid.dx == pytest.approx(0.25)
        assert grid.k_max == pytest.approx(math.pi / 0.25)
        assert grid.kx()[1] == pytest.approx(2 * math.pi / 16.0)

    def test_field_validation(self):
        grid = GridSpec(16, 16, 4.0, 4.0)
        with pytest.raises(GridMismatchError):
            ComplexField(grid, np.zeros((16, 8), complex))
        bad = np.zeros((16, 16), complex)
        bad[3, 3] = np.nan
        with pytest.raises(NumericalBlowupError):
            ComplexField(grid, bad)


class TestRunConfigValidation:
    def test_linear_phase_bound(self):
        grid = GridSpec(64, 64, 40.0, 40.0)
        with pytest.raises(ConfigError, match="linear phase"):
            RunConfig(dt=0.1, n_steps=10, snapshot_every=10,
                      params=unit_scaled_params(), initial=uniform_field(grid, 1.0))

    def test_nonlinear_phase_bound(self):
        grid = GridSpec(64, 64, 400.0, 400.0)
        with pytest.raises(ConfigError, match="psi"):
            RunConfig(dt=5e-3, n_steps=10, snapshot_every=10,
                      params=unit_scaled_params(),
                      initial=uniform_field(grid, 6.0))

    def test_domain_size_guard(self):
        grid = GridSpec(16, 16, 10.0, 10.0)
        with pytest.raises(ConfigError, match="healing"):
            RunConfig(dt=1e-4, n_steps=10, snapshot_every=10,
                      params=unit_scaled_params(), initial=uniform_field(grid, 1.0))
        RunConfig(dt=1e-4, n_steps=10, snapshot_every=10,
                  params=unit_scaled_params(), initial=uniform_field(grid, 1.0),
                  validate_domain=False)


class TestStepAccuracy:
    def test_plane_wave_phase(self):
        grid = GridSpec(64, 64, 40.0, 40.0)
        cfg = RunConfig(dt=1e-3, n_steps=1000, snapshot_every=1000,
                        params=unit_scaled_params(),
                        initial=uniform_field(grid, 1.0))
        final = run(cfg, keep_fields=False).final
        assert np.abs(final.data - np.exp(-1j)).max() <= 1e-10

    def test_drive_loss_relaxation(self):
        # linear filling toward psi_d at rate gamma (tiny drive so the
        # Kerr phase stays negligible)
        grid = GridSpec(16, 16, 10.0, 10.0)
        gamma, psi_d = 0.5, 1e-3
        cfg = RunConfig(dt=2e-3, n_steps=4000, snapshot_every=4000,
                        params=unit_scaled_params(gamma=gamma, drive=psi_d),
                        initial=uniform_field(grid, 0.0))
        final = run(cfg, keep_fields=False).final
        tau = 4000 * 2e-3
        expected = psi_d * (1.0 - math.exp(-gamma * tau))
        assert np.abs(final.data - expected).max() <= 1e-5 * psi_d

    def test_gaussian_diffraction_width(self):
        # |psi|^2 width obeys w^2(tau) = s0^2 + 4 tau^2 / s0^2
        grid = GridSpec(64, 64, 40.0, 40.0)
        x, y = grid.meshgrid()
        s0 = 3.0
        r2 = (x - 20.0) ** 2 + (y - 20.0) ** 2
        psi = 1e-4 * np.exp(-r2 / (2 * s0**2))
        cfg = RunConfig(dt=2e-3, n_steps=1000, snapshot_every=1000,
                        params=unit_scaled_params(),
                        initial=ComplexField(grid, psi.astype(complex)),
                        validate_domain=False)
        final = run(cfg, keep_fields=False).final
        tau = 2.0
        dens = np.abs(final.data) ** 2
        var = float(np.sum(((x - 20.0) ** 2) * dens) / np.sum(dens))
        expected = 0.5 * (s0**2 + 4 * tau**2 / s0**2)
        assert var == pytest.approx(expected, rel=1e-6)

    def test_single_mode_spectral_exactness(self):
        grid = GridSpec(32, 32, 16.0, 16.0)
        k = 2 * math.pi * 3 / grid.lx
        eps = 1e-8
        x = grid.x()[:, None]
        initial = ComplexField(grid, eps * np.exp(1j * k * x) * np.ones((1, grid.ny)))
        delta = 0.3
        cfg = RunConfig(dt=1e-3, n_steps=500, snapshot_every=500,
                        params=unit_scaled_params(delta=delta),
                        initial=initial, validate_domain=False)
        final = run(cfg, keep_fields=False).final
        tau = 0.5
        # uniform |psi|^2 = eps^2 rotates exactly too
        expected = initial.data * np.exp(1j * (delta - k**2 - eps**2) * tau)
        assert np.abs(final.data - expected).max() <= 1e-13 * eps


class TestConservation:
    def test_norm_and_energy(self):
        grid = GridSpec(64, 64, 40.0, 40.0)
        cfg = RunConfig(dt=1e-3, n_steps=10000, snapshot_every=2000,
                        params=unit_scaled_params(),
                        initial=perturbed_field(grid))
        traj = run(cfg, keep_fields=False)
        norm_drift = np.abs(traj.norms - traj.norms[0]).max() / traj.norms[0]
        energy_drift = (np.abs(traj.energies - traj.energies[0]).max()
                        / abs(traj.energies[0]))
        assert norm_drift <= 1e-10
        assert energy_drift <= 1e-6

    def test_second_order_in_dt(self):
        grid = GridSpec(64, 64, 40.0, 40.0)
        drifts = []
        for dt, steps in ((1e-3, 10000), (5e-4, 20000)):
            cfg = RunConfig(dt=dt, n_steps=steps, snapshot_every=steps,
                            params=unit_scaled_params(),
                            initial=perturbed_field(grid))
            traj = run(cfg, keep_fields=False)
            drifts.append(np.abs(traj.energies - traj.energies[0]).max()
                          / abs(traj.energies[0]))
        ratio = drifts[0] / drifts[1]
        assert 2.5 <= ratio <= 6.0

    def test_translation_equivariance(self):
        grid = GridSpec(64, 64, 40.0, 40.0)
        base = perturbed_field(grid)
        shifted = ComplexField(grid, np.roll(base.data, (5, 3), axis=(0, 1)))
        cfg = dict(dt=1e-3, n_steps=200, snapshot_every=200,
                   params=unit_scaled_params())
        final_a = run(RunConfig(initial=base, **cfg), keep_fields=False).final
        final_b = run(RunConfig(initial=shifted, **cfg), keep_fields=False).final
        rolled = np.roll(final_a.data, (5, 3), axis=(0, 1))
        assert np.abs(final_b.data - rolled).max() <= 1e-12

    def test_deterministic_reruns_and_worker_independence(self):
        grid = GridSpec(64, 64, 40.0, 40.0)
        cfg = dict(dt=1e-3, n_steps=100, snapshot_every=100,
                   params=unit_scaled_params())
        a = run(RunConfig(initial=perturbed_field(grid), **cfg), keep_fields=False)
        b = run(RunConfig(initial=perturbed_field(grid), **cfg), keep_fields=False)
        assert np.array_equal(a.final.data, b.final.data)
        try:
            _fft.set_workers(2)
            c = run(RunConfig(initial=perturbed_field(grid), **cfg),
                    keep_fields=False)
        finally:
            _fft.set_workers(1)
        scale = np.abs(a.final.data).max()
        assert np.abs(c.final.data - a.final.data).max() <= 1e-12 * scale


class TestGalileanCovariance:
    def test_comoving_obstacle_matches_boosted_static_run(self):
        # run A: fluid flowing at w past a static bump; run B: static fluid,
        # bump drifting at -w. A equals the boost of B:
        #   psi_A(x, t) = psi_B(x - w t, t) * exp(i(w x / 2 - w^2 t / 4))
        grid = GridSpec(64, 64, 40.0, 40.0)
        params = unit_scaled_params()
        winding = 2
        w = 2.0 * (2 * math.pi * winding / grid.lx)
        cells = 8
        tau_final = cells * grid.dx / w
        n_steps = 2000
        dt = tau_final / n_steps

        x, y = grid.meshgrid()
        r2 = (x - 20.0) ** 2 + (y - 20.0) ** 2
        # smooth bump: its band-limited translation matches the samples
        bump = 0.4 * np.exp(-r2 / (2 * 2.0**2))

        flow = flowing_background(grid, w / math.sqrt(2.0))
        run_a = run(RunConfig(dt=dt, n_steps=n_steps, snapshot_every=n_steps,
                              params=params, initial=flow, potential=bump),
                    keep_fields=False)
        run_b = run(RunConfig(dt=dt, n_steps=n_steps, snapshot_every=n_steps,
                              params=params, initial=uniform_field(grid, 1.0),
                              potential=bump, potential_drift=(-w, 0.0)),
                    keep_fields=False)

        boost = np.exp(1j * (w * x / 2.0 - w**2 * tau_final / 4.0))
        boosted_b = np.roll(run_b.final.data, cells, axis=0) * boost
        assert np.abs(run_a.final.data - boosted_b).max() <= 1e-6


class TestBlowupPolicy:
    def test_nan_detection_names_step(self):
        grid = GridSpec(16, 16, 40.0, 40.0)
        pot = np.zeros((16, 16))
        pot[3, 3] = np.inf  # cos(inf) -> nan in the phase rotation
        cfg = RunConfig(dt=1e-3, n_steps=100, snapshot_every=100,
                        params=unit_scaled_params(),
                        initial=uniform_field(grid, 1.0), potential=pot)
        with pytest.raises(NumericalBlowupError) as err:
            run(cfg)
        assert err.value.step_index is not None


def test_dealias_mask_clears_spectral_tail():
    grid = GridSpec(32, 32, 16.0, 16.0)
    rng = np.random.default_rng(9)
    # near-linear amplitude: the trailing phase half-step cannot repopulate
    # the masked band above the assertion level
    noisy = ComplexField(grid, 1e-6 * (rng.standard_normal((32, 32))
                                       + 1j * rng.standard_normal((32, 32))))
    cfg = RunConfig(dt=1e-3, n_steps=1, snapshot_every=1,
                    params=unit_scaled_params(), initial=noisy,
                    validate_domain=False, dealias=True)
    advanced = step(noisy, cfg)
    spec = np.fft.fft2(advanced.data)
    kx = np.abs(grid.kx())[:, None]
    ky = np.abs(grid.ky())[None, :]
    killed = (kx > (2.0 / 3.0) * kx.max()) | (ky > (2.0 / 3.0) * ky.max())
    assert np.abs(spec[killed]).max() <= 1e-12 * np.abs(spec).max()


class TestFlowingBackground:
    def test_zero_speed_uniform(self):
        grid = GridSpec(32, 32, 20.0, 20.0)
        f = flowing_background(grid, 0.0)
        assert np.allclose(f.data, 1.0)

    def test_phase_winding_integer(self):
        grid = GridSpec(64, 64, 20 * math.sqrt(2) * math.pi, 20 * math.sqrt(2) * math.pi)
        f = flowing_background(grid, 0.3)
        phase = np.angle(f.data[:, 0])
        total = np.sum(np.mod(np.diff(np.concatenate([phase, phase[:1]]))
                              + math.pi, 2 * math.pi) - math.pi)
        assert total / (2 * math.pi) == pytest.approx(3, abs=1e-9)

    def test_phase_gradient_velocity(self):
        grid = GridSpec(64, 64, 20 * math.sqrt(2) * math.pi, 20 * math.sqrt(2) * math.pi)
        ratio = 0.5
        f = flowing_background(grid, ratio)
        dphi = np.angle(f.data[1, 0] / f.data[0, 0])
        velocity = 2.0 * dphi / grid.dx
        measured_ratio = velocity / math.sqrt(2.0)
        assert abs(measured_ratio - ratio) <= speed_quantum(grid)

    def test_incommensurate_rejected_with_suggestion(self):
        grid = GridSpec(32, 32, 20.0, 20.0)
        with pytest.raises(CommensurabilityError) as err:
            flowing_background(grid, 0.333)
        nearest = err.value.nearest_speed
        assert nearest is not None
        flowing_background(grid, nearest)  # suggestion is valid

    def test_nearest_commensurate(self):
        grid = GridSpec(32, 32, 20 * math.sqrt(2) * math.pi, 20.0)
        ratio, winding = nearest_commensurate_speed(grid, 0.315)
        assert winding == 3
        assert ratio == pytest.approx(0.3, abs=1e-12)


def test_step_wrapper_matches_stepper():
    grid = GridSpec(32, 32, 40.0, 40.0)
    field = perturbed_field(grid)
    cfg = RunConfig(dt=1e-3, n_steps=1, snapshot_every=1,
                    params=unit_scaled_params(), initial=field)
    advanced = step(field, cfg)
    manual = Stepper(cfg).advance(field.data.copy(), 0.0)
    assert np.array_equal(advanced.data, manual)


def test_energy_functional_matches_quartic_terms():
    grid = GridSpec(32, 32, 40.0, 40.0)
    params = unit_scaled_params(delta=0.2)
    pot = np.full((32, 32), 0.1)
    f = uniform_field(grid, 2.0)  # uniform: gradient term vanishes
    area = grid.lx * grid.ly
    expected = area * (0.5 * 16.0 - 0.2 * 4.0 + 0.1 * 4.0)
    assert energy(f, params, pot) == pytest.approx(expected, rel=1e-12)

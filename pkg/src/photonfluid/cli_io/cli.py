"""Command-line front end.

Subcommands: derive | simulate | dispersion | probe | obstacle | scan |
oracle. Every run writes its outputs plus a manifest (a copy of the
config with version and wall-time comments appended) into --out; feeding
the manifest back as --config reproduces the outputs bit-identically.

Exit codes: 0 success, 2 config error, 3 numerical error,
4 measurement-quality error.
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from .. import __version__, _fft, experiments, solver
from ..errors import PhotonFluidError
from ..grids import GridSpec, uniform_field
from ..meanfield import ScaledParams, unit_scaled_params
from . import tables
from .config import Config, default_config_text, derive_parameters, load_config
from .snapshot import atomic_write_text, write_snapshot

HEALING_WAVELENGTH_SCALED = math.pi * math.sqrt(2.0)  # 2*pi/K_c at psi0 = 1


def version_string() -> str:
    base = f"photonfluid-{__version__}"
    try:
        here = os.path.dirname(os.path.abspath(__file__))
        described = subprocess.run(
            ["git", "-C", here, "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5)
        if described.returncode == 0 and described.stdout.strip():
            return f"{base}+g{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


def _write_manifest(config: Config, out_dir, command, wall_time):
    text = config.source_text
    if not text.endswith("\n"):
        text += "\n"
    text += (
        "\n# --- manifest ---\n"
        f"# command = {command}\n"
        f"# version = {version_string()}\n"
        f"# wall_time_s = {wall_time:.3f}\n"
    )
    atomic_write_text(os.path.join(out_dir, "manifest.txt"), text)


def _scaled_grid(config: Config) -> GridSpec:
    extent = config.extent_in_healing_lengths * HEALING_WAVELENGTH_SCALED
    return GridSpec(nx=config.nx, ny=config.ny, lx=extent, ly=extent)


def _snap_k_values(grid: GridSpec, k_min, k_max, n_k):
    """Geometric K ladder snapped onto distinct grid modes."""
    base = 2.0 * math.pi / grid.lx
    targets = np.geomspace(k_min, k_max, n_k)
    modes = sorted({max(1, int(round(k / base))) for k in targets})
    modes = [j for j in modes if j < grid.nx // 2]
    return np.asarray([j * base for j in modes])


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_derive(config: Config, out_dir):
    *_, report = derive_parameters(config)
    print(report, end="")
    if out_dir:
        atomic_write_text(os.path.join(out_dir, "report.txt"), report)


def cmd_simulate(config: Config, out_dir):
    _, _, scaled, _ = derive_parameters(config)
    grid = _scaled_grid(config)
    run_params = ScaledParams(
        delta=scaled.delta, gamma=0.0, drive=0.0,
        x_scale=scaled.x_scale, t_scale=scaled.t_scale,
        field_scale=scaled.field_scale, sign=scaled.sign)
    if config.flow_speed_ratio > 0:
        ratio, _ = solver.nearest_commensurate_speed(grid, config.flow_speed_ratio)
        initial = solver.flowing_background(grid, ratio)
    else:
        initial = uniform_field(grid, 1.0)
    potential = None
    if config.with_obstacle:
        obstacle = experiments.ObstacleSpec(radius=config.radius_xi,
                                            height=config.height_mu)
        potential = obstacle.potential(grid)
    run_config = solver.RunConfig(
        dt=config.dt_scaled, n_steps=config.steps,
        snapshot_every=config.snapshot_every, params=run_params,
        initial=initial, potential=potential)
    trajectory = solver.run(run_config)
    for t, snap in zip(trajectory.times, trajectory.snapshots):
        step_index = int(round(t / config.dt_scaled))
        write_snapshot(snap, os.path.join(out_dir, f"snap_{step_index:08d}.phfl"),
                       time=t)
    tables.diagnostics_csv(trajectory, os.path.join(out_dir, "diagnostics.csv"))
    print(f"wrote {len(trajectory.snapshots)} snapshots; "
          f"final norm {trajectory.norms[-1]:.12g}")


def cmd_dispersion(config: Config, out_dir):
    _, _, scaled, _ = derive_parameters(config)
    grid = _scaled_grid(config)
    params = unit_scaled_params(sign=scaled.sign)
    k_values = _snap_k_values(grid, config.k_min_scaled, config.k_max_scaled,
                              config.n_k)
    curve = experiments.measure_dispersion(k_values, grid, params)
    tables.dispersion_csv(curve, scaled, os.path.join(out_dir, "dispersion.csv"))
    print(f"{curve.k.size} modes, max rel err {curve.max_rel_err:.3e}")


def cmd_probe(config: Config, out_dir):
    _, _, scaled, _ = derive_parameters(config)
    grid = _scaled_grid(config)
    gamma = config.probe_gamma_scaled
    params = unit_scaled_params(delta=float(scaled.sign), gamma=gamma,
                                drive=1.0, sign=scaled.sign)
    from ..constants import MHZ_TO_RAD_PER_S
    omega_mod = scaled.frequency_from_cgs(config.modulation_mhz * MHZ_TO_RAD_PER_S)
    source = (config.source_x_frac * grid.lx, config.source_y_frac * grid.ly)
    result = experiments.sound_wave_probe(omega_mod, source, grid, params)
    tables.probe_csv(result, scaled, os.path.join(out_dir, "probe.csv"))
    print(f"K_meas = {result.k_measured:.6g} (scaled), "
          f"Omega(K_meas) vs Omega_mod rel err {result.rel_err:.3e}")


def cmd_obstacle(config: Config, out_dir):
    _, _, scaled, _ = derive_parameters(config)
    grid = _scaled_grid(config)
    params = unit_scaled_params(sign=scaled.sign)
    obstacle = experiments.ObstacleSpec(radius=config.radius_xi,
                                        height=config.height_mu)
    all_sets = []
    for requested in config.speed_ratios:
        result = experiments.obstacle_flow_experiment(
            requested, obstacle, config.window_scaled, grid, params)
        all_sets.extend(result.vortex_sets)
        tables.drag_csv(result.times, result.drag, scaled,
                        os.path.join(out_dir,
                                     f"drag_v{result.speed_ratio:.3f}.csv"))
        shed = ("first shedding at tau = "
                f"{result.first_shedding_time:g}" if result.sheds
                else "no vortices")
        print(f"v/v_s = {result.speed_ratio:.3f}: {shed}")
    tables.vortices_csv(all_sets, scaled, os.path.join(out_dir, "vortices.csv"))


def cmd_scan(config: Config, out_dir):
    _, _, scaled, _ = derive_parameters(config)
    grid = _scaled_grid(config)
    params = unit_scaled_params(sign=scaled.sign)
    obstacle = experiments.ObstacleSpec(radius=config.radius_xi,
                                        height=config.height_mu)
    result = experiments.critical_velocity_scan(
        obstacle, grid, params, window=config.window_scaled)
    tables.scan_csv(result, os.path.join(out_dir, "scan.csv"))
    print(f"critical velocity bracket: ({result.v_lower:.3f}, "
          f"{result.v_upper:.3f}) v/v_s, window {result.window:g}")


def cmd_oracle(config: Config, out_dir):
    grid = GridSpec(nx=config.oracle_nx, ny=config.oracle_ny,
                    lx=config.oracle_extent_scaled,
                    ly=config.oracle_extent_scaled)
    omega = experiments.dense_bdg_oracle(grid)
    expected = experiments.oracle_expected_spectrum(grid)
    tables.oracle_csv(omega, expected, os.path.join(out_dir, "oracle.csv"))
    nonzero = np.abs(expected) > 0
    rel = np.max(np.abs(omega[nonzero] - expected[nonzero])
                 / np.abs(expected[nonzero]))
    print(f"{omega.size} eigenvalues, max rel err {rel:.3e}")


_COMMANDS = {
    "derive": cmd_derive,
    "simulate": cmd_simulate,
    "dispersion": cmd_dispersion,
    "probe": cmd_probe,
    "obstacle": cmd_obstacle,
    "scan": cmd_scan,
    "oracle": cmd_oracle,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="photonfluid",
        description="Photon-fluid simulator: dispersion and superfluidity "
                    "experiments on a Kerr cavity field.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="config file path (default: bundled)")
    parser.add_argument("--out", help="output directory (default: ./out_<command>)")
    parser.add_argument("--workers", type=int, default=1,
                        help="FFT worker threads (results identical for any count)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _fft.set_workers(args.workers)
        if args.config:
            config = load_config(args.config)
        else:
            from .config import parse_config_text
            config = parse_config_text(default_config_text())
        if args.command == "derive" and not args.out:
            out_dir = None  # report to stdout only
        else:
            out_dir = args.out or f"out_{args.command}"
            os.makedirs(out_dir, exist_ok=True)
        started = time.perf_counter()
        _COMMANDS[args.command](config, out_dir)
        if out_dir is not None:
            _write_manifest(config, out_dir, args.command,
                            time.perf_counter() - started)
    except PhotonFluidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

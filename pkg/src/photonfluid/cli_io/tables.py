"""Plot-ready CSV outputs, written atomically with full float precision."""

from __future__ import annotations

from ..meanfield import ScaledParams
from .snapshot import atomic_write_text


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def dispersion_csv(curve, scaled: ScaledParams, path):
    rows = []
    for k, w_meas, w_th, rel, resid in curve.rows():
        rows.append((scaled.wavenumber_to_cgs(k),
                     scaled.frequency_to_cgs(w_meas),
                     scaled.frequency_to_cgs(w_th),
                     float(rel), float(resid)))
    write_csv(path, ("K_per_cm", "omega_meas_rad_s", "omega_theory_rad_s",
                     "rel_err", "fit_residual"), rows)


def vortices_csv(vortex_sets, scaled: ScaledParams, path):
    rows = []
    for vs in vortex_sets:
        t = scaled.time_to_cgs(vs.time)
        for x, y, q in zip(vs.x, vs.y, vs.charge):
            rows.append((t, scaled.length_to_cgs(float(x)),
                         scaled.length_to_cgs(float(y)), int(q)))
    write_csv(path, ("time", "x_cm", "y_cm", "charge"), rows)


def drag_csv(times, drag, scaled: ScaledParams, path):
    rows = [(scaled.time_to_cgs(float(t)), float(fx), float(fy))
            for t, (fx, fy) in zip(times, drag)]
    write_csv(path, ("time", "force_x_scaled", "force_y_scaled"), rows)


def probe_csv(result, scaled: ScaledParams, path):
    write_csv(path, ("omega_mod_rad_s", "K_meas_per_cm",
                     "omega_at_K_meas_rad_s", "rel_err"),
              [(scaled.frequency_to_cgs(result.omega_mod),
                scaled.wavenumber_to_cgs(result.k_measured),
                scaled.frequency_to_cgs(result.omega_at_k_measured),
                float(result.rel_err))])


def oracle_csv(omega_oracle, omega_theory, path):
    rows = []
    for wo, wt in zip(omega_oracle, omega_theory):
        err = abs(wo - wt)
        rel = err / abs(wt) if wt != 0 else 0.0
        rows.append((float(wo), float(wt), float(err), float(rel)))
    write_csv(path, ("omega_oracle_scaled", "omega_theory_scaled",
                     "abs_err", "rel_err"), rows)


def scan_csv(result, path):
    rows = [(float(speed), int(sheds), "" if t is None else float(t))
            for speed, sheds, t in result.tested]
    write_csv(path, ("speed_ratio", "sheds", "first_shedding_time_scaled"), rows)


def diagnostics_csv(trajectory, path):
    rows = []
    for i, t in enumerate(trajectory.times):
        row = [float(t), float(trajectory.norms[i])]
        if trajectory.energies is not None:
            row.append(float(trajectory.energies[i]))
        rows.append(tuple(row))
    header = ("time_scaled", "norm") + (
        ("energy",) if trajectory.energies is not None else ())
    write_csv(path, header, rows)

"""Command-line batch interface.

Verbs:
  run        one simulation -> trace, spectra, fits, report
  sweep      grid over pressure / eta / phi / wavelength -> tidy CSV
  report     render a run or sweep directory as a text summary
  calibrate  synthetic wavelength scan -> absolute-motion calibration
  limits     quantum / recoil metrics for the configured trap

Exit codes: 0 success, 1 config error, 2 runtime failure,
3 self-check failure (artifacts are still written).

All outputs land in a directory named from the config digest, so
identical configs (same seed) overwrite their own outputs and different
configs never collide.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis, detector as det_mod, dynamics, feedback as fb, io, model
from .config import (ConfigError, apply_sweep_point, config_digest,
                     from_dict, load_config, to_dict)


class CheckFailure(Exception):
    """A self-check failed; outputs exist but are suspect."""


def _require(cfg, *fields):
    for f in fields:
        if getattr(cfg, f) is None:
            raise ConfigError(f"{f}: section required for this command")


def _fit_axis(trace, axis, omega0, mass):
    spec = analysis.welch_psd(trace, axis=axis)
    fit = analysis.fit_lorentzian(spec, band=(0.6 * omega0, 1.4 * omega0))
    t_fit, t_err = analysis.temperature_from_fit(fit, mass)
    t_var = analysis.temperature_from_variance(trace.variance(axis), mass, fit.b)
    return spec, fit, t_fit, t_err, t_var


def _run_single(cfg, outdir, fmt):
    _require(cfg, "control")
    os.makedirs(outdir, exist_ok=True)
    digest = config_digest(cfg)
    io.write_json(os.path.join(outdir, "config.json"),
                  {"digest": digest, **to_dict(cfg)})

    result = dynamics.simulate(cfg.particle, cfg.trap, cfg.gas, cfg.control,
                               feedback_spec=cfg.feedback,
                               detector_spec=cfg.detector,
                               return_telemetry=True)
    trace, telemetry = result
    trace.digest = digest
    io.save_trace(trace, os.path.join(outdir, "trace.bin"))
    if fmt == "csv" and trace.n_samples <= 2_000_000:
        io.trace_to_csv(trace, os.path.join(outdir, "trace.csv"))
    if telemetry is not None:
        io.save_trace(telemetry, os.path.join(outdir, "telemetry.bin"))

    mass = cfg.particle.mass
    omega0 = trace.meta["omega0"]
    # both self-check statistics wander as 1/sqrt(gamma0 * duration)
    # (effective independent samples of the thermal mode), so the gates
    # scale with the run length; the caps keep catastrophic fits failing
    # even when a run is too short for meaningful statistics.
    n_eff = trace.meta["gamma0"] * trace.duration
    tol_t = min(max(0.15, 4.0 / math.sqrt(n_eff)), 0.5)
    tol_p = min(max(0.05, 2.0 / math.sqrt(n_eff)), 0.3)
    axes_out = {}
    checks = []
    for i, axis in enumerate(("x", "y", "z")):
        spec, fit, t_fit, t_err, t_var = _fit_axis(trace, axis, omega0[i], mass)
        if fmt == "json":
            io.write_json(os.path.join(outdir, f"spectrum_{axis}.json"),
                          {"omega": spec.omega, "psd": spec.values,
                           "units": spec.units, "n_averages": spec.n_averages})
        else:
            io.spectrum_to_csv(spec, os.path.join(outdir, f"spectrum_{axis}.csv"))
        axes_out[axis] = {
            "omega_fit": fit.b, "gamma_fit": fit.c, "q": fit.b / fit.c,
            "a_fit": fit.a, "t_cm": t_fit, "t_err": t_err, "t_var": t_var,
        }
        close = abs(t_fit - t_var) <= tol_t * t_var
        checks.append((f"{axis}: fit vs equipartition temperature within "
                       f"{100 * tol_t:.0f}%", bool(close)))
        # Parseval on the estimator itself
        var = trace.variance(axis)
        integral = float(np.trapezoid(spec.values, spec.omega))
        checks.append((f"{axis}: PSD integral matches variance within "
                       f"{100 * tol_p:.0f}%",
                       bool(abs(integral - var) <= tol_p * var)))

    report = {
        "digest": digest,
        "mode": cfg.control.feedback_mode,
        "mass": mass,
        "gamma0": trace.meta["gamma0"],
        "omega0": list(omega0),
        "saturation_count": trace.meta["saturation_count"],
        "axes": axes_out,
        "checks": [{"name": n, "passed": p} for n, p in checks],
    }
    if cfg.feedback is not None:
        report["eta"] = list(cfg.feedback.eta)
        report["phi"] = list(cfg.feedback.phi)
    io.write_json(os.path.join(outdir, "report.json"), report)
    io.atomic_write_text(os.path.join(outdir, "report.txt"),
                         _render_run_report(report))
    return report


def _render_run_report(report):
    lines = [
        "simulation report",
        f"  config digest   {report['digest'][:16]}",
        f"  feedback mode   {report['mode']}",
        f"  mass            {report['mass']:.4e} kg",
        f"  gas damping     {report['gamma0']:.4g} 1/s",
    ]
    if "eta" in report:
        lines.append(f"  eta             {report['eta']}")
        lines.append(f"  phi             {report['phi']}")
    lines.append(f"  drive clamps    {report['saturation_count']}")
    lines.append("  axis    f0 (kHz)    linewidth (1/s)      Q        T_cm (K)")
    for axis, r in report["axes"].items():
        lines.append(
            f"  {axis}    {r['omega_fit'] / 2 / math.pi / 1e3:10.3f}"
            f"  {r['gamma_fit']:14.4g}  {r['q']:10.3g}"
            f"  {r['t_cm']:.4g} +- {r['t_err']:.2g}")
    lines.append("  checks:")
    for c in report["checks"]:
        lines.append(f"    [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}")
    return "\n".join(lines) + "\n"


def _sweep_worker(payload):
    doc, variable, value, index, outdir, fmt = payload
    try:
        cfg = apply_sweep_point(from_dict(doc), variable, value)
        point_dir = os.path.join(outdir, f"point-{index:03d}")
        report = _run_single(cfg, point_dir, fmt)
        rows = []
        for axis, r in report["axes"].items():
            failed = sum(1 for c in report["checks"]
                         if c["name"].startswith(f"{axis}:") and not c["passed"])
            rows.append({
                "index": index, "variable": variable, "value": value,
                "axis": axis, "omega_fit": r["omega_fit"],
                "gamma_fit": r["gamma_fit"], "q": r["q"],
                "t_cm": r["t_cm"], "t_err": r["t_err"], "t_var": r["t_var"],
                "checks_failed": failed,
                "path": os.path.join(f"point-{index:03d}", "trace.bin"),
                "error": "",
            })
        return rows
    except Exception as exc:  # per-point isolation
        return [{"index": index, "variable": variable, "value": value,
                 "axis": "", "omega_fit": "", "gamma_fit": "", "q": "",
                 "t_cm": "", "t_err": "", "t_var": "", "checks_failed": "",
                 "path": "", "error": f"{type(exc).__name__}: {exc}"}]


_SWEEP_COLS = ("index", "variable", "value", "axis", "omega_fit", "gamma_fit",
               "q", "t_cm", "t_err", "t_var", "checks_failed", "path", "error")


def _run_sweep(cfg, outdir, fmt, workers):
    _require(cfg, "control")
    if cfg.sweep is None:
        raise ConfigError("sweep: section required for the sweep command")
    os.makedirs(outdir, exist_ok=True)
    variable, values = cfg.sweep.variable, cfg.sweep.values
    doc = to_dict(cfg)
    payloads = [(doc, variable, v, i, outdir, fmt)
                for i, v in enumerate(values)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, payloads))
    else:
        results = [_sweep_worker(p) for p in payloads]

    rows = [row for point in results for row in point]
    lines = [",".join(_SWEEP_COLS)]
    for row in rows:
        lines.append(",".join(
            f"{row[c]:.10e}" if isinstance(row[c], float) else str(row[c])
            for c in _SWEEP_COLS))
    io.atomic_write_text(os.path.join(outdir, "sweep.csv"), "\n".join(lines) + "\n")

    summary = _sweep_summary(cfg, variable, rows)
    io.write_json(os.path.join(outdir, "sweep_summary.json"), summary)
    return rows, summary


def _sweep_summary(cfg, variable, rows):
    gamma0 = model.gas_damping(cfg.gas, cfg.particle)
    freqs = model.trap_frequencies(cfg.particle, cfg.trap)
    axis = "xyz"[_active_axis(cfg)]
    good = [r for r in rows if r["axis"] == axis and not r["error"]
            and not r["checks_failed"]]
    summary = {
        "variable": variable,
        "n_points": len({r["index"] for r in rows}),
        "n_failed": len({r["index"] for r in rows if r["error"]}),
        "n_suspect": len({r["index"] for r in rows
                          if r["axis"] == axis and r["checks_failed"]}),
        "axis": axis,
    }
    if len(good) >= 3:
        vals = np.array([r["value"] for r in good])
        temps = np.array([r["t_cm"] for r in good])
        w0 = 2 * math.pi * freqs[_active_axis(cfg)]
        t0 = cfg.gas.temperature
        if variable == "phi":
            eta_hat, off, t0_hat = analysis.fit_phase_response(
                vals, temps, t0, gamma0, w0)
            summary["fit"] = {"eta": eta_hat, "phase_offset": off,
                              "t0": t0_hat,
                              "eta_commanded": max(cfg.feedback.eta)}
        elif variable == "eta":
            scale = analysis.fit_cooling_curve(vals, temps, t0, gamma0, w0)
            summary["fit"] = {"gain_scale": scale}
            summary["heating_points"] = [
                r["index"] for r in good if r["t_cm"] > 1.2 * t0]
        elif variable == "pressure":
            # gamma0 tracks pressure; T_cm ~ p in the strong-cooling limit
            slope, intercept = np.polyfit(np.log10(vals), np.log10(temps), 1)
            summary["fit"] = {"loglog_slope": slope,
                              "loglog_intercept": intercept}
    return summary


def _active_axis(cfg):
    if cfg.feedback is not None:
        for i in range(3):
            if cfg.feedback.eta[i] > 0:
                return i
    return 2


def _render_sweep_report(rows, summary):
    lines = [
        "sweep report",
        f"  variable  {summary['variable']}",
        f"  points    {summary['n_points']} ({summary['n_failed']} failed)",
    ]
    if "fit" in summary:
        for k, v in summary["fit"].items():
            lines.append(f"  {k:<16} {v:.6g}" if isinstance(v, float)
                         else f"  {k:<16} {v}")
    lines.append("  value        axis  f0(kHz)     linewidth(1/s)  T_cm(K)")
    for r in rows:
        if r["error"]:
            lines.append(f"  {r['value']:<12.4g} FAILED: {r['error']}")
        else:
            lines.append(
                f"  {r['value']:<12.4g} {r['axis']:<4}"
                f" {r['omega_fit'] / 2 / math.pi / 1e3:10.3f}"
                f" {r['gamma_fit']:15.4g} {r['t_cm']:10.4g}")
    return "\n".join(lines) + "\n"


def _cmd_report(path, fmt):
    sweep_csv = os.path.join(path, "sweep.csv")
    run_json = os.path.join(path, "report.json")
    if os.path.exists(sweep_csv):
        rows = _read_sweep_csv(sweep_csv)
        summary = {}
        summary_path = os.path.join(path, "sweep_summary.json")
        if os.path.exists(summary_path):
            summary = io.read_json(summary_path)
        else:
            summary = {"variable": rows[0]["variable"] if rows else "?",
                       "n_points": len({r["index"] for r in rows}),
                       "n_failed": len({r["index"] for r in rows if r["error"]})}
        text = _render_sweep_report(rows, summary)
        print(text, end="")
        return 0
    if os.path.exists(run_json):
        report = io.read_json(run_json)
        text = _render_run_report(report)
        print(text, end="")
        if any(not c["passed"] for c in report.get("checks", [])):
            raise CheckFailure("run self-checks failed")
        return 0
    print(f"nothing to report in {path}")
    return 0


def _read_sweep_csv(path):
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            vals = line.rstrip("\n").split(",")
            row = dict(zip(header, vals))
            for key in ("value", "omega_fit", "gamma_fit", "q",
                        "t_cm", "t_err", "t_var"):
                if row.get(key):
                    row[key] = float(row[key])
            if row.get("checks_failed"):
                row["checks_failed"] = int(row["checks_failed"])
            rows.append(row)
    return rows


def _cmd_calibrate(cfg, outdir, fmt):
    _require(cfg, "detector")
    os.makedirs(outdir, exist_ok=True)
    mass = cfg.particle.mass
    _, _, fz = model.trap_frequencies(cfg.particle, cfg.trap)
    w0 = 2 * math.pi * fz
    # coherent-equivalent amplitude of the thermal motion
    from .constants import BOLTZMANN
    z0 = math.sqrt(2.0 * BOLTZMANN * cfg.gas.temperature / (mass * w0**2))
    lam0 = cfg.trap.wavelength
    lams = np.linspace(lam0 - 5e-9, lam0 + 5e-9, 201)
    scan = det_mod.wavelength_scan(cfg.detector, cfg.trap, z0, lams, w0,
                                   temperature=cfg.gas.temperature)
    result = analysis.wavelength_scan_calibration(
        scan, density=cfg.particle.density)
    rows = ["wavelength_m,a1_v,a2_v"] + [
        f"{l:.10e},{a:.10e},{b:.10e}"
        for l, a, b in zip(scan.wavelengths, scan.a1, scan.a2)]
    io.atomic_write_text(os.path.join(outdir, "calibration_scan.csv"),
                         "\n".join(rows) + "\n")
    payload = {
        "z0_true": z0, "z0_recovered": result.z0,
        "z0_error_percent": 100.0 * (result.z0 / z0 - 1.0),
        "mass_true": mass, "mass_recovered": result.mass,
        "radius_recovered": result.radius,
        "conversion": result.conversion,
        "theta_offset": result.theta_offset,
        "residual": result.residual,
    }
    io.write_json(os.path.join(outdir, "calibration.json"), payload)
    print(f"calibration: z0 {result.z0 * 1e9:.2f} nm "
          f"(true {z0 * 1e9:.2f} nm, {payload['z0_error_percent']:+.2f}%), "
          f"m {result.mass:.3e} kg, r {result.radius * 1e9:.1f} nm")
    if abs(payload["z0_error_percent"]) > 5.0:
        raise CheckFailure("calibration round-trip error above 5%")
    return 0


def _cmd_limits(cfg, outdir, fmt):
    os.makedirs(outdir, exist_ok=True)
    dg = None
    if cfg.feedback is not None:
        _, _, fz = model.trap_frequencies(cfg.particle, cfg.trap)
        dg = fb.damping_gain(max(cfg.feedback.eta), 2 * math.pi * fz)
    metrics = analysis.quantum_limits(cfg.particle, cfg.trap,
                                      detector_spec=cfg.detector, gas=cfg.gas,
                                      delta_gamma=dg)
    payload = {
        "x_ground": metrics.x_ground,
        "zero_point_step": metrics.zero_point_step,
        "occupancy": metrics.occupancy,
        "recoil_rate": metrics.recoil_rate,
        "phonon_limit": metrics.phonon_limit,
    }
    if cfg.detector is not None:
        chain = det_mod.detected_power_chain(cfg.particle, cfg.trap, cfg.detector)
        payload["power_chain"] = {
            "cross_section": chain.cross_section,
            "area_efficiency": chain.area_efficiency,
            "scattered_power": chain.scattered_power,
            "photon_rate": chain.photon_rate,
            "detected_power": chain.detected_power,
            "detected_voltage": chain.detected_voltage,
        }
        payload["position_resolution"] = det_mod.position_resolution(
            cfg.detector, cfg.trap)
    io.write_json(os.path.join(outdir, "limits.json"), payload)
    print(f"x_ground {metrics.x_ground * 1e12:.3f} pm, "
          f"zero-point step {metrics.zero_point_step * 1e12:.3f} pm, "
          f"occupancy {metrics.occupancy:.3e}, "
          f"recoil rate {metrics.recoil_rate:.4g} 1/s")
    return 0


def _build_parser():
    p = argparse.ArgumentParser(
        prog="mirrortrap",
        description="Simulation and analysis of a feedback-cooled "
                    "optically levitated nanoparticle")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in ("run", "sweep", "calibrate", "limits"):
        sp = sub.add_parser(verb)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None,
                        help="output directory (default: from config)")
        sp.add_argument("--seed-override", type=int, default=None)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp = sub.add_parser("report")
    sp.add_argument("directory")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def entry(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "report":
            return _cmd_report(args.directory, args.format)
        cfg = load_config(args.config)
        if args.seed_override is not None:
            doc = to_dict(cfg)
            doc.setdefault("sim", {})["seed"] = args.seed_override
            cfg = from_dict(doc)
        base = args.out or cfg.output_dir
        digest = config_digest(cfg)[:8]
        if args.verb == "run":
            outdir = os.path.join(base, f"run-{digest}")
            report = _run_single(cfg, outdir, args.format)
            print(_render_run_report(report), end="")
            print(f"outputs in {outdir}")
            if any(not c["passed"] for c in report["checks"]):
                raise CheckFailure("run self-checks failed")
            return 0
        if args.verb == "sweep":
            outdir = os.path.join(base, f"sweep-{digest}")
            rows, summary = _run_sweep(cfg, outdir, args.format, args.workers)
            print(_render_sweep_report(rows, summary), end="")
            print(f"outputs in {outdir}")
            return 0
        if args.verb == "calibrate":
            return _cmd_calibrate(cfg, os.path.join(base, f"cal-{digest}"),
                                  args.format)
        if args.verb == "limits":
            return _cmd_limits(cfg, os.path.join(base, f"limits-{digest}"),
                               args.format)
        raise ConfigError(f"unknown verb {args.verb}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(entry())


if __name__ == "__main__":
    main()

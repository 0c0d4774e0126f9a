"""Command-line front end.

    homspec jsa build [--config FILE] [--bias THZ]
    homspec hom scan [--config FILE] [--real] [--theta DEG] [--spectra]
    homspec spectrometer simulate [--config FILE] [--seed N] [--duration S] [--delay PS] [--csv]
    homspec reconstruct --tags FILE | --histogram FILE [--pair I J] [--calibration FILE]
    homspec analyze visibility [--config FILE] [--filter THZ ...] [--theta DEG] [--scan FILE]

Outputs go to the config's ``output`` directory, or ``$HOMSPEC_OUTPUT_DIR``
when set. Exit codes: 0 success, 2 config error, 3 numeric or domain error,
4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml
from pydantic import ValidationError

from . import analytics, interference, matrixio, spectral, spectrometer, tagio
from .config import load_config, reference_config
from .errors import DegenerateInput, DomainError, InvalidArgument, NotMeasurable, NumericError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    pass


def _config(args):
    try:
        cfg = reference_config() if args.config is None else load_config(args.config)
    except ValidationError as exc:
        lines = [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines)) from exc
    except (yaml.YAMLError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return cfg


def _outdir(cfg) -> Path:
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _source(cfg, bias=None, theta=None):
    spec = cfg.source_spec(bias)
    if theta is not None:
        spec = replace(spec, collection=replace(spec.collection, theta=theta))
    return spec


def cmd_jsa_build(args):
    cfg = _config(args)
    grid = cfg.frequency_grid()
    spec = _source(cfg, args.bias)
    jsa = spec.jsa(grid)
    jsi = spectral.intensity_of(jsa)
    out = _outdir(cfg)
    matrixio.write_matrix(out / "jsa.csv", jsa.amp, grid, "jsa")
    matrixio.write_matrix(out / "jsi.csv", jsi.inten, grid, "jsi")
    schmidt = spectral.schmidt_decompose(jsa)
    center = cfg.grid.center_lambda_nm
    f1 = spectral.fwhm(grid.nu1, spectral.marginal(jsi, 1))
    f2 = spectral.fwhm(grid.nu2, spectral.marginal(jsi, 2))
    summary = {
        "schmidt_number": schmidt.schmidt_number,
        "purity": schmidt.purity,
        "signal_fwhm_thz": f1,
        "idler_fwhm_thz": f2,
        "signal_fwhm_nm": spectral.bandwidth_thz_to_nm(f1, center),
        "idler_fwhm_nm": spectral.bandwidth_thz_to_nm(f2, center),
        "bias_thz": spec.collection.bias_detuning,
    }
    _write_json(out / "jsa_summary.json", summary)
    print(f"K = {schmidt.schmidt_number:.4f}  signal FWHM = {summary['signal_fwhm_nm']:.2f} nm  -> {out}")


def cmd_hom_scan(args):
    cfg = _config(args)
    grid = cfg.frequency_grid()
    jsa = _source(cfg, theta=args.theta).jsa(grid)
    if args.real:
        jsa = spectral.magnitude_jsa_from_jsi(spectral.intensity_of(jsa))
    delays = cfg.scan.delays()
    bs = cfg.bs()
    scan = interference.scan_hom(jsa, delays, bs)
    out = _outdir(cfg)
    interference.write_scan(out / "scan.csv", scan)
    if args.spectra:
        sdir = out / "spectra"
        sdir.mkdir(exist_ok=True)
        evaluate = interference.coincidence_spectrum_real if args.real else interference.coincidence_spectrum
        for k, dt in enumerate(delays):
            s = evaluate(jsa, dt, bs)
            matrixio.write_matrix(sdir / f"coincidence_{k:04d}.csv", s.inten, grid, s.kind, delta_t_ps=repr(float(dt)))
    v = interference.visibility(scan)
    _write_json(out / "scan_summary.json", {"visibility": v, "baseline": scan.baseline, "real_amplitude": bool(args.real)})
    print(f"V = {v:.5f}  -> {out / 'scan.csv'}")


def cmd_simulate(args):
    cfg = _config(args)
    seed = cfg.seed if args.seed is None else args.seed
    duration = cfg.spectrometer.duration_s if args.duration is None else args.duration
    delay = cfg.spectrometer.delta_t_ps if args.delay is None else args.delay
    if duration < 0:
        raise InvalidArgument("--duration must be >= 0")
    jsa = _source(cfg, args.bias).jsa(cfg.frequency_grid())
    topo = cfg.spectrometer_topology()
    tags = spectrometer.simulate_timetags(jsa, delay, topo, cfg.bs(), cfg.source_rates(), duration, seed)
    out = _outdir(cfg)
    tagio.write_tags(out / "tags.bin", tags)
    if args.csv:
        tagio.write_tags_csv(out / "tags.csv", tags)
    singles = spectrometer.singles_counts(tags)
    coinc = {}
    for pair in ((1, 3), (1, 4), (2, 3), (2, 4), (1, 2), (3, 4)):
        coinc[f"{pair[0]}-{pair[1]}"] = int(spectrometer.coincident_pulses(tags, pair).size)
    summary = {
        "seed": seed,
        "duration_s": duration,
        "delta_t_ps": delay,
        "pulses": tags.n_pulses,
        "tags": len(tags),
        "dropped_outside_window": tags.dropped,
        "singles": {str(k): v for k, v in singles.items()},
        "coincidences": coinc,
    }
    _write_json(out / "tags_summary.json", summary)
    cross = sum(coinc[k] for k in ("1-3", "1-4", "2-3", "2-4"))
    rate = cross / duration if duration > 0 else 0.0
    print(f"{len(tags)} tags, cross-port coincidence rate {rate:.1f} /s  -> {out / 'tags.bin'}")


def cmd_reconstruct(args):
    cfg = _config(args)
    grid = cfg.frequency_grid()
    topo = cfg.spectrometer_topology()
    cal = analytics.read_calibration(args.calibration) if args.calibration else analytics.CalibrationSet.from_topology(topo)
    out = _outdir(cfg)
    if args.histogram:
        hists = [tagio.read_histogram(p) for p in args.histogram]
    elif args.tags:
        tags = tagio.read_tags(args.tags, cfg.source_rates().window_ps)
        pairs = [tuple(args.pair)] if args.pair else [(1, 3), (1, 4), (2, 3), (2, 4)]
        hists = [spectrometer.accumulate_coincidences(tags, p, cfg.spectrometer.bin_width_ps) for p in pairs]
        for h in hists:
            tagio.write_histogram(out / f"histogram_{h.pair[0]}{h.pair[1]}.csv", h)
    else:
        raise InvalidArgument("reconstruct needs --tags or --histogram")
    counts = np.zeros(grid.shape)
    diag = {"total": 0.0, "deposited": 0.0, "out_of_range": 0.0, "dropped_multi": 0, "pairs": []}
    for h in hists:
        rec = analytics.reconstruct_jsi(h, cal, grid)
        counts += rec.counts
        diag["total"] += rec.total
        diag["deposited"] += rec.deposited
        diag["out_of_range"] += rec.out_of_range
        diag["dropped_multi"] += h.dropped_multi
        diag["pairs"].append(list(h.pair))
    combined = analytics.Reconstruction(grid, counts, diag["total"], diag["deposited"], diag["out_of_range"])
    jsi = combined.jsi
    matrixio.write_matrix(out / "jsi_reconstructed.csv", jsi.inten, grid, "jsi")
    peak = jsi.inten.max()
    log = np.log10(np.maximum(jsi.inten / peak, 1e-6))
    matrixio.write_matrix(out / "jsi_reconstructed_log10.csv", log, grid, "jsi_log10", floor="1e-6")
    _write_json(out / "reconstruct_diagnostics.json", diag)
    print(f"deposited {diag['deposited']:.0f} of {diag['total']:.0f} counts, out of range {diag['out_of_range']:.1f}  -> {out}")


def cmd_analyze_visibility(args):
    cfg = _config(args)
    out = _outdir(cfg)
    rows = []
    if args.scan:
        scan = interference.read_scan(args.scan)
        rows.append((float("inf"), interference.visibility(scan)))
    else:
        widths = args.filter if args.filter else cfg.filters.widths_thz
        reduction = cfg.filters.reduction if args.reduction is None else args.reduction
        jsa = _source(cfg, theta=args.theta).jsa(cfg.frequency_grid())
        res = interference.visibility_vs_bandwidth(jsa, cfg.scan.delays(), sorted(widths), cfg.bs(), reduction=reduction)
        rows.extend((float(w), float(v)) for w, v in res)
    path = out / "visibility_vs_bandwidth.csv"
    with path.open("w", encoding="utf-8") as fh:
        fh.write("width_thz,visibility\n")
        for w, v in rows:
            fh.write(f"{w!r},{v!r}\n")
    for w, v in rows:
        print(f"{w:8.3f} THz  V = {v:.5f}")
    print(f"-> {path}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="homspec", description="Spectrally resolved HOM interference toolkit")
    sub = p.add_subparsers(dest="group", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="YAML run configuration (default: bundled reference)")
        return sp

    jsa = sub.add_parser("jsa").add_subparsers(dest="cmd", required=True)
    b = with_config(jsa.add_parser("build", help="build the JSA and JSI matrices"))
    b.add_argument("--bias", type=float, default=None, help="detuning of the JSA center in THz")
    b.set_defaults(func=cmd_jsa_build)

    hom = sub.add_parser("hom").add_subparsers(dest="cmd", required=True)
    s = with_config(hom.add_parser("scan", help="integrated HOM scan"))
    s.add_argument("--real", action="store_true", help="use the zero-phase amplitude sqrt(JSI)")
    s.add_argument("--theta", type=float, default=None, help="collection tilt in degrees")
    s.add_argument("--spectra", action="store_true", help="also write every per-delay coincidence spectrum")
    s.set_defaults(func=cmd_hom_scan)

    spec = sub.add_parser("spectrometer").add_subparsers(dest="cmd", required=True)
    m = with_config(spec.add_parser("simulate", help="Monte Carlo time tags"))
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--duration", type=float, default=None, help="seconds of pulses")
    m.add_argument("--delay", type=float, default=None, help="HOM delay in ps")
    m.add_argument("--bias", type=float, default=None)
    m.add_argument("--csv", action="store_true", help="also write the CSV mirror")
    m.set_defaults(func=cmd_simulate)

    r = with_config(sub.add_parser("reconstruct", help="arrival-time histograms to JSI"))
    r.add_argument("--tags", help="binary time-tag file")
    r.add_argument("--histogram", nargs="+", help="histogram files instead of tags")
    r.add_argument("--pair", type=int, nargs=2, metavar=("I", "J"))
    r.add_argument("--calibration", help="calibration YAML (default: from the config topology)")
    r.set_defaults(func=cmd_reconstruct)

    an = sub.add_parser("analyze").add_subparsers(dest="cmd", required=True)
    v = with_config(an.add_parser("visibility", help="visibility versus filter bandwidth"))
    v.add_argument("--filter", type=float, nargs="+", help="top-hat full widths in THz")
    v.add_argument("--theta", type=float, default=None)
    v.add_argument("--reduction", type=float, default=None, help="global fractional visibility reduction")
    v.add_argument("--scan", help="scan CSV to evaluate instead of simulating")
    v.set_defaults(func=cmd_analyze_visibility)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, InvalidArgument) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, NumericError, DegenerateInput, NotMeasurable, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""``homsim`` command line: jsa, schmidt, hom, simulate, fit, paper.

Exit codes: 0 success, 2 configuration/validation error, 3 computation error,
4 I/O error.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, ConfigError, load_config
from .fit import FitError, fit_dip
from .focksim import CountRecord, simulate_counts
from .hom import HomParams, dip_fwhm, expected_visibility_from_spectra, hom_curve
from .jsa import (
    build_jsa, build_separable_jsa, default_grid, export_density, marginal_spectra, read_density,
    separable_grid, write_density,
)
from .schmidt import schmidt_decompose
from . import paper, svg
from .units import UM

log = logging.getLogger("homsim")

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4


def _header(cmd, cfg):
    return [f"homsim {__version__} {cmd} config_hash={cfg.digest} seed={cfg.seed}"]


def _write_csv(path, columns, rows, comments):
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)
    return path


def _out_dir(args):
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _config(args, overrides=None):
    overrides = dict(overrides or {})
    if getattr(args, "seed", None) is not None:
        overrides.setdefault("simulate", {})["seed"] = args.seed
    if getattr(args, "grid", None) is not None:
        overrides.setdefault("jsa", {})["grid_points"] = args.grid
    return load_config(args.preset or (), args.config, overrides)


def _jsa_for(cfg):
    if cfg.jsa_model == "separable":
        grid = separable_grid(cfg.signal, cfg.idler, cfg.grid_points, cfg.span_fwhm)
        return build_separable_jsa(grid, cfg.signal, cfg.idler)
    grid = default_grid(cfg.pump, cfg.crystal, cfg.grid_points, cfg.span_fwhm)
    return build_jsa(grid, cfg.pump, cfg.crystal)


def cmd_jsa(args):
    cfg = _config(args)
    out = _out_dir(args)
    jsa = _jsa_for(cfg)
    comments = _header("jsa", cfg)
    if jsa.alpha is not None:
        paths = export_density(jsa, out, comments)
    else:
        paths = {"jsa": write_density(out / "jsa.csv", jsa.grid, np.abs(jsa.amplitudes) ** 2,
                                      ["panel=jsa quantity=|f|^2", *comments])}
    marg = marginal_spectra(jsa)
    _write_csv(
        out / "marginals.csv", ["axis", "omega_rad_s", "density"],
        [("signal", repr(float(w)), repr(float(v))) for w, v in zip(jsa.grid.signal, marg.signal)]
        + [("idler", repr(float(w)), repr(float(v))) for w, v in zip(jsa.grid.idler, marg.idler)],
        comments,
    )
    if args.svg:
        for panel, path in paths.items():
            _, _, values = read_density(path)
            svg.heatmap(out / f"{panel}.svg", values, title=panel, xlabel="idler frequency",
                        ylabel="signal frequency")
    print(f"grid,{jsa.grid.shape[0]}x{jsa.grid.shape[1]}")
    print(f"signal_fwhm_nm,{marg.signal_fwhm_nm:.4f}")
    print(f"idler_fwhm_nm,{marg.idler_fwhm_nm:.4f}")
    for panel, path in paths.items():
        print(f"file_{panel},{path}")
    return EXIT_OK


def cmd_schmidt(args):
    cfg = _config(args)
    result = schmidt_decompose(_jsa_for(cfg))
    rows = [("schmidt_number", repr(result.schmidt_number)), ("purity", repr(result.purity))]
    rows += [(f"lambda_{k + 1}", repr(float(v))) for k, v in enumerate(result.coefficients[:8])]
    writer = csv.writer(sys.stdout)
    writer.writerow(["quantity", "value"])
    writer.writerows(rows)
    if args.out:
        _write_csv(_out_dir(args) / "schmidt.csv", ["quantity", "value"], rows, _header("schmidt", cfg))
    return EXIT_OK


def cmd_hom(args):
    cfg = _config(args)
    if cfg.delays.size == 0:
        raise ConfigError("the delay scan is empty")
    params = HomParams.from_spectra(cfg.signal, cfg.lo)
    curve = hom_curve(params, cfg.delays)
    out = _out_dir(args)
    rows = [(repr(float(t)), repr(float(d)), repr(float(p)))
            for t, d, p in zip(curve.delays, curve.path_um, curve.probabilities)]
    _write_csv(out / "hom_curve.csv", ["delay_s", "path_um", "probability"], rows, _header("hom", cfg))
    if args.svg:
        svg.line_plot(out / "hom_curve.svg", curve.path_um, {"P(tau)": curve.probabilities},
                      title="three-fold coincidence", xlabel="path delay (um)", ylabel="probability")
    v = expected_visibility_from_spectra(cfg.signal, cfg.lo)
    print(f"visibility,{v:.6f}")
    print(f"visibility_percent,{100 * v:.2f}")
    if params.delta == 0:
        width_s, width_m = dip_fwhm(params)
        print(f"dip_fwhm_s,{width_s:.6e}")
        print(f"dip_fwhm_um,{width_m / UM:.3f}")
    print(f"file,{out / 'hom_curve.csv'}")
    return EXIT_OK


def write_count_record(path, record: CountRecord, comments=()):
    return _write_csv(path, record.COLUMNS, [
        (repr(r[0]), repr(r[1]), *r[2:]) for r in record.rows()
    ], comments)


def cmd_simulate(args):
    cfg = _config(args)
    out = _out_dir(args)
    record = simulate_counts(cfg.source, cfg.detectors, cfg.delays, cfg.pulses, cfg.seed, threads=args.threads)
    path = write_count_record(out / "counts.csv", record, _header("simulate", cfg))
    if args.svg:
        svg.line_plot(out / "counts.svg", record.path_um,
                      {"triples": record.triples, "doubles": record.doubles_d1d2},
                      title="simulated coincidences", xlabel="path delay (um)", ylabel="counts")
    print(f"file,{path}")
    return EXIT_OK


def read_series(path, column="triples"):
    """Position (um) and counts from a CountRecord CSV or a two-column CSV."""
    path = Path(path)
    try:
        lines = [ln for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(lines))
    if not rows:
        raise ConfigError(f"{path}: no data")
    try:
        float(rows[0][0])
        header, body = None, rows
    except ValueError:
        header, body = [h.strip() for h in rows[0]], rows[1:]
    try:
        if header and "path_um" in header:
            if column not in header:
                raise ConfigError(f"{path}: no column {column!r}")
            ix, iy = header.index("path_um"), header.index(column)
        else:
            if any(len(r) != 2 for r in body):
                raise ConfigError(f"{path}: expected two columns (position_um, counts)")
            ix, iy = 0, 1
        d = np.array([float(r[ix]) for r in body])
        counts = np.array([float(r[iy]) for r in body])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed CSV ({exc})") from exc
    return d, counts


def cmd_fit(args):
    d, counts = read_series(args.input, args.column)
    try:
        result = fit_dip((d, counts), bootstrap=args.bootstrap, seed=args.seed or 0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    m, e = result.model, result.errors
    rows = [
        ("baseline", m.baseline, e.baseline),
        ("visibility", m.visibility, e.visibility),
        ("center_um", m.center, e.center),
        ("width_um", m.width, e.width),
        ("fwhm_um", result.fwhm, result.fwhm_error),
    ]
    writer = csv.writer(sys.stdout)
    writer.writerow(["parameter", "value", "stderr"])
    for name, value, err in rows:
        writer.writerow([name, f"{value:.8g}", f"{err:.3g}"])
    writer.writerow(["reduced_chi2", f"{result.reduced_chi2:.4f}", ""])
    writer.writerow(["converged", result.converged, ""])
    print(f"# V = {100 * m.visibility:.1f} +/- {100 * e.visibility:.1f} %, FWHM = {result.fwhm:.1f} um")
    if args.curve:
        fine = np.linspace(d.min(), d.max(), 401)
        _write_csv(args.curve, ["position_um", "fit"], [(repr(float(x)), repr(float(y))) for x, y in
                                                          zip(fine, m(fine))], [f"fit of {args.input}"])
    return EXIT_OK


def cmd_paper(args):
    outcomes = paper.run_all(args.only)
    writer = csv.writer(sys.stdout)
    writer.writerow(["criterion", "status", "title", "detail"])
    for o in outcomes:
        writer.writerow([o.key, "PASS" if o.passed else "FAIL", o.title, o.detail])
    for line in paper.extra_checks():
        print(f"# {line}")
    n_pass = sum(o.passed for o in outcomes)
    print(f"# {n_pass}/{len(outcomes)} criteria passed")
    return EXIT_OK if n_pass == len(outcomes) else EXIT_COMPUTE


def build_parser():
    parser = argparse.ArgumentParser(prog="homsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default="homsim-out"):
        p.add_argument("--config", help="INI file layered over the built-in paper preset")
        p.add_argument("--preset", action="append", choices=PRESETS,
                       help="extra preset layer (repeatable); 'paper' is always the base")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--svg", action="store_true", help="also write SVG plots")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("jsa", help="joint spectral amplitude density panels and marginals")
    common(p)
    p.add_argument("--grid", type=int, help="grid points per axis")
    p.set_defaults(func=cmd_jsa)

    p = sub.add_parser("schmidt", help="Schmidt number, purity, leading coefficients")
    common(p, out_default=None)
    p.add_argument("--grid", type=int)
    p.set_defaults(func=cmd_schmidt)

    p = sub.add_parser("hom", help="analytic coincidence curve, visibility and dip width")
    common(p)
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("simulate", help="Monte Carlo click counts over the delay scan")
    common(p)
    p.add_argument("--threads", type=int, help="worker threads (default: HOMSIM_THREADS or CPU count)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="Gaussian dip fit to a counts CSV")
    p.add_argument("input", help="CountRecord CSV or two-column position_um,counts CSV")
    p.add_argument("--column", default="triples", help="count column of a CountRecord CSV")
    p.add_argument("--curve", help="write the fitted curve to this CSV")
    p.add_argument("--bootstrap", type=int, default=0, help="parametric bootstrap resamples for errors")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("paper", help="run every reproduction criterion and report PASS/FAIL")
    p.add_argument("--only", action="append", help="restrict to criterion keys such as C1")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_paper)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"homsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"homsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, RuntimeError, FitError, np.linalg.LinAlgError) as exc:
        print(f"homsim: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: ode, geo, map-check, cantor, dim, spectra-dyn, spectra-cf, report.
Each writes its artifacts (CSV or JSON, with a provenance line carrying the
config hash) and prints a one-line summary. Exit codes: 0 success, 1 domain
or I/O error, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import cantor, fractal_dim, io, one_d, spectra_cf, spectra_dyn
from .errors import ConfigurationError, GeoLorenzError, ParameterError
from .geo_model import GeoParams, OdeParams, ode_orbit, poincare_orbit, validate_params

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common")
    g.add_argument("--model-alpha", type=float, default=0.75)
    g.add_argument("--model-theta", type=float, default=1.65)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--m-cap", type=int, default=10)
    g.add_argument("--delta", type=float, default=1e-2)
    g.add_argument("--depth", type=int, default=4)
    g.add_argument("--horizon", type=int, default=1000)
    g.add_argument("--seeds", type=int, default=100)
    g.add_argument("--rng-seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    g.add_argument("--out", type=str, default=None)
    g.add_argument("--plot", type=str, default=None, help="plot-data CSV path")
    g.add_argument("--config", type=str, default=None, help="JSON file of flag defaults")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="geolorenz", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ode", help="Lorenz ODE point cloud (CSV x,y,z)")
    _common(p)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--transient", type=int, default=10_000)
    p.add_argument("--x0", type=float, nargs=3, default=(1.0, 1.0, 1.0))
    p.add_argument("--ode-a", type=float, default=10.0)
    p.add_argument("--ode-r", type=float, default=28.0)
    p.add_argument("--ode-b", type=float, default=8.0 / 3.0)

    p = sub.add_parser("geo", help="Poincare-map orbits of the geometric model")
    _common(p)
    p.add_argument("--params", type=str, default=None, help="GeoParams JSON")

    p = sub.add_parser("map-check", help="properties and constants of the 1D map")
    _common(p)
    p.add_argument("--margin", type=float, default=0.005)
    p.add_argument("--bins", type=int, default=1024, help="Ulam bins")

    p = sub.add_parser("cantor", help="build a regular Cantor set")
    _common(p)
    p.add_argument("--mode", choices=("direct", "theorem"), default="direct")

    p = sub.add_parser("dim", help="dimension estimates")
    dsub = p.add_subparsers(dest="dim_command", required=True, parser_class=_Parser)
    q = dsub.add_parser("box", help="box-counting slope of a CSV point cloud")
    _common(q)
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--scales", type=int, default=12)
    q.add_argument("--decades", type=float, default=2.0)
    q = dsub.add_parser("cantor", help="Moran bounds of a direct-mode Cantor set")
    _common(q)
    q.add_argument("--in", dest="infile", default=None, help="CantorSpec JSON")
    q.add_argument("--stable-dim", type=float, default=0.0)
    q = dsub.add_parser("moran", help="solve a Moran equation")
    _common(q)
    q.add_argument("--values", type=float, nargs="+", required=True)
    q.add_argument("--mode", choices=("contraction", "expansion"), default="contraction")

    p = sub.add_parser("spectra-dyn", help="dynamical Markov/Lagrange values")
    _common(p)
    p.add_argument("--function", default="x", help="named observable or const:c")
    p.add_argument("--system", choices=("map", "flow", "map-maxF"), default="map")
    p.add_argument("--variant", choices=("m", "l"), default="m")

    p = sub.add_parser("spectra-cf", help="classical spectrum via continued fractions")
    csub = p.add_subparsers(dest="cf_command", required=True, parser_class=_Parser)
    q = csub.add_parser("head")
    _common(q)
    q.add_argument("--max-period", type=int, default=4)
    q.add_argument("--alphabet-max", type=int, default=2)
    q = csub.add_parser("hall")
    _common(q)
    q.add_argument("--resolution", type=float, default=1e-3)
    q = csub.add_parser("freiman")
    _common(q)
    q = csub.add_parser("perron")
    _common(q)
    q.add_argument("--word", required=True)

    p = sub.add_parser("report", help="end-to-end summary of constants and bounds")
    _common(p)
    p.add_argument("--stable-dim", type=float, default=0.0)
    return ap


def _explicit_dests(ap: argparse.ArgumentParser, argv) -> set:
    """Destinations given explicitly on the command line (these beat the config file)."""
    saved = []

    def walk(parser):
        for act in parser._actions:
            if isinstance(act, argparse._SubParsersAction):
                for sp in act.choices.values():
                    walk(sp)
            elif act.dest != "help":
                saved.append((act, act.default, act.required))
                act.default = argparse.SUPPRESS

    walk(ap)
    try:
        ns = ap.parse_args(argv)
    finally:
        for act, d, _ in saved:
            act.default = d
    return set(vars(ns))


def load_config(argv) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read config {args.config}: {e}") from e
        if not isinstance(cfg, dict):
            raise ConfigurationError("config must be a flat JSON object")
        explicit = _explicit_dests(ap, argv)
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            if not hasattr(args, dest):
                raise ConfigurationError(f"unknown config key {key!r}")
            if dest not in explicit:
                setattr(args, dest, val)
    _validate(args)
    return args


def _validate(a) -> None:
    checks = [
        (0 < a.model_alpha < 1, "--model-alpha must lie in (0, 1)"),
        (a.model_theta > 0, "--model-theta must be > 0"),
        (a.k >= 1, "--k must be >= 1"),
        (8 <= a.m_cap <= 24, "--m-cap must lie in [8, 24]"),
        (0 < a.delta < 0.5, "--delta must lie in (0, 0.5)"),
        (1 <= a.depth <= 12, "--depth must lie in [1, 12]"),
        (a.horizon >= 100, "--horizon must be >= 100"),
        (a.seeds >= 1, "--seeds must be >= 1"),
        (a.threads >= 1, "--threads must be >= 1"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigurationError(msg)
    if a.out is not None:
        parent = Path(a.out).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise ConfigurationError(f"output directory {parent} is not writable")


def run_config(a) -> dict:
    """The hashed part of the configuration (paths and thread count excluded)."""
    skip = {"out", "plot", "config", "threads", "infile"}
    d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(a).items() if k not in skip}
    if getattr(a, "infile", None):
        d["infile"] = Path(a.infile).name
    return d


def _models(a):
    p = GeoParams(lambda3=-a.model_alpha, theta=a.model_theta)
    return p, one_d.MapModel(alpha=a.model_alpha, theta=a.model_theta)


# -- subcommands -------------------------------------------------------------------

def cmd_ode(a, cfg):
    op = OdeParams(a.ode_a, a.ode_r, a.ode_b)
    pts = ode_orbit(op, a.x0, a.dt, a.steps, a.transient)
    out = a.out or "cloud.csv"
    io.write_points(out, pts, cfg)
    return f"ode: {pts.shape[0]} points (dt={a.dt}) -> {out}"


def cmd_geo(a, cfg):
    p = GeoParams.from_json(a.params) if a.params else _models(a)[0]
    bad = validate_params(p)
    if bad:
        raise ParameterError(f"invalid parameters: {bad}")
    rng = np.random.default_rng(a.rng_seed)
    seeds = rng.uniform(-0.5, 0.5, (a.seeds, 2))
    orb = poincare_orbit(p, seeds, a.horizon, singular_tol=spectra_dyn.SINGULAR_TOL)
    pts = orb[1:].reshape(-1, 2)
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    out = a.out or "section.csv"
    io.write_points(out, pts, cfg, header=("x", "y"))
    return f"geo: alpha={p.alpha:.6g} beta={p.beta:.6g}, {pts.shape[0]} section points -> {out}"


def cmd_map_check(a, cfg):
    m = one_d.MapModel(alpha=a.model_alpha, theta=a.model_theta).with_cut(margin=a.margin)
    props = one_d.check_properties(m)
    zp = one_d.zero_preimages(m)
    mu = one_d.ulam_measure(m, a.bins)
    doc = {"properties": props, "kappa": m.kappa, "zero_preimages": zp._asdict(),
           "r2": one_d.r2_check(m), "aleo_constants": m.aleo_constants,
           "measure": {k: v for k, v in mu.to_dict().items() if k != "masses"}}
    out = a.out or "map_check.json"
    io.write_json(out, doc, cfg)
    if a.plot:
        io.emit_plot_data(mu, a.plot, cfg)
    ok = all(v for k, v in props.items() if isinstance(v, bool))
    return (f"map-check: eta={props['eta']:.6f} C={props['C']:.6f} C1={props['C1']:.6f} "
            f"kappa={m.kappa:.7f} a={m.a:.7f} properties={'ok' if ok else 'FAILED'} -> {out}")


def cmd_cantor(a, cfg):
    m = one_d.MapModel(alpha=a.model_alpha, theta=a.model_theta).with_cut()
    out = Path(a.out or "cantor.json")
    if a.mode == "direct":
        spec = cantor.build_direct_cantor(m, a.delta, a.depth)
        log = None
    else:
        try:
            spec, log = cantor.build_theorem_cantor(m, a.k, m_cap=a.m_cap, seed=a.rng_seed)
        except GeoLorenzError as e:
            if getattr(e, "log", None) is not None:
                io.write_json(out.with_suffix(".log.json"), {"log": e.log.to_dict()}, cfg)
            raise
    problems = spec.validate(m)
    io.write_json(out, {"spec": spec.to_dict(), "problems": problems}, cfg)
    if log is not None:
        io.write_json(out.with_suffix(".log.json"), {"log": log.to_dict()}, cfg)
    d1 = fractal_dim.d1_bounds(spec)
    return (f"cantor[{a.mode}]: {len(spec.branches)} branches, d_low={d1.d_low:.6f} "
            f"d_up={d1.d_up:.6f}, problems={len(problems)} -> {out}")


def cmd_dim(a, cfg):
    if a.dim_command == "box":
        pts = io.read_points(a.infile)
        scales = fractal_dim.default_scales(pts, a.scales, a.decades)
        series = fractal_dim.box_dimension(pts, scales, threads=a.threads)
        out = a.out or "boxcount.json"
        io.write_json(out, {"slope": series.slope, "residual": series.residual,
                            "window": list(series.window), "rows": series.rows(),
                            "points": int(pts.shape[0])}, cfg)
        if a.plot:
            io.emit_plot_data(series, a.plot, cfg)
        return f"dim box: slope={series.slope:.4f} (rms {series.residual:.2g}) over {len(scales)} scales -> {out}"
    if a.dim_command == "moran":
        d = fractal_dim.moran_solve(a.values, a.mode)
        if a.out:
            io.write_json(a.out, {"d": d}, cfg)
        return f"dim moran: d={d:.12f}"
    m = one_d.MapModel(alpha=a.model_alpha, theta=a.model_theta).with_cut()
    if a.infile:
        spec = cantor.CantorSpec.from_dict(json.loads(Path(a.infile).read_text())["spec"])
    else:
        spec = cantor.build_direct_cantor(m, a.delta, a.depth)
    d1 = fractal_dim.d1_bounds(spec)
    box = fractal_dim.cantor_box_dimension(m, spec)
    rep = fractal_dim.attractor_report(d1, a.stable_dim, "flag" if a.stable_dim else "none")
    out = a.out or "cantor_dim.json"
    io.write_json(out, {"d1": d1.to_dict(), "box_slope": box.slope, "attractor": rep}, cfg)
    if a.plot:
        io.emit_plot_data(box, a.plot, cfg)
    return (f"dim cantor: d_low={d1.d_low:.6f} box={box.slope:.6f} d_up={d1.d_up:.6f} "
            f"flow>2 {'certified' if rep['certified'] else 'not certified'} -> {out}")


def cmd_spectra_dyn(a, cfg):
    p, _ = _models(a)
    rep = spectra_dyn.spectrum_sample(p, a.function, a.seeds, a.horizon, a.rng_seed,
                                      system=a.system, variant=a.variant)
    out = a.out or "spectrum.json"
    io.write_json(out, rep.to_dict(), cfg)
    if a.plot:
        io.emit_plot_data(rep, a.plot, cfg)
    return (f"spectra-dyn[{a.system},{a.variant}]: {rep.values.size} values in "
            f"[{rep.values.min():.6f}, {rep.values.max():.6f}], "
            f"{len(rep.intervals)} runs, {rep.failures} failures -> {out}")


def cmd_spectra_cf(a, cfg):
    c = a.cf_command
    if c == "head":
        head = spectra_cf.enumerate_head(a.max_period, a.alphabet_max)
        if a.out:
            io.emit_plot_data(head, a.out, cfg)
        for sv in head:
            print(f"{sv.value:.12f}  {sv.witness}  k^2={spectra_cf.rational_square(sv.value)}")
        return f"spectra-cf head: {len(head)} values below 3"
    if c == "hall":
        res = spectra_cf.hall_sum_check(a.resolution)
        if a.out:
            io.write_json(a.out, res.to_dict(), cfg)
        lo, hi = res.target
        return (f"spectra-cf hall: [{lo:.6f}, {hi:.6f}] "
                f"{'covered' if res.verified else 'NOT covered'} at resolution {a.resolution:g} "
                f"({res.note})")
    if c == "freiman":
        v = spectra_cf.freiman_constant()
        if a.out:
            io.write_json(a.out, {"freiman": v}, cfg)
        return f"spectra-cf freiman: {v:.12f}"
    sv = spectra_cf.perron_k(spectra_cf.CFWord.parse(a.word))
    if a.out:
        io.emit_plot_data([sv], a.out, cfg)
    return f"spectra-cf perron: k({sv.witness})={sv.value:.12f} at shift {sv.shift}"


def cmd_report(a, cfg):
    m = one_d.MapModel(alpha=a.model_alpha, theta=a.model_theta).with_cut()
    spec = cantor.build_direct_cantor(m, a.delta, a.depth)
    d1 = fractal_dim.d1_bounds(spec)
    head = spectra_cf.enumerate_head(4, 2)
    hall = spectra_cf.hall_sum_check(1e-2)
    doc = {
        "map": {"eta": m.eta, "C": m.C, "C1": m.C1, "kappa": m.kappa, "a": m.a,
                "H": cantor.distortion_H(m), **{f"aleo_{k}": v for k, v in m.aleo_constants.items()}},
        "properties": one_d.check_properties(m),
        "direct_cantor": {"branches": len(spec.branches), **d1.to_dict()},
        "attractor": fractal_dim.attractor_report(d1, a.stable_dim,
                                                   "flag" if a.stable_dim else "none"),
        "markov_head": [sv.row() for sv in head],
        "hall": hall.to_dict(),
        "freiman": spectra_cf.freiman_constant(),
    }
    out = a.out or "report.json"
    io.write_json(out, doc, cfg)
    return (f"report: eta={m.eta:.6f} d_low={d1.d_low:.6f} head={len(head)} "
            f"hall={'ok' if hall.verified else 'FAILED'} -> {out}")


COMMANDS = {"ode": cmd_ode, "geo": cmd_geo, "map-check": cmd_map_check, "cantor": cmd_cantor,
            "dim": cmd_dim, "spectra-dyn": cmd_spectra_dyn, "spectra-cf": cmd_spectra_cf,
            "report": cmd_report}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = load_config(argv)
    except ConfigurationError as e:
        print(f"geolorenz: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = run_config(args)
    try:
        summary = COMMANDS[args.command](args, cfg)
    except ConfigurationError as e:
        print(f"geolorenz: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeoLorenzError, ValueError, ArithmeticError, OSError) as e:
        print(f"geolorenz: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    print(summary)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

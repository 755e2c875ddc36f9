"""Command-line front end.

Three subcommands: ``generate`` writes a synthetic solution field as CSV,
``discover`` runs equation discovery on a field CSV, ``bench`` executes
the scripted benchmark experiments. All randomness flows from ``--seed``;
when omitted, an OS-derived seed is drawn and logged so the run stays
reproducible after the fact.
"""

from __future__ import annotations

import argparse
import secrets
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench
from .baseline_sparse import discover_baseline, enumerate_library
from .config import RunConfig, load_config, with_seed
from .errors import DiscoveryError
from .evolution import run_epde
from .grid_field import NoiseSpec, add_noise, read_field_csv, write_field_csv
from .pde_solvers import BurgersParams, KdvParams, WaveParams, \
    burgers_validation_params, kdv_validation_params, solve_burgers, \
    solve_kdv, solve_wave, wave_validation_params


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    drawn = secrets.randbits(32)
    print(f"seed not given; using OS-derived seed {drawn}", file=sys.stderr)
    return drawn


def cmd_generate(args) -> int:
    try:
        if args.equation == "wave":
            params = wave_validation_params(c=args.c, nt=args.nt, nx=args.nx,
                                            dt=args.dt, dx=args.dx)
            field = solve_wave(params)
        elif args.equation == "burgers":
            params = burgers_validation_params(mu=args.mu, nt=args.nt,
                                               nx=args.nx)
            field = solve_burgers(params)
        else:
            params = kdv_validation_params(nt=args.nt, nx=args.nx)
            field = solve_kdv(params)
        if args.noise > 0:
            field = add_noise(field, NoiseSpec(fraction=args.noise,
                                               seed=_resolve_seed(args.seed)))
        write_field_csv(field, args.output)
    except (ValueError, DiscoveryError, OSError) as exc:
        return _fail(str(exc))
    g = field.grid
    print(f"wrote {args.output}: {args.equation} field, "
          f"nt={g.nt} nx={g.nx} dt={g.dt:g} dx={g.dx:g}, "
          f"max|u|={np.max(np.abs(field.values)):.4g}")
    return 0


def cmd_discover(args) -> int:
    try:
        field = read_field_csv(args.input)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = with_seed(cfg, _resolve_seed(args.seed))
    derivatives = args.derivatives or cfg.run.get("derivatives", "fd")
    window = cfg.run.get("poly_window", 15)
    degree = cfg.run.get("poly_degree", 4)

    try:
        if args.baseline:
            from .differentiation import fd_derivatives, poly_derivatives
            stack = (poly_derivatives(field, window, degree)
                     if derivatives == "poly" else fd_derivatives(field))
            eq = discover_baseline(
                field, enumerate_library(), cfg.evolution.regression,
                use_ridge_alpha=cfg.run.get("ridge_alpha"), stack=stack)
        else:
            eq = run_epde(field, cfg.evolution,
                          derivative_method=derivatives,
                          poly_window=window, poly_degree=degree,
                          verbose=args.verbose)
    except DiscoveryError as exc:
        return _fail(f"discovery failed: {exc}")
    if eq.is_degenerate:
        return _fail("degenerate discovery: the regression kept no terms")
    print(eq.render())
    print(f"residual_norm = {eq.residual_norm:.6g}")
    if eq.provenance:
        print(f"seed = {eq.provenance['seed']}  "
              f"epochs = {eq.provenance['epochs_run']}")
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = with_seed(cfg, _resolve_seed(args.seed))
    outdir = Path(args.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(str(exc))

    reports = []
    try:
        if args.experiment == "table2":
            equations = [args.equation] if args.equation else \
                ["wave", "burgers", "kdv"]
            for equation in equations:
                size = args.kdv_size if equation == "kdv" else None
                reports.append(bench.run_coefficient_table(
                    equation, cfg.evolution, grid_points=size,
                    config_text=cfg.text))
        elif args.experiment == "table3":
            equation = args.equation or "burgers"
            fractions = _parse_floats(args.fractions) if args.fractions \
                else bench.DEFAULT_FRACTIONS
            size = args.kdv_size if equation == "kdv" else None
            reports.append(bench.run_data_fraction_study(
                equation, fractions, cfg.evolution, n_seeds=args.repeats,
                placement=cfg.run.get("placement", "centered"),
                grid_points=size, config_text=cfg.text))
        else:
            levels = _parse_floats(args.levels) if args.levels \
                else bench.DEFAULT_NOISE_LEVELS
            reports.append(bench.run_noise_sweep(
                levels=levels, repeats=args.repeats, cfg=cfg.evolution,
                ridge_alpha=cfg.run.get("ridge_alpha", 1e-6),
                config_text=cfg.text))
    except (DiscoveryError, ValueError) as exc:
        for report in reports:
            partial = outdir / f"{report.experiment}.csv.partial"
            report.to_csv(partial)
        return _fail(f"benchmark trial failed: {exc}")

    for report in reports:
        path = outdir / f"{report.experiment}.csv"
        report.to_csv(path)
        if args.json:
            (outdir / f"{report.experiment}.json").write_text(
                report.to_json())
        print(f"{report.experiment}: {len(report.rows)} rows -> {path}")
        for key, val in sorted(report.summary.items()):
            print(f"  {key} = {val}")
    return 0


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evopde",
        description="Evolutionary discovery of PDEs from gridded field data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="solve a validation equation "
                                          "and write the field as CSV")
    gen.add_argument("equation", choices=["wave", "burgers", "kdv"])
    gen.add_argument("--nt", type=int, default=None)
    gen.add_argument("--nx", type=int, default=None)
    gen.add_argument("--dt", type=float, default=0.1)
    gen.add_argument("--dx", type=float, default=0.1)
    gen.add_argument("--c", type=float, default=2.0,
                     help="wave speed parameter (wave only)")
    gen.add_argument("--mu", type=float, default=0.1,
                     help="viscosity (burgers only)")
    gen.add_argument("--noise", type=float, default=0.0,
                     help="noise sigma as a fraction of max |u|")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("-o", "--output", required=True)

    dis = sub.add_parser("discover", help="discover the governing equation "
                                          "of a field CSV")
    dis.add_argument("input")
    dis.add_argument("--config", default=None,
                     help="flat key = value config file")
    dis.add_argument("--seed", type=int, default=None)
    dis.add_argument("--baseline", action="store_true",
                     help="use the full-library sparse baseline instead of "
                          "the evolutionary search")
    dis.add_argument("--derivatives", choices=["fd", "poly"], default=None)
    dis.add_argument("--verbose", action="store_true",
                     help="log per-epoch progress to stderr")

    ben = sub.add_parser("bench", help="run a scripted benchmark experiment")
    ben.add_argument("experiment", choices=["table2", "table3", "noise-sweep"])
    ben.add_argument("--equation", choices=["wave", "burgers", "kdv"],
                     default=None)
    ben.add_argument("--fractions", default=None,
                     help="comma-separated data fractions (table3)")
    ben.add_argument("--levels", default=None,
                     help="comma-separated noise fractions (noise-sweep)")
    ben.add_argument("--repeats", type=int, default=5,
                     help="seeds per parameter point")
    ben.add_argument("--kdv-size", type=int, default=None,
                     help="override the KdV grid side (e.g. 512 for CI)")
    ben.add_argument("--config", default=None)
    ben.add_argument("--seed", type=int, default=None)
    ben.add_argument("--json", action="store_true",
                     help="also write reports as JSON")
    ben.add_argument("--output-dir", default="reports")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate":
        if args.nt is None:
            args.nt = {"wave": 100, "burgers": 256, "kdv": 1024}[args.equation]
        if args.nx is None:
            args.nx = args.nt
        return cmd_generate(args)
    if args.command == "discover":
        return cmd_discover(args)
    return cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())

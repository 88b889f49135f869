"""Command line interface.

Subcommands:

    simulate  sample one field realization to an XGRD file
    measure   excursion volumes / perimeter / crossings of an XGRD field
    variance  asymptotic variances, covariance matrices, surface means
    test      Gaussianity test of an XGRD field against a null model
    mc        run a Monte Carlo experiment from a config file
"""

from __future__ import annotations

import argparse
import json
import sys

from . import gridio
from .asymptotics import (
    asymptotic_cov_matrix,
    asymptotic_variance,
    asymptotic_variance_lattice,
    mean_surface_area,
    windowed_variance,
)
from .geometry import measure
from .harness import load_experiment_config, run_experiment
from .inference import EstimatorConfig, gaussianity_test
from .models import (
    field_kind,
    gaussian_spec_from_config,
    load_config,
    shot_noise_spec_from_config,
    window_from_config,
)
from .simulate import (
    SeedSpec,
    simulate_gaussian,
    simulate_shot_noise,
    simulate_white_noise,
)


def _parse_levels(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    window = window_from_config(cfg)
    seed = SeedSpec(master_seed=args.seed, stream_index=args.stream)
    kind = field_kind(cfg)
    if kind == "gaussian":
        field = simulate_gaussian(gaussian_spec_from_config(cfg), window, seed)
    elif kind == "white_noise":
        field = simulate_white_noise(gaussian_spec_from_config(cfg), window, seed)
    else:
        field = simulate_shot_noise(shot_noise_spec_from_config(cfg), window, seed)
    gridio.write_grid(field, args.out)
    print(f"wrote {args.out}: {kind} field, dims {window.dims}, h={window.spacing}")
    return 0


def _cmd_measure(args) -> int:
    field = gridio.read_grid(args.field)
    levels = _parse_levels(args.levels)
    results = measure(field, levels, with_perimeter=args.perimeter)
    report = gridio.measure_report(field.window, results)
    gridio.write_report(report, args.out)
    for m in results:
        extra = ""
        if m.perimeter is not None:
            extra += f" perimeter={m.perimeter:.6g}"
        if m.crossings is not None:
            extra += f" crossings={m.crossings}"
        print(f"u={m.level:g}: volume={m.volume:.6g}{extra}")
    return 0


def _cmd_variance(args) -> int:
    cfg = load_config(args.config)
    spec = gaussian_spec_from_config(cfg)
    out: dict = {
        "schema": gridio.VARIANCE_SCHEMA,
        "model": {k: cfg[k] for k in sorted(cfg)},
        "tol": args.tol,
    }
    if args.level is not None:
        rep = asymptotic_variance(spec, args.level, tol=args.tol)
        out["level"] = args.level
        out["asymptotic_variance"] = {
            "value": rep.value,
            "truncation_radius": rep.truncation_radius,
            "quadrature_error_estimate": rep.quadrature_error_estimate,
        }
        if args.lattice is not None:
            lat = asymptotic_variance_lattice(spec, args.level, args.lattice)
            out["asymptotic_variance_lattice"] = {
                "value": lat.value,
                "spacing": args.lattice,
                "truncation_radius": lat.truncation_radius,
            }
        if args.windowed is not None:
            wv = windowed_variance(spec, args.level, args.windowed, tol=args.tol)
            out["windowed_variance"] = {
                "value": wv.value,
                "window_size": args.windowed,
            }
        if args.surface:
            out["mean_surface_area_per_unit_volume"] = mean_surface_area(
                spec, args.level, 1.0
            )
    if args.matrix:
        levels = _parse_levels(args.matrix)
        mat = asymptotic_cov_matrix(spec, levels, tol=args.tol)
        out["cov_matrix"] = {"levels": levels, "entries": mat.entries.tolist()}
    if args.level is None and not args.matrix:
        raise SystemExit("variance: need --level and/or --matrix")
    gridio.write_report(out, args.out)
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_test(args) -> int:
    field = gridio.read_grid(args.field)
    null_spec = gaussian_spec_from_config(load_config(args.null), dim=field.window.d)
    levels = _parse_levels(args.levels)
    cfg = EstimatorConfig(block_side=args.block) if args.block else None
    report = gaussianity_test(field, null_spec, levels, alpha=args.alpha, cfg=cfg)
    gridio.write_report(report.to_json_dict(), args.out)
    print(
        f"T={report.statistic:.4f} df={report.df} p={report.p_value:.4f} "
        f"-> {report.decision}"
    )
    return 0


def _cmd_mc(args) -> int:
    cfg = load_experiment_config(args.config)
    report = run_experiment(cfg, raw_dir=args.raw)
    gridio.write_report(report.to_json_dict(), args.out)
    print(
        f"{cfg.kind}: {cfg.replications} replications x "
        f"{len(cfg.windows)} window(s) in {report.runtime_seconds:.1f}s "
        f"-> {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="excursions",
        description="Stationary random fields, excursion geometry, CLT checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample one field to an XGRD file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("measure", help="excursion functionals of an XGRD field")
    p.add_argument("--field", required=True)
    p.add_argument("--levels", required=True)
    p.add_argument("--perimeter", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("variance", help="asymptotic variances by quadrature")
    p.add_argument("--config", required=True)
    p.add_argument("--level", type=float)
    p.add_argument("--lattice", type=float, metavar="H")
    p.add_argument("--matrix", metavar="U1,U2,...")
    p.add_argument("--windowed", type=float, metavar="N")
    p.add_argument("--surface", action="store_true")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_variance)

    p = sub.add_parser("test", help="Gaussianity test of an XGRD field")
    p.add_argument("--field", required=True)
    p.add_argument("--null", required=True, help="null model config file")
    p.add_argument("--levels", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--block", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("mc", help="run a Monte Carlo experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--raw", help="directory for per-replication CSVs")
    p.set_defaults(func=_cmd_mc)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

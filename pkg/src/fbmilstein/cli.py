"""Command-line front end.

Every subcommand writes its artifacts under --out-dir only, records the fully
resolved configuration plus library version in a manifest.json, and exits 0
on success, 2 on parameter errors (one-line diagnostic on stderr) and 1 on
internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import DomainError, ParameterError
from .fbm import sample_fbm, write_path_binary, write_path_csv
from .harness import (ExperimentConfig, config_from_mapping, parse_config_file,
                      run_configured_scheme, run_euler_divergence,
                      run_holder_optimality, run_levy_area_rate,
                      run_scheme_convergence, run_wongzakai_gap,
                      write_divergence_artifacts, write_report_artifacts)
from .levyarea import area_cross_covariance_converged
from .plotting import render_path_plot, render_trajectory_plot
from .schemes import write_trajectory_csv

__all__ = ["main", "dispatch"]


def _write_manifest(out_dir: Path, subcommand: str, config: dict) -> None:
    manifest = {
        "tool": "fbmilstein",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _resolve_out_dir(args, cfg_out_dir: str | None = None) -> Path:
    out = Path(args.out_dir or cfg_out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _load_config(args, **extra) -> "ExperimentConfig":
    mapping = parse_config_file(args.config) if args.config else {}
    overrides = {
        "hurst": args.hurst,
        "horizon": args.horizon,
        "field": args.field,
        "gamma": args.gamma,
        "n_min_exp": args.n_min_exp,
        "n_max_exp": args.n_max_exp,
        "ref_factor": args.ref_factor,
        "num_paths": args.num_paths,
        "scheme": args.scheme,
        "seed": args.seed,
        "out_dir": args.out_dir,
    }
    if args.a is not None:
        overrides["a"] = tuple(float(x) for x in args.a.split(","))
    overrides.update(extra)
    return config_from_mapping(mapping, **overrides)


def _cmd_fbm_sample(args) -> int:
    out = _resolve_out_dir(args)
    seed = _seed(args)
    path = sample_fbm(args.hurst, args.horizon, args.n, args.dims,
                      seed, args.stream_id)
    write_path_binary(path, out / "path.bin")
    write_path_csv(path, out / "path.csv")
    render_path_plot(path, out / "path.png")
    _write_manifest(out, "fbm-sample", {
        "hurst": args.hurst, "horizon": args.horizon, "n": args.n,
        "dims": args.dims, "seed": seed, "stream_id": args.stream_id,
    })
    print(f"wrote path.bin, path.csv, path.png to {out}")
    return 0


def _cmd_simulate(args) -> int:
    out = _resolve_out_dir(args)
    seed = _seed(args)
    a = tuple(float(x) for x in args.a.split(",")) if args.a else None
    cfg = ExperimentConfig(
        hurst=args.hurst, horizon=args.horizon, field=args.field, a=a,
        scheme=args.scheme, seed=seed, substeps=args.substeps,
        n_min_exp=1, n_max_exp=1,
    )
    field = cfg.make_field()
    if args.scheme == "euler" and args.hurst < 0.5:
        print("warning: the first-order scheme does not converge for "
              "hurst < 1/2 on multiplicative noise; terminal values decay "
              "to zero as n grows", file=sys.stderr)
    path = sample_fbm(args.hurst, args.horizon, args.n, field.dim_noise,
                      seed, args.stream_id)
    traj = run_configured_scheme(cfg, field, path, cfg.initial_state())
    write_trajectory_csv(traj, out / "trajectory.csv")
    render_trajectory_plot(traj, out / "trajectory.png")
    _write_manifest(out, "simulate", {
        "hurst": args.hurst, "horizon": args.horizon, "field": args.field,
        "a": list(cfg.initial_state()), "scheme": args.scheme, "n": args.n,
        "seed": seed, "stream_id": args.stream_id,
        "substeps": args.substeps,
    })
    if traj.first_invalid is not None:
        print(f"warning: trajectory exploded at step {traj.first_invalid}",
              file=sys.stderr)
    print(f"wrote trajectory.csv, trajectory.png to {out}")
    return 0


def _cmd_convergence(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out_dir(args, cfg.out_dir)
    report = run_scheme_convergence(cfg, threads=args.threads)
    write_report_artifacts(report, out)
    _write_manifest(out, "convergence", dict(report.config, threads=args.threads))
    slope = "n/a" if report.slope is None else f"{report.slope:.3f}"
    print(f"scheme={cfg.scheme} H={cfg.hurst}: slope {slope} "
          f"(theory {report.theory_slope}), pass={report.passed}")
    return 0


def _cmd_holder_opt(args) -> int:
    cfg = _load_config(args, field="purenoise")
    out = _resolve_out_dir(args, cfg.out_dir)
    report = run_holder_optimality(cfg, threads=args.threads)
    write_report_artifacts(report, out)
    _write_manifest(out, "holder-opt", dict(report.config, threads=args.threads))
    slope = "n/a" if report.slope is None else f"{report.slope:.3f}"
    print(f"H={cfg.hurst} gamma={cfg.gamma}: slope {slope} "
          f"(theory {report.theory_slope}), pass={report.passed}")
    return 0


def _cmd_levy_rate(args) -> int:
    out = _resolve_out_dir(args)
    resolutions = [2**k for k in range(args.n_min_exp, args.n_max_exp + 1)]
    report = run_levy_area_rate(args.hurst, args.horizon, resolutions,
                                args.reps, _seed(args), threads=args.threads)
    write_report_artifacts(report, out)
    _write_manifest(out, "levy-rate", dict(report.config, threads=args.threads))
    print(f"H={args.hurst}: RMS slope {report.slope:.3f} "
          f"(theory {report.theory_slope}), pass={report.passed}")
    return 0


def _cmd_euler_div(args) -> int:
    out = _resolve_out_dir(args)
    resolutions = [2**k for k in range(args.n_min_exp, args.n_max_exp + 1)]
    report = run_euler_divergence(args.hurst, resolutions, args.num_paths,
                                  _seed(args), threads=args.threads)
    write_divergence_artifacts(report, out)
    _write_manifest(out, "euler-div", {
        "hurst": args.hurst, "n_min_exp": args.n_min_exp,
        "n_max_exp": args.n_max_exp, "num_paths": args.num_paths,
        "seed": _seed(args), "threads": args.threads,
    })
    last = report.resolutions[-1]
    print(f"median |Y^n(T)| at n={last}: {report.median_euler[last]:.4g} "
          f"vs exact scale {report.median_exact:.4g}, pass={report.passed}")
    return 0


def _cmd_wz_gap(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out_dir(args, cfg.out_dir)
    report = run_wongzakai_gap(cfg, threads=args.threads, substeps=args.substeps)
    write_report_artifacts(report, out)
    _write_manifest(out, "wz-gap", dict(report.config, threads=args.threads))
    slope = "n/a" if report.slope is None else f"{report.slope:.3f}"
    print(f"H={cfg.hurst} substeps={args.substeps}: gap slope {slope} "
          f"(theory {report.theory_slope}), pass={report.passed}")
    return 0


def _cmd_area_cov(args) -> int:
    out = _resolve_out_dir(args)
    value, order = area_cross_covariance_converged(
        args.s1, args.t1, args.s2, args.t2, args.hurst,
        start_order=args.order, rtol=args.rtol)
    result = {"hurst": args.hurst, "s1": args.s1, "t1": args.t1,
              "s2": args.s2, "t2": args.t2, "value": value,
              "converged_order": order, "rtol": args.rtol}
    with open(out / "area_cov.json", "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    _write_manifest(out, "area-cov", result)
    print(f"area covariance = {value:.12g} (order {order})")
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--hurst", type=float)
    parser.add_argument("--horizon", type=float)
    parser.add_argument("--field")
    parser.add_argument("--a", help="comma-separated initial state")
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--n-min-exp", type=int, dest="n_min_exp")
    parser.add_argument("--n-max-exp", type=int, dest="n_max_exp")
    parser.add_argument("--ref-factor", type=int, dest="ref_factor")
    parser.add_argument("--num-paths", type=int, dest="num_paths")
    parser.add_argument("--scheme")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbmilstein",
        description="Schemes and convergence experiments for SDEs driven by "
                    "multidimensional fractional Brownian motion",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=None,
                        help="global seed (default 0)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for Monte Carlo experiments")
    parser.add_argument("--out-dir", default=None, dest="out_dir",
                        help="directory all artifacts are written to "
                             "(default: config out_dir, else ./out)")

    # The global flags are also accepted after the subcommand name.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fbm-sample", help="sample one fBm path to disk",
                       parents=[common])
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dims", type=int, default=1)
    p.add_argument("--stream-id", type=int, default=0, dest="stream_id")
    p.set_defaults(handler=_cmd_fbm_sample)

    p = sub.add_parser("simulate", help="run one scheme on one sampled path", parents=[common])
    p.add_argument("--field", required=True)
    p.add_argument("--scheme", default="milstein")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--a", help="comma-separated initial state")
    p.add_argument("--stream-id", type=int, default=0, dest="stream_id")
    p.add_argument("--substeps", type=int, default=1)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("convergence", help="scheme error vs fine reference", parents=[common])
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_convergence)

    p = sub.add_parser("holder-opt",
                       help="Hoelder-norm interpolation error on pure noise", parents=[common])
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_holder_opt)

    p = sub.add_parser("levy-rate", help="Monte Carlo area approximation rate", parents=[common])
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--n-min-exp", type=int, default=3, dest="n_min_exp")
    p.add_argument("--n-max-exp", type=int, default=10, dest="n_max_exp")
    p.add_argument("--reps", type=int, default=2000)
    p.set_defaults(handler=_cmd_levy_rate)

    p = sub.add_parser("euler-div",
                       help="first-order terminal collapse on dY = Y dB", parents=[common])
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--n-min-exp", type=int, default=4, dest="n_min_exp")
    p.add_argument("--n-max-exp", type=int, default=12, dest="n_max_exp")
    p.add_argument("--num-paths", type=int, default=100, dest="num_paths")
    p.set_defaults(handler=_cmd_euler_div)

    p = sub.add_parser("wz-gap",
                       help="gap between the product scheme and fine "
                            "integration of the interpolant ODE", parents=[common])
    _add_config_flags(p)
    p.add_argument("--substeps", type=int, default=256)
    p.set_defaults(handler=_cmd_wz_gap)

    p = sub.add_parser("area-cov",
                       help="area covariance over disjoint intervals by "
                            "quadrature (H > 1/2)", parents=[common])
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--s1", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--s2", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--order", type=int, default=32)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.set_defaults(handler=_cmd_area_cov)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    """Parse arguments and run the selected subcommand.

    Returns the process exit code: 0 on success, 2 on parameter errors,
    1 on internal errors.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ParameterError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

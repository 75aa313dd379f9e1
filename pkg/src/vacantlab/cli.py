"""Command-line front end: solvers and experiments behind reproducible
seeds with machine-readable output (JSON for scalar reports, CSV for row
streams) and a replayable run manifest next to every output.

Exit codes: 0 success, 1 runtime or solver error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field

from . import __version__, critical, experiments, exploration, gw
from .engine import derive_stream

_JSON_KW = dict(indent=2, sort_keys=False, ensure_ascii=False)


@dataclass
class RunManifest:
    """Replay record written next to every output: re-running ``argv``
    reproduces the output bytes (the duration field is informational)."""

    command: str
    argv: list
    flags: dict
    root_seed: int | None
    version: str
    duration_s: float
    outputs: list = field(default_factory=list)


def _emit(obj, out_path: str | None) -> list[str]:
    text = json.dumps(obj, **_JSON_KW) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return [out_path]
    sys.stdout.write(text)
    return []


def _write_manifest(command: str, args: argparse.Namespace, argv: list[str],
                    started: float, outputs: list[str]) -> None:
    path = getattr(args, "manifest", None)
    if path is None:
        base = getattr(args, "out", None)
        path = f"{base}.manifest.json" if base else f"vacantlab-{command}-manifest.json"
    manifest = RunManifest(
        command=command,
        argv=argv,
        flags={k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest")},
        root_seed=getattr(args, "seed", None),
        version=__version__,
        duration_s=round(time.time() - started, 3),
        outputs=outputs,
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(asdict(manifest), **_JSON_KW) + "\n")


def _estimate_dict(est) -> dict:
    return {
        "mean": est.mean,
        "std_error": est.std_error,
        "n_samples": est.n_samples,
        "ci95_low": est.ci95_low,
        "ci95_high": est.ci95_high,
    }


def _cmd_solve(args) -> list[str]:
    if args.rho <= 1.0:
        raise ValueError("subcritical: rho must exceed 1")
    if args.radius >= args.depth:
        raise ValueError("radius exceeds truncation")
    root = derive_stream(args.seed, 0)
    xi = critical.solve_xi(args.rho, args.tol)
    caps = gw.capacity_samples(args.rho, args.radius, args.trees, root.substream(901))
    u_star = critical.solve_u_star(args.rho, caps.functional)
    solution = critical.CriticalSolution(
        rho=args.rho, xi=xi, u_star=u_star,
        functional_at={args.u: caps.functional(args.u)} if args.u is not None else {},
        solver_tolerance=args.tol)
    out = {
        "rho": solution.rho,
        "xi": solution.xi,
        "u_star": {"value": u_star.u_star, "ci95_low": u_star.ci_low, "ci95_high": u_star.ci_high},
        "zeta": None,
        "functional": None,
        "tol": solution.solver_tolerance,
        "trees": args.trees,
        "radius": args.radius,
    }
    if args.u is not None:
        est = solution.functional_at[args.u]
        out["functional"] = _estimate_dict(est)
        mu = args.rho * (xi * est.mean + 1.0 - xi)
        out["zeta"] = critical.solve_zeta(args.u, args.rho, est.mean, args.tol) if mu > 1.0 else 0.0
    return _emit(out, getattr(args, "out", None))


def _parse_u_grid(args) -> list[float]:
    if args.u is not None:
        return [args.u]
    if args.u_min is None or args.u_max is None or args.u_steps is None:
        raise ValueError("need --u or all of --u-min/--u-max/--u-steps")
    if args.u_steps < 2 or args.u_max < args.u_min:
        raise ValueError("invalid u grid")
    step = (args.u_max - args.u_min) / (args.u_steps - 1)
    return [args.u_min + i * step for i in range(args.u_steps)]


def _cmd_simulate(args) -> list[str]:
    root = derive_stream(args.seed, 0)
    grid = _parse_u_grid(args)
    records = experiments.sweep_vacant_structure(
        args.n, args.rho, grid, args.trials, root,
        n_trees=args.trees, radius=args.radius)
    outputs = []
    if args.format == "csv":
        text = experiments.sweep_records_to_csv(records)
    else:
        text = json.dumps([asdict(r) for r in records], **_JSON_KW) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        outputs.append(args.out)
    else:
        sys.stdout.write(text)
    return outputs


def _cmd_er_check(args) -> list[str]:
    root = derive_stream(args.seed, 0)
    report = exploration.er_law_check(args.n, args.rho, args.u, args.trials, root.substream(0))
    out = {
        "ks_pvalue_edges": report.ks_pvalue_edges,
        "degree_chisq_pvalue": report.degree_chisq_pvalue,
        "mean_vacant_mean_degree": report.mean_vacant_mean_degree,
        "mean_vacant_fraction": report.mean_vacant_fraction,
        "n_trials": report.n_trials,
    }
    if report.edge_test_skipped:
        out["note"] = report.note
    return _emit(out, getattr(args, "out", None))


def _cmd_capacity(args) -> list[str]:
    est = gw.mc_capacity_functional(args.u, args.rho, args.depth, args.radius,
                                    args.trees, derive_stream(args.seed, 0).substream(901))
    diag = est.estimate_at_radius_minus_5
    out = {
        "estimate": est.estimate.mean,
        "ci": [est.estimate.ci95_low, est.estimate.ci95_high],
        "estimate_at_radius_minus_5": diag.mean if diag else None,
        "n_aborted_trees": est.n_aborted_trees,
        "radius": est.radius,
        "trees": est.n_trees,
    }
    return _emit(out, getattr(args, "out", None))


def _cmd_hitting(args) -> list[str]:
    root = derive_stream(args.seed, 0)
    report = experiments.hitting_and_vacancy_report(
        args.n, args.rho, args.u, args.vertices, root,
        n_walks=args.walks, radius=args.radius)
    out = {
        "n": report.n,
        "rho": report.rho,
        "u": report.u,
        "t_steps": report.t_steps,
        "radius": report.radius,
        "mean_abs_error": report.mean_abs_error,
        "rows": [asdict(r) for r in report.rows],
    }
    return _emit(out, args.out)


def _cmd_size_check(args) -> list[str]:
    root = derive_stream(args.seed, 0)
    report = experiments.size_relation_check(args.n, args.rho, args.u, args.trials, root)
    out = {
        "mean_vbar": report.mean_vbar,
        "mean_v": report.mean_v,
        "gap": report.gap,
        "predicted_gap": report.predicted_gap,
        "n": report.n,
        "rho": report.rho,
        "u": report.u,
        "n_trials": report.n_trials,
    }
    return _emit(out, getattr(args, "out", None))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    p.add_argument("--manifest", type=str, default=None,
                   help="manifest path (default: alongside the output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vacantlab",
        description="Vacant-set phase transition experiments on sparse random graphs.")
    parser.add_argument("--version", action="version", version=f"vacantlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="critical quantities: xi, u_star, zeta, functional")
    p.add_argument("--rho", type=float, required=True, help="mean degree (> 1)")
    p.add_argument("--u", type=float, default=None, help="intensity at which to report zeta/functional")
    p.add_argument("--tol", type=float, default=1e-10, help="solver tolerance (default 1e-10)")
    p.add_argument("--trees", type=int, default=100_000, help="capacity samples (default 1e5)")
    p.add_argument("--depth", type=int, default=50, help="tree truncation depth (default 50)")
    p.add_argument("--radius", type=int, default=40, help="capacity radius (default 40)")
    p.add_argument("--out", type=str, default=None, help="write JSON here instead of stdout")
    _add_common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="vacant-structure sweep records")
    p.add_argument("--n", type=int, required=True, help="vertex count (>= 100)")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--u-min", dest="u_min", type=float, default=None)
    p.add_argument("--u-max", dest="u_max", type=float, default=None)
    p.add_argument("--u-steps", dest="u_steps", type=int, default=None)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--trees", type=int, default=100_000)
    p.add_argument("--radius", type=int, default=40)
    p.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("er-check", help="spatial Markov property law check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--trials", type=int, required=True, help=">= 50")
    p.add_argument("--out", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_er_check)

    p = sub.add_parser("capacity", help="capacity functional estimate")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--trees", type=int, default=100_000)
    p.add_argument("--depth", type=int, default=50)
    p.add_argument("--radius", type=int, default=40)
    p.add_argument("--out", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("hitting", help="per-vertex vacancy and hitting-tail diagnostics")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--vertices", type=int, default=20)
    p.add_argument("--walks", type=int, default=2000)
    p.add_argument("--radius", type=int, default=None, help="ball radius (default: measured-bias formula)")
    p.add_argument("--out", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_hitting)

    p = sub.add_parser("size-check", help="exploration vs walk vacant-size relation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--out", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_size_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.n < 100:
        parser.error("--n must be at least 100")
    if args.command == "er-check" and args.trials < 50:
        parser.error("--trials must be at least 50")
    if args.command == "simulate" and args.u is None and args.u_min is None:
        parser.error("need --u or --u-min/--u-max/--u-steps")
    started = time.time()
    try:
        outputs = args.func(args)
        _write_manifest(args.command, args, argv, started, outputs)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

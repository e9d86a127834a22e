"""Command-line entry point.

`mutsel <task> --config path [--out dir] [--force] [--no-plots]`

Tasks: validate, eigen, criteria, gap, evolve-linear, evolve-nonlinear,
reproduce-example1, reproduce-example2. Exit codes: 0 success, 2 config
error, 3 validation failure, 4 numerical failure, 5 reproduction-assertion
failure. Reports and CSVs are byte-stable for a fixed config and version;
wall-clock timing goes to the console only.
"""

from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np

from . import reproduce
from .config import REPRODUCE_TASKS, TASKS, RunConfig, build_u0, parse_config
from .criteria import TestSet, evaluate_criteria
from .dynamics import (
    default_dt,
    evolve_linear,
    evolve_nonlinear,
    fit_rate,
    mass_identity_defect,
)
from .eigensolver import adjoint_eigenpair, principal_eigenpair, verify_groundstate
from .errors import ConfigError, MutselError, ReproductionError, ValidationFailure
from .grid import Field, field_to_csv, mass
from .model import validate
from .operator import make_operator
from .report import (
    ReportBuilder,
    criteria_lines,
    eigen_lines,
    profile_to_csv,
    trace_lines,
    trace_to_csv,
)
from .spectral_gap import GapConfig, gap_lower_bound, phi_profile


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutsel",
        description="mutation-selection operator toolkit: eigenpairs,"
        " existence criteria, spectral-gap bounds, and evolution runs",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", default=None,
                       help="run-config file (required except for reproduce tasks)")
        p.add_argument("--out", default=None,
                       help="output directory (default: config-adjacent, timestamped)")
        p.add_argument("--force", action="store_true",
                       help="write into an existing non-empty output directory")
        p.add_argument("--no-plots", action="store_true",
                       help="skip PNG rendering, keep CSV and report")
    return parser


def _resolve_out(args, task: str) -> Path:
    if args.out is not None:
        out = Path(args.out)
    else:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        if args.config is not None:
            cfg = Path(args.config)
            out = cfg.resolve().parent / f"{cfg.stem}-{task}-{stamp}"
        else:
            out = Path.cwd() / f"{task}-{stamp}"
    if out.exists() and any(out.iterdir()) and not args.force:
        raise ConfigError(
            f"output directory {out} exists and is not empty; pass --force"
        )
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args, task: str) -> RunConfig | None:
    if args.config is None:
        if task in REPRODUCE_TASKS:
            return None
        raise ConfigError(f"task {task} requires --config")
    return parse_config(args.config)


def _validated_problem(cfg: RunConfig, builder: ReportBuilder,
                       require_pass: bool):
    problem = cfg.build_problem()
    report = validate(problem)
    builder.section("validation", report.lines())
    if require_pass and not report.all_pass:
        failed = [c.name for c in report.checks
                  if c.severity == "required" and not c.passed]
        raise ValidationFailure(
            "required assumption checks failed: " + ", ".join(failed)
        )
    return problem, report


def _eigen(cfg: RunConfig, op, builder: ReportBuilder):
    tol = cfg.get("eigen", "tol")
    method = cfg.get("eigen", "method")
    if method == "variational" and not op.problem.kernel.even:
        method = "inverse_power"
    pair = principal_eigenpair(op, tol=tol, method=method,
                               maxiter=cfg.get("eigen", "maxiter"))
    builder.section("eigen", eigen_lines(pair, tol))
    return pair


def run_task(task: str, cfg: RunConfig | None, out: Path,
             plots: bool) -> ReportBuilder:
    builder = ReportBuilder(task)

    if task == "reproduce-example1":
        return reproduce.reproduce_example1(out, plots=plots)
    if task == "reproduce-example2":
        return reproduce.reproduce_example2(out, plots=plots)

    builder.section("config", cfg.echo_lines(task))

    if task == "validate":
        problem, report = _validated_problem(cfg, builder, require_pass=False)
        builder.kv("summary", [
            ("all_required_pass", report.all_pass),
            ("groundstate_mode_ok", report.groundstate_mode_ok),
            ("kernel_even", report.even),
        ])
        builder.write(out / "report.txt")
        if not report.all_pass:
            failed = [c.name for c in report.checks
                      if c.severity == "required" and not c.passed]
            raise ValidationFailure(
                "required assumption checks failed: " + ", ".join(failed)
            )
        return builder

    problem, _ = _validated_problem(cfg, builder, require_pass=True)

    if task == "eigen":
        op = make_operator(problem)
        pair = _eigen(cfg, op, builder)
        cert = verify_groundstate(pair, op)
        builder.section("certificates", cert.lines())
        builder.kv("values", [
            ("lambda1", pair.lambda1),
            ("lambda_star", pair.lambda_star),
            ("phi_mass", mass(pair.phi)),
            ("phi_max", float(np.max(pair.phi.values))),
        ])
        field_to_csv(pair.phi, out / "phi.csv")
        artifacts = [out / "phi.csv"]
        if not problem.kernel.even:
            adj = adjoint_eigenpair(op, pair, tol=cfg.get("eigen", "tol"))
            builder.kv("adjoint", [
                ("pairing", 1.0),
                ("residual", adj.residual),
                ("min_phi_star", float(np.min(adj.phi_star.values))),
            ])
            field_to_csv(adj.phi_star, out / "phi_star.csv")
            artifacts.append(out / "phi_star.csv")
        if plots:
            from .plots import plot_fields

            curves = [("phi", pair.phi)]
            if not problem.kernel.even:
                curves.append(("phi_star", adj.phi_star))
            plot_fields(curves, out / "phi.png", "principal eigenfunction")
        builder.write(out / "report.txt")
        return builder

    if task == "criteria":
        tset = TestSet(radius=cfg.get("criteria", "radius"),
                       eps=cfg.get("criteria", "eps"))
        rep = evaluate_criteria(problem, tset, tol=cfg.get("criteria", "tol"),
                                radii=cfg.radii_sweep())
        builder.section("criteria", criteria_lines(rep, cfg.get("criteria", "tol")))
        if rep.search is not None:
            profile_to_csv(out / "radius_profile.csv", "R", "f", rep.search.profile)
            if plots:
                from .plots import plot_profile

                xs = [r for r, _ in rep.search.profile]
                ys = [v for _, v in rep.search.profile]
                plot_profile(xs, ys, out / "radius_profile.png", "R", "f(R)",
                             "uniform-criterion boundary value",
                             marks=((rep.search.best_R, rep.search.best_value),))
        builder.write(out / "report.txt")
        return builder

    if task == "gap":
        gcfg = GapConfig(
            problem=problem,
            omega_radius=cfg.get("gap", "omega_radius"),
            test_set=TestSet(radius=cfg.get("criteria", "radius"),
                             eps=cfg.get("criteria", "eps")),
        )
        rep = gap_lower_bound(gcfg, tol=cfg.get("gap", "tol"))
        builder.section("gap", rep.lines())
        profile = phi_profile(gcfg, points=201)
        profile_to_csv(out / "gap_profile.csv", "xi", "phi", profile)
        if plots:
            from .plots import plot_profile

            plot_profile([p[0] for p in profile], [p[1] for p in profile],
                         out / "gap_profile.png", "xi", "Phi(xi)",
                         "gap functional",
                         hlines=((rep.phi_bar, "phi_bar"),))
        builder.write(out / "report.txt")
        return builder

    # evolution tasks
    op = make_operator(problem)
    pair = _eigen(cfg, op, builder)
    weight = None
    if not problem.kernel.even:
        adj = adjoint_eigenpair(op, pair, tol=cfg.get("eigen", "tol"))
        weight = adj.phi_star
    u0 = build_u0(cfg.get("dynamics", "u0"), problem.grid, phi=pair.phi)
    T = cfg.get("dynamics", "T")
    dt = cfg.get("dynamics", "dt") or default_dt(op)
    scheme = cfg.scheme_for(task)
    nsteps = max(1, round(T / dt))
    snap = cfg.get("dynamics", "snapshot_every") or max(1, nsteps // 50)

    if task == "evolve-linear":
        trace = evolve_linear(op, u0, T=T, dt=dt, scheme=scheme, eigpair=pair,
                              weight=weight, distance_norm=cfg.norm_for(task),
                              snapshot_every=snap)
        defect = mass_identity_defect(trace, pair.lambda_star)
    else:
        trace = evolve_nonlinear(op, u0, T=T, dt=dt, scheme=scheme,
                                 eigpair=pair, distance_norm=cfg.norm_for(task),
                                 snapshot_every=snap)
        defect = None
    fit = fit_rate(trace, burn_in=cfg.get("dynamics", "burn_in"))
    lines = trace_lines(trace)
    if defect is not None:
        lines.append(f"mass identity defect = {defect:.6g}  (tol 1e-05)")
    builder.section("evolution", lines)
    builder.kv("values", [
        ("lambda1", pair.lambda1),
        ("fitted_rate", fit.rate),
        ("fit_residual", fit.residual),
        ("final_distance", float(trace.distance[-1])),
    ])
    trace_to_csv(trace, out / "trace.csv")
    field_to_csv(trace.snapshots[-1], out / "final_state.csv")
    if plots:
        from .plots import plot_fields, plot_trace

        plot_trace(trace, out / "trace.png", f"{task} ({scheme})")
        target = pair.phi if task == "evolve-linear" else Field(
            problem.grid, pair.phi.values / mass(pair.phi))
        plot_fields([("u(T)", trace.snapshots[-1]), ("target", target)],
                    out / "final_state.png", "final state vs target")
    builder.write(out / "report.txt")
    return builder


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    task = args.task
    started = time.perf_counter()
    try:
        cfg = _load_config(args, task)
        if cfg is not None and task in REPRODUCE_TASKS:
            print("note: reproduce tasks ignore the config contents",
                  file=sys.stderr)
        out = _resolve_out(args, task)
        run_task(task, cfg, out, plots=not args.no_plots)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 3
    except ReproductionError as exc:
        print(f"reproduction failure: {exc}", file=sys.stderr)
        return 5
    except MutselError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 4
    elapsed = time.perf_counter() - started
    print(f"{task}: report written to {out} ({elapsed:.2f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Reproduction commands: the square-root-potential criteria study and the
power-potential spectral-gap study, with hard assertions against closed
forms. Any assertion failure raises ReproductionError after the report and
CSV artifacts are on disk, so a failing run still leaves evidence.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import build_u0
from .criteria import TestSet, check_coville, check_linkJW, check_singularity, search_radius
from .dynamics import evolve_linear, fit_rate
from .eigensolver import principal_eigenpair
from .errors import ConfigError, ReproductionError
from .grid import Grid
from .model import Problem, make_kernel, make_potential
from .operator import make_operator
from .report import ReportBuilder, profile_to_csv, write_csv
from .spectral_gap import GapConfig, gap_lower_bound, phi_profile

SIGMA2_SWEEP = (0.50, 0.55, 0.56110, 0.65, 0.70811, 0.80)
LINK_THRESHOLD = 4.0 / (4.0 + math.pi)
COVILLE_THRESHOLD = 1.0 / math.sqrt(2.0)

GAP_POINTS = ((9, 0.1), (17, 0.1), (9, 0.05))


def thread_cap() -> int:
    raw = os.environ.get("MUTSEL_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(
                f"MUTSEL_THREADS must be an integer, got {raw!r}"
            ) from None
    return max(1, min(4, os.cpu_count() or 1))


def _radius_branches(R: float) -> float:
    """Closed form of the boundary value f(R) for the square-root potential
    with the unit box kernel: 2*sqrt(R) while the window covers the whole
    interval, then sqrt(R)+sqrt(1-R), then sqrt(R)-sqrt(R-1)."""
    if R <= 0.5:
        return 2.0 * math.sqrt(R)
    if R <= 1.0:
        return math.sqrt(R) + math.sqrt(1.0 - R)
    return math.sqrt(R) - math.sqrt(R - 1.0)


def _sqrt_problem(sigma2: float) -> Problem:
    kernel = make_kernel("box", math.sqrt(sigma2), half_width=1.0)
    potential = make_potential("sqrt")
    return Problem(kernel=kernel, potential=potential, grid=Grid(1, 2.0, 201))


def reproduce_example1(out_dir, plots: bool = True) -> ReportBuilder:
    """Criteria thresholds for W = sqrt|x|, J = half-box: the quadratic
    criterion switches at 4/(4+pi), the uniform one at 1/sqrt(2), and the
    best centered interval has radius 1/2 with boundary value sqrt(2)."""
    builder = ReportBuilder("reproduce-example1")
    failures: list[str] = []

    def check(label: str, ok: bool, detail: str):
        if not ok:
            failures.append(f"{label}: {detail}")

    # the boundary-value profile does not involve sigma, so sweep it once
    radii = np.arange(1e-3, 1.5 + 5e-4, 1e-3)
    search = search_radius(_sqrt_problem(0.5), eps=0.0, radii=radii)
    check("profile max value",
          abs(search.best_value - math.sqrt(2.0)) <= 1e-6,
          f"max f = {search.best_value!r}, expected sqrt(2)")
    check("profile max location", abs(search.best_R - 0.5) <= 1e-3 + 1e-12,
          f"argmax R = {search.best_R!r}, expected 0.5")
    probe = np.linspace(0.05, 1.45, 100)
    prof_map = dict(search.profile)
    worst = 0.0
    for R in probe:
        Rk = min(prof_map, key=lambda r: abs(r - R))
        worst = max(worst, abs(prof_map[Rk] - _radius_branches(Rk)))
    check("profile branch match", worst <= 1e-6,
          f"worst closed-form deviation {worst:.3g}")

    def sweep_point(sigma2: float):
        problem = _sqrt_problem(sigma2)
        link = check_linkJW(problem, TestSet(radius=1.0, eps=0.0))
        cov = check_coville(problem, TestSet(radius=0.5, eps=0.0))
        sing = check_singularity(problem)
        return (sigma2, link, cov, sing)

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        results = list(pool.map(sweep_point, SIGMA2_SWEEP))

    rows = []
    for sigma2, link, cov, sing in results:
        expect_link = sigma2 > LINK_THRESHOLD
        expect_cov = sigma2 > COVILLE_THRESHOLD
        check(f"linkJW at sigma2={sigma2:g}", link.holds == expect_link,
              f"holds={link.holds}, expected {expect_link}"
              f" (lhs={link.lhs:.6g}, rhs={link.rhs:.6g})")
        check(f"coville at sigma2={sigma2:g}", cov.holds == expect_cov,
              f"holds={cov.holds}, expected {expect_cov}"
              f" (essinf={cov.essinf_value:.6g})")
        rows.append((sigma2, link.lhs, link.rhs, link.holds,
                     cov.essinf_value * sigma2, cov.holds,
                     sing.sup_value, sing.is_singular))

    write_csv(out_dir / "threshold_sweep.csv",
              ("sigma2", "link_lhs", "link_rhs", "link_holds",
               "coville_scaled_min", "coville_holds",
               "singularity_sup", "is_singular"), rows)
    profile_to_csv(out_dir / "radius_profile.csv", "R", "f", search.profile)
    if plots:
        from .plots import plot_profile

        xs = [r for r, _ in search.profile]
        ys = [v for _, v in search.profile]
        plot_profile(xs, ys, out_dir / "radius_profile.png", "R", "f(R)",
                     "boundary value of the uniform criterion",
                     marks=((search.best_R, search.best_value),))

    builder.kv("thresholds", [
        ("link_threshold", LINK_THRESHOLD),
        ("coville_threshold", COVILLE_THRESHOLD),
        ("profile_max", search.best_value),
        ("profile_argmax", search.best_R),
    ])
    table = [
        "sigma2    linkJW  coville  singular  sup",
    ]
    for sigma2, link, cov, sing in results:
        table.append(
            f"{sigma2:<9g} {str(link.holds):<7} {str(cov.holds):<8} "
            f"{str(sing.is_singular):<9} {sing.sup_value:.6f}"
        )
    builder.section("criteria sweep", table)
    _finish(builder, failures, out_dir)
    return builder


def _power_problem(m: int, sigma2: float) -> Problem:
    kernel = make_kernel("box", math.sqrt(sigma2), half_width=2.0)
    potential = make_potential("power", m=m)
    return Problem(kernel=kernel, potential=potential, grid=Grid(1, 3.0, 256))


def reproduce_example2(out_dir, plots: bool = True) -> ReportBuilder:
    """Spectral-gap bounds for W = |x|^m, J = quarter-box over [-2, 2]:
    closed forms for a1 and a2 on Omega = (-1, 1), the displayed floor for
    a_star, and a linear run whose fitted rate must clear 0.9 a_star."""
    builder = ReportBuilder("reproduce-example2")
    failures: list[str] = []

    def check(label: str, ok: bool, detail: str):
        if not ok:
            failures.append(f"{label}: {detail}")

    def gap_point(point):
        m, sigma2 = point
        problem = _power_problem(m, sigma2)
        cfg = GapConfig(problem=problem, omega_radius=1.0,
                        test_set=TestSet(radius=1.0, eps=1e-6))
        rep = gap_lower_bound(cfg, tol=1e-10)
        profile = phi_profile(cfg, points=201)

        op = make_operator(problem)
        pair = principal_eigenpair(op, tol=1e-8, method="variational")
        u0 = build_u0("gaussian:0:0.15", problem.grid)
        trace = evolve_linear(op, u0, T=10.0, dt=1e-3, scheme="strang",
                              eigpair=pair, distance_norm="L2")
        fit = fit_rate(trace, burn_in=1.0)
        return (m, sigma2, rep, profile, pair, fit)

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        results = list(pool.map(gap_point, GAP_POINTS))

    rows = []
    for m, sigma2, rep, profile, pair, fit in results:
        tag = f"m={m} sigma2={sigma2:g}"
        a1_closed = sigma2 / (m - 1)
        a2_closed = sigma2 * math.sqrt(2.0 * (1.0 - 5.0 ** (1 - m)) / (m - 1))
        floor = sigma2 * (0.25 - sigma2 / (m - 1)
                          - math.sqrt(2.0) * math.sqrt(sigma2 / (m - 1)))
        check(f"eta at {tag}", rep.eta == 0.0, f"eta = {rep.eta!r}, expected 0")
        check(f"a1 closed form at {tag}", abs(rep.a1 - a1_closed) <= 1e-10,
              f"a1 = {rep.a1!r} vs {a1_closed!r}")
        check(f"a2 closed form at {tag}", abs(rep.a2 - a2_closed) <= 1e-10,
              f"a2 = {rep.a2!r} vs {a2_closed!r}")
        check(f"a_star floor at {tag}", rep.a_star >= floor,
              f"a_star = {rep.a_star!r} below displayed bound {floor!r}")
        if rep.a_star > 0:
            check(f"fitted rate at {tag}", fit.rate >= 0.9 * rep.a_star,
                  f"rate = {fit.rate!r} < 0.9 * a_star = {0.9 * rep.a_star!r}")
        rows.append((m, sigma2, rep.eta, rep.a1, a1_closed, rep.a2, a2_closed,
                     rep.b_eps, rep.phi_bar, rep.a_star, floor,
                     pair.lambda1, fit.rate))
        builder.kv(f"gap {tag}", [
            ("eta", rep.eta), ("a1", rep.a1), ("a2", rep.a2),
            ("b_eps", rep.b_eps), ("phi_bar", rep.phi_bar),
            ("a_star", rep.a_star), ("a_star_floor", floor),
            ("lambda1", pair.lambda1), ("fitted_rate", fit.rate),
            ("fit_residual", fit.residual),
        ])
        profile_to_csv(out_dir / f"phi_profile_m{m}_s{sigma2:g}.csv",
                       "xi", "phi", profile)

    write_csv(out_dir / "gap_table.csv",
              ("m", "sigma2", "eta", "a1", "a1_closed", "a2", "a2_closed",
               "b_eps", "phi_bar", "a_star", "a_star_floor", "lambda1",
               "fitted_rate"), rows)
    if plots:
        from .plots import plot_sweep

        curves = []
        for m, sigma2, rep, profile, pair, fit in results:
            curves.append((f"m={m}, s2={sigma2:g}", profile))
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for label, profile in curves:
            ax.plot([p[0] for p in profile], [p[1] for p in profile],
                    lw=1.3, label=label)
        ax.set_xlabel("xi")
        ax.set_ylabel("Phi(xi)")
        ax.set_title("gap functional profiles")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(out_dir / "phi_profiles.png", dpi=130)
        plt.close(fig)
        plot_sweep(
            [(i, row[9], row[10]) for i, row in enumerate(rows)],
            out_dir / "a_star_vs_floor.png", "case index",
            ["a_star", "displayed floor"], "gap bound vs displayed floor")

    _finish(builder, failures, out_dir)
    return builder


def _finish(builder: ReportBuilder, failures: list[str], out_dir) -> None:
    if failures:
        builder.section("assertions", ["FAIL " + f for f in failures])
        builder.write(out_dir / "report.txt")
        raise ReproductionError(
            "reproduction assertions failed: " + "; ".join(failures)
        )
    builder.section("assertions", ["all reproduction assertions passed"])
    builder.write(out_dir / "report.txt")

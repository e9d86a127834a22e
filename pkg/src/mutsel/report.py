"""Plain-text run reports and CSV artifact writers.

Reports are byte-stable for a fixed config and version: wall-clock timing is
printed to the console by the CLI, never written into the report file.
Numeric lines carry the tolerance they were computed at so the file can be
grepped for golden values.
"""

from __future__ import annotations

import csv

import numpy as np

VERSION = "0.1.0"


class ReportBuilder:
    def __init__(self, task: str):
        self.task = task
        self._parts: list[str] = [
            "mutsel run report",
            "=================",
            f"version = {VERSION}",
            f"task = {task}",
            "",
        ]

    def section(self, name: str, lines) -> None:
        self._parts.append(f"[{name}]")
        self._parts.extend(str(line) for line in lines)
        self._parts.append("")

    def kv(self, name: str, pairs) -> None:
        """Machine-greppable key/value block; floats at full precision."""
        lines = []
        for key, val in pairs:
            if isinstance(val, float):
                lines.append(f"{key} = {val:.17g}")
            elif isinstance(val, bool):
                lines.append(f"{key} = {'true' if val else 'false'}")
            else:
                lines.append(f"{key} = {val}")
        self.section(name, lines)

    def text(self) -> str:
        return "\n".join(self._parts).rstrip("\n") + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text())


def eigen_lines(pair, tol: float) -> list[str]:
    out = [
        f"lambda1 = {pair.lambda1:.17g}  (tol {tol:g})",
        f"lambda_star = {pair.lambda_star:.17g}",
        f"residual = {pair.residual:.6g}",
        f"method = {pair.method}",
        f"iterations = {pair.iterations}",
    ]
    for name, ok in sorted(pair.certificates.items()):
        out.append(f"certificate {name}: {'PASS' if ok else 'FAIL'}")
    return out


def criteria_lines(rep, tol: float) -> list[str]:
    link, cov, sing = rep.linkJW, rep.coville, rep.singularity
    out = [
        f"set radius = {rep.best_set.radius:.17g}, eps = {rep.best_set.eps:.17g}",
        f"linkJW lhs = {link.lhs:.17g}",
        f"linkJW rhs = {link.rhs:.17g}",
        f"linkJW holds = {'true' if link.holds else 'false'}"
        f"  (margin budget {link.budget:g})",
        f"b_eps = {rep.b_eps:.17g}",
        f"coville essinf = {cov.essinf_value:.17g} at x = {cov.argmin:.17g}",
        f"coville holds = {'true' if cov.holds else 'false'}"
        f"  (margin budget {cov.budget:g})",
        f"singularity sup = {sing.sup_value:.17g} at x = {sing.argmax:.17g}",
        f"is_singular = {'true' if sing.is_singular else 'false'}"
        f"  (strict threshold 1)",
        f"quadrature tol = {tol:g}",
    ]
    if rep.search is not None:
        out.append(
            f"radius sweep best R = {rep.search.best_R:.17g},"
            f" value = {rep.search.best_value:.17g}"
        )
    return out


def trace_lines(trace) -> list[str]:
    out = [
        f"scheme = {trace.scheme}",
        f"steps = {len(trace.times) - 1}",
        f"T = {trace.times[-1]:.17g}",
        f"final mass = {trace.mass[-1]:.17g}",
        f"final mean_fitness = {trace.mean_fitness[-1]:.17g}",
    ]
    if np.isfinite(trace.distance[-1]):
        out.append(
            f"final distance ({trace.distance_norm}) = {trace.distance[-1]:.17g}"
        )
    if trace.fitted_rate is not None:
        out.append(f"fitted rate = {trace.fitted_rate:.17g}"
                   f"  (rms residual {trace.fit_residual:.3g})")
    if trace.clip_count:
        out.append(f"negative-value clips = {trace.clip_count}")
    return out


def write_csv(path, header, rows) -> None:
    """Rows of floats at full precision; header is a sequence of names."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                f"{v:.17g}" if isinstance(v, (float, np.floating)) else v
                for v in row
            ])


def trace_to_csv(trace, path) -> None:
    rows = zip(trace.times, trace.mass, trace.mean_fitness, trace.distance)
    write_csv(path, ("t", "mass", "mean_fitness", "distance"), rows)


def profile_to_csv(path, xname: str, yname: str, profile) -> None:
    write_csv(path, (xname, yname), profile)

"""Command-line driver.

Subcommands::

    moderation solve   --scenario spook --mu 0.5 --c 1 --out traj.csv --summary run.json
    moderation sweep   --scenario spook --sweep-mu 0.25:1:0.25 --sweep-c 0.2,1,5 --out grid.csv
    moderation compare --c 0.001 --out diffs.csv
    moderation verify

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import ModerationError
from .scenarios import SCENARIOS, ScenarioSpec, evaluate_acceleration, solve
from .verify import DEGENERATE, FAIL, run_checks

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4

TRAJECTORY_COLUMNS = ("t", "x", "v", "a", "lambda", "lambda_dot", "u", "cost_density", "conserved_residual")
SWEEP_COLUMNS = ("scenario", "incentive", "mu", "c", "k", "t_f", "total_cost", "a0", "a_f", "t_star",
                 "max_boundary_residual", "max_conserved_residual", "method", "error")
COMPARE_MUS = (0.125, 0.25, 0.5)


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v) + 0.0, ".17g")  # + 0.0 folds -0 into 0


def parse_values(text: str) -> list[float]:
    """``a:b:step`` (inclusive), ``log:a:b:n`` (geometric) or ``v1,v2,...``."""
    text = text.strip()
    try:
        if text.startswith("log:"):
            a, b, n = text[4:].split(":")
            return [float(v) for v in np.geomspace(float(a), float(b), int(n))]
        if ":" in text:
            a, b, step = (float(p) for p in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / step * (1 + 1e-12))) + 1
            return [a + i * step for i in range(n)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None


def _error_doc(exc: Exception) -> dict:
    code = getattr(exc, "code", "ERROR")
    return {"error": {"code": code, "type": type(exc).__name__, "message": str(exc)}}


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def trajectory_csv(traj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    cols = (traj.t, traj.x, traj.v, traj.a, traj.lam, traj.lam_dot, traj.u[:, 0], traj.cost_density,
            traj.conserved_residual)
    for row in zip(*cols):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _spec_from_args(args, **over) -> ScenarioSpec:
    kw = dict(scenario=args.scenario, incentive=args.incentive, mu=args.mu, c=args.c, k=args.k,
              samples=args.samples, tol=args.tol)
    kw.update(over)
    if kw["incentive"] != "elliptical":
        kw["mu"] = None
    return ScenarioSpec(**kw)


def cmd_solve(args) -> int:
    try:
        spec = _spec_from_args(args)
    except ModerationError as exc:
        _write_text(args.summary, _dump_json(_error_doc(exc)))
        return EXIT_USAGE
    try:
        res = solve(spec)
    except ModerationError as exc:
        _write_text(args.summary, _dump_json(_error_doc(exc)))
        return EXIT_SOLVER
    if args.out:
        _write_text(args.out, trajectory_csv(res.trajectory))
    _write_text(args.summary, _dump_json(res.summary()))
    return EXIT_OK


def _sweep_row(spec_kw: dict) -> dict:
    row = {k: spec_kw.get(k) for k in ("scenario", "incentive", "mu", "c", "k")}
    try:
        spec = ScenarioSpec(**spec_kw)
        res = solve(spec)
    except ModerationError as exc:
        row["error"] = f"{exc.code}: {exc}"
        return row
    tr = res.trajectory
    row.update(
        incentive=spec.incentive, mu=spec.mu, k=spec.k,
        t_f=tr.duration, total_cost=tr.total_cost, a0=tr.a[0], a_f=tr.a[-1], t_star=res.t_star,
        max_boundary_residual=max(res.boundary_residuals), max_conserved_residual=tr.max_conserved_residual,
        method=res.method, error="",
    )
    return row


def sweep_rows(args) -> list[dict]:
    mus = args.sweep_mu if args.sweep_mu else [args.mu]
    cs = args.sweep_c if args.sweep_c else [args.c]
    jobs = []
    for mu in mus:
        for c in cs:
            kw = dict(scenario=args.scenario, incentive=args.incentive, mu=mu, c=c, k=args.k,
                      samples=args.samples, tol=args.tol)
            if kw["incentive"] != "elliptical" or args.scenario in ("qcc-spook", "qcc-hat"):
                kw["mu"] = None
            jobs.append(kw)
    # drop duplicates created by parameters the scenario ignores
    seen, unique = set(), []
    for kw in jobs:
        key = tuple(sorted((k, v) for k, v in kw.items()))
        if key not in seen:
            seen.add(key)
            unique.append(kw)
    if args.jobs > 1 and len(unique) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            return list(pool.map(_sweep_row, unique))
    return [_sweep_row(kw) for kw in unique]


def cmd_sweep(args) -> int:
    rows = sweep_rows(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([fmt(r.get(col)) for col in SWEEP_COLUMNS])
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def compare_table(c: float, samples: int = 1001, tol: float = 1e-10) -> tuple[list[str], np.ndarray]:
    """Acceleration differences in the rescaled time ``s = c**(1/4) t / sqrt(2)``.

    Columns: ``s``; unit elliptical incentive minus the pure quadratic-cost
    solution (k = 1); and, for each mu in ``COMPARE_MUS``, the elliptical
    solution at intensity ``c`` minus the one at ``c = 0``.  A column is NaN
    where either curve has already ended.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    beta = c**0.25 / math.sqrt(2.0)
    unit = solve(ScenarioSpec("spook", "elliptical", 1.0, c, samples=samples, tol=tol))
    hat = solve(ScenarioSpec("qcc-hat", c=c, k=1, samples=samples, tol=tol)) if c <= 1 else None
    pairs = []
    for mu in COMPARE_MUS:
        loaded = solve(ScenarioSpec("spook", "elliptical", mu, c, samples=samples, tol=tol))
        free = solve(ScenarioSpec("warmup", "elliptical", mu, samples=samples, tol=tol))
        pairs.append((loaded, free))
    ends = [unit.trajectory.duration] + [p.trajectory.duration for pair in pairs for p in pair]
    if hat is not None:
        ends.append(hat.trajectory.duration)
    s = np.linspace(0.0, beta * max(ends), samples)
    t = s / beta

    def diff(r1, r2):
        out = np.full_like(t, np.nan)
        m = t <= min(r1.trajectory.duration, r2.trajectory.duration) * (1 + 1e-12)
        if np.count_nonzero(m) >= 2:
            out[m] = evaluate_acceleration(r1, t[m]) - evaluate_acceleration(r2, t[m])
        return out

    names = ["s", "a_unit_minus_qcc"] + [f"a_mu{mu:g}_minus_c0" for mu in COMPARE_MUS]
    cols = [s, diff(unit, hat) if hat is not None else np.full_like(s, np.nan)]
    cols += [diff(loaded, free) for loaded, free in pairs]
    return names, np.stack(cols, axis=1)


def cmd_compare(args) -> int:
    c = args.c if args.c is not None else 1.0
    try:
        names, table = compare_table(c, args.samples, args.tol)
    except ModerationError as exc:
        _write_text(args.summary, _dump_json(_error_doc(exc)))
        return EXIT_SOLVER
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in table:
        w.writerow([fmt(v) for v in row])
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_checks(perturb_q=args.perturb_q)
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        val = "" if r.value is None else f"{r.value:.3e}"
        lim = "" if r.limit is None else f"{r.limit:.1e}"
        lines.append(f"{r.status:<10} {r.name:<{width}}  {val:>10}  {lim:>8}  {r.detail}".rstrip())
    n_fail = sum(r.status == FAIL for r in results)
    n_deg = sum(r.status == DEGENERATE for r in results)
    lines.append(f"{len(results) - n_fail - n_deg} passed, {n_fail} failed, {n_deg} degenerate (expected)")
    print("\n".join(lines))
    return EXIT_VERIFY if n_fail else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="moderation", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=True):
        sp.add_argument("--scenario", choices=SCENARIOS, required=scenario_required)
        sp.add_argument("--incentive", choices=("trivial", "elliptical", "quadratic"), default="elliptical")
        sp.add_argument("--mu", type=float, default=None, help="elliptical incentive parameter in (0, 1]")
        sp.add_argument("--c", type=float, default=None, help="spooking intensity")
        sp.add_argument("--k", type=int, default=1, help="member of the pure quadratic-cost family")
        sp.add_argument("--samples", type=int, default=1001)
        sp.add_argument("--tol", type=float, default=1e-10, help="integrator relative tolerance")
        sp.add_argument("--out", default=None, help="CSV output path (default: stdout for tables)")
        sp.add_argument("--summary", default=None, help="JSON summary path (default: stdout)")
        sp.add_argument("--seed", type=int, default=None, help="reserved; all solvers are deterministic")

    common(sub.add_parser("solve", help="solve one scenario"))
    sp = sub.add_parser("sweep", help="tabulate a scenario over mu and c")
    common(sp)
    sp.add_argument("--sweep-mu", type=parse_values, default=None, help="a:b:step, log:a:b:n or comma list")
    sp.add_argument("--sweep-c", type=parse_values, default=None, help="a:b:step, log:a:b:n or comma list")
    sp.add_argument("--jobs", type=int, default=1)
    common(sub.add_parser("compare", help="acceleration differences in rescaled time"), scenario_required=False)
    sp = sub.add_parser("verify", help="run the invariant suite")
    sp.add_argument("--perturb-q", type=float, default=None,
                    help="negative control: offset the q profile of solved problems")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "sweep": cmd_sweep, "compare": cmd_compare, "verify": cmd_verify}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())

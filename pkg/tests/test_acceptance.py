"""Acceptance criteria, one test per criterion.

Each criterion evaluates all of its sub-checks, prints a single PASS/FAIL
line naming any failing sub-check, and then asserts.  Run directly with
``python tests/test_acceptance.py`` to print only the summary lines.
"""

import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from moderation import cli
from moderation import closed_form as cf
from moderation.dynamics import ControlledSystem, PositionCost, build_trajectory
from moderation.incentives import (Incentive, incentive_value, inverse_gradient, is_degenerate, optimal_magnitude,
                                   potential, potential_gradient)
from moderation.numerics import IntegratorConfig, integrate, simpson_samples
from moderation.reparam import ReparamProblem, boundary_lambdas, solve_direct, solve_reparam, to_trajectory

EPS = np.finfo(float).eps


@dataclass
class Check:
    label: str
    ok: bool
    detail: str = ""


def within(label, value, target, tol):
    err = abs(value - target)
    return Check(label, bool(err <= tol), f"{value:.12g} (err {err:.2e}, tol {tol:.0e})")


def bounded(label, value, limit):
    return Check(label, bool(np.isfinite(value) and value <= limit), f"{value:.3e} <= {limit:.0e}")


def timed(fn, repeat=1):
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return out, best


def report(number, title, checks, log=None):
    failing = [c for c in checks if not c.ok]
    status = "PASS" if not failing else "FAIL"
    line = f"{status} criterion {number:>2}: {title}"
    if failing:
        line += " | failing: " + "; ".join(f"{c.label} [{c.detail}]" for c in failing)
    print(line)
    if log is not None:
        log.append(line)
    return line, failing


def assert_criterion(number, title, checks, log):
    _, failing = report(number, title, checks, log)
    assert not failing, "\n".join(f"{c.label}: {c.detail}" for c in failing)


def warmup_solution(inc):
    return solve_reparam(ReparamProblem.arbitrary_duration(PositionCost.constant(), inc))


def rmuf(mu):
    lf = math.sqrt(1 - mu * mu)
    return lf + mu * mu * math.log(mu / (1 + lf))


# ---------------------------------------------------------------------------


def criterion_1():
    inc = Incentive.trivial()
    sys_ = ControlledSystem(2, 1, PositionCost.constant())
    ref = cf.warmup_general(inc, 1.0)
    (x1, v1, _), elapsed = timed(lambda: cf.bang_bang(1.0), repeat=50)
    t = np.linspace(0.0, 2.0, 2001)
    x, v, a = cf.bang_bang(t)
    lam = 1.0 - t
    traj = build_trajectory(sys_, inc, t, np.stack([x, v], 1), np.stack([lam, np.full_like(t, -1.0)], 1), u=a)
    num = to_trajectory(warmup_solution(inc), 2001)
    return [
        within("closed-form duration", ref.duration, 2.0, 1e-12),
        within("x(1)", x1, 0.5, 1e-12),
        within("x'(1)", v1, 1.0, 1e-12),
        within("x(2)", x[-1], 1.0, 1e-12),
        within("total cost", traj.total_cost, 2.0, 1e-12),
        bounded("bang-bang evaluation time [s]", elapsed, 1e-3),
        within("solver duration (cross-check)", num.duration, 2.0, 1e-9),
        within("solver total cost (cross-check)", num.total_cost, 2.0, 1e-9),
    ]


def criterion_2():
    num = to_trajectory(warmup_solution(Incentive.quadratic()), 1001)
    ref = cf.warmup_general(Incentive.quadratic(), 1.0)
    target = 2 * math.sqrt(6) / 3
    return [
        within("solver t_f", num.duration, math.sqrt(6), 1e-10),
        within("solver total cost", num.total_cost, target, 1e-10),
        within("closed-form t_f", ref.duration, math.sqrt(6), 1e-10),
        within("closed-form cost t_f/2 + 6/t_f^3", cf.warmup_quadratic_cost(ref.duration), target, 1e-10),
    ]


def criterion_3():
    checks = []
    for mu in (0.1, 0.3, 0.6, 0.9):
        inc = Incentive.elliptical(mu)
        sol, elapsed = timed(lambda: warmup_solution(inc))
        traj = to_trajectory(sol, 1001)
        ref = cf.warmup_elliptical(mu)
        x_ref = ref.state(np.minimum(traj.t, ref.duration))[0]
        checks += [
            within(f"q0 mu={mu}", sol.q0, rmuf(mu), 1e-7),
            bounded(f"sup |x - rMap| mu={mu}", float(np.max(np.abs(traj.x - x_ref))), 1e-6),
            bounded(f"solve time mu={mu} [s]", elapsed, 1.0),
        ]
    return checks


def criterion_4():
    small = warmup_solution(Incentive.elliptical(1e-4))
    near_one = warmup_solution(Incentive.elliptical(0.99))
    scaled = near_one.duration**2 * math.sqrt(1 - 0.99**2)
    scaled_cf = cf.warmup_elliptical(0.99).duration ** 2 * math.sqrt(1 - 0.99**2)
    return [
        Check("t_f(1e-4) in [2, 2.01]", 2.0 <= small.duration <= 2.01, f"{small.duration:.8f}"),
        Check("closed-form t_f(1e-4) in [2, 2.01]", 2.0 <= cf.warmup_elliptical(1e-4).duration <= 2.01,
              f"{cf.warmup_elliptical(1e-4).duration:.8f}"),
        Check("t_f(0.99)^2 sqrt(1-0.99^2) in [5.88, 6.12]", 5.88 <= scaled <= 6.12, f"{scaled:.6f}"),
        Check("closed form, same quantity", 5.88 <= scaled_cf <= 6.12, f"{scaled_cf:.6f}"),
    ]


def criterion_5():
    checks = []
    n = 1001
    for inc in (Incentive.trivial(), Incentive.quadratic(), Incentive.elliptical(1e-4), Incentive.elliptical(0.3),
                Incentive.elliptical(0.6), Incentive.elliptical(0.99)):
        traj = to_trajectory(warmup_solution(inc), n)
        checks.append(bounded(f"warm-up {inc}", traj.max_conserved_residual, 1e-6))
    for mu in (0.25, 0.5, 0.75):
        for c in (0.2, 1.0, 5.0):
            prob = ReparamProblem.arbitrary_duration(PositionCost.spook(c), Incentive.elliptical(mu))
            traj = to_trajectory(solve_reparam(prob), n)
            checks.append(bounded(f"spook mu={mu} c={c}", traj.max_conserved_residual, 1e-6))
    for c in (0.2, 1.0, 5.0):
        traj = solve_direct(PositionCost.spook(c), Incentive.elliptical(1.0)).trajectory(n)
        checks.append(bounded(f"spook mu=1 c={c} (time-domain)", traj.max_conserved_residual, 1e-6))
        prob = ReparamProblem.arbitrary_duration(PositionCost.spook(c), Incentive.quadratic())
        traj = to_trajectory(solve_reparam(prob), n)
        checks.append(bounded(f"spook quadratic c={c}", traj.max_conserved_residual, 1e-6))
    return checks


def criterion_6():
    mu, c = 0.5, 1.0
    cost, inc = PositionCost.spook(c), Incentive.elliptical(mu)
    lam0, lamf = boundary_lambdas(cost, inc)
    traj = to_trajectory(solve_reparam(ReparamProblem.arbitrary_duration(cost, inc)), 1001)
    c0 = 1 + c / 2
    return [
        within("lambda0", lam0, math.sqrt(2), 1e-12),
        within("lambda_f", lamf, -math.sqrt(0.75), 1e-12),
        within("|x''(t_f)|", abs(traj.a[-1]), math.sqrt(1 - mu * mu), 1e-6),
        within("x''(0)", traj.a[0], math.sqrt(c0 * c0 - mu * mu) / c0, 1e-6),
    ]


def criterion_7():
    checks = []
    for c in (0.2, 1.0, 5.0):
        s, elapsed = timed(lambda: cf.qcc_spook_solve(c), repeat=3)
        y0, v0, _ = cf.qcc_spook_endpoint_coeffs(s.s_fin)
        left = s.state(s.t_star)
        right = s.state(min(s.t_star * (1 + 1e-14) + 1e-15, s.t_final))
        jump = max(abs(left[i] - right[i]) for i in range(3))
        checks += [
            Check(f"s_fin in (0, 2.36502) c={c}", 0 < s.s_fin < 2.36502, f"{s.s_fin:.10f}"),
            bounded(f"matching residual c={c}", abs(math.sqrt(c) - y0 - v0 * v0 / 4), 1e-10),
            bounded(f"jump of x, x', x'' at t* c={c}", jump, 1e-8),
            within(f"x''(0) c={c}", s.state(0.0)[2], 1.0, 1e-8),
            within(f"x''(t_f) c={c}", s.state(s.t_final)[2], -1.0, 1e-8),
            bounded(f"solve time c={c} [s]", elapsed, 0.1),
        ]
    return checks


def criterion_8():
    c = 1.0
    checks = []
    costs = []
    for k in (1, 2, 3):
        s = cf.qcc_hat_solution(c, k)
        checks.append(within(f"duration k={k}", s.duration, math.sqrt(2) * math.pi * k, 1e-10))
        checks.append(bounded(f"terminal y, y', y'' k={k}", max(abs(v) for v in s.terminal_values()), 1e-9))
        res = cf.qcc_hat_total_cost(c, k)
        costs.append(res)
    q = [r.quadrature for r in costs]
    d12, d23 = q[0] - q[1], q[1] - q[2]
    checks.append(Check("cost strictly decreasing in k", q[0] > q[1] > q[2], ", ".join(f"{v:.10f}" for v in q)))
    checks.append(Check("difference ratio > 10", d23 > 0 and d12 / d23 > 10, f"{d12 / d23:.1f}"))
    for k, r in zip((1, 2, 3), costs):
        n_match = sum(abs(r.quadrature - v) <= 1e-5 for v in (r.single, r.double))
        checks.append(Check(
            f"cost k={k} matches exactly one of c*coth, 2c*coth", n_match == 1,
            f"quadrature {r.quadrature:.10f}, c*coth {r.single:.10f}, 2c*coth {r.double:.10f}, "
            f"matched {r.matched}; integrated beam c^(3/4) coth(k pi)/sqrt(2) = {r.exact:.10f}"))
    return checks


def criterion_9():
    checks = []
    families = (Incentive.trivial(), Incentive.elliptical(0.3), Incentive.elliptical(1.0), Incentive.quadratic())
    grid = np.linspace(0.0, 1.0, 100_001)
    res = grid[1] - grid[0]
    worst_env, worst_arg = 0.0, 0.0
    for inc in families:
        ct = incentive_value(inc, grid)
        for s in np.linspace(0.0, 10.0, 101):
            vals = grid * s + ct
            sig = optimal_magnitude(inc, s)
            env = sig * s + incentive_value(inc, sig)
            worst_env = max(worst_env, abs(potential(inc, s) - env), vals.max() - env)
            if not is_degenerate(inc, s):
                worst_arg = max(worst_arg, grid[np.argmax(vals)] - sig)
    checks.append(bounded("chi~ = sigma s + C~(sigma) vs brute force", worst_env, 1e-9))
    checks.append(bounded("brute-force argmax - sigma", worst_arg, 1e-9 + res))

    s = np.linspace(0.01, 5.0, 200)
    h = 1e-6
    worst = 0.0
    for inc in families:
        fd = (potential(inc, s + h) - potential(inc, s - h)) / (2 * h)
        away = np.ones_like(s, dtype=bool)
        for kink in inc.kinks:
            away &= np.abs(s - kink) > 2 * h
        worst = max(worst, float(np.max(np.abs(fd - optimal_magnitude(inc, s))[away])))
    checks.append(bounded("chi~' = sigma (central differences)", worst, 1e-6))

    lam = np.linspace(-10, 10, 2001)[:, None]
    worst = 0.0
    for mu in (0.5, 0.75, 1.0):
        inc = Incentive.elliptical(mu)
        worst = max(worst, float(np.max(np.abs(inverse_gradient(inc, potential_gradient(inc, lam)) - lam))))
    checks.append(bounded("inverse gradient round trip, mu in {0.5, 0.75, 1}", worst, 1e-12))
    # below mu = 0.5 the rounding of u alone exceeds 1e-12; the error must stay at that floor
    ratio = 0.0
    for mu in (0.05, 0.1, 0.2, 0.3):
        inc = Incentive.elliptical(mu)
        err = np.abs(inverse_gradient(inc, potential_gradient(inc, lam)) - lam)
        floor = EPS * (mu * mu + lam * lam) ** 1.5 / (mu * mu)
        ratio = max(ratio, float(np.max(err / np.maximum(floor, 1e-300))))
    checks.append(bounded("round trip / conditioning floor, small mu", ratio, 1.0))

    errs = [abs(integrate(lambda t, y: y, [1.0], (0, 1), fixed_step=dt).y_final[0] - math.e) for dt in (0.1, 0.05)]
    checks.append(Check("fixed-step error ratio >= 2^4/1.5", errs[0] / errs[1] >= 16 / 1.5,
                        f"{errs[0] / errs[1]:.2f}"))

    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    f = lambda t, y: np.array([y[1], -y[0] + 0.1 * np.sin(t)])  # noqa: E731
    fwd = integrate(f, [1.0, 0.0], (0.0, 5.0), cfg)
    back = integrate(f, fwd.y_final, (5.0, 0.0), cfg)
    checks.append(bounded("forward then backward", float(np.max(np.abs(back.y_final - [1.0, 0.0]))),
                          10 * cfg.rel_tol))
    return checks


def _sweep(argv):
    args = cli.build_parser().parse_args(argv)
    return cli.sweep_rows(args)


def criterion_10():
    start = time.perf_counter()
    warm = _sweep(["sweep", "--scenario", "warmup", "--sweep-mu", f"1e-2,{1 / 3!r},{2 / 3!r},0.99"])
    spook = _sweep(["sweep", "--scenario", "spook", "--sweep-mu", "0.25:1:0.25", "--sweep-c", "0.2,1,5"])
    qcc = _sweep(["sweep", "--scenario", "qcc-spook", "--sweep-c", "log:0.05:5:20"])
    elapsed = time.perf_counter() - start

    checks = [bounded("total sweep time [s]", elapsed, 60.0)]
    rows = warm + spook + qcc
    checks.append(Check("row counts 4 + 12 + 20", (len(warm), len(spook), len(qcc)) == (4, 12, 20),
                        f"{len(warm)}, {len(spook)}, {len(qcc)}"))
    errors = [r for r in rows if r.get("error")]
    checks.append(Check("no failed rows", not errors, "; ".join(r["error"] for r in errors)))
    if errors:
        return checks
    worst_b = max(r["max_boundary_residual"] for r in warm + spook)
    worst_h = max(r["max_conserved_residual"] for r in warm + spook)
    checks.append(bounded("boundary residuals (warm-up, spook)", worst_b, 1e-6))
    checks.append(bounded("conserved residuals (warm-up, spook)", worst_h, 1e-6))
    checks.append(bounded("boundary residuals (qcc)", max(r["max_boundary_residual"] for r in qcc), 1e-6))
    tf = np.array([r["t_f"] for r in warm])
    checks.append(Check("warm-up t_f increasing in mu", bool(np.all(np.diff(tf) > 0)), str(tf)))
    checks.append(Check("warm-up t_f(1e-2) within 1e-2 of 2", abs(tf[0] - 2) <= 1e-2, f"{tf[0]:.6f}"))
    ts = np.array([r["t_star"] for r in qcc])
    tq = np.array([r["t_f"] for r in qcc])
    checks.append(Check("t*, t_f finite", bool(np.all(np.isfinite(ts)) and np.all(np.isfinite(tq))), ""))
    checks.append(Check("t* < t_f", bool(np.all(ts < tq)), ""))
    checks.append(Check("t*(c) monotone (increasing)", bool(np.all(np.diff(ts) > 0)), str(ts)))
    checks.append(Check("t_f(c) monotone (decreasing)", bool(np.all(np.diff(tq) < 0)), str(tq)))
    return checks


CRITERIA = [
    (1, "bang-bang warm-up", criterion_1),
    (2, "quadratic-incentive warm-up", criterion_2),
    (3, "elliptical warm-up cross-check", criterion_3),
    (4, "limits mu -> 0 and mu -> 1", criterion_4),
    (5, "conservation on arbitrary-duration trajectories", criterion_5),
    (6, "spooking elliptical boundary data", criterion_6),
    (7, "QCC spooking piecewise solution", criterion_7),
    (8, "pure quadratic-cost family", criterion_8),
    (9, "property suite", criterion_9),
    (10, "figure-grade sweeps", criterion_10),
]


def test_criterion_1(acceptance_log):
    assert_criterion(*CRITERIA[0][:2], criterion_1(), acceptance_log)


def test_criterion_2(acceptance_log):
    assert_criterion(*CRITERIA[1][:2], criterion_2(), acceptance_log)


def test_criterion_3(acceptance_log):
    assert_criterion(*CRITERIA[2][:2], criterion_3(), acceptance_log)


def test_criterion_4(acceptance_log):
    assert_criterion(*CRITERIA[3][:2], criterion_4(), acceptance_log)


def test_criterion_5(acceptance_log):
    assert_criterion(*CRITERIA[4][:2], criterion_5(), acceptance_log)


def test_criterion_6(acceptance_log):
    assert_criterion(*CRITERIA[5][:2], criterion_6(), acceptance_log)


def test_criterion_7(acceptance_log):
    assert_criterion(*CRITERIA[6][:2], criterion_7(), acceptance_log)


def test_criterion_8(acceptance_log):
    assert_criterion(*CRITERIA[7][:2], criterion_8(), acceptance_log)


def test_criterion_9(acceptance_log):
    assert_criterion(*CRITERIA[8][:2], criterion_9(), acceptance_log)


def test_criterion_10(acceptance_log):
    assert_criterion(*CRITERIA[9][:2], criterion_10(), acceptance_log)


if __name__ == "__main__":
    n_fail = 0
    for number, title, fn in CRITERIA:
        _, failing = report(number, title, fn())
        n_fail += bool(failing)
    sys.exit(1 if n_fail else 0)

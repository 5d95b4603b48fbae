"""Self-check suite run by ``moderation verify``.

Each check returns a :class:`CheckResult`.  ``DEGENERATE`` marks a request
that is correctly refused (e.g. an unbounded duration) and is not a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import closed_form
from .dynamics import ControlledSystem, PhaseState, PositionCost, integrate_hamiltonian
from .errors import DegenerateControlError
from .incentives import (Incentive, incentive_value, inverse_gradient, is_degenerate, optimal_magnitude,
                         potential, potential_gradient)
from .numerics import IntegratorConfig, integrate
from .reparam import ReparamProblem, perturb_q, solve_direct, solve_reparam, to_trajectory

__all__ = ["CheckResult", "run_checks", "CHECKS"]

PASS, FAIL, DEGENERATE = "PASS", "FAIL", "DEGENERATE"

FAMILIES = (Incentive.trivial(), Incentive.elliptical(0.3), Incentive.elliptical(1.0), Incentive.quadratic())


@dataclass
class CheckResult:
    name: str
    status: str
    value: float | None = None
    limit: float | None = None
    detail: str = ""


def _bounded(name, value, limit, detail=""):
    ok = bool(np.isfinite(value) and value <= limit)
    return CheckResult(name, PASS if ok else FAIL, float(value), float(limit), detail)


def check_incentive_maxima(ctx):
    grid = np.linspace(0.0, 1.0, 100_001)
    resolution = grid[1] - grid[0]
    worst = 0.0
    for inc in FAMILIES:
        ct = np.asarray(incentive_value(inc, grid))
        for s in np.linspace(0.0, 10.0, 101):
            vals = grid * s + ct
            sig = optimal_magnitude(inc, s)
            env = sig * s + incentive_value(inc, sig)
            # the envelope value and the brute-force maximum must agree ...
            worst = max(worst, abs(potential(inc, s) - env), max(0.0, float(vals.max()) - env - 1e-12))
            # ... and so must the maximizer, up to the grid spacing
            if not is_degenerate(inc, s):
                worst = max(worst, max(0.0, float(grid[np.argmax(vals)]) - sig - resolution))
    return _bounded("incentive envelope vs brute force", worst, 1e-9)


def check_potential_slope(ctx):
    s = np.linspace(0.01, 5.0, 200)
    h = 1e-6
    worst = 0.0
    for inc in FAMILIES:
        fd = (np.asarray(potential(inc, s + h)) - np.asarray(potential(inc, s - h))) / (2 * h)
        mask = np.ones_like(s, dtype=bool)
        for k in inc.kinks:
            mask &= np.abs(s - k) > 2 * h
        worst = max(worst, float(np.max(np.abs(fd - np.asarray(optimal_magnitude(inc, s)))[mask])))
    return _bounded("potential slope equals optimal magnitude", worst, 1e-6)


def check_inverse_round_trip(ctx):
    lam = np.linspace(-10.0, 10.0, 2001)
    worst = 0.0
    # for small mu the rounding of u alone costs eps * |lambda|**3 / mu**2
    for mu in (0.5, 0.75, 1.0):
        inc = Incentive.elliptical(mu)
        back = inverse_gradient(inc, potential_gradient(inc, lam[:, None]))[:, 0]
        worst = max(worst, float(np.max(np.abs(back - lam))))
    return _bounded("elliptical inverse gradient round trip", worst, 1e-12)


def check_integrator_order(ctx):
    f = lambda t, y: y  # noqa: E731
    errs = [abs(integrate(f, [1.0], (0.0, 1.0), fixed_step=h).y_final[0] - math.e) for h in (0.1, 0.05)]
    ratio = errs[0] / errs[1]
    ok = ratio >= 2**4 / 1.5
    return CheckResult("integrator convergence order", PASS if ok else FAIL, ratio, 2**4 / 1.5,
                       "error ratio when halving the step (>= limit)")


def check_reverse_time(ctx):
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    f = lambda t, y: np.array([y[1], -y[0] + 0.1 * np.sin(t)])  # noqa: E731
    fwd = integrate(f, [1.0, 0.0], (0.0, 5.0), cfg)
    back = integrate(f, fwd.y_final, (5.0, 0.0), cfg)
    return _bounded("reverse-time consistency", float(np.max(np.abs(back.y_final - [1.0, 0.0]))), 10 * cfg.rel_tol)


def check_bang_bang(ctx):
    prob = ReparamProblem.arbitrary_duration(PositionCost.constant(), Incentive.trivial())
    traj = to_trajectory(solve_reparam(prob), 1001)
    x_ref = closed_form.bang_bang(traj.t)[0]
    err = max(abs(traj.duration - 2.0), abs(traj.total_cost - 2.0), float(np.max(np.abs(traj.x - x_ref))))
    return _bounded("bang-bang transfer (duration 2, cost 2)", err, 1e-9)


def check_quadratic_warmup(ctx):
    prob = ReparamProblem.arbitrary_duration(PositionCost.constant(), Incentive.quadratic())
    traj = to_trajectory(solve_reparam(prob), 1001)
    err = max(abs(traj.duration - closed_form.SQRT6),
              abs(traj.total_cost - closed_form.warmup_quadratic_cost(closed_form.SQRT6)))
    return _bounded("quadratic warm-up duration and cost", err, 1e-8)


def check_elliptical_warmup(ctx):
    worst = 0.0
    for mu in (0.1, 0.3, 0.6, 0.9):
        ref = closed_form.warmup_elliptical(mu)
        sol = solve_reparam(ReparamProblem.arbitrary_duration(PositionCost.constant(), Incentive.elliptical(mu)))
        worst = max(worst, abs(sol.q0 - ref.q))
    return _bounded("elliptical warm-up q0 vs closed form", worst, 1e-7)


def check_conservation(ctx):
    worst = 0.0
    for mu, c in ((0.6, 0.0), (0.5, 1.0), (0.25, 5.0)):
        cost = PositionCost.constant() if c == 0 else PositionCost.spook(c)
        sol = solve_reparam(ReparamProblem.arbitrary_duration(cost, Incentive.elliptical(mu)))
        if ctx.get("perturb_q"):
            sol = perturb_q(sol, ctx["perturb_q"])
        worst = max(worst, to_trajectory(sol, 1001).max_conserved_residual)
    return _bounded("conserved quantity on reconstructed trajectories", worst, 1e-6)


def check_direct_round_trip(ctx):
    cost, inc = PositionCost.spook(1.0), Incentive.elliptical(0.5)
    sol = solve_reparam(ReparamProblem.arbitrary_duration(cost, inc))
    state = PhaseState.scalar([0.0, 0.0], [sol.problem.lambda0, -math.sqrt(sol.q0)])
    traj, _ = integrate_hamiltonian(ControlledSystem(2, 1, cost), inc, state, sol.duration)
    return _bounded("costate-parametrized vs time-domain integration", abs(traj.x[-1] - 1.0), 1e-5)


def check_qcc_spook(ctx):
    worst = 0.0
    for c in (0.2, 1.0, 5.0):
        s = closed_form.qcc_spook_solve(c)
        left = s.state(s.t_star)
        right = s.state(min(s.t_star * (1 + 1e-14) + 1e-15, s.t_final))
        jumps = max(abs(left[i] - right[i]) for i in range(3))
        end = s.state(s.t_final)
        worst = max(worst, s.matching_residual, jumps, abs(left[2] - 1.0), abs(end[2] + 1.0),
                    abs(end[0] - 1.0), abs(end[1]))
    return _bounded("QCC spooking continuity and end conditions", worst, 1e-8)


def check_qcc_hat(ctx):
    worst = 0.0
    costs = []
    for k in (1, 2, 3):
        s = closed_form.qcc_hat_solution(1.0, k)
        worst = max(worst, *(abs(v) for v in s.terminal_values()), abs(s.duration - math.sqrt(2) * math.pi * k))
        costs.append(closed_form.qcc_hat_total_cost(1.0, k).quadrature)
    d12, d23 = costs[0] - costs[1], costs[1] - costs[2]
    if not (d12 > 0 and d23 > 0 and d12 > 10 * d23):
        return CheckResult("pure quadratic-cost family", FAIL, d12 / d23 if d23 else math.inf, 10.0,
                           "cost decrease ratio")
    return _bounded("pure quadratic-cost family end conditions", worst, 1e-9)


def check_unit_mu_warmup(ctx):
    try:
        ReparamProblem.arbitrary_duration(PositionCost.constant(), Incentive.elliptical(1.0))
    except DegenerateControlError as exc:
        return CheckResult("mu = 1 warm-up is refused", DEGENERATE, detail=str(exc))
    return CheckResult("mu = 1 warm-up is refused", FAIL, detail="no degeneracy reported")


def check_unit_mu_spook(ctx):
    sol = solve_direct(PositionCost.spook(1.0), Incentive.elliptical(1.0))
    traj = sol.trajectory(1001)
    return _bounded("mu = 1 spooking transfer residuals",
                    max(traj.max_conserved_residual, float(traj.boundary_residuals().max())), 1e-6)


CHECKS: tuple[Callable, ...] = (
    check_incentive_maxima,
    check_potential_slope,
    check_inverse_round_trip,
    check_integrator_order,
    check_reverse_time,
    check_bang_bang,
    check_quadratic_warmup,
    check_elliptical_warmup,
    check_conservation,
    check_direct_round_trip,
    check_qcc_spook,
    check_qcc_hat,
    check_unit_mu_warmup,
    check_unit_mu_spook,
)


def run_checks(perturb_q: float | None = None) -> list[CheckResult]:
    ctx = {"perturb_q": perturb_q}
    out = []
    for chk in CHECKS:
        try:
            out.append(chk(ctx))
        except Exception as exc:  # a crashing check is a failing check
            out.append(CheckResult(chk.__name__.removeprefix("check_"), FAIL, detail=f"{type(exc).__name__}: {exc}"))
    return out

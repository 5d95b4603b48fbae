"""Costate-parametrized solver for one-dimensional controlled acceleration.

When the costate is monotone in time it can replace time as the independent
variable.  Writing ``x = r(lambda)`` and ``lambda' = sgn(lambda_f - lambda0)
* sqrt(q(lambda))``, the second order skewed-gradient pair becomes

    q r' = chi~(|lambda|) + h - C(r),      q' = -2 C'(r),

a first order system in ``lambda`` with one free initial value ``q0``.  For
rest-to-rest transfers the boundary costates follow from the first integral
(``chi~(lambda0) = C(x0)``, ``chi~(lambda_f) = C(x_f)``), so a scalar
shooting problem on ``q0`` remains.  Physical time is recovered from
``t(lambda) = int |d lambda| / sqrt(q)``.

:func:`solve_direct` shoots in physical time instead.  It is used as an
independent cross-check and for problems where the costate is not monotone
(``lambda_f = 0``, e.g. the unit elliptical incentive with a spooking cost).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .dynamics import ControlledSystem, PhaseState, PositionCost, Trajectory, build_trajectory, cost_value
from .dynamics import CostKind, flat_field
from .errors import DegenerateControlError, DomainError, NoBracketError
from .incentives import Incentive, IncentiveKind, potential, potential_inverse
from .numerics import IntegratorConfig, OdeSolution, RootConfig, integrate, shoot, simpson

__all__ = [
    "ReparamProblem",
    "ReparamSolution",
    "DirectSolution",
    "boundary_lambdas",
    "reparam_field",
    "solve_reparam",
    "recover_time",
    "to_trajectory",
    "solve_direct",
    "perturb_q",
]

Q_BRACKET = (1e-6, 50.0)
Q_FLOOR = 1e-10


def boundary_lambdas(cost: PositionCost, inc: Incentive, x0: float = 0.0, xf: float = 1.0,
                     v0: float = 0.0, vf: float = 0.0) -> tuple[float, float]:
    """Boundary costates of a rest-to-rest arbitrary-duration transfer.

    The costate starts on the positive branch (initial acceleration points
    towards the target) and ends on the negative one.

    Raises:
        DomainError: nonzero boundary velocities.
        DegenerateControlError: both boundary costates vanish.
    """
    if v0 != 0.0 or vf != 0.0:
        raise DomainError("only rest-to-rest boundary data is supported")
    lam0 = float(potential_inverse(inc, cost_value(cost, x0)))
    lamf = -float(potential_inverse(inc, cost_value(cost, xf)))
    if lam0 == 0.0 and lamf == 0.0:
        raise DegenerateControlError(f"{inc}: boundary costates vanish, the duration is unbounded")
    return lam0, lamf


@dataclass(frozen=True)
class ReparamProblem:
    cost: PositionCost
    inc: Incentive
    lambda0: float
    lambda_f: float
    x0: float = 0.0
    xf: float = 1.0
    v0: float = 0.0
    vf: float = 0.0
    h_const: float = 0.0

    def __post_init__(self):
        if self.lambda0 == self.lambda_f:
            raise DomainError("lambda0 and lambda_f must differ")
        if self.h_const == 0.0 and self.v0 == 0.0:
            gap = float(potential(self.inc, abs(self.lambda0))) - float(cost_value(self.cost, self.x0))
            if abs(gap) > 1e-12 * max(1.0, float(cost_value(self.cost, self.x0))):
                raise DomainError(f"initial costate inconsistent with arbitrary duration (gap {gap:.3e})")

    @classmethod
    def arbitrary_duration(cls, cost: PositionCost, inc: Incentive, x0: float = 0.0,
                           xf: float = 1.0) -> ReparamProblem:
        lam0, lamf = boundary_lambdas(cost, inc, x0, xf)
        return cls(cost, inc, lam0, lamf, x0, xf)

    @property
    def direction(self) -> float:
        return 1.0 if self.lambda_f > self.lambda0 else -1.0

    @property
    def breakpoints(self) -> tuple[float, ...]:
        lo, hi = sorted((self.lambda0, self.lambda_f))
        pts = {s * k for k in self.inc.kinks for s in (1.0, -1.0)}
        return tuple(sorted(p for p in pts if lo < p < hi))


def _scalar_potential(inc: Incentive):
    if inc.kind is IncentiveKind.TRIVIAL:
        return abs
    if inc.kind is IncentiveKind.ELLIPTICAL:
        mu = inc.mu
        return lambda lam: math.hypot(mu, lam)

    def chi(lam):
        s = abs(lam)
        return 0.5 * (1.0 + s * s) if s <= 1.0 else s

    return chi


def _scalar_cost(cost: PositionCost):
    if cost.kind is CostKind.CONSTANT:
        return (lambda r: 1.0), (lambda r: 0.0)
    c = cost.c
    return (lambda r: 1.0 + 0.5 * c * (1.0 - r) ** 2), (lambda r: -c * (1.0 - r))


def _make_field(problem: ReparamProblem, with_time: bool = True):
    chi = _scalar_potential(problem.inc)
    C, dC = _scalar_cost(problem.cost)
    h = problem.h_const
    d = problem.direction

    def f(lam, y):
        r, q = y[0], y[1]
        if not q > 0:
            # stage probe past a collapse of q; the step is rejected
            return np.full(3 if with_time else 2, math.nan)
        rq = (chi(lam) + h - C(r)) / q
        if with_time:
            return np.array([rq, -2.0 * dC(r), d / math.sqrt(q)])
        return np.array([rq, -2.0 * dC(r)])

    return f


def reparam_field(problem: ReparamProblem, lam: float, y) -> np.ndarray:
    """``(r', q')`` with respect to the costate.

    Raises:
        DomainError: ``q <= 0``.
    """
    if y[1] <= 0:
        raise DomainError("q must stay positive")
    return _make_field(problem, with_time=False)(float(lam), np.asarray(y, dtype=float))


def _q_event(lam, y):
    return y[1] - Q_FLOOR


_q_event.direction = -1


def _blowup_event(lam, y):
    return 1e6 - abs(y[0])


_blowup_event.direction = -1


def _shot(problem: ReparamProblem, q0: float, cfg: IntegratorConfig) -> OdeSolution | None:
    y0 = np.array([problem.x0, q0, 0.0])
    sol = integrate(_make_field(problem), y0, (problem.lambda0, problem.lambda_f), cfg,
                    events=[_q_event, _blowup_event], breakpoints=problem.breakpoints)
    return sol if sol.status == "success" else None


def _monotone(sol: OdeSolution, problem: ReparamProblem) -> bool:
    r = sol.y[:, 0]
    tol = 1e-9 * max(1.0, abs(problem.xf - problem.x0))
    return bool(np.all(np.diff(r) * np.sign(problem.xf - problem.x0) >= -tol))


@dataclass(frozen=True)
class ReparamSolution:
    """Shooting solution of the costate-parametrized problem.

    ``dense`` interpolates ``(r, q, t)`` as functions of the costate.
    ``q_shift`` offsets the q profile and exists only to build corrupted
    solutions for negative controls; real solutions leave it at 0.
    """

    problem: ReparamProblem
    q0: float
    dense: OdeSolution
    iterations: int = 0
    evaluations: int = 0
    q_shift: float = 0.0

    @property
    def lambda_grid(self) -> np.ndarray:
        return self.dense.t

    @property
    def r_profile(self) -> np.ndarray:
        return self.dense.y[:, 0]

    @property
    def q_profile(self) -> np.ndarray:
        return self.dense.y[:, 1] + self.q_shift

    @cached_property
    def _time(self):
        return recover_time(self)

    @property
    def time_map(self) -> np.ndarray:
        """Physical time at each node of ``lambda_grid``."""
        return self._time[1]

    @property
    def duration(self) -> float:
        return self._time[2]

    @property
    def terminal_residual(self) -> float:
        return float(self.dense.y_final[0] - self.problem.xf)

    def profile(self, lam):
        """``r(lambda), q(lambda)`` from the continuous extension."""
        y = self.dense(lam)
        return y[..., 0], y[..., 1] + self.q_shift


def perturb_q(sol: ReparamSolution, delta: float) -> ReparamSolution:
    """Copy of ``sol`` with ``delta`` added to its q profile (negative control)."""
    return replace(sol, q_shift=sol.q_shift + delta)


def solve_reparam(problem: ReparamProblem, cfg: IntegratorConfig | None = None, *,
                  bracket: tuple[float, float] = Q_BRACKET, n_scan: int = 64,
                  root_cfg: RootConfig | None = None) -> ReparamSolution:
    """Find ``q0`` such that the costate-parametrized flow ends at ``x_f``.

    The shot residual is ``r(lambda_f; q0) - x_f``.  Shots on which q
    collapses are invalid and excluded from bracketing.  Only non-overshooting
    solutions (r monotone) are accepted; larger ``q0`` roots are tried first.

    Raises:
        NoBracketError: no admissible root for ``q0`` in ``bracket``.
    """
    cfg = cfg or IntegratorConfig()
    root_cfg = root_cfg or RootConfig(x_tol=1e-13, f_tol=1e-12)
    scan_cfg = IntegratorConfig(rel_tol=max(cfg.rel_tol, 1e-7), abs_tol=max(cfg.abs_tol, 1e-9),
                                max_step=cfg.max_step, max_steps=cfg.max_steps)
    dense_cfg = IntegratorConfig(rel_tol=max(cfg.rel_tol / 100, 1e-13), abs_tol=max(cfg.abs_tol / 100, 1e-15),
                                 max_step=cfg.max_step, max_steps=cfg.max_steps)
    counts = {"n": 0}

    def residual_at(q0, c):
        counts["n"] += 1
        sol = _shot(problem, q0, c)
        if sol is None:
            return math.nan
        return float(sol.y_final[0] - problem.xf)

    lo, hi = bracket
    grid = np.geomspace(lo, hi, n_scan)
    coarse = np.array([residual_at(q, scan_cfg) for q in grid])

    cands = []
    for i in range(n_scan - 2, -1, -1):
        a, b = coarse[i], coarse[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0:
            cands.append((grid[i], grid[i + 1]))
    if not cands:
        raise NoBracketError(f"{problem.inc} with {problem.cost.kind.value} cost: no sign change "
                             f"for q0 in [{lo:g}, {hi:g}]")

    def fine(q0):
        v = residual_at(q0, cfg)
        if not math.isfinite(v):
            raise NoBracketError("invalid shot inside a bracket")
        return v

    iterations = 0
    for a, b in cands:
        try:
            q0, info = shoot(fine, (a, b), root_cfg, n_scan=2, full_output=True)
        except NoBracketError:
            continue
        iterations += info.iterations
        # trajectories differentiate the interpolant, so keep a tighter copy
        sol = _shot(problem, q0, dense_cfg)
        if sol is not None and _monotone(sol, problem):
            return ReparamSolution(problem, float(q0), sol, iterations, counts["n"])
    raise NoBracketError(f"{problem.inc}: no non-overshooting solution for q0 in [{lo:g}, {hi:g}]")


def recover_time(sol: ReparamSolution, n_panels: int = 4000):
    """Physical time along the costate: ``t(lambda) = int |d lambda| / sqrt(q)``.

    Returns ``(lambda_grid, t_grid, duration)`` on the solution nodes.  Each
    node interval is integrated with composite Simpson, so the result is
    independent of the time component carried by the integrator.
    """
    p = sol.problem
    nodes = sol.lambda_grid
    m = max(2, 2 * math.ceil(n_panels / (2 * max(1, len(nodes) - 1))))

    def inv_sqrt_q(lam):
        q = sol.profile(lam)[1]
        if np.any(q <= 0):
            raise DomainError("q must stay positive")
        return 1.0 / np.sqrt(q)

    steps = [abs(simpson(inv_sqrt_q, a, b, m)) for a, b in zip(nodes[:-1], nodes[1:])]
    t = np.concatenate([[0.0], np.cumsum(steps)])
    return nodes, t, float(t[-1])


def to_trajectory(sol: ReparamSolution, n_samples: int = 1001, times=None) -> Trajectory:
    """Sample the solution uniformly in physical time.

    ``x = r(lambda(t))``, ``x' = lambda' r'``, ``u = grad chi(lambda)`` with
    ``lambda' = sgn(lambda_f - lambda0) sqrt(q)``.  ``lambda(t)`` is found by
    Newton iteration on the integrated time component.
    """
    p = sol.problem
    d = p.direction
    dense = sol.dense
    t_nodes = dense.y[:, 2]
    t_f = float(t_nodes[-1])
    if times is None:
        times = np.linspace(0.0, t_f, n_samples)
    times = np.asarray(times, dtype=float)
    if np.any(times < -1e-12) or np.any(times > t_f * (1 + 1e-12) + 1e-12):
        raise DomainError("sample times outside [0, t_f]")

    lam = np.interp(times, t_nodes, dense.t)
    lam_lo, lam_hi = sorted((p.lambda0, p.lambda_f))
    for _ in range(8):
        y = dense(lam)
        step = (y[:, 2] - times) * d * np.sqrt(y[:, 1])
        lam = np.clip(lam - step, lam_lo, lam_hi)
        if np.max(np.abs(step)) < 1e-15 * max(1.0, abs(lam_lo), abs(lam_hi)):
            break
    lam[0] = p.lambda0 if times[0] == 0 else lam[0]
    if abs(times[-1] - t_f) <= 1e-12 * max(1.0, t_f):
        lam[-1] = p.lambda_f

    y = dense(lam)
    dy = dense(lam, derivative=True)
    q = y[:, 1] + sol.q_shift
    lam_dot = d * np.sqrt(q)
    x = y[:, 0]
    v = lam_dot * dy[:, 0]
    sys = ControlledSystem(2, 1, p.cost)
    return build_trajectory(sys, p.inc, times, np.stack([x, v], axis=1), np.stack([lam, lam_dot], axis=1),
                            reference=-p.h_const)


@dataclass(frozen=True)
class DirectSolution:
    """Time-domain shooting solution; ``dense`` interpolates ``(x, x', lambda, lambda')``."""

    cost: PositionCost
    inc: Incentive
    lambda0: float
    lambda_dot0: float
    dense: OdeSolution
    iterations: int = 0
    evaluations: int = 0
    x0: float = 0.0
    xf: float = 1.0

    @property
    def duration(self) -> float:
        return self.dense.t_final

    @property
    def terminal_residual(self) -> float:
        return float(self.dense.y_final[0] - self.xf)

    def trajectory(self, n_samples: int = 1001, times=None) -> Trajectory:
        if times is None:
            times = np.linspace(0.0, self.duration, n_samples)
        Y = self.dense(np.asarray(times, dtype=float))
        sys = ControlledSystem(2, 1, self.cost)
        return build_trajectory(sys, self.inc, times, Y[:, :2], Y[:, 2:], reference=0.0)


def solve_direct(cost: PositionCost, inc: Incentive, x0: float = 0.0, xf: float = 1.0,
                 cfg: IntegratorConfig | None = None, *, bracket: tuple[float, float] = (1e-6, 50.0),
                 n_scan: int = 64, t_max: float = 500.0, root_cfg: RootConfig | None = None) -> DirectSolution:
    """Rest-to-rest transfer by shooting on the initial costate rate.

    Starts from ``(x0, 0, lambda0, -p)`` and integrates the skewed-gradient
    flow until the velocity returns to zero (or, when the terminal costate
    is 0, until the costate climbs back to 0).  The residual is the position
    error at that moment; the non-overshooting root with the smallest ``p``
    is returned.

    Raises:
        NoBracketError: no root for ``p`` in ``bracket``.
    """
    if xf <= x0:
        raise DomainError("direct shooter expects x_f > x0")
    cfg = cfg or IntegratorConfig()
    root_cfg = root_cfg or RootConfig(x_tol=1e-14, f_tol=1e-12)
    lam0, lamf = boundary_lambdas(cost, inc, x0, xf)
    sys = ControlledSystem(2, 1, cost)
    field = flat_field(sys, inc)

    def v_down(t, y):
        return y[1]

    v_down.direction = -1

    def lam_up(t, y):
        return y[2]

    lam_up.direction = 1
    events = [v_down, lam_up] if lamf == 0.0 else [v_down]
    counts = {"n": 0}

    def run(p):
        counts["n"] += 1
        return integrate(field, np.array([x0, 0.0, lam0, -p]), (0.0, t_max), cfg, events=events)

    def residual(p):
        sol = run(p)
        if sol.status != "event":
            return math.nan
        return float(sol.y_final[0] - xf)

    def accept(p):
        sol = run(p)
        return bool(np.all(np.diff(sol.y[:, 0]) >= -1e-9))

    p, info = shoot(residual, bracket, root_cfg, n_scan=n_scan, log_scan=True, accept=accept,
                    full_output=True)
    sol = run(p)
    return DirectSolution(cost, inc, lam0, -float(p), sol, info.iterations, counts["n"], x0, xf)

"""Numerical kernel: explicit Runge-Kutta integration, composite Simpson
quadrature, Brent root finding and a scanning single-parameter shooter.

The integrator is the Dormand-Prince 5(4) pair with Shampine's quartic
continuous extension.  It runs forwards or backwards (``t1 < t0``), can stop
at terminal events, and can be forced to step exactly onto breakpoints where
the vector field is not smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, IntegrationError, NoBracketError

__all__ = [
    "IntegratorConfig",
    "RootConfig",
    "OdeSolution",
    "RootInfo",
    "integrate",
    "simpson",
    "simpson_samples",
    "find_root",
    "shoot",
]

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_steps: int = 200_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.max_step <= 0:
            raise DomainError("integrator tolerances and max_step must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")


@dataclass(frozen=True)
class RootConfig:
    x_tol: float = 1e-14
    f_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self):
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise DomainError("root tolerances must be positive")


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (7 stages, FSAL)
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + theta h) = y + h * K^T P [theta, theta^2, theta^3, theta^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class OdeSolution:
    """Piecewise-polynomial solution of an IVP.

    ``t`` and ``y`` hold the accepted step nodes; calling the object evaluates
    the continuous extension anywhere inside the integrated span.
    """

    def __init__(self, t, y, h, q, status, nfev, n_rejected):
        self.t = t
        self.y = y
        self._h = h
        self._q = q  # (steps, dim, 4) coefficients of the continuous extension
        self.status = status
        self.nfev = nfev
        self.n_rejected = n_rejected
        self.direction = 1.0 if t[-1] >= t[0] else -1.0

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1]

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    def __call__(self, t, derivative: bool = False):
        """Evaluate ``y(t)`` (or ``y'(t)``); ``t`` may be an array.

        Returns an array of shape ``(dim,)`` for scalar ``t`` and
        ``(len(t), dim)`` otherwise.
        """
        tt = np.asarray(t, dtype=float)
        scalar = tt.ndim == 0
        tt = np.atleast_1d(tt)
        if self.n_steps == 0:
            out = np.repeat(self.y[:1], len(tt), axis=0)
            if derivative:
                out = np.full_like(out, np.nan)
            return out[0] if scalar else out
        lo, hi = sorted((self.t[0], self.t[-1]))
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(tt < lo - slack) or np.any(tt > hi + slack):
            raise DomainError("evaluation point outside the integrated span")
        key = self.direction * self.t
        idx = np.searchsorted(key, self.direction * tt, side="right") - 1
        idx = np.clip(idx, 0, self.n_steps - 1)
        h = self._h[idx]
        theta = (tt - self.t[idx]) / h
        q = self._q[idx]
        if derivative:
            powers = np.stack([np.ones_like(theta), 2 * theta, 3 * theta**2, 4 * theta**3], axis=-1)
            out = np.einsum("sdk,sk->sd", q, powers)
        else:
            powers = np.stack([theta, theta**2, theta**3, theta**4], axis=-1)
            out = self.y[idx] + h[:, None] * np.einsum("sdk,sk->sd", q, powers)
        return out[0] if scalar else out


def _rms(x):
    return math.sqrt(float(np.mean(x * x)))


def _initial_step(f, t0, y0, f0, direction, rtol, atol, max_step):
    # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4.
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def _crossed(g_old, g_new, direction):
    if direction > 0:
        return g_old < 0 <= g_new
    if direction < 0:
        return g_old > 0 >= g_new
    return (g_old < 0 <= g_new) or (g_old > 0 >= g_new)


def integrate(
    field: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
    *,
    events: Callable | Sequence[Callable] | None = None,
    breakpoints: Sequence[float] = (),
    fixed_step: float | None = None,
) -> OdeSolution:
    """Integrate ``y' = field(t, y)`` over ``t_span``.

    Args:
        field: right-hand side; must return an array shaped like ``y``.
        y0: initial state (1-D).
        t_span: ``(t0, t1)``; ``t1 < t0`` integrates backwards.
        cfg: tolerances and step limits.
        events: terminal event function(s) ``g(t, y)``.  Integration stops at
            the first sign change of any of them.  An optional ``direction``
            attribute restricts to increasing (+1) or decreasing (-1)
            crossings.  A start exactly on ``g = 0`` does not trigger.
        breakpoints: times the integrator must step onto exactly; the field
            is re-evaluated there instead of reusing the last stage.
        fixed_step: if given, take uniform steps no larger than this with no
            error control.

    Returns:
        An :class:`OdeSolution`; ``status`` is ``"success"`` or ``"event"``.

    Raises:
        IntegrationError: step budget exhausted or step size underflow.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float).ravel()
    direction = 1.0 if t1 >= t0 else -1.0
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    if events is None:
        events = []
    elif callable(events):
        events = [events]
    ev_dirs = [getattr(g, "direction", 0) for g in events]

    stops = sorted(
        (float(b) for b in breakpoints if direction * (b - t0) > 0 and direction * (t1 - b) > 0),
        key=lambda b: direction * b,
    )
    stops.append(t1)

    nfev = 0

    def f(t, yy):
        nonlocal nfev
        nfev += 1
        return np.asarray(field(t, yy), dtype=float)

    ts, ys, hs, qs = [t0], [y.copy()], [], []
    t = t0
    fy = f(t, y)
    g_vals = [float(g(t, y)) for g in events]
    span = abs(t1 - t0)
    if span == 0:
        return OdeSolution(np.array(ts), np.array(ys), np.zeros(0), np.zeros((0, y.size, 4)),
                           "success", nfev, 0)

    if fixed_step is not None:
        n = max(1, math.ceil(span / fixed_step - 1e-12))
        h_abs = span / n
    else:
        h_abs = _initial_step(f, t, y, fy, direction, rtol, atol, min(cfg.max_step, span))

    K = np.empty((7, y.size))
    n_rejected = 0
    status = "success"
    stop_i = 0
    steps = 0

    while stop_i < len(stops):
        target = stops[stop_i]
        remaining = abs(target - t)
        if remaining <= 4 * EPS * max(1.0, abs(t)):
            t = target
            stop_i += 1
            if stop_i < len(stops):
                fy = f(t, y)
            continue
        if steps >= cfg.max_steps:
            raise IntegrationError(f"step budget of {cfg.max_steps} exhausted at t={t}")

        h_try = min(h_abs, remaining, cfg.max_step)
        last = h_try >= remaining
        while True:
            h = direction * h_try
            K[0] = fy
            for s in range(1, 6):
                K[s] = f(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
            y_new = y + h * (_B @ K[:6])
            t_new = target if last else t + h
            f_new = f(t_new, y_new)
            K[6] = f_new
            if fixed_step is not None:
                break
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(h * (_E @ K) / scale)
            if err <= 1.0:
                fac = 10.0 if err == 0 else min(10.0, 0.9 * err ** -0.2)
                h_abs = h_try * fac
                break
            n_rejected += 1
            h_try *= max(0.2, 0.9 * err ** -0.2)
            last = False
            if h_try < 16 * EPS * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t}")

        steps += 1
        q = K.T @ _P
        ts.append(t_new)
        ys.append(y_new.copy())
        hs.append(h)
        qs.append(q)

        if events:
            hit = None
            for i, g in enumerate(events):
                g_new = float(g(t_new, y_new))
                if _crossed(g_vals[i], g_new, ev_dirs[i]):
                    t_lo, y_lo = t, y

                    def g_local(tau, g=g):
                        theta = (tau - t_lo) / h
                        yy = y_lo + h * (q @ np.array([theta, theta**2, theta**3, theta**4]))
                        return float(g(tau, yy))

                    if g_new == 0:
                        te = t_new
                    else:
                        lo_, hi_ = sorted((t_lo, t_new))
                        te = find_root(g_local, (lo_, hi_), RootConfig(x_tol=1e-15, f_tol=1e-300))
                    if hit is None or direction * (te - hit) < 0:
                        hit = te
                g_vals[i] = g_new
            if hit is not None:
                theta = (hit - t) / h
                ys[-1] = y + h * (q @ np.array([theta, theta**2, theta**3, theta**4]))
                ts[-1] = hit
                status = "event"
                break

        t, y, fy = t_new, y_new, f_new
        if last:
            t = target
            stop_i += 1
            if stop_i < len(stops):
                fy = f(t, y)

    return OdeSolution(np.array(ts), np.array(ys), np.array(hs), np.array(qs), status, nfev, n_rejected)


def simpson(f: Callable, a: float, b: float, n_panels: int) -> float:
    """Composite Simpson rule with ``n_panels`` (even) subintervals.

    ``f`` is called once on the full node array.
    """
    if n_panels < 2 or n_panels % 2:
        raise DomainError("Simpson's rule needs an even number of panels")
    x = np.linspace(a, b, n_panels + 1)
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise DomainError("non-finite integrand sample")
    h = (b - a) / n_panels
    return float(h / 3 * (fx[0] + fx[-1] + 4 * fx[1:-1:2].sum() + 2 * fx[2:-1:2].sum()))


def simpson_samples(y, x) -> float:
    """Simpson's rule on uniformly spaced samples ``y(x)``.

    With an even number of samples the last three intervals use the 3/8
    rule, so the estimate stays fourth order.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n != len(y) or n < 2:
        raise DomainError("need matching sample arrays of length >= 2")
    if not np.all(np.isfinite(y)):
        raise DomainError("non-finite integrand sample")
    h = (x[-1] - x[0]) / (n - 1)
    if n == 2:
        return float(0.5 * h * (y[0] + y[1]))
    if n == 3:
        return float(h / 3 * (y[0] + 4 * y[1] + y[2]))
    if n == 4:
        return float(3 * h / 8 * (y[0] + 3 * y[1] + 3 * y[2] + y[3]))
    m = n if n % 2 else n - 3
    total = h / 3 * (y[0] + y[m - 1] + 4 * y[1:m - 1:2].sum() + 2 * y[2:m - 1:2].sum())
    if m != n:
        total += 3 * h / 8 * (y[-4] + 3 * y[-3] + 3 * y[-2] + y[-1])
    return float(total)


@dataclass
class RootInfo:
    iterations: int
    evaluations: int
    converged: bool
    bracket: tuple[float, float]


def find_root(f: Callable[[float], float], bracket: tuple[float, float],
              cfg: RootConfig | None = None, full_output: bool = False):
    """Brent's method on a sign-changing bracket.

    Stops when ``|f(x)| <= f_tol`` or the bracket has shrunk below
    ``x_tol`` (plus a few ulps of ``x``).  The returned root always lies in
    the initial bracket.

    Raises:
        NoBracketError: ``f(lo)`` and ``f(hi)`` have the same strict sign.
        ConvergenceError: ``max_iter`` exhausted or ``f`` not finite.
    """
    cfg = cfg or RootConfig()
    a, b = float(bracket[0]), float(bracket[1])
    evals = 0

    def F(x):
        nonlocal evals
        evals += 1
        v = float(f(x))
        if not math.isfinite(v):
            raise ConvergenceError(f"non-finite function value at x={x}")
        return v

    fa, fb = F(a), F(b)

    def done(x, it, ok=True):
        info = RootInfo(it, evals, ok, (float(bracket[0]), float(bracket[1])))
        return (x, info) if full_output else x

    if fa == 0:
        return done(a, 0)
    if fb == 0:
        return done(b, 0)
    if fa * fb > 0:
        raise NoBracketError(f"no sign change on [{a}, {b}]: f={fa}, {fb}")

    c, fc = a, fa
    d = e = b - a
    for it in range(1, cfg.max_iter + 1):
        if fb * fc > 0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2 * EPS * abs(b) + 0.5 * cfg.x_tol
        m = 0.5 * (c - b)
        if abs(m) <= tol or abs(fb) <= cfg.f_tol:
            return done(b, it)
        if abs(e) >= tol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p, qq = 2 * m * s, 1 - s
            else:
                qa, r = fa / fc, fb / fc
                p = s * (2 * m * qa * (qa - r) - (b - a) * (r - 1))
                qq = (qa - 1) * (r - 1) * (s - 1)
            if p > 0:
                qq = -qq
            else:
                p = -p
            if 2 * p < min(3 * m * qq - abs(tol * qq), abs(e * qq)):
                e, d = d, p / qq
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        b += d if abs(d) > tol else math.copysign(tol, m)
        fb = F(b)
    raise ConvergenceError(f"Brent iteration did not converge in {cfg.max_iter} steps")


def shoot(residual: Callable[[float], float], bracket: tuple[float, float],
          cfg: RootConfig | None = None, *, n_scan: int = 64, log_scan: bool = False,
          accept: Callable[[float], bool] | None = None, prefer: str = "low",
          full_output: bool = False):
    """Solve ``residual(p) = 0`` for a scalar shooting parameter.

    The bracket is first scanned at ``n_scan`` points (geometrically spaced
    if ``log_scan``).  Residuals that are NaN mark failed shots and never
    form part of a bracket.  Candidate sign changes are refined with
    :func:`find_root` starting from the low end (``prefer="low"``) or the
    high end; the first root passing ``accept`` is returned.

    Raises:
        NoBracketError: no usable sign change, or no root accepted.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise DomainError("shooting bracket must satisfy lo < hi")
    if log_scan:
        if lo <= 0:
            raise DomainError("log scan needs a positive bracket")
        grid = np.geomspace(lo, hi, n_scan)
    else:
        grid = np.linspace(lo, hi, n_scan)
    vals = np.array([float(residual(p)) for p in grid])
    evals = len(grid)

    cands = []
    for i in range(len(grid) - 1):
        va, vb = vals[i], vals[i + 1]
        if not (np.isfinite(va) and np.isfinite(vb)):
            continue
        if va == 0:
            cands.append((grid[i], grid[i]))
        elif va * vb < 0:
            cands.append((grid[i], grid[i + 1]))
    if np.isfinite(vals[-1]) and vals[-1] == 0:
        cands.append((grid[-1], grid[-1]))
    if prefer == "high":
        cands.reverse()
    if not cands:
        raise NoBracketError(f"residual has no sign change on [{lo}, {hi}] ({n_scan}-point scan)")

    iterations = 0
    for a, b in cands:
        if a == b:
            p = a
        else:
            p, info = find_root(residual, (a, b), cfg, full_output=True)
            iterations += info.iterations
            evals += info.evaluations
        if accept is None or accept(p):
            if full_output:
                return p, RootInfo(iterations, evals, True, (a, b))
            return p
    raise NoBracketError("no root in the bracket passed the acceptance test")

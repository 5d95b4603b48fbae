"""Closed-form reference solutions for rest-to-rest transfers from 0 to 1.

Constant state cost (``C = 1``):

* trivial incentive: the bang-bang transfer of duration 2;
* quadratic incentive: the cubic ``x = tau**2 (3 - 2 tau)``, ``tau = t/t_f``,
  for ``t_f >= sqrt(6)``;
* any incentive, starting costate ``lambda0``: ``q`` is constant, the costate
  falls linearly from ``lambda0`` to ``-lambda0`` and
  ``x = r(lambda)`` with ``q r(lambda) = int_lambda^lambda0 (chi~(lambda0) - chi~(|s|)) ds``.

Spooking cost ``1 + (c/2)(1 - x)**2`` with the quadratic incentive: where
``|lambda| <= 1`` the control equals the costate and ``x'''' + c x = c``.  In
the rescaled time ``s = c**(1/4) t / sqrt(2)`` the deviation ``y = 1 - x``
solves ``y'''' + 4 y = 0``, whose solutions are

    y(s) = (cosh s, sinh s) M (cos s, sin s)^T.

The arbitrary-duration transfer saturates (``x'' = 1``) up to ``t*`` and
follows such a beam curve afterwards.  With the pure quadratic control cost
``u**2/2 + (c/2)(1 - x)**2`` the whole transfer is a beam curve; those with
zero Hamiltonian form a discrete family of durations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateControlError, DomainError
from .incentives import Incentive, IncentiveKind, gradient_1d, potential, potential_inverse
from .numerics import RootConfig, find_root, shoot, simpson

__all__ = [
    "bang_bang",
    "warmup_quadratic",
    "warmup_quadratic_cost",
    "WarmupSolution",
    "warmup_general",
    "WarmupEllipticalSolution",
    "warmup_elliptical",
    "beam_matrix",
    "beam_solution",
    "S_TILDE",
    "tan_tanh_root",
    "qcc_spook_endpoint_coeffs",
    "QccSpookSolution",
    "qcc_spook_solve",
    "QccHatSolution",
    "qcc_hat_solution",
    "QccHatCost",
    "qcc_hat_total_cost",
    "QccFixedSolution",
    "qcc_fixed_duration",
]

SQRT6 = math.sqrt(6.0)


def _as_array(t):
    t = np.asarray(t, dtype=float)
    return t, t.ndim == 0


def _out(arrs, scalar):
    return tuple(float(a) for a in arrs) if scalar else arrs


def bang_bang(t):
    """Time-minimal transfer: ``x'' = +1`` on ``[0, 1]``, ``-1`` on ``(1, 2]``.

    Returns ``(x, x', x'')``; the switch takes the left-hand value.
    """
    t, scalar = _as_array(t)
    if np.any(t < 0) or np.any(t > 2) or np.any(np.isnan(t)):
        raise DomainError("bang-bang transfer is defined on [0, 2]")
    first = t <= 1.0
    x = np.where(first, 0.5 * t * t, -0.5 * t * t + 2.0 * t - 1.0)
    v = np.where(first, t, 2.0 - t)
    a = np.where(first, 1.0, -1.0)
    return _out((x, v, a), scalar)


def _check_quadratic_duration(t_f):
    if not t_f >= SQRT6 * (1 - 1e-14):
        raise DomainError(f"smooth quadratic transfer needs t_f >= sqrt(6), got {t_f}")


def warmup_quadratic(t, t_f: float = SQRT6):
    """Smooth quadratic-incentive transfer of duration ``t_f``: ``(x, x', x'')``."""
    _check_quadratic_duration(t_f)
    t, scalar = _as_array(t)
    if np.any(t < 0) or np.any(t > t_f):
        raise DomainError("t outside [0, t_f]")
    tau = t / t_f
    x = tau * tau * (3.0 - 2.0 * tau)
    v = 6.0 * tau * (1.0 - tau) / t_f
    a = 6.0 * (1.0 - 2.0 * tau) / t_f**2
    return _out((x, v, a), scalar)


def warmup_quadratic_cost(t_f: float) -> float:
    """Total cost ``int (1 + x''**2) / 2 dt = t_f/2 + 6/t_f**3``."""
    _check_quadratic_duration(t_f)
    return t_f / 2.0 + 6.0 / t_f**3


def _pieces(inc: Incentive, b: float):
    """Split ``[0, b]`` where ``chi~`` is not smooth or bends sharply."""
    cuts = [k for k in inc.kinks if 0 < k < b]
    if inc.kind is IncentiveKind.ELLIPTICAL and inc.mu < b:
        cuts.append(inc.mu)
    pts = [0.0] + sorted(cuts) + [b]
    return list(zip(pts[:-1], pts[1:]))


def _phi(inc: Incentive, lam, n_panels: int = 400):
    """``int_0^lambda chi~(|s|) ds`` by composite Simpson (odd in lambda)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.empty_like(lam)
    w = np.ones(n_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    frac = np.linspace(0.0, 1.0, n_panels + 1)
    for i, l in enumerate(lam):
        b = abs(l)
        total = 0.0
        for a0, a1 in _pieces(inc, b):
            s = a0 + (a1 - a0) * frac
            total += (a1 - a0) / (3.0 * n_panels) * float(w @ np.asarray(potential(inc, s)))
        out[i] = math.copysign(total, l)
    return out


@dataclass(frozen=True)
class WarmupSolution:
    """Constant-cost transfer with starting costate ``lambda0 > 0``.

    ``arbitrary_duration`` is set when ``chi~(lambda0) = 1``, i.e. the
    conserved quantity vanishes.
    """

    inc: Incentive
    lambda0: float
    q: float
    duration: float
    arbitrary_duration: bool

    def r_map(self, lam):
        """Position as a function of the costate, ``r(lambda0) = 0``, ``r(-lambda0) = 1``."""
        lam, scalar = _as_array(lam)
        if np.any(np.abs(lam) > self.lambda0 * (1 + 1e-12)):
            raise DomainError("costate outside [-lambda0, lambda0]")
        chi0 = float(potential(self.inc, self.lambda0))
        phi0 = float(_phi(self.inc, self.lambda0)[0])
        r = (chi0 * (self.lambda0 - lam) - (phi0 - _phi(self.inc, lam).reshape(lam.shape))) / self.q
        return float(r) if scalar else r

    def costate(self, t):
        t, _ = _as_array(t)
        return self.lambda0 * (1.0 - 2.0 * t / self.duration)

    def state(self, t):
        """``(x, x', x'', lambda, lambda')`` at times ``t``."""
        t, scalar = _as_array(t)
        if np.any(t < 0) or np.any(t > self.duration * (1 + 1e-12)):
            raise DomainError("t outside [0, t_f]")
        lam = self.costate(t)
        sq = math.sqrt(self.q)
        chi0 = float(potential(self.inc, self.lambda0))
        x = np.asarray(self.r_map(lam))
        v = (chi0 - np.asarray(potential(self.inc, np.abs(lam)))) / sq
        a = np.asarray(gradient_1d(self.inc, lam, left_sign=1.0))
        lam_dot = np.full_like(lam, -sq)
        return _out((x, v, a, lam, lam_dot), scalar)


def warmup_general(inc: Incentive, lambda0: float, n_panels: int = 2000) -> WarmupSolution:
    """Constant-cost transfer for any incentive, by quadrature.

    ``q = 2 int_0^lambda0 (chi~(lambda0) - chi~(s)) ds`` and the duration is
    ``2 lambda0 / sqrt(q)``.

    Raises:
        DomainError: ``lambda0 <= 0``.
        DegenerateControlError: ``q`` vanishes.
    """
    if not lambda0 > 0:
        raise DomainError("lambda0 must be positive")
    chi0 = float(potential(inc, lambda0))
    q = 0.0
    for a, b in _pieces(inc, lambda0):
        q += 2.0 * simpson(lambda s: chi0 - np.asarray(potential(inc, s)), a, b, n_panels)
    if not q > 0:
        raise DegenerateControlError(f"{inc}: q = 0 at lambda0 = {lambda0}")
    return WarmupSolution(inc, float(lambda0), q, 2.0 * lambda0 / math.sqrt(q), abs(chi0 - 1.0) <= 1e-12)


def _elliptic_antiderivative(mu, lam):
    # G' = sqrt(mu^2 + lam^2); G is odd
    return 0.5 * (lam * np.hypot(mu, lam) + mu * mu * np.arcsinh(lam / mu))


@dataclass(frozen=True)
class WarmupEllipticalSolution(WarmupSolution):
    """Arbitrary-duration constant-cost transfer for the elliptical incentive.

    Uses the antiderivative of ``chi~`` in closed form; ``lambda0 =
    sqrt(1 - mu**2)`` and ``q = lambda0 + mu**2 log(mu / (1 + lambda0))``.
    """

    mu: float = 0.0

    def r_map(self, lam):
        lam, scalar = _as_array(lam)
        if np.any(np.abs(lam) > self.lambda0 * (1 + 1e-12)):
            raise DomainError("costate outside [-lambda0, lambda0]")
        g0 = _elliptic_antiderivative(self.mu, self.lambda0)
        r = ((self.lambda0 - lam) - (g0 - _elliptic_antiderivative(self.mu, lam))) / self.q
        return float(r) if scalar else r


def warmup_elliptical(mu: float) -> WarmupEllipticalSolution:
    """Closed-form elliptical transfer.

    Raises:
        DegenerateControlError: ``mu = 1`` (the duration is unbounded).
    """
    inc = Incentive.elliptical(mu)
    if mu >= 1.0:
        raise DegenerateControlError("mu = 1: boundary costates vanish and the duration is unbounded")
    lam0 = math.sqrt((1.0 - mu) * (1.0 + mu))
    q = lam0 + mu * mu * math.log(mu / (1.0 + lam0))
    if not q > 0:
        raise DegenerateControlError(f"mu = {mu}: q underflows")
    return WarmupEllipticalSolution(inc, lam0, q, 2.0 * lam0 / math.sqrt(q), True, float(mu))


# ---------------------------------------------------------------------------
# beam curves y'''' + 4 y = 0

# d/ds on coefficients of (cosh cos, cosh sin, sinh cos, sinh sin)
_D = np.array([
    [0.0, 1.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0, 1.0],
    [0.0, 1.0, -1.0, 0.0],
])


def beam_matrix(y0: float, v0: float, a0: float, m: float) -> np.ndarray:
    """Coefficient matrix of the beam curve with ``y(0), y'(0), y''(0) = y0, v0, a0``.

    ``m`` is the remaining free parameter.
    """
    return np.array([[y0, 0.5 * (v0 + m)], [0.5 * (v0 - m), 0.5 * a0]])


def _basis(s):
    ch, sh, c, sn = np.cosh(s), np.sinh(s), np.cos(s), np.sin(s)
    return np.stack([ch * c, ch * sn, sh * c, sh * sn], axis=-1)


def _derivative_coeffs(coeffs, order):
    out = [np.asarray(coeffs, dtype=float)]
    for _ in range(order):
        out.append(_D @ out[-1])
    return out


def beam_solution(s, M):
    """``(y, y', y'', y''')`` of ``y(s) = (cosh s, sinh s) M (cos s, sin s)^T``."""
    s, scalar = _as_array(s)
    coeffs = np.asarray(M, dtype=float).reshape(4)
    E = _basis(s)
    vals = tuple(E @ c for c in _derivative_coeffs(coeffs, 3))
    return _out(vals, scalar)


def tan_tanh_root() -> float:
    """First positive root of ``tan s + tanh s``, in ``(pi/2, pi)``."""
    return find_root(lambda s: math.tan(s) + math.tanh(s), (math.pi / 2 + 1e-3, 3.0),
                     RootConfig(x_tol=1e-15, f_tol=1e-15))


S_TILDE = tan_tanh_root()


def _sinh_minus_sin(s):
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 0.5
    # 2 * sum s^(4j+3) / (4j+3)!
    ser = np.zeros_like(s)
    term = s**3 / 6.0
    for j in range(8):
        ser = ser + term
        n = 4 * j + 3
        term = term * s**4 / ((n + 1) * (n + 2) * (n + 3) * (n + 4))
    return np.where(small, 2.0 * ser, np.sinh(s) - np.sin(s))


def qcc_spook_endpoint_coeffs(s_fin: float) -> tuple[float, float, float]:
    """Initial data ``(Y0, V0, m)`` of the scaled beam curve that ends at rest.

    The scaled curve ``Y`` has ``Y''(0) = -2`` and reaches ``Y = Y' = 0``,
    ``Y'' = 2`` at ``s_fin``.

    Raises:
        DomainError: ``s_fin`` outside ``(0, S_TILDE)``.
    """
    if not 0.0 < s_fin < S_TILDE:
        raise DomainError(f"s_fin must lie in (0, {S_TILDE:.6f}), got {s_fin}")
    ch, sh, c, sn = math.cosh(s_fin), math.sinh(s_fin), math.cos(s_fin), math.sin(s_fin)
    d = ch * sn + c * sh
    smin = float(_sinh_minus_sin(s_fin))
    return (ch + c) * smin / d, -(smin * smin) / d, (ch + c) ** 2 / d


@dataclass(frozen=True)
class QccSpookSolution:
    """Quadratic-incentive spooking transfer: saturated start, then a beam curve.

    ``M`` holds the coefficients of ``Y = sqrt(c) (1 - x)`` in the rescaled
    time ``s = beta (t - t*)``, ``beta = c**(1/4) / sqrt(2)``.
    """

    c: float
    s_fin: float
    t_star: float
    t_final: float
    M: np.ndarray
    matching_residual: float

    @property
    def beta(self) -> float:
        return self.c**0.25 / math.sqrt(2.0)

    @property
    def duration(self) -> float:
        return self.t_final

    @property
    def lambda0(self) -> float:
        return 1.0 + 0.5 * self.c

    def _beam(self, t):
        return beam_solution(self.beta * (t - self.t_star), self.M)

    def state(self, t):
        """``(x, x', x'', lambda, lambda')``; ``x''`` is left-continuous at ``t*``."""
        t, scalar = _as_array(t)
        if np.any(t < 0) or np.any(t > self.t_final * (1 + 1e-12)):
            raise DomainError("t outside [0, t_f]")
        c, b, ts = self.c, self.beta, self.t_star
        rc = math.sqrt(c)
        Y, Y1, Y2, Y3 = (np.asarray(v) for v in beam_solution(b * (np.maximum(t, ts) - ts), self.M))
        lam_dot_star = -b**3 * float(beam_solution(0.0, self.M)[3]) / rc

        def F(tt):
            return c * (0.5 * tt * tt - tt**4 / 24.0)

        def F1(tt):
            return c * (tt - tt**3 / 6.0)

        bang = t <= ts
        x = np.where(bang, 0.5 * t * t, 1.0 - Y / rc)
        v = np.where(bang, t, -b * Y1 / rc)
        a = np.where(bang, 1.0, -b * b * Y2 / rc)
        lam_bang = 1.0 + lam_dot_star * (t - ts) + F(t) - F(ts) - F1(ts) * (t - ts)
        lam = np.where(bang, lam_bang, a)
        lam_dot = np.where(bang, lam_dot_star + F1(t) - F1(ts), -b**3 * Y3 / rc)
        return _out((x, v, a, lam, lam_dot), scalar)


def qcc_spook_solve(c: float) -> QccSpookSolution:
    """Solve the matching condition ``sqrt(c) = Y0(s) + V0(s)**2 / 4`` for ``s_fin``.

    Raises:
        DomainError: ``c <= 0``.
        NoBracketError: no root in ``(0, S_TILDE)``.
    """
    if not c > 0 or not math.isfinite(c):
        raise DomainError(f"spooking intensity must be positive, got {c}")
    rc = math.sqrt(c)

    def g(s):
        y0, v0, _ = qcc_spook_endpoint_coeffs(s)
        return rc - y0 - 0.25 * v0 * v0

    s_fin = shoot(g, (1e-9 * S_TILDE, S_TILDE * (1 - 1e-12)), RootConfig(x_tol=1e-15, f_tol=1e-14))
    y0, v0, m = qcc_spook_endpoint_coeffs(s_fin)
    t_star = -v0 / (math.sqrt(2.0) * c**0.25)
    t_final = math.sqrt(2.0) * s_fin / c**0.25 + t_star
    M = beam_matrix(y0, v0, -2.0, m)
    return QccSpookSolution(float(c), float(s_fin), t_star, t_final, M, abs(g(s_fin)))


def _check_hat(c, k):
    if not 0 < c <= 1:
        raise DomainError(f"pure quadratic-cost family needs 0 < c <= 1, got {c}")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")


@dataclass(frozen=True)
class QccHatSolution:
    """Zero-Hamiltonian transfer for the cost ``u**2/2 + (c/2)(1 - x)**2``.

    ``x(t) = 1 - y(beta t)`` with ``y(0) = 1, y'(0) = 0, y''(0) = -2`` and
    ``m = 2 coth(k pi)``; the curve stops at ``s = k pi``.
    """

    c: float
    k: int
    m: float
    duration: float
    M: np.ndarray

    @property
    def beta(self) -> float:
        return self.c**0.25 / math.sqrt(2.0)

    @property
    def s_fin(self) -> float:
        return self.k * math.pi

    def state(self, t):
        """``(x, x', x'', lambda, lambda')`` with ``lambda = x''``."""
        t, scalar = _as_array(t)
        if np.any(t < 0) or np.any(t > self.duration * (1 + 1e-12)):
            raise DomainError("t outside [0, t_f]")
        b = self.beta
        y, y1, y2, y3 = (np.asarray(v) for v in beam_solution(b * t, self.M))
        a = -b * b * y2
        return _out((1.0 - y, -b * y1, a, a, -b**3 * y3), scalar)

    def terminal_values(self) -> tuple[float, float, float]:
        """``y, y', y''`` at ``s_fin``; all vanish."""
        return beam_solution(self.s_fin, self.M)[:3]


def qcc_hat_solution(c: float, k: int = 1) -> QccHatSolution:
    """Member ``k`` of the zero-Hamiltonian family, duration ``sqrt(2) pi k / c**(1/4)``."""
    _check_hat(c, k)
    k = int(k)
    m = 2.0 / math.tanh(k * math.pi)
    return QccHatSolution(float(c), k, m, math.sqrt(2.0) * math.pi * k / c**0.25, beam_matrix(1.0, 0.0, -2.0, m))


@dataclass(frozen=True)
class QccHatCost:
    """Total cost of a family member and the two closed-form candidates.

    ``matched`` names the candidate within ``tol`` of the quadrature value
    (``"c*coth"`` or ``"2c*coth"``) or is None if neither is.  ``exact`` is
    ``c**(3/4) coth(k pi) / sqrt(2)``, obtained by integrating the beam curve
    in closed form.
    """

    quadrature: float
    single: float
    double: float
    exact: float
    matched: str | None


def qcc_hat_total_cost(c: float, k: int = 1, n_panels: int = 20000, tol: float = 1e-5) -> QccHatCost:
    """``int_0^t_f (x''**2/2 + (c/2)(1 - x)**2) dt`` by composite Simpson."""
    sol = qcc_hat_solution(c, k)

    def integrand(t):
        x, _, a, _, _ = sol.state(t)
        return 0.5 * a * a + 0.5 * c * (1.0 - x) ** 2

    quad = simpson(integrand, 0.0, sol.duration, n_panels)
    coth = 1.0 / math.tanh(k * math.pi)
    single, double = c * coth, 2.0 * c * coth
    matches = [name for name, val in (("c*coth", single), ("2c*coth", double)) if abs(quad - val) <= tol]
    return QccHatCost(quad, single, double, c**0.75 * coth / math.sqrt(2.0),
                      matches[0] if len(matches) == 1 else None)


@dataclass(frozen=True)
class QccFixedSolution:
    """Transfer of prescribed duration for ``u**2/2 + (c/2)(1 - x)**2``.

    ``coeffs`` are the beam coefficients of ``y = 1 - x`` in ``s = beta t``.
    """

    c: float
    duration: float
    coeffs: np.ndarray

    @property
    def beta(self) -> float:
        return self.c**0.25 / math.sqrt(2.0)

    def state(self, t):
        """``(x, x', x'', x''')``."""
        t, scalar = _as_array(t)
        b = self.beta
        y, y1, y2, y3 = (np.asarray(v) for v in beam_solution(b * t, self.coeffs))
        return _out((1.0 - y, -b * y1, -b * b * y2, -b**3 * y3), scalar)

    def total_cost(self, n_panels: int = 20000) -> float:
        def integrand(t):
            x, _, a, _ = self.state(t)
            return 0.5 * a * a + 0.5 * self.c * (1.0 - x) ** 2

        return simpson(integrand, 0.0, self.duration, n_panels)

    @property
    def hamiltonian(self) -> float:
        """Conserved ``x''**2/2 - (c/2)(1-x)**2 - x' x'''`` (evaluated at t = 0)."""
        x, v, a, j = self.state(0.0)
        return 0.5 * a * a - 0.5 * self.c * (1.0 - x) ** 2 - v * j


def qcc_fixed_duration(c: float, t_f: float) -> QccFixedSolution:
    """Rest-to-rest transfer of duration ``t_f`` (no zero-Hamiltonian condition)."""
    if not c > 0 or not t_f > 0:
        raise DomainError("need c > 0 and t_f > 0")
    S = c**0.25 / math.sqrt(2.0) * t_f
    e0, eS = _basis(0.0), _basis(S)
    A = np.stack([e0, e0 @ _D, eS, eS @ _D])
    coeffs = np.linalg.solve(A, np.array([1.0, 0.0, 0.0, 0.0]))
    return QccFixedSolution(float(c), float(t_f), coeffs)

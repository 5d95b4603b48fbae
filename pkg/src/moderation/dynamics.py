"""Phase space and Hamiltonian flow of the fully controlled k-th order system.

The controlled system is ``x^(k) = u`` with ``|u| <= 1`` and running cost
``C(x) - C~(|u|)``.  Maximizing the Hamiltonian gives ``u = grad chi(lambda)``
and the extremals solve the skewed-gradient pair

    x^(k)      = grad chi(lambda)
    lambda^(k) = (-1)**(k-1) grad C(x)

whose first integral is

    chi(lambda) - C(x) + sum_{j=1}^{k-1} (-1)**j <x^(k-j), lambda^(j)>.

Free-final-time (arbitrary duration) extremals have this quantity equal to 0.

State vectors are laid out flat as ``[x, x', ..., x^(k-1), lambda, ...,
lambda^(k-1)]`` with each block of length ``n``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateControlError, DomainError
from .incentives import Incentive, IncentiveKind, incentive_value, inverse_gradient, potential, potential_gradient
from .numerics import IntegratorConfig, OdeSolution, integrate, simpson_samples

__all__ = [
    "CostKind",
    "PositionCost",
    "ControlledSystem",
    "PhaseState",
    "Trajectory",
    "cost_value",
    "cost_gradient",
    "control",
    "hamiltonian_field",
    "flat_field",
    "conserved_quantity",
    "instantaneous_cost",
    "build_trajectory",
    "integrate_hamiltonian",
    "fourth_order_residual",
]


class CostKind(str, enum.Enum):
    CONSTANT = "constant"
    SPOOK = "spook"


@dataclass(frozen=True)
class PositionCost:
    """State cost ``C(x) >= 1``: constant 1, or ``1 + (c/2)(1 - x)**2``."""

    kind: CostKind = CostKind.CONSTANT
    c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CostKind(self.kind))
        if self.c < 0 or not np.isfinite(self.c):
            raise DomainError(f"spooking intensity must be finite and >= 0, got {self.c}")
        if self.kind is CostKind.CONSTANT and self.c != 0:
            raise DomainError("constant cost takes no intensity")

    @classmethod
    def constant(cls) -> PositionCost:
        return cls(CostKind.CONSTANT)

    @classmethod
    def spook(cls, c: float) -> PositionCost:
        return cls(CostKind.SPOOK, float(c))


def _spook_x(x):
    x = np.asarray(x, dtype=float)
    if x.ndim >= 1 and x.shape[-1] != 1:
        raise DomainError("spooking cost is one-dimensional")
    return x


def cost_value(cost: PositionCost, x):
    """``C(x)``; ``x`` is a scalar or a vector of dimension 1 (spook)."""
    if cost.kind is CostKind.CONSTANT:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return 1.0
        return np.ones(x.shape[:-1]) if x.ndim > 1 else 1.0
    x = _spook_x(x)
    d = 1.0 - (x[..., 0] if x.ndim >= 1 else x)
    out = 1.0 + 0.5 * cost.c * d * d
    return float(out) if np.ndim(out) == 0 else out


def cost_gradient(cost: PositionCost, x):
    """``grad C(x)``, same shape as ``x``."""
    x = np.asarray(x, dtype=float)
    if cost.kind is CostKind.CONSTANT:
        out = np.zeros_like(x)
    else:
        out = -cost.c * (1.0 - _spook_x(x))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ControlledSystem:
    k: int = 2
    n: int = 1
    cost: PositionCost = field(default_factory=PositionCost)

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise DomainError("need k >= 1 and n >= 1")
        if self.cost.kind is CostKind.SPOOK and self.n != 1:
            raise DomainError("spooking cost requires n = 1")

    @property
    def dim(self) -> int:
        return 2 * self.k * self.n


@dataclass(frozen=True)
class PhaseState:
    """``x_derivs[j] = x^(j)`` and ``lambda_derivs[j] = lambda^(j)``, each (k, n)."""

    x_derivs: np.ndarray
    lambda_derivs: np.ndarray

    def __post_init__(self):
        xd = np.atleast_2d(np.asarray(self.x_derivs, dtype=float))
        ld = np.atleast_2d(np.asarray(self.lambda_derivs, dtype=float))
        if xd.shape != ld.shape:
            raise DomainError("position and costate stacks must have the same shape")
        object.__setattr__(self, "x_derivs", xd)
        object.__setattr__(self, "lambda_derivs", ld)

    @classmethod
    def scalar(cls, xs, lams) -> PhaseState:
        """Build an n = 1 state from sequences of scalar derivatives."""
        return cls(np.asarray(xs, dtype=float)[:, None], np.asarray(lams, dtype=float)[:, None])

    @classmethod
    def from_flat(cls, y, k: int, n: int) -> PhaseState:
        y = np.asarray(y, dtype=float)
        return cls(y[: k * n].reshape(k, n), y[k * n:].reshape(k, n))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x_derivs.ravel(), self.lambda_derivs.ravel()])

    @property
    def k(self) -> int:
        return self.x_derivs.shape[0]

    @property
    def n(self) -> int:
        return self.x_derivs.shape[1]


def control(inc: Incentive, lam, lam_dot=None):
    """Optimal control ``grad chi(lambda)`` with the left-limit convention.

    ``lam`` is a vector (or a stack of vectors along the leading axes).

    For the trivial incentive a vanishing costate leaves the direction open.
    The control then takes its value from just before the crossing, where
    ``lambda`` points along ``-lambda'``; ``lam_dot`` supplies that.
    """
    lam = np.asarray(lam, dtype=float)
    if inc.kind is IncentiveKind.TRIVIAL and lam_dot is not None:
        return potential_gradient(inc, lam, left_limit=-np.asarray(lam_dot, dtype=float))
    return potential_gradient(inc, lam)


def hamiltonian_field(sys: ControlledSystem, inc: Incentive, s: PhaseState) -> PhaseState:
    """Time derivative of a phase point under the skewed-gradient equations."""
    k = sys.k
    lam_dot = s.lambda_derivs[1] if k > 1 else None
    u = control(inc, s.lambda_derivs[0], lam_dot)
    dx = np.empty_like(s.x_derivs)
    dl = np.empty_like(s.lambda_derivs)
    dx[:-1] = s.x_derivs[1:]
    dx[-1] = u
    dl[:-1] = s.lambda_derivs[1:]
    dl[-1] = (-1) ** (k - 1) * np.asarray(cost_gradient(sys.cost, s.x_derivs[0]))
    return PhaseState(dx, dl)


def flat_field(sys: ControlledSystem, inc: Incentive):
    """Vector field ``f(t, y)`` on the flat state for :func:`numerics.integrate`."""
    k, n = sys.k, sys.n
    kn = k * n
    sign = (-1) ** (k - 1)
    cost = sys.cost

    def f(t, y):
        out = np.empty_like(y)
        out[: kn - n] = y[n:kn]
        lam_dot = y[kn + n:kn + 2 * n] if k > 1 else None
        out[kn - n:kn] = control(inc, y[kn:kn + n], lam_dot)
        out[kn:-n] = y[kn + n:]
        out[-n:] = sign * np.asarray(cost_gradient(cost, y[:n]))
        return out

    return f


def conserved_quantity(sys: ControlledSystem, inc: Incentive, s: PhaseState) -> float:
    """First integral of the skewed-gradient flow."""
    k = sys.k
    lam = s.lambda_derivs[0]
    h = float(potential(inc, np.linalg.norm(lam))) - float(cost_value(sys.cost, s.x_derivs[0]))
    for j in range(1, k):
        h += (-1) ** j * float(np.dot(s.x_derivs[k - j], s.lambda_derivs[j]))
    return h


def _conserved_batch(sys, inc, xd, ld):
    # xd, ld: (N, k, n)
    k = sys.k
    h = np.asarray(potential(inc, np.linalg.norm(ld[:, 0, :], axis=-1)), dtype=float)
    h = h - np.asarray(cost_value(sys.cost, xd[:, 0, :]), dtype=float)
    for j in range(1, k):
        h = h + (-1) ** j * np.sum(xd[:, k - j, :] * ld[:, j, :], axis=-1)
    return h


def instantaneous_cost(sys: ControlledSystem, inc: Incentive, x, u):
    """Running cost ``C(x) - C~(|u|)``; nonnegative since ``C >= 1 >= C~``."""
    u = np.asarray(u, dtype=float)
    mag = np.abs(u) if u.ndim == 0 else np.linalg.norm(u, axis=-1)
    if np.any(mag > 1.0 + 1e-12):
        raise DomainError("control outside the unit ball")
    mag = np.minimum(mag, 1.0)
    out = np.asarray(cost_value(sys.cost, x)) - np.asarray(incentive_value(inc, mag))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Trajectory:
    """Sampled extremal.

    Arrays are indexed by sample first: ``x_derivs`` and ``lambda_derivs``
    have shape ``(N, k, n)``, ``u`` has shape ``(N, n)``.  The scalar
    accessors (``x``, ``v``, ``a``, ``lam``, ``lam_dot``) assume n = 1.
    """

    t: np.ndarray
    x_derivs: np.ndarray
    lambda_derivs: np.ndarray
    u: np.ndarray
    cost_density: np.ndarray
    conserved_residual: np.ndarray
    duration: float
    total_cost: float

    def __len__(self):
        return len(self.t)

    @property
    def x(self):
        return self.x_derivs[:, 0, 0]

    @property
    def v(self):
        return self.x_derivs[:, 1, 0]

    @property
    def a(self):
        return self.u[:, 0]

    @property
    def lam(self):
        return self.lambda_derivs[:, 0, 0]

    @property
    def lam_dot(self):
        return self.lambda_derivs[:, 1, 0]

    @property
    def max_conserved_residual(self) -> float:
        return float(np.max(np.abs(self.conserved_residual)))

    def boundary_residuals(self, x0=0.0, xf=1.0, v0=0.0, vf=0.0) -> np.ndarray:
        """``|x(0)-x0|, |x(tf)-xf|, |v(0)-v0|, |v(tf)-vf|``."""
        return np.abs(np.array([self.x[0] - x0, self.x[-1] - xf, self.v[0] - v0, self.v[-1] - vf]))


def build_trajectory(sys: ControlledSystem, inc: Incentive, t, x_derivs, lambda_derivs, u=None,
                     *, reference: float = 0.0, cost_density=None) -> Trajectory:
    """Assemble a :class:`Trajectory` from sampled phase data.

    ``u`` defaults to the optimal control of the sampled costate.  The
    conserved residual is measured against ``reference`` (0 for arbitrary
    duration).  The total cost integrates ``cost_density`` (default: the
    running cost) over the samples.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
        raise DomainError("sample times must be strictly increasing with at least 2 samples")
    N = len(t)
    xd = np.asarray(x_derivs, dtype=float).reshape(N, sys.k, sys.n)
    ld = np.asarray(lambda_derivs, dtype=float).reshape(N, sys.k, sys.n)
    if u is None:
        u = control(inc, ld[:, 0, :], ld[:, 1, :] if sys.k > 1 else None)
    u = np.asarray(u, dtype=float).reshape(N, sys.n)
    if cost_density is None:
        cost_density = instantaneous_cost(sys, inc, xd[:, 0, :], u)
    cost_density = np.asarray(cost_density, dtype=float).reshape(N)
    resid = _conserved_batch(sys, inc, xd, ld) - reference
    return Trajectory(
        t=t,
        x_derivs=xd,
        lambda_derivs=ld,
        u=u,
        cost_density=cost_density,
        conserved_residual=resid,
        duration=float(t[-1] - t[0]),
        total_cost=simpson_samples(cost_density, t),
    )


def integrate_hamiltonian(sys: ControlledSystem, inc: Incentive, state0: PhaseState, t_final: float,
                          cfg: IntegratorConfig | None = None, *, n_samples: int = 1001,
                          events=None, reference: float | None = None) -> tuple[Trajectory, OdeSolution]:
    """Integrate the skewed-gradient flow and sample it uniformly in time.

    Integration stops at ``t_final`` or the first terminal event.  The
    conserved residual is taken relative to its initial value unless
    ``reference`` is given.
    """
    y0 = state0.flat()
    sol = integrate(flat_field(sys, inc), y0, (0.0, t_final), cfg, events=events)
    t = np.linspace(0.0, sol.t_final, n_samples)
    Y = sol(t)
    kn = sys.k * sys.n
    if reference is None:
        reference = conserved_quantity(sys, inc, state0)
    traj = build_trajectory(sys, inc, t, Y[:, :kn], Y[:, kn:], reference=reference)
    return traj, sol


def fourth_order_residual(sys: ControlledSystem, inc: Incentive, traj: Trajectory) -> float:
    """Finite-difference check of ``d^k/dt^k (grad chi)^-1(x^(k)) = +-grad C(x)``.

    Applies the k-th central difference to the recovered costate
    ``(grad chi)^-1(u)`` on a uniform grid and returns the largest deviation
    over interior samples.

    Raises:
        DomainError: fewer than 200 samples, non-uniform grid, or an
            incentive without an invertible gradient.
    """
    if len(traj) < 200:
        raise DomainError("need at least 200 samples for the finite-difference residual")
    dt = np.diff(traj.t)
    h = dt[0]
    if np.max(np.abs(dt - h)) > 1e-9 * max(1.0, traj.duration):
        raise DomainError("finite-difference residual needs uniform samples")
    lam = np.asarray(inverse_gradient(inc, traj.u), dtype=float)
    k = sys.k
    dk = np.diff(lam, n=k, axis=0) / h**k
    rhs = (-1) ** (k - 1) * np.asarray(cost_gradient(sys.cost, traj.x_derivs[:, 0, :])).reshape(len(traj), sys.n)
    if k % 2 == 0:
        target = rhs[k // 2: len(traj) - k // 2]
    else:
        lo = k // 2
        target = 0.5 * (rhs[lo:len(traj) - lo - 1] + rhs[lo + 1:len(traj) - lo])
    return float(np.max(np.abs(dk - target)))

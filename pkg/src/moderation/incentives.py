"""Moderation incentives and their potentials.

An incentive ``C~(s)`` rewards a control of magnitude ``s`` in ``[0, 1]`` and
vanishes on the unit sphere, ``C~(1) = 0``.  Its moderation potential is the
envelope

    chi~(s) = max_{0 <= sigma <= 1} sigma * s + C~(sigma),

and the maximizer ``sigma(s)`` is the optimal control magnitude for a costate
of norm ``s``.  Since ``chi~' = sigma``, the optimal control itself is the
gradient of ``chi(lambda) = chi~(|lambda|)``.

Three families are supported:

* trivial, ``C~ = 0``: pure time minimization, ``chi~(s) = s``;
* elliptical, ``C~(s) = mu * sqrt(1 - s**2)`` with ``0 < mu <= 1``:
  ``chi~(s) = sqrt(mu**2 + s**2)``;
* quadratic, ``C~(s) = (1 - s**2) / 2``: ``chi~`` is ``(1 + s**2) / 2`` on
  ``[0, 1]`` and ``s`` beyond.

All maps accept scalars or arrays and return the same shape.  The vector
maps (:func:`potential_gradient`, :func:`inverse_gradient`) treat the last
axis as the spatial dimension; a 0-d input is a one-dimensional vector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateControlError, DomainError

__all__ = [
    "Incentive",
    "IncentiveKind",
    "incentive_value",
    "optimal_magnitude",
    "is_degenerate",
    "potential",
    "potential_inverse",
    "potential_gradient",
    "gradient_1d",
    "inverse_gradient",
]


class IncentiveKind(str, enum.Enum):
    TRIVIAL = "trivial"
    ELLIPTICAL = "elliptical"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class Incentive:
    """A member of one of the incentive families.

    ``mu`` is only meaningful for the elliptical family; the trivial
    incentive is its ``mu = 0`` limit and is represented by its own kind.
    """

    kind: IncentiveKind
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", IncentiveKind(self.kind))
        if self.kind is IncentiveKind.ELLIPTICAL:
            if not 0.0 < self.mu <= 1.0:
                raise DomainError(f"elliptical incentive needs 0 < mu <= 1, got {self.mu}")
        elif self.mu != 0.0:
            raise DomainError(f"mu is only defined for the elliptical family, got {self.mu}")

    @classmethod
    def trivial(cls) -> Incentive:
        return cls(IncentiveKind.TRIVIAL)

    @classmethod
    def elliptical(cls, mu: float) -> Incentive:
        return cls(IncentiveKind.ELLIPTICAL, float(mu))

    @classmethod
    def quadratic(cls) -> Incentive:
        return cls(IncentiveKind.QUADRATIC)

    @classmethod
    def from_name(cls, name: str, mu: float | None = None) -> Incentive:
        try:
            kind = IncentiveKind(name)
        except ValueError:
            raise DomainError(f"unknown incentive {name!r}") from None
        if kind is IncentiveKind.ELLIPTICAL:
            if mu is None:
                raise DomainError("elliptical incentive requires mu")
            return cls.elliptical(mu)
        return cls(kind)

    @property
    def kinks(self) -> tuple[float, ...]:
        """Values of ``|lambda|`` where ``chi~`` fails to be smooth."""
        if self.kind is IncentiveKind.TRIVIAL:
            return (0.0,)
        if self.kind is IncentiveKind.QUADRATIC:
            return (1.0,)
        return ()

    @property
    def has_invertible_gradient(self) -> bool:
        return self.kind is IncentiveKind.ELLIPTICAL

    def __str__(self):
        if self.kind is IncentiveKind.ELLIPTICAL:
            return f"elliptical(mu={self.mu:g})"
        return self.kind.value


def _finish(out, scalar):
    return float(out) if scalar else out


def _nonneg(s, what):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{what} must be >= 0")
    return arr, arr.ndim == 0


def incentive_value(inc: Incentive, s):
    """Evaluate ``C~(s)`` for ``s`` in ``[0, 1]``."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
        raise DomainError("control magnitude must lie in [0, 1]")
    if inc.kind is IncentiveKind.TRIVIAL:
        out = np.zeros_like(arr)
    elif inc.kind is IncentiveKind.ELLIPTICAL:
        out = inc.mu * np.sqrt((1.0 - arr) * (1.0 + arr))
    else:
        out = 0.5 * (1.0 - arr * arr)
    return _finish(out, arr.ndim == 0)


def optimal_magnitude(inc: Incentive, s):
    """Maximizer ``sigma(s)`` of ``sigma * s + C~(sigma)`` over ``[0, 1]``.

    For the trivial incentive the maximizer at ``s = 0`` is not unique; 1 is
    returned there and :func:`is_degenerate` reports the ambiguity.
    """
    arr, scalar = _nonneg(s, "costate norm")
    if inc.kind is IncentiveKind.TRIVIAL:
        out = np.ones_like(arr)
    elif inc.kind is IncentiveKind.ELLIPTICAL:
        out = arr / np.hypot(inc.mu, arr)
    else:
        out = np.minimum(arr, 1.0)
    return _finish(out, scalar)


def is_degenerate(inc: Incentive, s) -> bool:
    """True where the optimal magnitude is not uniquely determined."""
    return inc.kind is IncentiveKind.TRIVIAL and bool(np.any(np.asarray(s) == 0))


def potential(inc: Incentive, s):
    """Scalar moderation potential ``chi~(s)``, ``s >= 0``."""
    arr, scalar = _nonneg(s, "costate norm")
    if inc.kind is IncentiveKind.TRIVIAL:
        out = arr.copy()
    elif inc.kind is IncentiveKind.ELLIPTICAL:
        out = np.hypot(inc.mu, arr)
    else:
        out = np.where(arr <= 1.0, 0.5 * (1.0 + arr * arr), arr)
    return _finish(out, scalar)


def potential_inverse(inc: Incentive, v):
    """Return ``s >= 0`` with ``chi~(s) = v``.

    ``chi~`` is strictly increasing, so the inverse is unique on its range:
    ``[mu, inf)`` (elliptical), ``[1/2, inf)`` (quadratic), ``[0, inf)``
    (trivial).
    """
    arr = np.asarray(v, dtype=float)
    scalar = arr.ndim == 0
    if inc.kind is IncentiveKind.TRIVIAL:
        lo = 0.0
    elif inc.kind is IncentiveKind.ELLIPTICAL:
        lo = inc.mu
    else:
        lo = 0.5
    if np.any(arr < lo) or np.any(np.isnan(arr)):
        raise DomainError(f"{inc} potential only takes values >= {lo}")
    if inc.kind is IncentiveKind.TRIVIAL:
        out = arr.copy()
    elif inc.kind is IncentiveKind.ELLIPTICAL:
        out = np.sqrt((arr - inc.mu) * (arr + inc.mu))
    else:
        out = np.where(arr <= 1.0, np.sqrt(np.maximum(2.0 * arr - 1.0, 0.0)), arr)
    return _finish(out, scalar)


def potential_gradient(inc: Incentive, lam, left_limit=None):
    """Optimal control ``u = sigma(|lambda|) * lambda / |lambda|``.

    Args:
        inc: the incentive.
        lam: costate vector(s); last axis is spatial.
        left_limit: for the trivial incentive at ``lambda = 0``, a costate
            value approached from the left in time; its direction is used
            for ``u``.  Without it a zero costate raises.

    Raises:
        DegenerateControlError: trivial incentive at ``lambda = 0`` with no
            usable ``left_limit``.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 0:
        norm = np.abs(lam)
    else:
        norm = np.linalg.norm(lam, axis=-1, keepdims=True)

    if inc.kind is IncentiveKind.ELLIPTICAL:
        out = lam / np.hypot(inc.mu, norm)
        return _finish(out, lam.ndim == 0)
    if inc.kind is IncentiveKind.QUADRATIC:
        out = lam / np.maximum(norm, 1.0)
        return _finish(out, lam.ndim == 0)

    zero = norm == 0
    if not np.any(zero):
        return _finish(lam / norm, lam.ndim == 0)
    if left_limit is None:
        raise DegenerateControlError("trivial incentive: control undetermined at zero costate")
    ref = np.broadcast_to(np.asarray(left_limit, dtype=float), lam.shape)
    ref_norm = np.abs(ref) if lam.ndim == 0 else np.linalg.norm(ref, axis=-1, keepdims=True)
    if np.any(ref_norm[np.broadcast_to(zero, ref_norm.shape)] == 0):
        raise DegenerateControlError("trivial incentive: left limit of the costate is also zero")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(zero, ref / ref_norm, lam / norm)
    return _finish(out, lam.ndim == 0)


def gradient_1d(inc: Incentive, lam, left_sign=None):
    """Elementwise :func:`potential_gradient` for scalar costates.

    ``left_sign`` (+1/-1, scalar or array) resolves the trivial incentive at
    ``lambda = 0``.
    """
    lam = np.asarray(lam, dtype=float)
    s = np.abs(lam)
    sign = np.sign(lam)
    if inc.kind is IncentiveKind.TRIVIAL and np.any(s == 0):
        if left_sign is None:
            raise DegenerateControlError("trivial incentive: control undetermined at zero costate")
        sign = np.where(s == 0, np.sign(left_sign), sign)
    out = sign * optimal_magnitude(inc, s)
    return _finish(out, lam.ndim == 0)


def inverse_gradient(inc: Incentive, u):
    """Invert ``u = grad chi(lambda)`` for the elliptical family.

    ``lambda = mu * u / sqrt(1 - |u|**2)`` on the open unit ball.
    """
    if not inc.has_invertible_gradient:
        raise DomainError(f"{inc} has no globally invertible potential gradient")
    u = np.asarray(u, dtype=float)
    norm = np.abs(u) if u.ndim == 0 else np.linalg.norm(u, axis=-1, keepdims=True)
    if np.any(norm >= 1.0):
        raise DomainError("inverse gradient needs |u| < 1")
    # factored form keeps 1 - |u|^2 accurate near the unit sphere
    out = inc.mu * u / np.sqrt((1.0 - norm) * (1.0 + norm))
    return _finish(out, u.ndim == 0)

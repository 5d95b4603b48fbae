"""Exception types shared across the package.

Each solver failure carries a short machine-readable ``code`` that the CLI
echoes in its error JSON.
"""


class ModerationError(Exception):
    code = "ERROR"


class DomainError(ModerationError, ValueError):
    """An argument lies outside the domain of the requested map."""

    code = "DOMAIN"


class DegenerateControlError(ModerationError):
    """The optimal control is not uniquely determined (trivial incentive at
    zero costate), or a requested solution degenerates (e.g. infinite
    duration)."""

    code = "DEGENERATE"


class NoBracketError(ModerationError):
    """A root/shooting scan found no sign change."""

    code = "NO_BRACKET"


class ConvergenceError(ModerationError):
    """Iteration or step budget exhausted."""

    code = "NO_CONVERGENCE"


class IntegrationError(ConvergenceError):
    code = "INTEGRATION"

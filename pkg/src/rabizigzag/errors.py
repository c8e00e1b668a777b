"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class RabiZigzagError(Exception):
    """Base class for all package errors."""


class DomainError(RabiZigzagError, ValueError):
    """A closed-form expression was evaluated outside its domain."""


class EvanescentMode(DomainError):
    """A band radicand went negative (coupling above the critical line)."""


class PairingFailure(RabiZigzagError):
    """Eigenvalues of M·Λ could not be matched into ±ε pairs."""


class InstabilityError(RabiZigzagError):
    """An operation that needs a stable spectrum received an unstable one."""


class ConvergenceFailure(RabiZigzagError):
    """No start of the multi-start minimizer reached the gradient tolerance."""

    def __init__(self, message: str, best_grad_norm: float):
        super().__init__(message)
        self.best_grad_norm = best_grad_norm


class UnclassifiedPhase(RabiZigzagError):
    """A mean-field state matched none of the phase branches."""


class FitError(RabiZigzagError):
    """Too few usable points for a log-log exponent fit."""


class BisectionAmbiguous(RabiZigzagError):
    """Labels flickered while bisecting a phase boundary."""

    def __init__(self, message: str, interval: tuple[float, float]):
        super().__init__(message)
        self.interval = interval


class NoIntersection(RabiZigzagError):
    """Two boundary curves do not cross inside the scanned range."""


class DimensionCap(RabiZigzagError):
    """Truncated Fock space exceeds the configured dimension cap."""


class NoConvergence(RabiZigzagError):
    """The iterative eigensolver did not converge."""


class ConfigError(RabiZigzagError):
    """A run configuration is malformed or incomplete."""

"""
Exception hierarchy for kinetic_lab.

Errors about bad values subclass ValueError as well, so callers that only
know the standard library can still catch them.
"""


class KineticLabError(Exception):
    """Base class for every error raised by the laboratory."""


class VacuumError(KineticLabError, ValueError):
    """A quantity that is undefined at vacuum was requested there."""


class OrderingError(KineticLabError, ValueError):
    """Riemann invariants given with lambda1 > lambda2."""


class AdmissibilityError(KineticLabError, ValueError):
    """No Lax-admissible shock branch exists for the requested family."""


class ConvergenceError(KineticLabError, ArithmeticError):
    """A root finder gave up before reaching its tolerance."""

    def __init__(self, message, bracket=None, iterations=None):
        super().__init__(message)
        self.bracket = bracket
        self.iterations = iterations

    def __str__(self):
        text = super().__str__()
        if self.bracket is not None:
            lo, hi = self.bracket
            text = f"{text} (bracket [{lo:.17g}, {hi:.17g}]"
            if self.iterations is not None:
                text = f"{text} after {self.iterations} iterations"
            text = f"{text})"
        return text


class ConfigurationError(KineticLabError, ValueError):
    """Invalid configuration: bad CFL, bad keys, bad values."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors or [])

    def __str__(self):
        text = super().__str__()
        if self.errors:
            details = "\n".join(f"  - {error}" for error in self.errors)
            text = f"{text}\n{details}"
        return text


class GeometryError(KineticLabError, ValueError):
    """A ball, ladder or kernel support leaves the recorded domain."""


class UnsupportedSchemeError(KineticLabError, ValueError):
    """The record was produced by a scheme that cannot serve the request."""


class InvariantViolation(KineticLabError, RuntimeError):
    """The solver produced a state outside its own invariants."""


class StepError(KineticLabError, RuntimeError):
    """A time step failed; carries the index of the failing step."""

    def __init__(self, step_index, cause):
        super().__init__(f"step {step_index} failed: {cause}")
        self.step_index = step_index
        self.cause = cause

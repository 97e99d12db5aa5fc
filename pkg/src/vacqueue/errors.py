"""Exception hierarchy shared by every engine."""

from __future__ import annotations


class VacQueueError(Exception):
    """Base class for all errors raised by :mod:`vacqueue`."""


class ValidationError(VacQueueError, ValueError):
    """Parameters violate the conditions of the selected engine.

    ``violations`` holds ``(condition, observed)`` pairs, e.g.
    ``("xi < mu", "xi=1.5, mu=1")``.
    """

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = list(violations)
        text = "; ".join(f"{cond} violated ({obs})" for cond, obs in self.violations)
        super().__init__(text or "invalid parameters")


class InvalidState(VacQueueError, ValueError):
    pass


class NonIntegrable(VacQueueError, ValueError):
    pass


class ToleranceNotMet(VacQueueError, ArithmeticError):
    def __init__(self, message: str, value: float = float("nan"), error: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.error = error


class CancellationFailure(VacQueueError, ArithmeticError):
    pass


class DomainError(VacQueueError, ValueError):
    pass


class NonPositiveResult(VacQueueError, ArithmeticError):
    pass


class SingularSystem(VacQueueError, ArithmeticError):
    pass


class TruncationInsufficient(VacQueueError, ArithmeticError):
    def __init__(self, message: str, tail_mass: float = float("nan")):
        super().__init__(message)
        self.tail_mass = tail_mass


class InvalidConfig(VacQueueError, ValueError):
    pass


class InsufficientSamples(VacQueueError, ArithmeticError):
    def __init__(self, message: str, count: int = 0):
        super().__init__(message)
        self.count = count

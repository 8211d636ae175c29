"""Exception types raised by the toolkit."""


class LeocpError(Exception):
    """Base class for all toolkit errors."""


class EmptySelection(LeocpError, ValueError):
    """A placement evaluation was asked to score an empty controller set."""


class InfeasibleInstance(LeocpError, RuntimeError):
    """No selection of the requested size covers every satellite."""


class BudgetExceeded(LeocpError, RuntimeError):
    """Exhaustive search would exceed the configured combination budget."""


class OutOfHorizon(LeocpError, ValueError):
    """Interpolation requested outside the sampled horizon."""


class ProtocolViolation(LeocpError, RuntimeError):
    """A binding-state transition outside the allowed machine was attempted."""


class ConcurrentHandover(LeocpError, RuntimeError):
    """A handover was started while one was already in flight for the node."""


class Unreachable(LeocpError, RuntimeError):
    """No network path exists between the requested endpoints."""


class EmptyInput(LeocpError, ValueError):
    """An aggregation was given no values."""


class ConfigError(LeocpError, ValueError):
    """Scenario configuration failed schema validation."""


class StageError(LeocpError, RuntimeError):
    """A pipeline stage failed; the message names the stage."""

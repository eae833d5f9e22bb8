"""Exception hierarchy. Every class carries the CLI exit code it maps to."""


class WittenLabError(Exception):
    exit_code = 1


class ConfigError(WittenLabError):
    exit_code = 2


class InputError(WittenLabError):
    exit_code = 3


class NonFiniteFieldError(InputError):
    pass


class TopologyMismatchError(InputError):
    pass


class EmptyLandscapeError(WittenLabError):
    exit_code = 4


class CriticalWindowError(WittenLabError):
    exit_code = 5


class DegenerateDataError(WittenLabError):
    """Zero Hessian entry, zero slope, zero integral and similar."""
    exit_code = 6


class ConvergenceError(WittenLabError):
    exit_code = 7


class CountMismatchError(WittenLabError):
    exit_code = 8


class AcceptanceFailure(WittenLabError):
    exit_code = 10

"""Exception types shared across the package.

Two failure families matter downstream (the CLI maps them to exit codes):
validation failures (bad input data, parameter constraints, precondition
violations detectable before any numerics run) and numerical failures
(consistency checks or guards tripped during a computation).
"""


class ValidationError(ValueError):
    """Invalid input: malformed data, parameter constraints, preconditions."""


class NumericalError(ArithmeticError):
    """A runtime numerical guard tripped (inconsistency, flagged geometry)."""

"""Exception types shared across modules; the CLI maps them to exit codes."""


class ConfigError(ValueError):
    """Invalid parameters or configuration."""


class CapExceededError(ValueError):
    """A size limit (qubits, dimension, sample count) was exceeded."""


class NumericalError(ArithmeticError):
    """A computation produced an unusable value (zero denominator, overflow)."""

"""Exception types shared across the library."""


class ShapeError(ValueError):
    """Operands have incompatible dimensions."""


class ContractError(ValueError):
    """An operation precondition was violated."""


class NumericRangeError(ArithmeticError):
    """A computation produced non-finite values."""


class PgmParseError(ValueError):
    """Malformed PGM file; carries the byte offset of the failure."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SolverError(ArithmeticError):
    """A linear solve failed; carries a condition-number estimate."""

    def __init__(self, message, cond):
        super().__init__(f"{message} (condition estimate {cond:.3e})")
        self.cond = cond


class ConfigError(ValueError):
    """Invalid experiment configuration."""

"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Point shape does not match the domain."""


class BoundaryPointError(ValueError):
    """Operation requires an interior point but got a boundary one."""


class NotAdmissibleError(ValueError):
    """Weight/exponent triple fails the admissibility inequalities."""


class AccuracyError(RuntimeError):
    """A computation cannot meet its accuracy budget (reported, never silent)."""


class SymbolParseError(ValueError):
    """Symbol expression could not be parsed."""

"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes or block structures of the operands do not match."""


class BudgetError(RuntimeError):
    """An enumeration or memory budget would be exceeded.

    Raised before any large allocation happens; the message says which
    budget was hit and, where applicable, what to use instead.
    """

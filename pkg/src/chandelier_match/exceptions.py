class ParameterError(ValueError):
    """An input parameter is outside its admissible range."""


class CapExceededError(ParameterError):
    """A size cap (tree edges, host size, color width) was exceeded."""


class BudgetExceededError(RuntimeError):
    """Estimated work or memory exceeds the configured ceiling."""


class InvariantError(AssertionError):
    """An internal invariant was violated."""


class InfeasibleAtThisNWarning(UserWarning):
    pass


class EmptyCatalogWarning(UserWarning):
    pass

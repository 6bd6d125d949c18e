"""Exception types raised across the package."""


class SpecDraftError(Exception):
    """Base class for all package errors."""


class DomainError(SpecDraftError, ValueError):
    """An argument lies outside the domain of the requested function."""


class ConvergenceError(SpecDraftError, RuntimeError):
    """An iterative method failed to converge within its budget."""


class AlphaOutOfRange(DomainError):
    """The affine acceptance law produced a value outside (0, 1)."""


class EmptyInput(SpecDraftError, ValueError):
    pass


class DegenerateFit(SpecDraftError, ValueError):
    """The objective does not depend on the fitted parameter."""


class RankDeficient(SpecDraftError, ValueError):
    pass


class LeverageOne(SpecDraftError, ValueError):
    """Some observation has hat-matrix leverage equal to one."""


class NoFeasiblePoint(SpecDraftError, ValueError):
    pass


class InsufficientData(SpecDraftError, ValueError):
    pass


class ParseError(SpecDraftError, ValueError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SchemaError(SpecDraftError, ValueError):
    pass

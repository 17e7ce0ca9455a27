"""Exception hierarchy.

Every error carries a stable ``code`` string that the CLI reports on stderr.
"""


class RKLearnError(Exception):
    code = "error"


class UnknownMethodError(RKLearnError, KeyError):
    code = "unknown_method"

    def __init__(self, name, available):
        self.name = name
        self.available = tuple(available)
        super().__init__(f"unknown method {name!r}; available: {', '.join(self.available)}")

    def __str__(self):
        return self.args[0]


class TableauFormatError(RKLearnError, ValueError):
    code = "tableau_format"


class PoleError(RKLearnError, ZeroDivisionError):
    code = "pole"


class NoRootError(RKLearnError):
    code = "no_root"


class ConvergenceError(RKLearnError):
    """Root iteration did not converge; ``best`` holds the last iterate."""

    code = "convergence"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ExpOverflowError(RKLearnError, OverflowError):
    code = "exp_overflow"


class SelectionError(RKLearnError, ValueError):
    code = "selection"


class UnsupportedTableauError(RKLearnError):
    code = "unsupported"


class DivergenceError(RKLearnError):
    code = "divergence"

    def __init__(self, message, trace_length=0):
        super().__init__(message)
        self.trace_length = trace_length


class RegionError(RKLearnError, ValueError):
    code = "invalid_region"


class EmptyFieldError(RKLearnError, ValueError):
    code = "empty_field"


class DatasetError(RKLearnError, ValueError):
    code = "dataset"

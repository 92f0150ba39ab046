"""Exception hierarchy shared by every solver and the CLI."""


class MEDError(Exception):
    """Base class for all errors raised by lipmed."""


class ValidationError(MEDError, ValueError):
    """An input violates a documented invariant.

    ``invariant`` names the failed check (e.g. ``"probabilities"``).
    """

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class ParseError(ValidationError):
    """Malformed ensemble or solution file."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        loc = f" ({', '.join(where)})" if where else ""
        super().__init__("parse", message + loc)
        self.field = field
        self.line = line


class NotPositive(MEDError, ValueError):
    """Matrix expected to be positive (semi)definite has a negative eigenvalue."""


class LinearDependence(ValidationError):
    """Gram matrix is numerically singular: the states are not linearly independent."""

    def __init__(self, min_eig, threshold):
        super().__init__(
            "linear_independence",
            f"smallest Gram eigenvalue {min_eig:.3e} <= threshold {threshold:.1e}",
        )
        self.min_eig = min_eig
        self.threshold = threshold


class Unsatisfiable(MEDError):
    """Random generation could not meet its constraints."""


class EigenNonConvergence(MEDError):
    """LAPACK eigensolver failed to converge."""


class SingularDiagonal(MEDError):
    """A diagonal coordinate x_ii is zero where D^-1 is required."""


class SingularJacobian(MEDError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class NonConvergence(MEDError):
    """Iteration limit reached; ``trace`` holds the per-iteration history."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class NotOptimalBranch(MEDError):
    """A root of X^2 = DGD that is not positive definite."""


class StartingPointFailed(MEDError):
    pass


class NodeDrift(MEDError):
    """Continuation node residual too large; the step should be refined."""

    def __init__(self, message, node=None, residual=None):
        super().__init__(message)
        self.node = node
        self.residual = residual


class InfeasibleIterate(MEDError):
    """Barrier iterate left the strictly feasible region."""


class InconsistentSolution(MEDError):
    pass

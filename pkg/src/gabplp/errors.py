"""Exception hierarchy shared across the solver stages.

The CLI maps each family onto an exit code, so new errors should derive
from one of the three stage-level bases below.
"""


class GabplpError(Exception):
    """Base class for every error raised by this package."""

    stage = "solve"


class ProblemError(GabplpError):
    """The LP itself has no (finite) optimum."""


class InfeasibleProblemError(ProblemError):
    pass


class UnboundedProblemError(ProblemError):
    pass


class EmptyInteriorError(ProblemError):
    """Feasible set without a strictly positive point; interior methods need one."""


class InputError(GabplpError, ValueError):
    """Malformed input: bad text, bad shapes, violated preconditions."""

    stage = "parse"


class MalformedProblemError(InputError):
    stage = "standardize"


class DegenerateProblemError(MalformedProblemError):
    """Constraint matrix without full row rank."""


class NumericalError(GabplpError):
    """A numerical method failed to produce a usable answer."""

    stage = "linsolve"


class SingularPriorError(NumericalError):
    def __init__(self, index):
        k = index + 1
        super().__init__(f"zero diagonal entry A_{k}{k} (index {index}); GaBP prior undefined")
        self.index = index


class NumericalBreakdownError(NumericalError):
    def __init__(self, message, round=None, edge=None):
        where = []
        if round is not None:
            where.append(f"round {round}")
        if edge is not None:
            where.append(f"edge {edge[0]}->{edge[1]}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.round = round
        self.edge = edge


class GabpNotConvergedError(NumericalError):
    """GaBP stopped at its round cap without meeting the tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class SingularMatrixError(NumericalError):
    pass


class LineSearchStalledError(NumericalError):
    stage = "solve"


class IterationLimitError(NumericalError):
    """An outer or Newton loop hit its iteration cap."""

    stage = "solve"

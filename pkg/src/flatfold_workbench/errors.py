"""Exception hierarchy shared by every engine.

Each exception carries the command-line exit code it maps to: 1 for a negative
decision, 2 for bad input, 3 for an exhausted budget.
"""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""

    exit_code: int = 2


class InvalidInput(WorkbenchError):
    """Input failed validation."""


class InvalidCreasePattern(InvalidInput):
    """Crease pattern violates the crease or boundary rules."""


class InvalidFlapInstance(InvalidInput):
    """Flap instance has bad hinges or an incomplete state."""


class InvalidNclGraph(InvalidInput):
    """NCL graph is not 3-regular or has a bad blue degree."""


class InputNotCubicBipartite(InvalidInput):
    """Bipartite input is not 3-regular on equal sides."""


class RoutingInvalid(InvalidInput):
    """Grid routing does not match the NCL graph."""


class PreconditionViolated(InvalidInput):
    """Side lengths fail the center-containing cyclic polygon condition."""


class ApexAngleExcess(InvalidInput):
    """Apex angles at a pole sum to 2*pi or more."""


class PoleTooShort(InvalidInput):
    """Pole edge length does not exceed the circumradius."""


class DecompositionInvalid(InvalidInput):
    """Tree decomposition does not fit the cell adjacency graph."""


class NoLocalFolding(WorkbenchError):
    """Facet maps disagree around some cycle of facets."""

    exit_code = 1


class NoWitness(WorkbenchError):
    """No valid layering exists."""

    exit_code = 1


class BudgetExceeded(WorkbenchError):
    """Enumeration would exceed its configured budget."""

    exit_code = 3


class PlyLimitExceeded(BudgetExceeded):
    """Arrangement ply exceeds the configured cap."""

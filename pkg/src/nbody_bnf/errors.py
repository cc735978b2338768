"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`NBodyBNFError`.
The ``exit_code`` class attribute is what the command line front end returns
when the error escapes a subcommand.
"""

from __future__ import annotations


class NBodyBNFError(Exception):
    """Base class. ``exit_code`` 1 means a numerical failure."""

    exit_code = 1


class DimensionError(NBodyBNFError, ValueError):
    """Operands with incompatible variable counts or arities."""


class MassError(NBodyBNFError, ValueError):
    """Invalid mass vector (non-positive, wrong length, collision)."""

    exit_code = 2


class ConvergenceError(NBodyBNFError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class OrderError(NBodyBNFError, ValueError):
    """Bodies on a line left the requested ordering."""


class SingularityError(NBodyBNFError, ValueError):
    """Collision or vanishing radial coordinate."""


class ChartError(NBodyBNFError, ValueError):
    """A state left the domain of the moving-frame chart."""


class ClassificationError(NBodyBNFError, ValueError):
    """An eigenvalue of the linear field is neither real nor imaginary."""


class ResonantLinearError(NBodyBNFError, ValueError):
    """Repeated linear frequency, so no diagonal symplectic chart exists."""

    exit_code = 2


class SmallDivisorError(NBodyBNFError, ArithmeticError):
    """A homological equation hit a (near) vanishing divisor.

    Attributes
    ----------
    kvec : tuple of int
        Integer vector ``k`` with ``k . omega`` below tolerance.
    divisor : complex
        The offending divisor.
    """

    exit_code = 2

    def __init__(self, message: str, kvec=None, divisor: complex | None = None):
        super().__init__(message)
        self.kvec = tuple(kvec) if kvec is not None else None
        self.divisor = divisor


class DomainError(NBodyBNFError, ValueError):
    """Parameters outside the domain where a formula or theorem applies."""

    exit_code = 2


class BudgetError(NBodyBNFError, ValueError):
    """Enumeration would exceed the configured size budget."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class StiffnessError(NBodyBNFError, RuntimeError):
    """Integrator step size underflow or variational blow-up."""


class FamilyCollapseError(NBodyBNFError, RuntimeError):
    """Shooting converged onto the equilibrium instead of a periodic orbit."""


class ContinuationEnd(NBodyBNFError, RuntimeError):
    """Continuation could not advance even at the minimum step."""

    def __init__(self, message: str, orbits=None):
        super().__init__(message)
        self.orbits = list(orbits) if orbits is not None else []

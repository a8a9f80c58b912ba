"""
PickForge errors.
"""

import traceback
from typing import Any, Optional


class PickForgeError(Exception):
    """
    Base class for PickForge errors.
    """


class FormattedPickForgeError(PickForgeError):
    """
    Base class for errors that carry structured metadata (a failing certificate, a residual, the offending
    dimensions) and can be rendered into a CLI report.
    """

    def __init__(self, *args, original_error: Optional[BaseException] = None, **metadata: Any) -> None:
        super().__init__(*args)
        self.original_error = original_error or self
        self.metadata = metadata

    def render(self, include_stack_trace: bool = False) -> str:
        """
        Render the error as a string. The default implementation outputs the error without a traceback.
        """
        if include_stack_trace:
            return "".join(
                traceback.format_exception(
                    type(self.original_error), self.original_error, self.original_error.__traceback__
                )
            )
        return "".join(traceback.format_exception_only(type(self.original_error), self.original_error)).strip()


# input errors


class InputError(FormattedPickForgeError):
    """
    Base class for malformed input: the caller handed over something that does not describe a valid problem.
    """


class ProblemFileError(InputError):
    """
    Raised when a problem file or a candidate file cannot be parsed or does not match its schema.
    """


class DimensionMismatch(InputError):
    """
    Raised when matrix or realization dimensions are incompatible with each other.
    """


class NonFiniteMatrix(InputError):
    """
    Raised when a matrix contains NaN or infinite entries.
    """


class InvalidNodes(InputError):
    """
    Raised when interpolation nodes or boundary points violate their domain (|z| < 1 inside, |t| = 1 on the circle).
    """


# infeasibility


class InfeasibleProblem(FormattedPickForgeError):
    """
    Raised when a problem has no solution. The failing certificate is attached as `certificate` metadata.
    """


class BudgetExceeded(InfeasibleProblem):
    """
    Raised when a free parameter exceeds the norm budget left over by the central solution.
    """


class CaratheodoryJuliaFailure(InfeasibleProblem):
    """
    Raised when a Schur-class function does not meet the Caratheodory-Julia condition at a boundary point, so boundary
    evaluations are not available in its de Branges-Rovnyak space.
    """


# numerical failures


class NumericalFailure(FormattedPickForgeError):
    """
    Base class for numerical failures: the input is valid but a construction could not be carried out within
    tolerances.
    """


class NotPositiveSemidefinite(NumericalFailure):
    """
    Raised when a matrix that must be positive semidefinite fails its certificate.
    """


class DegeneratePickMatrix(NumericalFailure):
    """
    Raised when a construction needs a strictly positive Pick matrix but got a singular one. The Redheffer route
    (`pickforge.redheffer`) handles this case.
    """


class NonUniqueSteinSolution(NumericalFailure):
    """
    Raised when the Stein operator X -> X - T X T* is singular, i.e. two eigenvalues of T satisfy
    lambda_i * conj(lambda_j) = 1.
    """


class StrategyPreconditionError(NumericalFailure):
    """
    Base class for the preconditions of the Pick-matrix construction strategies.
    """


class NonDiagonalNodes(StrategyPreconditionError):
    """
    Raised when the explicit Pick formula is requested for a non-diagonal T.
    """


class RepeatedNodes(StrategyPreconditionError):
    """
    Raised when the explicit Pick formula is requested for repeated interpolation nodes.
    """


class NodesOutsideDisk(StrategyPreconditionError):
    """
    Raised when the explicit Pick formula is requested for nodes outside the open unit disk.
    """


class UnboundedTruncation(StrategyPreconditionError):
    """
    Raised when a truncated power series cannot be certified: the spectral radius is not below one, or the required
    number of terms exceeds the configured cap.
    """


class SingularResolvent(NumericalFailure):
    """
    Raised when I - zA is singular (or too badly conditioned) at an evaluation point.
    """


class SingularFactor(NumericalFailure):
    """
    Raised when a realization has to be inverted but its value at the origin (or at the shifted origin) is singular.
    """


class InertiaMismatch(NumericalFailure):
    """
    Raised when the indefinite Gram matrix of a Krein-space completion does not have the expected inertia.
    """


class IsometryDefect(NumericalFailure):
    """
    Raised when the partially defined isometry of a Redheffer colligation is not isometric within tolerance, which
    signals that the data violate the Stein identity.
    """


class NotSchurClass(NumericalFailure):
    """
    Raised when a function that must be in the Schur class fails its sampled certificate.
    """


class PoleCancellationFailure(NumericalFailure):
    """
    Raised when a removable singularity (for example the apparent pole of a boundary kernel at t0) does not cancel
    within tolerance.
    """


class ExtrapolationFailure(NumericalFailure):
    """
    Raised when a radial Richardson extrapolation does not converge.
    """


class StructureError(NumericalFailure):
    """
    Raised when a function is not given in the structured form (central + carrier * kernel combination) required by
    the norm bookkeeping, or when that structure is inconsistent.
    """


class VerificationFailure(NumericalFailure):
    """
    Raised when a solution produced by the library fails its own verification before it is emitted. The report is
    attached as `report` metadata.
    """

"""Exception hierarchy shared by every cuspedge module."""

from typing import Any, ClassVar


class CuspEdgeError(Exception):
    """Base exception for cuspedge errors."""

    exit_code: ClassVar[int] = 3

    def __init__(
        self,
        message: str,
        suggestion: str | None = None,
        context: dict[str, Any] | None = None,
    ) -> None:
        """Initialize the error.

        Args:
            message: Error message
            suggestion: Optional suggestion for fixing the error
            context: Optional context information (stage, parameters, ...)
        """
        self.message = message
        self.suggestion = suggestion
        self.context = context or {}
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """Format the error message with suggestion and context."""
        parts = [self.message]

        if self.suggestion:
            parts.append(f"\nSuggestion: {self.suggestion}")

        if self.context:
            parts.append("\nContext:")
            for key, value in self.context.items():
                parts.append(f"  {key}: {value}")

        return "".join(parts)

    @property
    def stage(self) -> str | None:
        """Name of the computation stage that failed, if recorded."""
        stage = self.context.get("stage")
        return str(stage) if stage is not None else None


# Input problems: exit code 2


class ConfigError(CuspEdgeError):
    """Raised when a run configuration cannot be parsed or validated."""

    exit_code = 2


class InsufficientSamples(CuspEdgeError):
    """Raised when perturbation samples cannot support a decay fit."""

    exit_code = 2


class InsufficientData(CuspEdgeError):
    """Raised when a counting curve has too few points to fit."""

    exit_code = 2


class GridMismatch(CuspEdgeError):
    """Raised when counting curves do not share a lambda grid."""

    exit_code = 2


class OutsideRegime(CuspEdgeError):
    """Raised when Hardy parameters violate 2*beta + alpha > 1."""

    exit_code = 2


class ScheduleInverted(CuspEdgeError):
    """Raised when the dyadic schedule gives m0 > m."""

    exit_code = 2


# Numerical problems: exit code 3


class NumericalFailure(CuspEdgeError):
    """Raised when element integrals or solver quantities are not finite."""

    exit_code = 3


class MeshTooCoarse(CuspEdgeError):
    """Raised when a result moves more than the tolerance under refinement."""

    exit_code = 3


class IndexIncomplete(CuspEdgeError):
    """Raised when a count is requested above the certified threshold."""

    exit_code = 3


class Inconclusive(CuspEdgeError):
    """Raised when the numeric endpoint test cannot decide."""

    exit_code = 3

"""Exception types for the geometric and numerical failure modes."""

from __future__ import annotations


class GeometryError(Exception):
    """Base for failures that witness a geometric obstruction."""


class NotDifferentiableError(GeometryError):
    """The norm has no (two-sided) derivative at the queried point."""


class ConvergenceError(GeometryError):
    """An iterative solve (Newton, power iteration) failed to converge."""


class EstimationError(GeometryError):
    """A sample-based fit was degenerate."""


class NonManifoldSuspected(EstimationError):
    """Sphere samples are not flat to first order near the base point.

    Raised when the hyperplane-fit residual exceeds a fixed fraction of
    the sampling radius, the signature of a corner or edge.
    """

    def __init__(self, point, residual: float, sample_radius: float):
        self.point = point
        self.residual = float(residual)
        self.sample_radius = float(sample_radius)
        super().__init__(
            f"fit residual {self.residual:.3e} exceeds "
            f"{0.1 * self.sample_radius:.3e} at sample radius "
            f"{self.sample_radius:.3e}; sphere not locally flat"
        )


class ChartDomainError(ValueError):
    """A point lies outside the chart's domain of validity."""


class DecompositionError(ValueError):
    """Subspaces passed as complements do not actually split the space."""

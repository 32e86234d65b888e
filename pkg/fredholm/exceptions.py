from __future__ import annotations

from typing import Any

"""
Errors raised by fredholm.

Every error carries the exit code the command line interface maps it to:
0 success, 1 verification failure, 2 invalid input, 3 unsupported pole
order or no singularity, 4 assumption violated.
"""


class FredholmError(Exception):
    """Base class of all fredholm errors

    Attributes:
        exit_code: Process exit code used by the command line interface
    """

    exit_code = 2


class MalformedInput(FredholmError, ValueError):
    """An input matrix, pencil or document is not shape consistent or not finite"""


class ComplementError(FredholmError):
    """A complementary subspace could not be built or verified"""


class NotNested(ComplementError):
    """A subspace is not contained in the subspace it should live in"""


class NotComplementary(ComplementError):
    """Two subspaces do not add up to a direct sum of the ambient space"""


class DegenerateComplement(ComplementError):
    """No well conditioned complement was found"""


class IdenticallySingular(FredholmError):
    """det A(z) vanishes for every z"""


class UnsupportedPoleOrder(FredholmError):
    """The pole is of order three or more, or the pencil has no inverse

    Attributes:
        analysis: The partially built PoleAnalysis
    """

    exit_code = 3

    def __init__(self, message: str, analysis: Any = None):
        super().__init__(message)
        self.analysis = analysis


class NotSingular(FredholmError):
    """The pencil is invertible at the point where a singularity is required"""

    exit_code = 3


class NotSingularAtOne(NotSingular):
    """A(1) is invertible, so the process has no unit root"""


class WrongOrder(FredholmError):
    """A routine was called with an analysis of another pole order"""


class OutOfRange(FredholmError, IndexError):
    """A coefficient index outside the computed expansion was requested"""


class SingularOnContour(FredholmError):
    """The pencil is numerically singular at a quadrature node"""


class InvalidContour(FredholmError):
    """Another root of det A(z) lies too close to the contour"""


class TailNotConverged(FredholmError):
    """A series did not show decay before the internal cap"""


class InsufficientHistory(FredholmError):
    """Too few innovations to evaluate the truncated moving average filter"""


class AssumptionViolated(FredholmError):
    """det A(z) has roots in the closed unit disk other than 1

    Attributes:
        roots: The offending roots
    """

    exit_code = 4

    def __init__(self, message: str, roots: list[complex] | None = None):
        super().__init__(message)
        self.roots = list(roots) if roots is not None else []

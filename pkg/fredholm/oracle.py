from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from fredholm import settings
from fredholm.exceptions import InvalidContour, SingularOnContour
from fredholm.laurent import LaurentExpansion
from fredholm.pencil import TaylorPencil, evaluate_nodes, finite_spectrum
from fredholm.utils import debug, warning

"""
Laurent coefficients by discrete contour integration

N_j = (2 pi i)^-1 \\oint A(z)^-1 (z - z0)^(-j-1) dz is approximated by the
trapezoidal rule on a circle around z0, which is spectrally accurate for
functions holomorphic on an annulus around the circle.
"""

MAX_NODE_CONDITION = 1e12
MIN_RADIUS = 1e-3
MAX_RADIUS = 0.5


class ContourSpec:
    """A circle of quadrature nodes

    Attributes:
        center: Center z0 of the circle
        radius: Radius of the circle
        nodes: Number of equispaced nodes
    """

    def __init__(self, center: complex, radius: float, nodes: int | None = None):
        if nodes is None:
            nodes = settings.contour_nodes
        if not radius > 0:
            raise InvalidContour(f"Radius must be positive, got {radius}")
        if nodes < 1:
            raise InvalidContour(f"Need at least one node, got {nodes}")
        self.center = complex(center)
        self.radius = float(radius)
        self.nodes = int(nodes)

    def offsets(self) -> np.ndarray:
        """z - z0 at every node"""
        angles = 2 * np.pi * np.arange(self.nodes) / self.nodes
        return self.radius * np.exp(1j * angles)

    def __repr__(self):
        return (
            f"ContourSpec(center={self.center}, radius={self.radius}, "
            + f"nodes={self.nodes})"
        )


def _other_root_distances(pencil: TaylorPencil, center: complex) -> list[float]:
    distances = [abs(root.value - center) for root in finite_spectrum(pencil)]
    return [d for d in distances if d > settings.root_tol]


def default_contour(
    pencil: TaylorPencil, center: complex | None = None, nodes: int | None = None
) -> ContourSpec:
    """Circle of half the distance to the nearest other root, within [1e-3, 0.5]"""
    if center is None:
        center = pencil.center
    distances = _other_root_distances(pencil, center)
    if len(distances) == 0:
        radius = MAX_RADIUS
    else:
        radius = min(max(min(distances) / 2, MIN_RADIUS), MAX_RADIUS)
    debug("default_contour", center, radius)
    return ContourSpec(center, radius, nodes)


def validate_contour(pencil: TaylorPencil, spec: ContourSpec):
    """Raises InvalidContour if another root lies within 2 * radius of the center"""
    too_close = [
        d for d in _other_root_distances(pencil, spec.center) if d < 2 * spec.radius
    ]
    if len(too_close) > 0:
        raise InvalidContour(
            f"A root lies at distance {min(too_close):.3e} from the center, "
            + f"radius {spec.radius:.3e} is too wide"
        )


def cauchy_coefficients(
    function: Callable[[np.ndarray], np.ndarray],
    spec: ContourSpec,
    js: Iterable[int],
) -> dict[int, np.ndarray]:
    """Coefficients of (z - z0)^j of a matrix function by the trapezoidal rule

    Args:
        function: Maps an array of points to an array of matrices
        spec: The contour
        js: Requested powers

    Returns:
        Dict mapping j to its coefficient
    """
    offsets = spec.offsets()
    values = function(spec.center + offsets)
    return {
        j: np.mean(values * (offsets ** (-j)).reshape(-1, 1, 1), axis=0) for j in js
    }


def inverse_at_nodes(pencil: TaylorPencil, zs: np.ndarray) -> np.ndarray:
    """A(z)^-1 at every point of zs

    Raises:
        SingularOnContour: if A(z) is numerically singular at a point
    """
    values = evaluate_nodes(pencil, zs)
    conditions = np.linalg.cond(values)
    singular = ~np.isfinite(conditions) | (conditions > MAX_NODE_CONDITION)
    if np.any(singular):
        raise SingularOnContour(
            f"A(z) is singular at {np.asarray(zs)[singular][0]} "
            + f"(condition number {np.max(conditions):.3e})"
        )
    return np.linalg.inv(values)


def contour_coefficients(
    pencil: TaylorPencil, spec: ContourSpec, js: Iterable[int]
) -> dict[int, np.ndarray]:
    """Laurent coefficients N_j of A(z)^-1 around spec.center for every j in js"""
    return cauchy_coefficients(lambda zs: inverse_at_nodes(pencil, zs), spec, js)


def contour_coefficient(pencil: TaylorPencil, spec: ContourSpec, j: int) -> np.ndarray:
    """Laurent coefficient N_j of A(z)^-1 around spec.center

    Raises:
        SingularOnContour: if A(z) is numerically singular at a node
    """
    return contour_coefficients(pencil, spec, [j])[j]


def detect_order(
    pencil: TaylorPencil,
    spec: ContourSpec,
    max_m: int = 4,
    tol: float | None = None,
) -> int:
    """Pole order from the size of the principal Laurent coefficients

    Args:
        pencil: The pencil
        spec: Contour around the point of interest
        max_m: Largest order looked for
        tol: Relative vanishing threshold, defaults to settings.vanish_tol

    Returns:
        The largest m <= max_m whose N_-m does not vanish, 0 if none
    """
    if tol is None:
        tol = settings.vanish_tol
    coefficients = contour_coefficients(pencil, spec, range(-max_m, 1))
    norms = {j: float(np.linalg.norm(c)) for j, c in coefficients.items()}
    reference = max(norms.values())
    for m in range(max_m, 0, -1):
        if norms[-m] > tol * reference:
            return m
    return 0


def compare_expansion(
    expansion: LaurentExpansion,
    pencil: TaylorPencil,
    spec: ContourSpec | None = None,
    j_max: int = 3,
) -> dict[int, float]:
    """Frobenius distance of N_j to its contour estimate for j in [-m, min(J, j_max)]"""
    if spec is None:
        spec = default_contour(pencil, expansion.center)
    js = range(-expansion.order, min(expansion.J, j_max) + 1)
    estimates = contour_coefficients(pencil, spec, js)
    deviations = {
        j: float(np.linalg.norm(expansion.coefficient(j) - estimates[j])) for j in js
    }
    worst = max(deviations.values())
    if worst > settings.verify_tol:
        warning("compare_expansion", "contour deviation", worst)
    return deviations

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.special import comb

from fredholm import settings
from fredholm.exceptions import IdenticallySingular, MalformedInput
from fredholm.linalg import as_matrix, is_invertible
from fredholm.utils import debug, info

"""
Polynomial matrix pencils A(z) = sum_j A_j (z - z0)^j

Example usage:
from fredholm.pencil import TaylorPencil, check_assumption2

# (1 - z) I around 0
pencil = TaylorPencil([np.eye(2), -np.eye(2)], center=0)
report = check_assumption2(pencil)
print(report)
"""

BOUNDARY_TOL = 1e-8
SINGULARITY_TOL = 1e-12
INFINITE_EIGENVALUE_TOL = 1e-12


class TaylorPencil:
    """A polynomial matrix pencil given by its Taylor coefficients

    Attributes:
        center: The expansion point z0
        coeffs: Array of shape (p + 1, n, n), coeffs[j] multiplies (z - z0)^j
    """

    def __init__(self, coeffs, center: complex = 0.0):
        if len(coeffs) == 0:
            raise MalformedInput("A pencil needs at least one coefficient")
        matrices = [as_matrix(c) for c in coeffs]
        n = matrices[0].shape[0]
        for matrix in matrices:
            if matrix.shape != (n, n):
                raise MalformedInput(
                    f"Coefficient of shape {matrix.shape} in a pencil of dimension {n}"
                )
        self.coeffs = np.stack(matrices)
        if not np.any(self.coeffs):
            raise MalformedInput("All pencil coefficients are zero")
        self.center = complex(center)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        """Index of the last nonzero coefficient"""
        nonzero = [j for j in range(len(self.coeffs)) if np.any(self.coeffs[j])]
        return nonzero[-1]

    def coefficient(self, j: int) -> np.ndarray:
        """A_j, zero beyond the stored coefficients"""
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return np.zeros((self.dim, self.dim), dtype=complex)

    def padded(self, count: int) -> np.ndarray:
        """The first max(count, p + 1) coefficients, zero padded"""
        if count <= len(self.coeffs):
            return self.coeffs
        padding = np.zeros((count - len(self.coeffs), self.dim, self.dim), dtype=complex)
        return np.concatenate([self.coeffs, padding])

    def trimmed(self) -> TaylorPencil:
        """The same pencil without trailing zero coefficients"""
        return TaylorPencil(self.coeffs[: self.degree + 1], self.center)

    def __call__(self, z: complex) -> np.ndarray:
        return evaluate(self, z)

    def __repr__(self):
        return (
            f"TaylorPencil(dim={self.dim}, degree={len(self.coeffs) - 1}, "
            + f"center={self.center})"
        )


class Root:
    """A cluster of eigenvalues of the pencil

    Attributes:
        value: Mean of the clustered eigenvalues
        multiplicity: Number of clustered eigenvalues
        members: The clustered eigenvalues
    """

    def __init__(self, value: complex, multiplicity: int = 1, members=None):
        self.value = complex(value)
        self.multiplicity = multiplicity
        self.members = (
            [complex(member) for member in members]
            if members is not None
            else [self.value] * multiplicity
        )

    def __repr__(self):
        return f"Root({self.value}, multiplicity={self.multiplicity})"


def evaluate(pencil: TaylorPencil, z: complex) -> np.ndarray:
    """A(z) by Horner evaluation"""
    w = z - pencil.center
    result = pencil.coeffs[-1].copy()
    for coefficient in pencil.coeffs[-2::-1]:
        result = result * w + coefficient
    return result


def evaluate_nodes(pencil: TaylorPencil, zs: np.ndarray) -> np.ndarray:
    """A(z) at every point of zs, shape (len(zs), n, n)"""
    w = np.asarray(zs, dtype=complex).reshape(-1, 1, 1) - pencil.center
    result = np.array(
        np.broadcast_to(pencil.coeffs[-1], (w.shape[0], pencil.dim, pencil.dim))
    )
    for coefficient in pencil.coeffs[-2::-1]:
        result = result * w + coefficient
    return result


def recenter(pencil: TaylorPencil, new_center: complex) -> TaylorPencil:
    """Re-expands the pencil around new_center

    B_j = sum_{m >= j} C(m, j) A_m (new_center - z0)^(m - j)

    Args:
        pencil: The pencil
        new_center: The new expansion point

    Returns:
        A TaylorPencil with the same values centered at new_center
    """
    shift = complex(new_center) - pencil.center
    p = len(pencil.coeffs) - 1
    recentered = []
    for j in range(p + 1):
        coefficient = np.zeros((pencil.dim, pencil.dim), dtype=complex)
        for m in range(j, p + 1):
            coefficient = coefficient + comb(m, j, exact=True) * pencil.coeffs[m] * (
                shift ** (m - j)
            )
        recentered.append(coefficient)
    return TaylorPencil(recentered, new_center)


def _check_not_identically_singular(pencil: TaylorPencil):
    rng = np.random.default_rng(0)
    for _ in range(3):
        offset = rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.uniform())
        if is_invertible(evaluate(pencil, pencil.center + offset), SINGULARITY_TOL):
            return
    raise IdenticallySingular("det A(z) vanishes at every sampled point")


def _linearization(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Companion pencil C0 + w C1 with the same finite eigenvalues as A"""
    p = len(coeffs) - 1
    n = coeffs.shape[1]
    c0 = np.zeros((n * p, n * p), dtype=complex)
    c1 = np.eye(n * p, dtype=complex)
    for i in range(p - 1):
        c0[i * n : (i + 1) * n, (i + 1) * n : (i + 2) * n] = -np.eye(n)
    for j in range(p):
        c0[(p - 1) * n :, j * n : (j + 1) * n] = coeffs[j]
    c1[(p - 1) * n :, (p - 1) * n :] = coeffs[p]
    return c0, c1


def cluster_roots(values, root_tol: float) -> list[Root]:
    """Groups eigenvalues closer than root_tol into Roots"""
    clusters: list[list[complex]] = []
    for value in sorted(values, key=lambda v: (v.real, v.imag)):
        for cluster in clusters:
            if abs(value - np.mean(cluster)) <= root_tol:
                cluster.append(value)
                break
        else:
            clusters.append([value])
    return [Root(np.mean(cluster), len(cluster), cluster) for cluster in clusters]


def finite_spectrum(pencil: TaylorPencil, root_tol: float | None = None) -> list[Root]:
    """Every finite root of det A(z) = 0

    Args:
        pencil: The pencil
        root_tol: Clustering tolerance, defaults to settings.root_tol

    Returns:
        Clustered roots

    Raises:
        IdenticallySingular: if det A(z) vanishes identically
    """
    if root_tol is None:
        root_tol = settings.root_tol
    pencil = pencil.trimmed()
    _check_not_identically_singular(pencil)
    if len(pencil.coeffs) == 1:
        return []
    c0, c1 = _linearization(pencil.coeffs)
    alpha, beta = scipy.linalg.eigvals(-c0, c1, homogeneous_eigvals=True)
    finite = np.abs(beta) > INFINITE_EIGENVALUE_TOL * np.abs(alpha)
    values = pencil.center + alpha[finite] / beta[finite]
    debug("finite_spectrum", len(values), "of", len(alpha), "eigenvalues finite")
    return cluster_roots(list(values), root_tol)


def spectrum_in_disk(
    pencil: TaylorPencil, radius: float, root_tol: float | None = None
) -> list[Root]:
    """Roots of det A(z) = 0 with |z| <= radius

    Roots within 1e-8 outside the boundary count as inside.
    """
    return [
        root
        for root in finite_spectrum(pencil, root_tol)
        if abs(root.value) <= radius + BOUNDARY_TOL
    ]


class Assumption2Report:
    """Outcome of the unit root check on the closed unit disk

    A cluster within root_tol of 1 is the unit root only if its mean equals 1
    within unit_root_tol. Otherwise its members farther than unit_root_tol
    from 1 are offending.

    Attributes:
        passed: True if every root in the closed unit disk equals 1
        roots: Roots in the closed unit disk
        offending: Roots in the closed unit disk other than 1
        unit_roots: Eigenvalues counted as the root at 1
        unit_root_multiplicity: Total multiplicity of the root at 1
    """

    def __init__(self, roots: list[Root], root_tol: float, unit_root_tol: float):
        self.roots = roots
        self.offending: list[Root] = []
        self.unit_roots: list[complex] = []
        for root in roots:
            if abs(root.value - 1) > root_tol:
                self.offending.append(root)
            elif abs(root.value - 1) <= unit_root_tol:
                self.unit_roots.extend(root.members)
            else:
                for member in root.members:
                    if abs(member - 1) <= unit_root_tol:
                        self.unit_roots.append(member)
                    else:
                        self.offending.append(Root(member))
        self.unit_root_multiplicity = len(self.unit_roots)
        self.passed = len(self.offending) == 0

    def __str__(self):
        if self.passed:
            return "PASS"
        return "FAIL " + ", ".join(str(root.value) for root in self.offending)


def check_assumption2(
    pencil: TaylorPencil,
    root_tol: float | None = None,
    unit_root_tol: float | None = None,
) -> Assumption2Report:
    """Checks that A(z) is invertible on the closed unit disk except at 1

    Args:
        pencil: The pencil, recentered at 0 first if needed
        root_tol: Clustering tolerance, defaults to settings.root_tol
        unit_root_tol: Distance from 1 below which a root counts as the unit
            root, defaults to settings.unit_root_tol

    Returns:
        The Assumption2Report
    """
    if root_tol is None:
        root_tol = settings.root_tol
    if unit_root_tol is None:
        unit_root_tol = settings.unit_root_tol
    if pencil.center != 0:
        pencil = recenter(pencil, 0)
    report = Assumption2Report(
        spectrum_in_disk(pencil, 1.0, root_tol), root_tol, unit_root_tol
    )
    info("check_assumption2", str(report))
    return report

from __future__ import annotations

import numpy as np
import scipy.linalg

from fredholm.exceptions import (
    DegenerateComplement,
    MalformedInput,
    NotComplementary,
    NotNested,
)
from fredholm.utils import debug

"""
Dense complex linear algebra used by the pencil routines.

Subspaces are always stored by orthonormal bases, also when they represent
oblique complement choices. Obliqueness only enters through Projector.

Example usage:
from fredholm import linalg

a = [[1, 1], [1, 1]]
kernel = linalg.kernel_basis(a)
rc = linalg.orthogonal_complement(linalg.range_basis(a))
kc = linalg.orthogonal_complement(kernel)
g = linalg.generalized_inverse(a, rc, kc)
"""

ORTHONORMAL_TOL = 1e-12
NESTED_TOL = 1e-10
COMPLEMENT_TOL = 1e-10
MAX_COMPLEMENT_ATTEMPTS = 100
MAX_COMPLEMENT_CONDITION = 1e6


def as_matrix(a) -> np.ndarray:
    """Converts a to a finite complex 2D array

    Args:
        a: Anything numpy can turn into a 2D array, scalars become 1x1

    Returns:
        Complex ndarray

    Raises:
        MalformedInput: if a is not 2D or has non finite entries
    """
    matrix = np.asarray(a, dtype=complex)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise MalformedInput(f"Expected a non empty matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise MalformedInput("Matrix has NaN or infinite entries")
    return matrix


def default_rank_tol(a: np.ndarray) -> float:
    """The standard rank revealing tolerance max(rows, cols) * eps"""
    return max(a.shape) * np.finfo(float).eps


def rank_revealing(
    a: np.ndarray, rank_tol: float | None = None, scale: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Full singular value decomposition with a rank decision

    Every rank, kernel and range decision in fredholm goes through here so
    they are mutually consistent.

    Args:
        a: The matrix
        rank_tol: Relative tolerance, singular values
            <= rank_tol * max(sigma_max, scale) count as zero.
            Defaults to max(rows, cols) * eps.
        scale: Reference magnitude of the problem a was derived from. A
            matrix that is pure rounding noise relative to scale has rank 0.

    Returns:
        (u, s, vh, rank)
    """
    a = np.asarray(a, dtype=complex)
    rows, cols = a.shape
    if a.size == 0:
        return np.eye(rows, dtype=complex), np.zeros(0), np.eye(cols, dtype=complex), 0
    if rank_tol is None:
        rank_tol = default_rank_tol(a)
    u, s, vh = scipy.linalg.svd(a, full_matrices=True)
    sigma_max = s[0] if s.size > 0 else 0.0
    if sigma_max == 0.0:
        return u, s, vh, 0
    rank = int(np.count_nonzero(s > rank_tol * max(sigma_max, scale)))
    return u, s, vh, rank


def is_invertible(
    a: np.ndarray, rank_tol: float | None = None, scale: float = 0.0
) -> bool:
    """Square matrix invertibility by condition number

    The zero matrix is singular, the empty matrix is invertible.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[0] != a.shape[1]:
        return False
    if a.size == 0:
        return True
    _, s, _, rank = rank_revealing(a, rank_tol, scale)
    return rank == a.shape[0]


class Subspace:
    """A subspace of C^n held by an orthonormal basis

    Attributes:
        ambient_dim: Dimension n of the surrounding space
        basis: n x dim array with orthonormal columns
    """

    def __init__(self, basis, ambient_dim: int | None = None):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim == 1:
            basis = basis.reshape(-1, 1)
        if ambient_dim is None:
            ambient_dim = basis.shape[0]
        if basis.size == 0:
            basis = np.zeros((ambient_dim, 0), dtype=complex)
        if basis.ndim != 2 or basis.shape[0] != ambient_dim:
            raise MalformedInput(
                f"Basis of shape {basis.shape} does not live in dimension {ambient_dim}"
            )
        if basis.shape[1] > ambient_dim:
            raise MalformedInput("More basis vectors than the ambient dimension")
        gram_error = np.linalg.norm(
            basis.conj().T @ basis - np.eye(basis.shape[1])
        )
        if gram_error > ORTHONORMAL_TOL:
            raise MalformedInput(f"Basis is not orthonormal (error {gram_error:.3e})")
        self.ambient_dim = ambient_dim
        self.basis = basis

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def span(cls, columns, rank_tol: float | None = None) -> Subspace:
        """Subspace spanned by arbitrary columns"""
        columns = np.asarray(columns, dtype=complex)
        if columns.ndim == 1:
            columns = columns.reshape(-1, 1)
        if columns.shape[1] == 0:
            return cls.zero(columns.shape[0])
        return range_basis(columns, rank_tol)

    @classmethod
    def full(cls, n: int) -> Subspace:
        return cls(np.eye(n, dtype=complex), n)

    @classmethod
    def zero(cls, n: int) -> Subspace:
        return cls(np.zeros((n, 0), dtype=complex), n)

    def orthogonal_projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def residual(self, columns) -> float:
        """Frobenius norm of the part of columns outside this subspace"""
        columns = np.asarray(columns, dtype=complex)
        if columns.size == 0:
            return 0.0
        return float(np.linalg.norm(columns - self.orthogonal_projector() @ columns))

    def contains(self, other: Subspace, tol: float = NESTED_TOL) -> bool:
        return (
            other.ambient_dim == self.ambient_dim and self.residual(other.basis) < tol
        )

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"

    def __str__(self):
        return repr(self)


class Projector:
    """An idempotent map onto one subspace along another

    Attributes:
        matrix: n x n array of the projection
        onto: The range of the projection
        along: The kernel of the projection
    """

    def __init__(self, matrix: np.ndarray, onto: Subspace, along: Subspace):
        self.matrix = matrix
        self.onto = onto
        self.along = along

    def complement(self) -> Projector:
        """The projection onto `along` along `onto`, i.e. I - P"""
        n = self.onto.ambient_dim
        return Projector(np.eye(n) - self.matrix, self.along, self.onto)

    def idempotence_residual(self) -> float:
        return float(np.linalg.norm(self.matrix @ self.matrix - self.matrix))

    def __repr__(self):
        return f"Projector(onto={self.onto}, along={self.along})"


class GenInverse:
    """Generalized inverse of A determined by complements of its range and kernel

    Attributes:
        matrix: The generalized inverse
        source: The matrix A it inverts
        range_complement: Complement Rc of ran A
        kernel_complement: Complement Kc of ker A
        range_projector: Projection onto Rc along ran A
        kernel_projector: Projection onto Kc along ker A
    """

    def __init__(
        self,
        matrix: np.ndarray,
        source: np.ndarray,
        range_complement: Subspace,
        kernel_complement: Subspace,
        range_projector: Projector,
        kernel_projector: Projector,
    ):
        self.matrix = matrix
        self.source = source
        self.range_complement = range_complement
        self.kernel_complement = kernel_complement
        self.range_projector = range_projector
        self.kernel_projector = kernel_projector

    def identity_residuals(self) -> dict[str, float]:
        """Frobenius residuals of the four defining identities

        Returns:
            Dict with keys "AGA", "GAG", "AG" and "GA"
        """
        a, g = self.source, self.matrix
        rows = a.shape[0]
        return {
            "AGA": float(np.linalg.norm(a @ g @ a - a)),
            "GAG": float(np.linalg.norm(g @ a @ g - g)),
            "AG": float(
                np.linalg.norm(a @ g - (np.eye(rows) - self.range_projector.matrix))
            ),
            "GA": float(np.linalg.norm(g @ a - self.kernel_projector.matrix)),
        }

    def __repr__(self):
        return (
            f"GenInverse(shape={self.matrix.shape}, "
            + f"rank={self.kernel_complement.dim})"
        )


def kernel_basis(a, rank_tol: float | None = None, scale: float = 0.0) -> Subspace:
    """Orthonormal basis of the numerical null space of a

    Args:
        a: The matrix
        rank_tol: Relative rank tolerance
        scale: Reference magnitude, see rank_revealing

    Returns:
        The kernel, the full space for a zero matrix
    """
    a = as_matrix(a)
    _, _, vh, rank = rank_revealing(a, rank_tol, scale)
    return Subspace(vh[rank:].conj().T, a.shape[1])


def range_basis(a, rank_tol: float | None = None, scale: float = 0.0) -> Subspace:
    """Orthonormal basis of the column space of a, same rank rule as kernel_basis"""
    a = as_matrix(a)
    u, _, _, rank = rank_revealing(a, rank_tol, scale)
    return Subspace(u[:, :rank], a.shape[0])


def orthogonal_complement(v: Subspace) -> Subspace:
    if v.dim == 0:
        return Subspace.full(v.ambient_dim)
    return kernel_basis(v.basis.conj().T)


def restrict(matrix: np.ndarray, domain: Subspace, codomain: Subspace) -> np.ndarray:
    """Coordinates of matrix as a map domain -> codomain in the stored bases"""
    return codomain.basis.conj().T @ matrix @ domain.basis


def embed(coordinates: np.ndarray, domain: Subspace, codomain: Subspace) -> np.ndarray:
    """Ambient matrix of a map given in subspace coordinates, zero on domain^perp"""
    return codomain.basis @ coordinates @ domain.basis.conj().T


def _random_complement(v: Subspace, rng: np.random.Generator) -> Subspace:
    n = v.ambient_dim
    missing = n - v.dim
    if missing == 0:
        return Subspace.zero(n)
    if v.dim == 0:
        return Subspace.full(n)
    for attempt in range(MAX_COMPLEMENT_ATTEMPTS):
        directions = rng.standard_normal((n, missing)) + 1j * rng.standard_normal(
            (n, missing)
        )
        q, _ = scipy.linalg.qr(directions, mode="economic")
        condition = np.linalg.cond(np.hstack([v.basis, q]))
        if condition < MAX_COMPLEMENT_CONDITION:
            return Subspace(q, n)
        debug("Rejected random complement", attempt, condition)
    raise DegenerateComplement(
        f"No complement with condition number below {MAX_COMPLEMENT_CONDITION:g} "
        + f"after {MAX_COMPLEMENT_ATTEMPTS} attempts"
    )


def random_complement(v: Subspace, seed: int) -> Subspace:
    """A seeded pseudo random complement W with V + W the full space

    Args:
        v: The subspace to complement
        seed: Seed of the numpy generator, equal seeds give equal results

    Returns:
        The complement

    Raises:
        DegenerateComplement: if no well conditioned complement is found
    """
    return _random_complement(v, np.random.default_rng(seed))


def complement_within(
    v: Subspace, ambient: Subspace, rng: np.random.Generator | None = None
) -> Subspace:
    """A complement W of v inside ambient, so ambient = v + W

    Args:
        v: Subspace of ambient
        ambient: The enclosing subspace
        rng: When given, W is a random (oblique) complement drawn from it,
            otherwise W is the orthogonal complement of v in ambient

    Returns:
        The complement

    Raises:
        NotNested: if v is not contained in ambient
    """
    if v.ambient_dim != ambient.ambient_dim:
        raise MalformedInput("Subspaces live in different dimensions")
    if not ambient.contains(v):
        raise NotNested(f"{v} is not contained in {ambient}")
    if ambient.dim == 0:
        return Subspace.zero(ambient.ambient_dim)
    coordinates = Subspace.span(ambient.basis.conj().T @ v.basis)
    if rng is None:
        local = orthogonal_complement(coordinates)
    else:
        local = _random_complement(coordinates, rng)
    return Subspace(ambient.basis @ local.basis, ambient.ambient_dim)


def projector_onto_along(
    onto: Subspace, along: Subspace, rank_tol: float = COMPLEMENT_TOL
) -> Projector:
    """The projection onto one subspace along a complementary one

    Args:
        onto: Range of the projection
        along: Kernel of the projection
        rank_tol: Relative tolerance of the complementarity check

    Returns:
        The Projector

    Raises:
        NotComplementary: if the stacked bases do not form a basis
    """
    n = onto.ambient_dim
    if along.ambient_dim != n:
        raise MalformedInput("Subspaces live in different dimensions")
    if onto.dim + along.dim != n:
        raise NotComplementary(
            f"Dimensions {onto.dim} + {along.dim} do not add up to {n}"
        )
    if onto.dim == 0:
        return Projector(np.zeros((n, n), dtype=complex), onto, along)
    if along.dim == 0:
        return Projector(np.eye(n, dtype=complex), onto, along)
    stacked = np.hstack([onto.basis, along.basis])
    _, _, _, rank = rank_revealing(stacked, rank_tol)
    if rank < n:
        raise NotComplementary(f"{onto} and {along} intersect")
    coordinates = scipy.linalg.solve(stacked, np.eye(n, dtype=complex))
    return Projector(onto.basis @ coordinates[: onto.dim], onto, along)


def is_complementary(v: Subspace, w: Subspace, rank_tol: float = COMPLEMENT_TOL) -> bool:
    try:
        projector_onto_along(v, w, rank_tol)
    except NotComplementary:
        return False
    return True


def generalized_inverse(
    a, rc: Subspace, kc: Subspace, rank_tol: float | None = None, scale: float = 0.0
) -> GenInverse:
    """The generalized inverse (A restricted to Kc)^-1 (I - P_Rc)

    Args:
        a: The matrix A
        rc: Complement of the range of A
        kc: Complement of the kernel of A
        rank_tol: Relative rank tolerance for ker A and ran A
        scale: Reference magnitude, see rank_revealing

    Returns:
        The GenInverse

    Raises:
        NotComplementary: if rc or kc are not complements
    """
    a = as_matrix(a)
    rows, cols = a.shape
    kernel = kernel_basis(a, rank_tol, scale)
    ran = range_basis(a, rank_tol, scale)
    range_projector = projector_onto_along(rc, ran)
    kernel_projector = projector_onto_along(kc, kernel)
    if ran.dim == 0:
        matrix = np.zeros((cols, rows), dtype=complex)
    else:
        core = restrict(a, kc, ran)
        matrix = kc.basis @ scipy.linalg.solve(
            core, ran.basis.conj().T @ (np.eye(rows) - range_projector.matrix)
        )
    return GenInverse(matrix, a, rc, kc, range_projector, kernel_projector)

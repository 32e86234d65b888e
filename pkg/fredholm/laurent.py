from __future__ import annotations

import numpy as np
import scipy.linalg

from fredholm import settings
from fredholm.exceptions import (
    DegenerateComplement,
    MalformedInput,
    NotComplementary,
    NotNested,
    OutOfRange,
    UnsupportedPoleOrder,
    WrongOrder,
)
from fredholm.linalg import (
    GenInverse,
    Projector,
    Subspace,
    complement_within,
    generalized_inverse,
    is_invertible,
    kernel_basis,
    orthogonal_complement,
    projector_onto_along,
    random_complement,
    range_basis,
    rank_revealing,
    restrict,
)
from fredholm.pencil import TaylorPencil, recenter
from fredholm.settings import ComplementMode
from fredholm.utils import debug, info

"""
Pole order classification and Laurent expansion of A(z)^-1 around z0.

N(z) = A(z)^-1 = sum_{j >= -m} N_j (z - z0)^j for m in {1, 2}.

Example usage:
from fredholm.laurent import ComplementPolicy, analyze, laurent_expansion

analysis = analyze(pencil, ComplementPolicy.orthogonal())
expansion = laurent_expansion(analysis, pencil, J=3)
print(expansion.coefficient(-1))
"""


class ComplementPolicy:
    """How complementary subspaces are chosen during the analysis

    Attributes:
        mode: A settings.ComplementMode
        seed: Seed of the seeded random mode
        rc, kc, r1c, k1c: Subspaces of the explicit mode, r1c and k1c may be
            None in which case the orthogonal choice is used for them
    """

    def __init__(
        self,
        mode: ComplementMode = ComplementMode.ORTHOGONAL,
        seed: int = 0,
        rc: Subspace | None = None,
        kc: Subspace | None = None,
        r1c: Subspace | None = None,
        k1c: Subspace | None = None,
    ):
        if mode == ComplementMode.EXPLICIT and (rc is None or kc is None):
            raise MalformedInput("Explicit complements need at least Rc and Kc")
        self.mode = mode
        self.seed = seed
        self.rc = rc
        self.kc = kc
        self.r1c = r1c
        self.k1c = k1c

    @classmethod
    def orthogonal(cls) -> ComplementPolicy:
        return cls(ComplementMode.ORTHOGONAL)

    @classmethod
    def seeded_random(cls, seed: int) -> ComplementPolicy:
        return cls(ComplementMode.SEEDED_RANDOM, seed=seed)

    @classmethod
    def explicit(
        cls,
        rc: Subspace,
        kc: Subspace,
        r1c: Subspace | None = None,
        k1c: Subspace | None = None,
    ) -> ComplementPolicy:
        return cls(ComplementMode.EXPLICIT, rc=rc, kc=kc, r1c=r1c, k1c=k1c)

    def child_seeds(self) -> list[int]:
        """Four independent seeds for Rc, Kc, R1c and K1c"""
        children = np.random.SeedSequence(self.seed).spawn(4)
        return [int(child.generate_state(1)[0]) for child in children]

    @property
    def name(self) -> str:
        if self.mode == ComplementMode.SEEDED_RANDOM:
            return f"seeded_random({self.seed})"
        return self.mode.name.lower()

    def __repr__(self):
        return f"ComplementPolicy({self.name})"


class PoleAnalysis:
    """Classification of the singularity of A(z) at its center

    Attributes:
        center: The point z0
        dim: Dimension n of the pencil
        order: 0 (regular point), 1 or 2, None while unfinished
        policy: The ComplementPolicy used
        rank_tol: Relative rank tolerance used
        scale: Reference magnitude of the pencil coefficients
        K, R: Kernel and range of A0
        Rc, Kc: Chosen complements of R and K
        A0g: Generalized inverse of A0 for (Rc, Kc)
        S1: P_Rc A1 restricted to K, a dim(Rc) x dim(K) matrix in the stored bases
        s1_inverse: Ambient matrix of S1^-1 P_Rc (order 1)
        K1: {x in K : A1 x in R}
        R1: R + A1 K
        R1c, K1c: Complements of R1 (inside Rc) and of K1 inside K
        A2dag, A3dag: A2 - A1 A0g A1 and A3 - A1 A0g A1 A0g A1
        Sdag: P_R1c A2dag restricted to K1, in the stored bases
        sdag_inverse: Ambient matrix of Sdag^-1 P_R1c (order 2)
        s_generalized: Ambient matrix of S^g P_Rc with
            S^g = (S1 restricted to K1c)^-1 (I - P_R1c) on Rc (order 2)
    """

    def __init__(
        self, center: complex, dim: int, policy: ComplementPolicy, rank_tol: float
    ):
        self.center = center
        self.dim = dim
        self.policy = policy
        self.rank_tol = rank_tol
        self.scale = 0.0
        self.order: int | None = None
        self.K: Subspace | None = None
        self.R: Subspace | None = None
        self.Rc: Subspace | None = None
        self.Kc: Subspace | None = None
        self.A0g: GenInverse | None = None
        self.S1: np.ndarray | None = None
        self.s1_inverse: np.ndarray | None = None
        self.K1: Subspace | None = None
        self.R1: Subspace | None = None
        self.R1c: Subspace | None = None
        self.K1c: Subspace | None = None
        self.p_r1c: Projector | None = None
        self.A2dag: np.ndarray | None = None
        self.A3dag: np.ndarray | None = None
        self.Sdag: np.ndarray | None = None
        self.sdag_inverse: np.ndarray | None = None
        self.s_generalized: np.ndarray | None = None

    @property
    def p_rc(self) -> Projector:
        assert self.A0g is not None
        return self.A0g.range_projector

    @property
    def defect(self) -> int:
        """Codimension n - dim R of the range of A0, equal to dim K"""
        return self.dim - (self.R.dim if self.R is not None else self.dim)

    @property
    def dim_K(self) -> int:
        return self.K.dim if self.K is not None else 0

    @property
    def dim_K1(self) -> int:
        return self.K1.dim if self.K1 is not None else 0

    def __repr__(self):
        return (
            f"PoleAnalysis(order={self.order}, dim_K={self.dim_K}, "
            + f"dim_K1={self.dim_K1}, policy={self.policy.name})"
        )


def _first_complements(
    policy: ComplementPolicy, r: Subspace, k: Subspace, seeds: list[int]
) -> tuple[Subspace, Subspace]:
    if policy.mode == ComplementMode.SEEDED_RANDOM:
        return random_complement(r, seeds[0]), random_complement(k, seeds[1])
    if policy.mode == ComplementMode.EXPLICIT:
        assert policy.rc is not None and policy.kc is not None
        return policy.rc, policy.kc
    return orthogonal_complement(r), orthogonal_complement(k)


def _range_complement_of_r1(
    policy: ComplementPolicy,
    r1: Subspace,
    rc: Subspace,
    p_rc: Projector,
    seeds: list[int],
) -> Subspace:
    """A complement of R1 contained in Rc

    A provisional complement of R1 is mapped by P_Rc, which keeps it a
    complement of R1 and moves it inside Rc.
    """
    if policy.mode == ComplementMode.EXPLICIT and policy.r1c is not None:
        if not rc.contains(policy.r1c):
            raise NotNested("The complement of R1 must lie inside Rc")
        provisional = policy.r1c
    elif policy.mode == ComplementMode.SEEDED_RANDOM:
        provisional = random_complement(r1, seeds[2])
    else:
        provisional = orthogonal_complement(r1)
    if provisional.dim == 0:
        return provisional
    return Subspace.span(p_rc.matrix @ provisional.basis)


def _kernel_complement_of_k1(
    policy: ComplementPolicy, k1: Subspace, k: Subspace, seeds: list[int]
) -> Subspace:
    if policy.mode == ComplementMode.EXPLICIT and policy.k1c is not None:
        k1c = policy.k1c
        if not k.contains(k1c):
            raise NotNested("The complement of K1 must lie inside K")
        if k1c.dim + k1.dim != k.dim:
            raise NotComplementary("K1 and its complement do not span K")
        _, _, _, rank = rank_revealing(np.hstack([k1.basis, k1c.basis]))
        if rank != k.dim:
            raise NotComplementary("K1 and its complement intersect")
        return k1c
    if policy.mode == ComplementMode.SEEDED_RANDOM:
        return complement_within(k1, k, np.random.default_rng(seeds[3]))
    return complement_within(k1, k)


def pencil_scale(coeffs: np.ndarray) -> float:
    """Largest spectral norm among A0 .. A3"""
    return max(float(np.linalg.norm(c, 2)) for c in coeffs[:4])


def analyze(
    pencil: TaylorPencil,
    policy: ComplementPolicy | None = None,
    rank_tol: float | None = None,
) -> PoleAnalysis:
    """Classifies the singularity of A(z)^-1 at the pencil's center

    Args:
        pencil: The pencil expanded around the point of interest
        policy: Choice of complementary subspaces, orthogonal by default
        rank_tol: Relative rank tolerance, defaults to settings.rank_tol

    Returns:
        The PoleAnalysis with order 0, 1 or 2 and every intermediate operator

    Raises:
        UnsupportedPoleOrder: if S-dagger is singular (order three or more)
        ComplementError: if a complement is invalid or degenerate
    """
    if policy is None:
        policy = ComplementPolicy.orthogonal()
    if rank_tol is None:
        rank_tol = settings.rank_tol
    n = pencil.dim
    a0, a1, a2, a3 = pencil.padded(4)[:4]
    analysis = PoleAnalysis(pencil.center, n, policy, rank_tol)
    scale = pencil_scale(pencil.padded(4))
    analysis.scale = scale

    analysis.R = range_basis(a0, rank_tol, scale)
    analysis.K = kernel_basis(a0, rank_tol, scale)
    if analysis.K.dim == 0:
        analysis.order = 0
        analysis.Rc, analysis.Kc = Subspace.zero(n), Subspace.full(n)
        analysis.A0g = generalized_inverse(
            a0, analysis.Rc, analysis.Kc, rank_tol, scale
        )
        info("analyze", "regular point", pencil.center)
        return analysis

    seeds = policy.child_seeds()
    analysis.Rc, analysis.Kc = _first_complements(
        policy, analysis.R, analysis.K, seeds
    )
    analysis.A0g = generalized_inverse(a0, analysis.Rc, analysis.Kc, rank_tol, scale)
    p_rc = analysis.p_rc
    k, rc = analysis.K, analysis.Rc

    analysis.S1 = restrict(p_rc.matrix @ a1, k, rc)
    if is_invertible(analysis.S1, rank_tol, scale):
        analysis.order = 1
        analysis.s1_inverse = (
            k.basis @ scipy.linalg.inv(analysis.S1) @ rc.basis.conj().T @ p_rc.matrix
        )
        info("analyze", "simple pole", pencil.center, "dim_K", k.dim)
        return analysis

    analysis.K1 = Subspace(
        k.basis @ kernel_basis(analysis.S1, rank_tol, scale).basis, n
    )
    s1_image = Subspace(rc.basis @ range_basis(analysis.S1, rank_tol, scale).basis, n)
    analysis.R1 = Subspace.span(np.hstack([analysis.R.basis, s1_image.basis]))
    if analysis.R1.dim != n - analysis.K1.dim:
        raise DegenerateComplement(
            f"dim R1 = {analysis.R1.dim} but dim K1 = {analysis.K1.dim} in dimension {n}"
        )
    analysis.R1c = _range_complement_of_r1(policy, analysis.R1, rc, p_rc, seeds)
    analysis.K1c = _kernel_complement_of_k1(policy, analysis.K1, k, seeds)
    if analysis.R1c.dim != analysis.K1.dim:
        raise DegenerateComplement(
            f"dim R1c = {analysis.R1c.dim} differs from dim K1 = {analysis.K1.dim}"
        )
    analysis.p_r1c = projector_onto_along(analysis.R1c, analysis.R1)

    g = analysis.A0g.matrix
    analysis.A2dag = a2 - a1 @ g @ a1
    analysis.A3dag = a3 - a1 @ g @ a1 @ g @ a1
    analysis.Sdag = restrict(
        analysis.p_r1c.matrix @ analysis.A2dag, analysis.K1, analysis.R1c
    )
    sdag_scale = max(scale, float(np.linalg.norm(analysis.A2dag, 2)))
    if not is_invertible(analysis.Sdag, rank_tol, sdag_scale):
        debug("analyze", "singular S-dagger", analysis.Sdag)
        raise UnsupportedPoleOrder(
            "order >= 3 or non-invertible pencil: S-dagger is singular", analysis
        )
    analysis.order = 2
    analysis.sdag_inverse = (
        analysis.K1.basis
        @ scipy.linalg.inv(analysis.Sdag)
        @ analysis.R1c.basis.conj().T
        @ analysis.p_r1c.matrix
    )

    k1c = analysis.K1c
    if k1c.dim == 0:
        analysis.s_generalized = np.zeros((n, n), dtype=complex)
    else:
        core = s1_image.basis.conj().T @ p_rc.matrix @ a1 @ k1c.basis
        analysis.s_generalized = k1c.basis @ scipy.linalg.solve(
            core,
            s1_image.basis.conj().T
            @ (np.eye(n) - analysis.p_r1c.matrix)
            @ p_rc.matrix,
        )
    info(
        "analyze",
        "second order pole",
        pencil.center,
        "dim_K",
        k.dim,
        "dim_K1",
        analysis.K1.dim,
    )
    return analysis


def direct_sum_order(
    pencil: TaylorPencil, rank_tol: float | None = None
) -> int | None:
    """Pole order from the direct sum conditions, independent of complements

    C^n = ran A0 + A1 ker A0 (direct) means a simple pole and
    C^n = R1 + A2dag K1 (direct) a second order pole.

    Returns:
        0, 1, 2, or None when neither condition holds
    """
    if rank_tol is None:
        rank_tol = settings.rank_tol
    n = pencil.dim
    coeffs = pencil.padded(4)
    a0, a1, a2 = coeffs[:3]
    scale = pencil_scale(coeffs)
    r = range_basis(a0, rank_tol, scale)
    k = kernel_basis(a0, rank_tol, scale)
    if k.dim == 0:
        return 0
    stacked = np.hstack([r.basis, a1 @ k.basis])
    if rank_revealing(stacked, rank_tol, scale)[3] == n:
        return 1
    outside_r = (np.eye(n) - r.orthogonal_projector()) @ a1 @ k.basis
    k1 = Subspace(k.basis @ kernel_basis(outside_r, rank_tol, scale).basis, n)
    r1 = range_basis(stacked, rank_tol, scale)
    moore_penrose = generalized_inverse(
        a0, orthogonal_complement(r), orthogonal_complement(k), rank_tol, scale
    )
    a2dag = a2 - a1 @ moore_penrose.matrix @ a1
    stacked = np.hstack([r1.basis, a2dag @ k1.basis])
    if rank_revealing(stacked, rank_tol, scale)[3] == n:
        return 2
    return None


class LaurentExpansion:
    """Truncated Laurent expansion N(z) = sum_{j=-m}^{J} N_j (z - z0)^j

    Attributes:
        center: The point z0
        order: The pole order m
        J: Index of the last holomorphic coefficient
        coefficients: Dict mapping j to N_j
        analysis: The PoleAnalysis the expansion was computed from, if any
    """

    def __init__(
        self,
        center: complex,
        order: int,
        coefficients: dict[int, np.ndarray],
        J: int,
        analysis: PoleAnalysis | None = None,
    ):
        self.center = center
        self.order = order
        self.coefficients = coefficients
        self.J = J
        self.analysis = analysis

    @property
    def principal(self) -> list[np.ndarray]:
        return [self.coefficients[j] for j in range(-self.order, 0)]

    @property
    def holomorphic(self) -> list[np.ndarray]:
        return [self.coefficients[j] for j in range(0, self.J + 1)]

    @property
    def dim(self) -> int:
        return self.coefficients[-self.order].shape[0]

    def coefficient(self, j: int) -> np.ndarray:
        if j not in self.coefficients:
            raise OutOfRange(f"N_{j} is outside [-{self.order}, {self.J}]")
        return self.coefficients[j]

    def items(self) -> list[tuple[int, np.ndarray]]:
        return sorted(self.coefficients.items())

    def evaluate(self, z: complex) -> np.ndarray:
        """The truncated series at z"""
        w = z - self.center
        return sum(coefficient * w**j for j, coefficient in self.items())

    def perturbed(self, j: int, delta: np.ndarray) -> LaurentExpansion:
        """A copy with N_j replaced by N_j + delta"""
        coefficients = dict(self.coefficients)
        coefficients[j] = self.coefficient(j) + delta
        return LaurentExpansion(
            self.center, self.order, coefficients, self.J, self.analysis
        )

    def __repr__(self):
        return f"LaurentExpansion(center={self.center}, order={self.order}, J={self.J})"


def g_accumulate(
    expansion: dict[int, np.ndarray], coeffs: np.ndarray, j: int, ell: int, m: int
) -> np.ndarray:
    """G_j(ell, m) = sum_{k=-m}^{j-1} N_k A_{j+ell-k}

    Terms with j + ell - k beyond the stored coefficients vanish and are skipped.

    Args:
        expansion: Coefficients N_k computed so far, for k in [-m, j - 1]
        coeffs: Pencil coefficients A_0, A_1, ...
        j, ell, m: Indices of the sum

    Returns:
        The n x n sum, zero for an empty index range
    """
    n = coeffs.shape[1]
    p = len(coeffs) - 1
    total = np.zeros((n, n), dtype=complex)
    for k in range(max(-m, j + ell - p), j):
        total = total + expansion[k] @ coeffs[j + ell - k]
    return total


def _indicator(j: int, n: int) -> np.ndarray:
    if j == 0:
        return np.eye(n, dtype=complex)
    return np.zeros((n, n), dtype=complex)


def _centered(pencil: TaylorPencil, center: complex) -> TaylorPencil:
    if pencil.center == center:
        return pencil
    return recenter(pencil, center)


def _simple_pole_coefficient(
    analysis: PoleAnalysis, coeffs: np.ndarray, expansion: dict, j: int
) -> np.ndarray:
    n = analysis.dim
    # N_j (I - P_Rc) from N_j A0 = ind_j - G_j(0,1)
    left = (_indicator(j, n) - g_accumulate(expansion, coeffs, j, 0, 1)) @ (
        analysis.A0g.matrix
    )
    # N_j P_Rc from the next coefficient equation restricted to K
    g1 = g_accumulate(expansion, coeffs, j, 1, 1)
    y = _indicator(j + 1, n) - g1 - left @ coeffs[1]
    return left + y @ analysis.s1_inverse


def _second_order_coefficient(
    analysis: PoleAnalysis, coeffs: np.ndarray, expansion: dict, j: int
) -> np.ndarray:
    n = analysis.dim
    g = analysis.A0g.matrix
    g0 = g_accumulate(expansion, coeffs, j, 0, 2)
    g1 = g_accumulate(expansion, coeffs, j, 1, 2)
    g2 = g_accumulate(expansion, coeffs, j, 2, 2)
    # N_j (I - P_Rc)
    part_a = (_indicator(j, n) - g0) @ g
    # N_j (I - P_R1c) P_Rc
    y = _indicator(j + 1, n) - g1 - part_a @ coeffs[1]
    part_b = y @ analysis.s_generalized
    # N_j P_R1c from the coefficient equation two steps ahead restricted to K1
    z = _indicator(j + 2, n) - g2 - (_indicator(j + 1, n) - g1) @ g @ coeffs[1]
    w = z - (part_a + part_b) @ analysis.A2dag
    return part_a + part_b + w @ analysis.sdag_inverse


def _expand(analysis: PoleAnalysis, pencil: TaylorPencil, J: int) -> LaurentExpansion:
    m = analysis.order
    assert m in (1, 2)
    pencil = _centered(pencil, analysis.center)
    coeffs = pencil.trimmed().padded(4)
    step = _simple_pole_coefficient if m == 1 else _second_order_coefficient
    expansion: dict[int, np.ndarray] = {}
    for j in range(-m, J + 1):
        expansion[j] = step(analysis, coeffs, expansion, j)
    return LaurentExpansion(analysis.center, m, expansion, J, analysis)


def laurent_simple(
    analysis: PoleAnalysis, pencil: TaylorPencil, J: int
) -> LaurentExpansion:
    """Laurent coefficients N_-1 .. N_J around a simple pole

    Raises:
        WrongOrder: if analysis.order != 1
    """
    if analysis.order != 1:
        raise WrongOrder(f"Expected a simple pole, got order {analysis.order}")
    return _expand(analysis, pencil, J)


def laurent_second(
    analysis: PoleAnalysis, pencil: TaylorPencil, J: int
) -> LaurentExpansion:
    """Laurent coefficients N_-2 .. N_J around a second order pole

    Raises:
        WrongOrder: if analysis.order != 2
    """
    if analysis.order != 2:
        raise WrongOrder(f"Expected a second order pole, got order {analysis.order}")
    return _expand(analysis, pencil, J)


def laurent_expansion(
    analysis: PoleAnalysis, pencil: TaylorPencil, J: int
) -> LaurentExpansion:
    """Dispatches to laurent_simple or laurent_second

    Raises:
        WrongOrder: for a regular point
    """
    if analysis.order == 1:
        return laurent_simple(analysis, pencil, J)
    if analysis.order == 2:
        return laurent_second(analysis, pencil, J)
    raise WrongOrder(f"No Laurent expansion for pole order {analysis.order}")


def displayed_expansion(
    analysis: PoleAnalysis, pencil: TaylorPencil, J: int
) -> LaurentExpansion:
    """Laurent coefficients from the closed form expressions

    Serves as a cross check of the constructive recursion in laurent_expansion.
    """
    m = analysis.order
    if m not in (1, 2):
        raise WrongOrder(f"No Laurent expansion for pole order {m}")
    pencil = _centered(pencil, analysis.center)
    coeffs = pencil.trimmed().padded(4)
    n = analysis.dim
    identity = np.eye(n, dtype=complex)
    g = analysis.A0g.matrix
    a1 = coeffs[1]
    expansion: dict[int, np.ndarray] = {}
    if m == 1:
        s_inv = analysis.s1_inverse
        expansion[-1] = s_inv
        for j in range(0, J + 1):
            g0 = g_accumulate(expansion, coeffs, j, 0, 1)
            g1 = g_accumulate(expansion, coeffs, j, 1, 1)
            expansion[j] = (_indicator(j, n) - g0) @ g @ (
                identity - a1 @ s_inv
            ) - g1 @ s_inv
    else:
        n2 = analysis.sdag_inverse
        s_g = analysis.s_generalized
        q_left = identity - analysis.A2dag @ n2
        q_right = identity - n2 @ analysis.A2dag
        expansion[-2] = n2
        expansion[-1] = (
            (q_right @ s_g - n2 @ a1 @ g) @ q_left
            - q_right @ g @ a1 @ n2
            - n2 @ analysis.A3dag @ n2
        )
        for j in range(0, J + 1):
            g0 = g_accumulate(expansion, coeffs, j, 0, 2)
            g1 = g_accumulate(expansion, coeffs, j, 1, 2)
            g2 = g_accumulate(expansion, coeffs, j, 2, 2)
            expansion[j] = (
                (g1 @ g @ a1 - g2) @ n2
                + (_indicator(j, n) - g0) @ g @ (identity - a1 @ s_g) @ q_left
                - g1 @ s_g @ q_left
            )
    return LaurentExpansion(analysis.center, m, expansion, J, analysis)


def max_deviation(first: LaurentExpansion, second: LaurentExpansion) -> float:
    """Largest Frobenius distance between coefficients both expansions hold"""
    shared = set(first.coefficients) & set(second.coefficients)
    return max(
        float(np.linalg.norm(first.coefficients[j] - second.coefficients[j]))
        for j in shared
    )


def identity_residual(
    expansion: LaurentExpansion, pencil: TaylorPencil, k: int
) -> float:
    """Residual of the coefficient of (z - z0)^k in N(z) A(z) = A(z) N(z) = I

    Args:
        expansion: The expansion to check
        pencil: The pencil it inverts
        k: Power of (z - z0), in [-m, J - m]

    Returns:
        The larger Frobenius norm of the right and left multiplied residuals

    Raises:
        OutOfRange: if k is outside [-m, J - m]
    """
    m = expansion.order
    if k < -m or k > expansion.J - m:
        raise OutOfRange(f"k = {k} outside [{-m}, {expansion.J - m}]")
    pencil = _centered(pencil, expansion.center)
    coeffs = pencil.padded(m + k + 1)
    n = expansion.dim
    right = -_indicator(k, n)
    left = -_indicator(k, n)
    for j in range(0, m + k + 1):
        right = right + expansion.coefficients[k - j] @ coeffs[j]
        left = left + coeffs[j] @ expansion.coefficients[k - j]
    return float(max(np.linalg.norm(right), np.linalg.norm(left)))

from __future__ import annotations

from enum import Enum

import numpy as np
import scipy.linalg
from scipy.special import comb, perm

from fredholm import settings
from fredholm.exceptions import (
    AssumptionViolated,
    InsufficientHistory,
    MalformedInput,
    NotSingularAtOne,
    TailNotConverged,
)
from fredholm.laurent import (
    ComplementPolicy,
    LaurentExpansion,
    analyze,
    laurent_expansion,
)
from fredholm.linalg import as_matrix
from fredholm.oracle import ContourSpec, cauchy_coefficients, inverse_at_nodes
from fredholm.pencil import TaylorPencil, check_assumption2, recenter
from fredholm.utils import debug, info, warning

"""
I(1) and I(2) autoregressive processes X_t = sum_j Phi_j X_{t-j} + eps_t.

With A(z) = I - sum_j Phi_j z^j and the Laurent expansion of A(z)^-1 at 1,
X_t = tau_0 + tau_1 t + N_-2 sum sum eps - N_-1 sum eps + nu_t, where
nu_t = sum_j Phi_j eps_{t-j} is stationary (Phi_j here are the moving
average coefficients of the holomorphic part of the inverse).

Example usage:
from fredholm import granger

model = granger.ARModel([[[1.0]]])
representation = granger.represent(model)
noise = granger.NoiseSpec([[1.0]], seed=3)
report = granger.cross_validate(model, representation, noise, T=300)
print(report.residual)
"""

LAURENT_DEPTH_CAP = 2048
LAURENT_MAX_INDEX = 128
PSD_TOL = 1e-10
CROSS_VALIDATION_TOL = 1e-6


class MAMethod(Enum):
    AUTO = 0
    LAURENT = 1
    RECURSION = 2


ma_method_mapping = {
    "AUTO": MAMethod.AUTO,
    "LAURENT": MAMethod.LAURENT,
    "RECURSION": MAMethod.RECURSION,
}


class ARModel:
    """Autoregressive law of motion X_t = sum_{j=1}^p Phi_j X_{t-j} + eps_t

    Attributes:
        phi: List of the n x n coefficient matrices Phi_1 .. Phi_p
    """

    def __init__(self, phi):
        if len(phi) == 0:
            raise MalformedInput("An AR model needs at least one coefficient")
        self.phi = [as_matrix(p) for p in phi]
        n = self.phi[0].shape[0]
        for p in self.phi:
            if p.shape != (n, n):
                raise MalformedInput(f"AR coefficient of shape {p.shape} in dimension {n}")

    @property
    def dim(self) -> int:
        return self.phi[0].shape[0]

    @property
    def order(self) -> int:
        return len(self.phi)

    @property
    def is_real(self) -> bool:
        return all(not np.any(p.imag) for p in self.phi)

    def __repr__(self):
        return f"ARModel(dim={self.dim}, order={self.order})"


class NoiseSpec:
    """Gaussian strong white noise

    Attributes:
        covariance: Hermitian positive semidefinite n x n matrix
        seed: Seed of the generator
    """

    def __init__(self, covariance, seed: int = 0):
        covariance = as_matrix(covariance)
        n = covariance.shape[0]
        if covariance.shape != (n, n):
            raise MalformedInput("Covariance must be square")
        scale = max(1.0, float(np.linalg.norm(covariance)))
        if np.linalg.norm(covariance - covariance.conj().T) > PSD_TOL * scale:
            raise MalformedInput("Covariance is not Hermitian")
        if np.min(scipy.linalg.eigvalsh(covariance)) < -PSD_TOL * scale:
            raise MalformedInput("Covariance is not positive semidefinite")
        self.covariance = covariance
        self.seed = seed
        self._factor = self._hermitian_square_root(covariance)

    @staticmethod
    def _hermitian_square_root(covariance: np.ndarray) -> np.ndarray:
        eigenvalues, eigenvectors = scipy.linalg.eigh(covariance)
        roots = np.sqrt(np.clip(eigenvalues, 0, None))
        return (eigenvectors * roots) @ eigenvectors.conj().T

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.any(self.covariance.imag)

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """count innovations as rows, real when the covariance is real"""
        if self.is_real:
            standard = rng.standard_normal((count, self.dim))
            return standard @ self._factor.real.T
        standard = (
            rng.standard_normal((count, self.dim))
            + 1j * rng.standard_normal((count, self.dim))
        ) / np.sqrt(2)
        return standard @ self._factor.T

    def __repr__(self):
        return f"NoiseSpec(dim={self.dim}, seed={self.seed})"


class Representation:
    """Granger-Johansen decomposition of an I(1) or I(2) process

    Attributes:
        d: Order of integration, 1 or 2
        N_minus2: Coefficient of the cumulated random walk, zero when d = 1
        N_minus1: Coefficient of the random walk (enters with a minus sign)
        ma: Moving average coefficients Phi_0 .. Phi_J of the stationary part
        J: Truncation index of ma
        tail_bound: Geometric estimate of the truncated tail
        expansion: The Laurent expansion of A(z)^-1 at 1
        pencil: The AR pencil recentered at 1
    """

    def __init__(
        self,
        d: int,
        N_minus2: np.ndarray,
        N_minus1: np.ndarray,
        expansion: LaurentExpansion,
        pencil: TaylorPencil,
        ma: list[np.ndarray] | None = None,
        tail_bound: float = 0.0,
    ):
        self.d = d
        self.N_minus2 = N_minus2
        self.N_minus1 = N_minus1
        self.expansion = expansion
        self.pencil = pencil
        self.ma = ma if ma is not None else []
        self.tail_bound = tail_bound

    @property
    def J(self) -> int:
        return max(len(self.ma) - 1, 0)

    @property
    def dim(self) -> int:
        return self.N_minus1.shape[0]

    def __repr__(self):
        return f"Representation(d={self.d}, J={self.J}, tail_bound={self.tail_bound:.3e})"


class SamplePath:
    """A simulated trajectory

    Attributes:
        T: Last time index
        values: (T + 1) x n array of X_0 .. X_T
        innovations: (burnin + T) x n array of eps_t for t = 1 - burnin .. T
        initial: p x n pre-sample values, None for representation paths
        burnin: Number of innovations before t = 1
        components: Named additive parts of a representation path
    """

    def __init__(
        self,
        T: int,
        values: np.ndarray,
        innovations: np.ndarray,
        initial: np.ndarray | None = None,
        components: dict[str, np.ndarray] | None = None,
    ):
        self.T = T
        self.values = values
        self.innovations = innovations
        self.initial = initial
        self.components = components if components is not None else {}

    @property
    def burnin(self) -> int:
        return len(self.innovations) - self.T

    def __repr__(self):
        return f"SamplePath(T={self.T}, dim={self.values.shape[1]}, burnin={self.burnin})"


class CrossValidationReport:
    """Agreement of the AR recursion with the representation on shared innovations

    Attributes:
        d: Order of integration
        T: Path length
        residual: Largest residual of the constant (d = 1) or affine (d = 2)
            fit to X_AR - X_rep
        tau0, tau1: Initial value terms from matched initial conditions
        tol: Threshold for passed
        passed: residual <= tol
    """

    def __init__(
        self,
        d: int,
        T: int,
        residual: float,
        tau0: np.ndarray,
        tau1: np.ndarray,
        tol: float = CROSS_VALIDATION_TOL,
    ):
        self.d = d
        self.T = T
        self.residual = residual
        self.tau0 = tau0
        self.tau1 = tau1
        self.tol = tol
        self.passed = residual <= tol

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} residual={self.residual:.3e} (d={self.d}, T={self.T})"


def pencil_from_ar(model: ARModel) -> TaylorPencil:
    """A(z) = I - Phi_1 z - ... - Phi_p z^p around 0"""
    return TaylorPencil([np.eye(model.dim)] + [-p for p in model.phi], center=0)


def classify_integration(
    model: ARModel,
    policy: ComplementPolicy | None = None,
    rank_tol: float | None = None,
    root_tol: float | None = None,
    J: int = 3,
    unit_root_tol: float | None = None,
) -> Representation:
    """Order of integration and random walk coefficients of an AR model

    Args:
        model: The AR model
        policy: Complement policy for the pole analysis
        rank_tol: Relative rank tolerance
        root_tol: Root clustering tolerance
        J: Depth of the Laurent expansion kept with the result
        unit_root_tol: Distance from 1 below which a root is the unit root

    Returns:
        A Representation without moving average coefficients

    Raises:
        AssumptionViolated: if det A(z) has roots in the closed unit disk
            other than 1, or the root at 1 has another multiplicity than
            the pole at 1 implies
        NotSingularAtOne: if A(1) is invertible
        UnsupportedPoleOrder: if the pole at 1 has order three or more
    """
    pencil = pencil_from_ar(model)
    report = check_assumption2(pencil, root_tol, unit_root_tol)
    if not report.passed:
        raise AssumptionViolated(
            "det A(z) has roots in the closed unit disk other than 1: "
            + ", ".join(str(root.value) for root in report.offending),
            [root.value for root in report.offending],
        )
    at_one = recenter(pencil, 1)
    analysis = analyze(at_one, policy, rank_tol)
    if analysis.order == 0:
        raise NotSingularAtOne("A(1) is invertible, the process has no unit root")
    # det A(z) vanishes at 1 to order dim K, plus dim K1 at a second order pole
    expected = analysis.dim_K + (analysis.dim_K1 if analysis.order == 2 else 0)
    if report.unit_root_multiplicity != expected:
        raise AssumptionViolated(
            f"det A(z) has {report.unit_root_multiplicity} roots at 1, "
            + f"the pole at 1 accounts for {expected}",
            report.unit_roots,
        )
    expansion = laurent_expansion(analysis, at_one, J)
    n = model.dim
    n_minus2 = (
        expansion.coefficient(-2)
        if expansion.order == 2
        else np.zeros((n, n), dtype=complex)
    )
    info("classify_integration", f"I({expansion.order})", model)
    return Representation(
        expansion.order, n_minus2, expansion.coefficient(-1), expansion, at_one
    )


def binomial_weight(j: int, k: int) -> int:
    """C(k, j), the weight of N_k in Phi_j"""
    return comb(k, j, exact=True)


def falling_factorial_weight(j: int, k: int) -> int:
    """k (k - 1) ... (k - j + 1)"""
    return perm(k, j, exact=True)


def _principal_taylor(expansion: LaurentExpansion, j: int) -> np.ndarray:
    """Coefficient of z^j of sum_i N_-i (z - 1)^-i around 0"""
    total = np.zeros((expansion.dim, expansion.dim), dtype=complex)
    for i in range(1, expansion.order + 1):
        total = total + expansion.coefficient(-i) * (
            (-1) ** i * comb(j + i - 1, i - 1, exact=True)
        )
    return total


def _ma_from_laurent(
    expansion: LaurentExpansion, pencil: TaylorPencil, J_out: int, tail_tol: float
) -> list[np.ndarray]:
    if expansion.analysis is None:
        raise MalformedInput("The expansion does not carry its PoleAnalysis")
    if J_out > LAURENT_MAX_INDEX:
        # C(k, j) overflows floats long before the sums converge
        raise TailNotConverged(f"Laurent sums are limited to j <= {LAURENT_MAX_INDEX}")
    depth = max(expansion.J, 2 * J_out + 32)
    while True:
        if depth > expansion.J:
            expansion = laurent_expansion(expansion.analysis, pencil, depth)
        norms = [float(np.linalg.norm(n_k)) for n_k in expansion.holomorphic]
        reference = max(1.0, max(norms))
        last_terms = [
            max(
                binomial_weight(j, depth) * norms[depth],
                binomial_weight(j, depth - 1) * norms[depth - 1],
            )
            for j in range(J_out + 1)
        ]
        if max(last_terms) <= tail_tol * reference:
            break
        if depth >= LAURENT_DEPTH_CAP:
            raise TailNotConverged(
                f"Laurent sums did not converge within {LAURENT_DEPTH_CAP} terms"
            )
        depth = min(2 * depth, LAURENT_DEPTH_CAP)
    debug("_ma_from_laurent", "depth", depth)
    ma = []
    for j in range(J_out + 1):
        total = np.zeros((expansion.dim, expansion.dim), dtype=complex)
        for k in range(j, depth + 1):
            total = total + expansion.coefficient(k) * (
                (-1) ** (k - j) * float(binomial_weight(j, k))
            )
        ma.append(total)
    return ma


def _ma_from_recursion(
    expansion: LaurentExpansion, pencil: TaylorPencil, J_out: int
) -> list[np.ndarray]:
    at_zero = recenter(pencil, 0)
    coeffs = at_zero.coeffs
    p = len(coeffs) - 1
    n = at_zero.dim
    a0_inverse = scipy.linalg.inv(coeffs[0])
    taylor: list[np.ndarray] = []
    ma = []
    for j in range(J_out + 1):
        rhs = np.eye(n, dtype=complex) if j == 0 else np.zeros((n, n), dtype=complex)
        for i in range(1, min(j, p) + 1):
            rhs = rhs - coeffs[i] @ taylor[j - i]
        taylor.append(a0_inverse @ rhs)
        ma.append(taylor[j] - _principal_taylor(expansion, j))
    return ma


def ma_coefficients(
    expansion: LaurentExpansion,
    pencil: TaylorPencil,
    J_out: int,
    tail_tol: float | None = None,
    method: MAMethod = MAMethod.AUTO,
) -> list[np.ndarray]:
    """Taylor coefficients Phi_0 .. Phi_J_out at 0 of the holomorphic part of A(z)^-1

    The LAURENT method sums Phi_j = sum_{k >= j} (-1)^(k-j) C(k, j) N_k over
    the holomorphic Laurent coefficients at 1. These sums only converge when
    every other root of det A(z) is farther than 1 from the point 1. The
    RECURSION method subtracts the principal part from the Taylor series of
    A(z)^-1 at 0. AUTO tries LAURENT first.

    Args:
        expansion: Laurent expansion at 1 carrying its PoleAnalysis
        pencil: The pencil of the expansion
        J_out: Index of the last coefficient returned
        tail_tol: Tail threshold of the LAURENT sums
        method: A MAMethod

    Returns:
        List of J_out + 1 matrices

    Raises:
        TailNotConverged: if the LAURENT method is forced and does not converge
    """
    if tail_tol is None:
        tail_tol = settings.ma_tail_tol
    if method == MAMethod.RECURSION:
        return _ma_from_recursion(expansion, pencil, J_out)
    try:
        return _ma_from_laurent(expansion, pencil, J_out, tail_tol)
    except TailNotConverged as e:
        if method == MAMethod.LAURENT:
            raise e
        info("ma_coefficients", "Laurent sums diverge, using the AR recursion")
        return _ma_from_recursion(expansion, pencil, J_out)


def ma_oracle(
    expansion: LaurentExpansion,
    pencil: TaylorPencil,
    js,
    radius: float = 0.9,
    nodes: int | None = None,
) -> dict[int, np.ndarray]:
    """Taylor coefficients at 0 of A(z)^-1 minus its principal part at 1, by contour"""
    spec = ContourSpec(0, radius, nodes)

    def holomorphic_part(zs: np.ndarray) -> np.ndarray:
        values = inverse_at_nodes(pencil, zs)
        for i in range(1, expansion.order + 1):
            values = values - expansion.coefficient(-i)[None, :, :] * (
                (zs - 1) ** (-i)
            ).reshape(-1, 1, 1)
        return values

    return cauchy_coefficients(holomorphic_part, spec, js)


def truncation_index(
    ma: list[np.ndarray], window: int, tail_tol: float
) -> int | None:
    """Last index to keep: the window of coefficients after it is negligible

    Returns:
        J such that the next `window` coefficients are below
        tail_tol * max norm, or None if no such J exists in ma
    """
    norms = [float(np.linalg.norm(phi)) for phi in ma]
    largest = max(norms)
    if largest == 0.0:
        return 0
    threshold = tail_tol * largest
    for j in range(len(norms) - window):
        if all(norm <= threshold for norm in norms[j + 1 : j + 1 + window]):
            return j
    return None


def _tail_bound(ma: list[np.ndarray]) -> float:
    norms = [float(np.linalg.norm(phi)) for phi in ma]
    if len(norms) < 2 or norms[-1] == 0.0:
        return 0.0
    if norms[-2] == 0.0:
        return float("inf")
    ratio = norms[-1] / norms[-2]
    if ratio >= 1:
        return float("inf")
    return norms[-1] * ratio / (1 - ratio)


def represent(
    model: ARModel,
    policy: ComplementPolicy | None = None,
    rank_tol: float | None = None,
    max_ma: int | None = None,
    tail_tol: float | None = None,
    method: MAMethod = MAMethod.AUTO,
) -> Representation:
    """classify_integration followed by the truncated moving average filter

    Coefficients are kept up to the first J after which `order` consecutive
    coefficients fall below tail_tol times the largest one, or up to max_ma.
    """
    if max_ma is None:
        max_ma = settings.ma_cap
    if tail_tol is None:
        tail_tol = settings.ma_tail_tol
    representation = classify_integration(model, policy, rank_tol)
    count = min(64, max_ma)
    while True:
        ma = ma_coefficients(
            representation.expansion, representation.pencil, count - 1, tail_tol, method
        )
        J = truncation_index(ma, model.order, tail_tol)
        if J is not None:
            ma = ma[: J + 1]
            break
        if count >= max_ma:
            warning("represent", "no truncation before", max_ma, "coefficients")
            break
        count = min(2 * count, max_ma)
    representation.ma = ma
    representation.tail_bound = _tail_bound(ma)
    info("represent", representation)
    return representation


def simulate_ar(
    model: ARModel,
    noise: NoiseSpec,
    T: int,
    burnin: int = 100,
    initial=None,
) -> SamplePath:
    """Runs the AR recursion with seeded Gaussian innovations

    Args:
        model: The AR model
        noise: Innovation covariance and seed
        T: Last time index
        burnin: Number of innovations before t = 1
        initial: p x n pre-sample values at times -burnin - p + 1 .. -burnin,
            zero when None

    Returns:
        SamplePath of X_0 .. X_T with the innovations used
    """
    n, p = model.dim, model.order
    if noise.dim != n:
        raise MalformedInput(f"Noise of dimension {noise.dim} for a model of dimension {n}")
    rng = np.random.default_rng(noise.seed)
    count = burnin + T
    innovations = noise.draw(rng, count)
    dtype = float if (model.is_real and noise.is_real) else complex
    phi = [
        np.asarray(coefficient.real if dtype is float else coefficient)
        for coefficient in model.phi
    ]
    history = np.zeros((p + count, n), dtype=dtype)
    if initial is not None:
        initial = np.asarray(initial, dtype=dtype).reshape(p, n)
        history[:p] = initial
    for t in range(count):
        x = innovations[t].copy()
        for i, coefficient in enumerate(phi, start=1):
            x = x + coefficient @ history[p + t - i]
        history[p + t] = x
    values = history[p + burnin - 1 :]
    return SamplePath(T, values, innovations, history[:p].copy())


def apply_filter(coefficients: list[np.ndarray], innovations: np.ndarray, T: int):
    """sum_j C_j eps_{t-j} for t = 0 .. T

    Args:
        coefficients: Filter matrices C_0, C_1, ...
        innovations: Rows eps_t for t = 1 - burnin .. T
        T: Last time index

    Raises:
        InsufficientHistory: if burnin < len(coefficients)
    """
    burnin = len(innovations) - T
    if burnin < len(coefficients):
        raise InsufficientHistory(
            f"{burnin} innovations before t = 1, the filter needs {len(coefficients)}"
        )
    output = np.zeros((T + 1, innovations.shape[1]), dtype=complex)
    for j, coefficient in enumerate(coefficients):
        start = burnin - 1 - j
        output = output + innovations[start : start + T + 1] @ coefficient.T
    return output


def simulate_representation(
    representation: Representation,
    innovations: np.ndarray,
    T: int,
    tau0=None,
    tau1=None,
) -> SamplePath:
    """Builds X_t = tau0 + tau1 t + N_-2 U_t - N_-1 S_t + nu_t for t = 0 .. T

    S_t = sum_{s=1}^t eps_s, U_t = sum_{s=1}^t S_s and nu_t is the truncated
    moving average filter.

    Args:
        representation: Representation with moving average coefficients
        innovations: Rows eps_t for t = 1 - burnin .. T
        T: Last time index
        tau0: Initial value term, zero when None
        tau1: Linear trend term, zero when None

    Raises:
        InsufficientHistory: if burnin <= J
    """
    innovations = np.asarray(innovations)
    n = representation.dim
    burnin = len(innovations) - T
    stationary = apply_filter(representation.ma, innovations, T)
    partial_sums = np.vstack(
        [np.zeros((1, n)), np.cumsum(innovations[burnin : burnin + T], axis=0)]
    )
    cumulated_sums = np.vstack(
        [np.zeros((1, n)), np.cumsum(partial_sums[1:], axis=0)]
    )
    times = np.arange(T + 1).reshape(-1, 1)
    tau0 = np.zeros(n) if tau0 is None else np.asarray(tau0).reshape(n)
    tau1 = np.zeros(n) if tau1 is None else np.asarray(tau1).reshape(n)
    components = {
        "initial": tau0 + times * tau1,
        "random_walk": -partial_sums @ representation.N_minus1.T,
        "cumulated_random_walk": cumulated_sums @ representation.N_minus2.T,
        "stationary": stationary,
    }
    values = sum(components.values())
    return SamplePath(T, values, innovations, None, components)


def difference(values: np.ndarray, d: int) -> np.ndarray:
    """d-th difference along time"""
    return np.diff(values, n=d, axis=0)


def differenced_filter(representation: Representation) -> list[np.ndarray]:
    """Coefficients of (1 - z)^d N(z) with N truncated to its computed part

    The d-th difference of a representation path is this filter applied to
    the innovations.
    """
    d = representation.d
    n = representation.dim
    length = len(representation.ma) + d
    coefficients = [np.zeros((n, n), dtype=complex) for _ in range(length)]
    for i in range(d + 1):
        weight = (-1) ** i * comb(d, i, exact=True)
        for j, phi in enumerate(representation.ma):
            coefficients[i + j] = coefficients[i + j] + weight * phi
    # N_-i (z - 1)^-i (1 - z)^d = (-1)^i N_-i (1 - z)^(d - i)
    principal = {1: representation.N_minus1, 2: representation.N_minus2}
    for i in range(1, d + 1):
        for k in range(d - i + 1):
            weight = (-1) ** i * (-1) ** k * comb(d - i, k, exact=True)
            coefficients[k] = coefficients[k] + weight * principal[i]
    return coefficients


def autocovariance(values: np.ndarray, lag: int) -> np.ndarray:
    """Sample autocovariance matrix at the given lag"""
    centered = values - values.mean(axis=0)
    count = len(values) - lag
    return centered[lag:].T @ centered[:count].conj() / count


def _fit_residual(differences: np.ndarray, d: int) -> float:
    times = np.arange(len(differences))
    columns = [np.ones_like(times, dtype=float)]
    if d == 2:
        columns.append(times.astype(float))
    design = np.stack(columns, axis=1)
    solution, _, _, _ = scipy.linalg.lstsq(design, differences)
    return float(np.max(np.abs(differences - design @ solution)))


def cross_validate(
    model: ARModel,
    representation: Representation,
    noise: NoiseSpec,
    T: int,
    burnin: int | None = None,
    tol: float = CROSS_VALIDATION_TOL,
) -> CrossValidationReport:
    """Simulates the AR recursion and the representation with shared innovations

    tau0 (and tau1 for d = 2) are matched at t = 0 (and t = 1). The residual
    of a constant (d = 1) or affine (d = 2) fit to the difference of both
    paths is reported.
    """
    if burnin is None:
        burnin = max(10 * representation.J, 100, representation.J + 1)
    ar_path = simulate_ar(model, noise, T, burnin)
    bare = simulate_representation(representation, ar_path.innovations, T)
    offset = ar_path.values - bare.values
    tau0 = offset[0]
    tau1 = offset[1] - offset[0] if representation.d == 2 else np.zeros_like(tau0)
    matched = simulate_representation(
        representation, ar_path.innovations, T, tau0, tau1
    )
    residual = _fit_residual(ar_path.values - matched.values, representation.d)
    report = CrossValidationReport(representation.d, T, residual, tau0, tau1, tol)
    info("cross_validate", str(report))
    return report

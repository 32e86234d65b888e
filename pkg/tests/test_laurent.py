import numpy as np
import pytest

from fredholm import laurent, oracle
from fredholm.exceptions import (
    NotNested,
    OutOfRange,
    UnsupportedPoleOrder,
    WrongOrder,
)
from fredholm.laurent import ComplementPolicy
from fredholm.linalg import Subspace, rank_revealing
from fredholm.pencil import TaylorPencil, recenter
from tests import pencils


def diagonal_pencil(*degrees) -> TaylorPencil:
    return TaylorPencil(pencils.diagonal_powers(list(degrees)), center=1)


def expand(pencil, J, policy=None):
    analysis = laurent.analyze(pencil, policy)
    return laurent.laurent_expansion(analysis, pencil, J)


class TestAnalyze:
    def test_simple_scalar(self):
        analysis = laurent.analyze(diagonal_pencil(1))
        assert analysis.order == 1
        assert analysis.dim_K == 1
        assert np.allclose(np.abs(analysis.S1), [[1.0]])

    def test_second_order_scalar(self):
        analysis = laurent.analyze(diagonal_pencil(2))
        assert analysis.order == 2
        assert analysis.dim_K == 1
        assert analysis.dim_K1 == 1
        assert analysis.R.dim == 0
        assert np.allclose(analysis.S1, [[0.0]])
        assert np.allclose(analysis.A2dag, [[1.0]])
        assert np.allclose(np.abs(analysis.Sdag), [[1.0]])

    def test_mixed_diagonal(self):
        analysis = laurent.analyze(diagonal_pencil(2, 1, 0))
        assert analysis.order == 2
        assert analysis.dim_K == 2
        assert analysis.dim_K1 == 1
        assert analysis.defect == 2
        assert np.allclose(analysis.A2dag, np.diag([1.0, 0.0, 0.0]))
        assert analysis.R1c.dim == analysis.K1.dim

    def test_regular_point(self):
        pencil = TaylorPencil([np.eye(2), 0.1 * np.eye(2)], center=1)
        analysis = laurent.analyze(pencil)
        assert analysis.order == 0
        with pytest.raises(WrongOrder):
            laurent.laurent_expansion(analysis, pencil, 2)

    def test_third_order(self):
        with pytest.raises(UnsupportedPoleOrder) as raised:
            laurent.analyze(diagonal_pencil(3, 1))
        assert "order >= 3" in str(raised.value)
        assert raised.value.analysis.dim_K == 2
        assert raised.value.exit_code == 3

    def test_explicit_complement_outside_rc(self):
        rc = Subspace(np.eye(3)[:, :2])
        kc = Subspace(np.eye(3)[:, 2:])
        r1c = Subspace(np.eye(3)[:, 2:])
        policy = ComplementPolicy.explicit(rc, kc, r1c=r1c)
        with pytest.raises(NotNested):
            laurent.analyze(diagonal_pencil(2, 1, 0), policy)

    def test_explicit_complements(self):
        rc = Subspace.span(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
        kc = Subspace.span(np.array([1.0, 1.0, 1.0]))
        policy = ComplementPolicy.explicit(rc, kc)
        pencil = diagonal_pencil(2, 1, 0)
        assert laurent.max_deviation(expand(pencil, 2, policy), expand(pencil, 2)) < 1e-10

    def test_policy_name(self):
        assert ComplementPolicy.orthogonal().name == "orthogonal"
        assert ComplementPolicy.seeded_random(7).name == "seeded_random(7)"
        assert ComplementPolicy.seeded_random(7).child_seeds() == (
            ComplementPolicy.seeded_random(7).child_seeds()
        )


class TestGAccumulate:
    def setup_method(self):
        # 1 - z around 1
        self.coeffs = recenter(TaylorPencil([[[1.0]], [[-1.0]]]), 1).padded(4)
        self.expansion = {-1: np.array([[-1.0]])}

    def test_cases(self):
        test_cases = [
            {"j": 0, "ell": 0, "value": 1.0},
            {"j": 0, "ell": 1, "value": 0.0},
            {"j": -1, "ell": 0, "value": 0.0},
        ]
        for test_case in test_cases:
            value = laurent.g_accumulate(
                self.expansion, self.coeffs, test_case["j"], test_case["ell"], 1
            )
            assert np.allclose(value, [[test_case["value"]]])


class TestLaurentExpansion:
    def test_scalar_simple(self):
        expansion = expand(diagonal_pencil(1), 2)
        assert np.allclose(expansion.coefficient(-1), [[1.0]])
        for j in range(3):
            assert np.allclose(expansion.coefficient(j), [[0.0]])

    def test_scalar_recentered(self):
        pencil = recenter(TaylorPencil([[[1.0]], [[-1.0]]]), 1)
        expansion = expand(pencil, 1)
        assert np.allclose(expansion.coefficient(-1), [[-1.0]])
        assert np.allclose(expansion.coefficient(0), [[0.0]])
        assert np.allclose(expansion.coefficient(1), [[0.0]])

    def test_diagonal_simple(self):
        expansion = expand(diagonal_pencil(1, 0), 1)
        assert np.allclose(expansion.coefficient(-1), np.diag([1.0, 0.0]))
        assert np.allclose(expansion.coefficient(0), np.diag([0.0, 1.0]))
        assert np.allclose(expansion.coefficient(1), np.zeros((2, 2)))

    def test_scalar_second(self):
        expansion = expand(diagonal_pencil(2), 1)
        assert np.allclose(expansion.coefficient(-2), [[1.0]])
        assert np.allclose(expansion.coefficient(-1), [[0.0]])
        assert np.allclose(expansion.coefficient(0), [[0.0]])

    def test_diagonal_second(self):
        expansion = expand(diagonal_pencil(2, 1, 0), 0)
        assert np.allclose(expansion.coefficient(-2), np.diag([1.0, 0.0, 0.0]))
        assert np.allclose(expansion.coefficient(-1), np.diag([0.0, 1.0, 0.0]))
        assert np.allclose(expansion.coefficient(0), np.diag([0.0, 0.0, 1.0]))

    def test_wrong_order(self):
        pencil = diagonal_pencil(2)
        analysis = laurent.analyze(pencil)
        with pytest.raises(WrongOrder):
            laurent.laurent_simple(analysis, pencil, 1)
        with pytest.raises(WrongOrder):
            laurent.laurent_second(laurent.analyze(diagonal_pencil(1)), pencil, 1)

    def test_out_of_range(self):
        expansion = expand(diagonal_pencil(1), 2)
        with pytest.raises(OutOfRange):
            expansion.coefficient(3)
        with pytest.raises(OutOfRange):
            expansion.coefficient(-2)
        with pytest.raises(IndexError):
            laurent.identity_residual(expansion, diagonal_pencil(1), 2)

    def test_evaluate(self):
        pencil, u, v = pencils.constant_factors([1, 0], seed=3)
        expansion = expand(pencil, 8)
        z = 1.0 + 0.01j
        assert np.allclose(expansion.evaluate(z), np.linalg.inv(pencil(z)), atol=1e-10)

    def test_known_inverses(self):
        for degrees in [[2, 1, 0], [1, 0], [2, 0], [1, 1, 0, 0]]:
            for seed in range(3):
                pencil, u, v = pencils.constant_factors(degrees, seed)
                expansion = expand(pencil, 3)
                for j in range(-max(degrees), 4):
                    known = pencils.known_coefficient(degrees, u, v, j)
                    assert np.linalg.norm(expansion.coefficient(j) - known) <= 1e-10


class TestIdentityResidual:
    def test_exact(self):
        expansion = expand(diagonal_pencil(1), 2)
        assert laurent.identity_residual(expansion, diagonal_pencil(1), 0) < 1e-14
        assert laurent.identity_residual(expansion, diagonal_pencil(1), -1) < 1e-14

    def test_perturbed(self):
        pencil = diagonal_pencil(1, 0)
        expansion = expand(pencil, 3)
        delta = np.zeros((2, 2))
        delta[0, 0] = 1.0
        perturbed = expansion.perturbed(-1, delta)
        assert laurent.identity_residual(perturbed, pencil, 0) >= 1.0 - 1e-12

    def test_randomized(self):
        for order, pencil in pencils.instances(50):
            expansion = expand(pencil, 5 + order)
            for k in range(-order, 6):
                assert laurent.identity_residual(expansion, pencil, k) <= 1e-8


class TestPrincipalPart:
    def test_annihilates_a0(self):
        for order, pencil in pencils.instances(20, seed=1):
            expansion = expand(pencil, 1)
            a0 = pencil.coefficient(0)
            leading = expansion.coefficient(-order)
            assert np.linalg.norm(leading @ a0) < 1e-9
            assert np.linalg.norm(a0 @ leading) < 1e-9

    def test_finite_rank(self):
        for order, pencil in pencils.instances(20, seed=2):
            analysis = laurent.analyze(pencil)
            expansion = laurent.laurent_expansion(analysis, pencil, 1)
            if order == 1:
                rank_minus1 = rank_revealing(expansion.coefficient(-1), 1e-8)[3]
                assert rank_minus1 <= analysis.dim_K
            else:
                n_minus2 = expansion.coefficient(-2)
                assert rank_revealing(n_minus2, 1e-8)[3] == analysis.dim_K1
                assert np.linalg.norm(n_minus2 @ analysis.R1.basis) < 1e-9

    def test_jordan_block(self):
        # [[w, 1], [0, w]] has inverse [[1/w, -1/w^2], [0, 1/w]]
        pencil = TaylorPencil([[[0.0, 1.0], [0.0, 0.0]], np.eye(2)], center=1)
        analysis = laurent.analyze(pencil)
        expansion = laurent.laurent_expansion(analysis, pencil, 1)
        assert analysis.order == 2
        assert analysis.dim_K == 1
        assert np.allclose(expansion.coefficient(-2), [[0.0, -1.0], [0.0, 0.0]])
        assert np.allclose(expansion.coefficient(-1), np.eye(2))
        assert rank_revealing(expansion.coefficient(-1), 1e-8)[3] == 2


class TestChoiceInvariance:
    def test_random_policies(self):
        for order, pencil in pencils.instances(10, seed=3):
            reference = expand(pencil, 3)
            for seed in range(20):
                other = expand(pencil, 3, ComplementPolicy.seeded_random(seed))
                assert laurent.max_deviation(reference, other) <= 1e-7

    def test_moore_penrose(self):
        for order, pencil in pencils.instances(20, seed=4):
            analysis = laurent.analyze(pencil)
            a0 = pencil.coefficient(0)
            g = analysis.A0g.matrix
            assert np.linalg.norm((a0 @ g).conj().T - a0 @ g) <= 1e-12
            assert np.linalg.norm((g @ a0).conj().T - g @ a0) <= 1e-12


class TestConditionEquivalence:
    def test_three_way_agreement(self):
        rng = np.random.default_rng(5)
        for i in range(100):
            order = i % 3
            pencil = pencils.random_pencil(pencils.random_degrees(rng, order), 2000 + i)
            spec = oracle.default_contour(pencil)
            assert laurent.analyze(pencil).order == order
            assert laurent.direct_sum_order(pencil) == order
            assert oracle.detect_order(pencil, spec) == order

    def test_third_order_is_flagged(self):
        rng = np.random.default_rng(6)
        for i in range(10):
            pencil = pencils.random_pencil(pencils.random_degrees(rng, 3), 3000 + i)
            with pytest.raises(UnsupportedPoleOrder):
                laurent.analyze(pencil)
            assert laurent.direct_sum_order(pencil) is None
            spec = oracle.ContourSpec(pencil.center, 0.5)
            assert oracle.detect_order(pencil, spec) >= 3


class TestDisplayedExpansion:
    def test_diagonal(self):
        for degrees in [[1], [1, 0], [2], [2, 1, 0]]:
            pencil = diagonal_pencil(*degrees)
            analysis = laurent.analyze(pencil)
            constructive = laurent.laurent_expansion(analysis, pencil, 3)
            displayed = laurent.displayed_expansion(analysis, pencil, 3)
            assert laurent.max_deviation(constructive, displayed) < 1e-12

    def test_randomized(self):
        for order, pencil in pencils.instances(10, seed=7):
            analysis = laurent.analyze(pencil)
            constructive = laurent.laurent_expansion(analysis, pencil, 3)
            displayed = laurent.displayed_expansion(analysis, pencil, 3)
            assert laurent.max_deviation(constructive, displayed) <= 1e-8

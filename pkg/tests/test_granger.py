import numpy as np
import pytest

from fredholm import granger
from fredholm.exceptions import (
    AssumptionViolated,
    InsufficientHistory,
    MalformedInput,
    NotSingularAtOne,
    TailNotConverged,
)
from fredholm.granger import ARModel, MAMethod, NoiseSpec


def scalar_model(*phi) -> ARModel:
    return ARModel([[[p]] for p in phi])


RANDOM_WALK = scalar_model(1.0)
DOUBLE_UNIT_ROOT = scalar_model(2.0, -1.0)
# (1 - z)(1 - 0.5 z)
NEAR_ROOT = scalar_model(1.5, -0.5)
# (1 - z)(1 + 0.25 z)
FAR_ROOT = scalar_model(0.75, 0.25)
MIXED = ARModel([np.diag([1.0, 0.5])])


class TestModels:
    def test_pencil_from_ar(self):
        test_cases = [
            {"model": RANDOM_WALK, "coefficients": [1.0, -1.0]},
            {"model": DOUBLE_UNIT_ROOT, "coefficients": [1.0, -2.0, 1.0]},
        ]
        for test_case in test_cases:
            pencil = granger.pencil_from_ar(test_case["model"])
            assert pencil.center == 0
            assert np.allclose(pencil.coeffs[:, 0, 0], test_case["coefficients"])
        pencil = granger.pencil_from_ar(MIXED)
        assert np.allclose(pencil.coeffs[1], -np.diag([1.0, 0.5]))

    def test_malformed(self):
        with pytest.raises(MalformedInput):
            ARModel([])
        with pytest.raises(MalformedInput):
            ARModel([np.eye(2), np.eye(3)])

    def test_noise_spec(self):
        with pytest.raises(MalformedInput):
            NoiseSpec([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(MalformedInput):
            NoiseSpec([[-1.0]])
        noise = NoiseSpec([[4.0, 0.0], [0.0, 1.0]], seed=3)
        draws = noise.draw(np.random.default_rng(noise.seed), 20000)
        assert np.allclose(np.cov(draws.T), noise.covariance, atol=0.2)


class TestClassifyIntegration:
    def test_random_walk(self):
        representation = granger.classify_integration(RANDOM_WALK)
        assert representation.d == 1
        assert np.allclose(representation.N_minus1, [[-1.0]])
        assert np.allclose(representation.N_minus2, [[0.0]])

    def test_double_unit_root(self):
        representation = granger.classify_integration(DOUBLE_UNIT_ROOT)
        assert representation.d == 2
        assert np.allclose(representation.N_minus2, [[1.0]])
        assert np.allclose(representation.N_minus1, [[0.0]])

    def test_not_singular_at_one(self):
        with pytest.raises(NotSingularAtOne):
            granger.classify_integration(scalar_model(0.5))

    def test_assumption_violated(self):
        with pytest.raises(AssumptionViolated) as raised:
            granger.classify_integration(scalar_model(1.5))
        assert raised.value.exit_code == 4
        assert abs(raised.value.roots[0] - 2.0 / 3.0) < 1e-12

    def test_root_near_one(self):
        r = 1.0 - 5e-6
        with pytest.raises(AssumptionViolated) as raised:
            granger.classify_integration(scalar_model(1.0 + 1.0 / r, -1.0 / r))
        assert raised.value.exit_code == 4
        assert len(raised.value.roots) == 1
        assert abs(raised.value.roots[0] - r) < 1e-9

    def test_unit_root_multiplicity(self):
        # a loose unit root tolerance merges both roots, the simple pole at 1 does not
        r = 1.0 - 5e-6
        with pytest.raises(AssumptionViolated) as raised:
            granger.classify_integration(
                scalar_model(1.0 + 1.0 / r, -1.0 / r), unit_root_tol=1e-5
            )
        assert "2 roots at 1" in str(raised.value)
        assert len(raised.value.roots) == 2

    def test_mixed(self):
        representation = granger.classify_integration(MIXED)
        assert representation.d == 1
        assert np.allclose(representation.N_minus1, np.diag([-1.0, 0.0]))


class TestMACoefficients:
    def test_random_walk(self):
        representation = granger.classify_integration(RANDOM_WALK)
        for method in [MAMethod.AUTO, MAMethod.RECURSION, MAMethod.LAURENT]:
            ma = granger.ma_coefficients(
                representation.expansion, representation.pencil, 5, method=method
            )
            assert all(np.allclose(phi, 0.0) for phi in ma)

    def test_near_root(self):
        representation = granger.classify_integration(NEAR_ROOT)
        assert np.allclose(representation.N_minus1, [[-2.0]])
        ma = granger.ma_coefficients(representation.expansion, representation.pencil, 30)
        oracle = granger.ma_oracle(representation.expansion, representation.pencil, range(21))
        for j in range(21):
            assert abs(ma[j][0, 0] + 0.5**j) < 1e-10
            assert np.linalg.norm(ma[j] - oracle[j]) <= 1e-8
        for j in range(10, 30):
            ratio = np.linalg.norm(ma[j + 1]) / np.linalg.norm(ma[j])
            assert abs(ratio - 0.5) < 1e-3

    def test_laurent_sums_diverge(self):
        representation = granger.classify_integration(NEAR_ROOT)
        with pytest.raises(TailNotConverged):
            granger.ma_coefficients(
                representation.expansion,
                representation.pencil,
                10,
                method=MAMethod.LAURENT,
            )

    def test_far_root(self):
        representation = granger.classify_integration(FAR_ROOT)
        expansion, pencil = representation.expansion, representation.pencil
        by_laurent = granger.ma_coefficients(expansion, pencil, 20, method=MAMethod.LAURENT)
        by_recursion = granger.ma_coefficients(
            expansion, pencil, 20, method=MAMethod.RECURSION
        )
        oracle = granger.ma_oracle(expansion, pencil, range(21))
        for j in range(21):
            assert abs(by_laurent[j][0, 0] - 0.2 * (-0.25) ** j) < 1e-10
            assert np.linalg.norm(by_laurent[j] - by_recursion[j]) < 1e-10
            assert np.linalg.norm(by_laurent[j] - oracle[j]) <= 1e-8

    def test_unit_weights_at_zero(self):
        representation = granger.classify_integration(FAR_ROOT)
        expansion = granger.laurent_expansion(
            representation.expansion.analysis, representation.pencil, 60
        )
        alternating = sum((-1) ** k * expansion.coefficient(k) for k in range(61))
        assert abs(alternating[0, 0] - 0.2) < 1e-12

    def test_falling_factorial_weights_disagree(self):
        representation = granger.classify_integration(FAR_ROOT)
        expansion = granger.laurent_expansion(
            representation.expansion.analysis, representation.pencil, 80
        )
        oracle = granger.ma_oracle(expansion, representation.pencil, [2])
        falling = sum(
            (-1) ** (k - 2)
            * granger.falling_factorial_weight(2, k)
            * expansion.coefficient(k)
            for k in range(2, 81)
        )
        binomial = sum(
            (-1) ** (k - 2) * granger.binomial_weight(2, k) * expansion.coefficient(k)
            for k in range(2, 81)
        )
        assert abs(binomial[0, 0] - oracle[2][0, 0]) < 1e-8
        assert abs(falling[0, 0] - 2 * oracle[2][0, 0]) < 1e-8
        assert abs(falling[0, 0] - oracle[2][0, 0]) > 1e-3


class TestRepresent:
    def test_mixed(self):
        representation = granger.represent(MIXED)
        assert representation.d == 1
        # the first dropped coefficient is below 1e-12
        assert 0.5 * np.linalg.norm(representation.ma[-1]) <= 1e-12
        assert representation.tail_bound < 1e-11
        for j, phi in enumerate(representation.ma[:10]):
            assert np.allclose(phi, np.diag([0.0, 0.5**j]))

    def test_random_walk(self):
        representation = granger.represent(RANDOM_WALK)
        assert representation.J == 0
        assert representation.tail_bound == 0.0

    def test_truncation_index(self):
        ma = [np.array([[0.5**j]]) for j in range(60)]
        assert granger.truncation_index(ma, 1, 1e-3) == 9
        assert granger.truncation_index(ma[:5], 1, 1e-12) is None


class TestSimulateAR:
    def test_zero_noise(self):
        path = granger.simulate_ar(MIXED, NoiseSpec(np.zeros((2, 2))), 50)
        assert np.array_equal(path.values, np.zeros((51, 2)))

    def test_random_walk_increments(self):
        path = granger.simulate_ar(RANDOM_WALK, NoiseSpec([[1.0]], seed=5), 100, burnin=20)
        assert path.burnin == 20
        increments = np.diff(path.values, axis=0)
        assert np.allclose(increments, path.innovations[20:], atol=1e-12)

    def test_deterministic(self):
        first = granger.simulate_ar(MIXED, NoiseSpec(np.eye(2), seed=8), 40)
        second = granger.simulate_ar(MIXED, NoiseSpec(np.eye(2), seed=8), 40)
        assert np.array_equal(first.values, second.values)

    def test_dimension_mismatch(self):
        with pytest.raises(MalformedInput):
            granger.simulate_ar(MIXED, NoiseSpec([[1.0]]), 10)


class TestSimulateRepresentation:
    def test_constant_path(self):
        representation = granger.represent(RANDOM_WALK)
        innovations = np.zeros((15, 1))
        path = granger.simulate_representation(representation, innovations, 10, tau0=[3.0])
        assert np.allclose(path.values, 3.0)

    def test_affine_path(self):
        representation = granger.represent(DOUBLE_UNIT_ROOT)
        innovations = np.zeros((15, 1))
        path = granger.simulate_representation(
            representation, innovations, 10, tau0=[1.0], tau1=[2.0]
        )
        assert np.allclose(path.values[:, 0], 1.0 + 2.0 * np.arange(11))

    def test_random_walk(self):
        representation = granger.represent(RANDOM_WALK)
        innovations = np.random.default_rng(1).standard_normal((30, 1))
        path = granger.simulate_representation(representation, innovations, 20, tau0=[0.5])
        expected = 0.5 + np.concatenate([[0.0], np.cumsum(innovations[10:, 0])])
        assert np.allclose(path.values[:, 0], expected)
        assert sorted(path.components) == [
            "cumulated_random_walk",
            "initial",
            "random_walk",
            "stationary",
        ]

    def test_insufficient_history(self):
        representation = granger.represent(MIXED)
        innovations = np.zeros((12, 2))
        with pytest.raises(InsufficientHistory):
            granger.simulate_representation(representation, innovations, 10)


class TestCrossValidate:
    def test_cases(self):
        test_cases = [
            {"model": RANDOM_WALK, "T": 200, "tol": 1e-8},
            {"model": DOUBLE_UNIT_ROOT, "T": 300, "tol": 1e-6},
            {"model": MIXED, "T": 300, "tol": 1e-6},
            {"model": RANDOM_WALK, "T": 300, "tol": 1e-6},
        ]
        for test_case in test_cases:
            model = test_case["model"]
            representation = granger.represent(model)
            noise = NoiseSpec(np.eye(model.dim), seed=4)
            report = granger.cross_validate(model, representation, noise, test_case["T"])
            assert report.residual <= test_case["tol"]
            assert report.passed
            assert str(report).startswith("PASS")

    def test_double_unit_root_trend(self):
        representation = granger.represent(DOUBLE_UNIT_ROOT)
        report = granger.cross_validate(
            DOUBLE_UNIT_ROOT, representation, NoiseSpec([[1.0]], seed=2), 100
        )
        assert report.d == 2
        assert report.tau1.shape == (1,)


class TestDifferencing:
    def test_filter_output(self):
        for model in [MIXED, DOUBLE_UNIT_ROOT]:
            representation = granger.represent(model)
            T = 100
            burnin = representation.J + 10
            innovations = np.random.default_rng(6).standard_normal((burnin + T, model.dim))
            path = granger.simulate_representation(representation, innovations, T)
            d = representation.d
            differenced = granger.difference(path.values, d)
            filtered = granger.apply_filter(
                granger.differenced_filter(representation), innovations, T
            )
            assert np.max(np.abs(differenced - filtered[d:])) <= 1e-6

    def test_stationary_autocovariance(self):
        representation = granger.represent(MIXED)
        T = 400
        burnin = representation.J + 10
        innovations = np.random.default_rng(7).standard_normal((burnin + T, 2))
        path = granger.simulate_representation(representation, innovations, T)
        stationary = path.components["stationary"].real
        first = granger.autocovariance(stationary[1:201], 1)
        second = granger.autocovariance(stationary[201:401], 1)
        assert abs(first[1, 1] - second[1, 1]) < 1.0
        assert np.allclose(first[0, 0], 0.0)

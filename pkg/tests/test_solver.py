import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_solve, random_instance, risk
from weakl.constraints import PenaltyBlock, assemble_block_penalty, orthogonal_complement_projector
from weakl.data_model import Dataset, Scaling
from weakl.errors import DataError, NumericalError, SingularSystemError
from weakl.feature_maps import FeatureMapSpec, resolve_specs, stack_design
from weakl.solver import FittedModel, WeaklProblem, empirical_risk, fit_weakl, predict, solve_gram


def line_problem(lam=None):
    M = None if lam is None else np.sqrt(lam) * np.eye(1)
    return WeaklProblem(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]), M)


class TestClosedForm:
    def test_interpolation(self):
        np.testing.assert_allclose(fit_weakl(line_problem()).theta, [1.0])

    def test_ridge(self):
        np.testing.assert_allclose(fit_weakl(line_problem(1.0)).theta, [0.5])

    def test_zero_targets(self):
        p = WeaklProblem(np.random.default_rng(0).normal(size=(5, 2)), np.zeros(5), np.eye(2))
        np.testing.assert_array_equal(fit_weakl(p).theta, 0.0)

    def test_real_path_stays_real(self):
        assert not np.iscomplexobj(fit_weakl(line_problem(1.0)).theta)

    def test_real_path_matches_complex(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        real = fit_weakl(WeaklProblem(X, y, 0.1 * np.eye(3))).theta
        cplx = fit_weakl(WeaklProblem(X.astype(complex), y, 0.1 * np.eye(3))).theta
        np.testing.assert_allclose(cplx, real, atol=1e-12)

    def test_diagnostics(self):
        info = fit_weakl(line_problem(1.0)).meta["diagnostics"]
        assert info["rel_residual"] <= 1e-8 and info["cond"] >= 1 and info["jitter"] == 0


class TestOracle:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 100_000))
    def test_matches_dense_lstsq(self, seed):
        p = random_instance(np.random.default_rng(seed))
        theta = fit_weakl(p).theta
        ref = dense_solve(p.features, p.targets, p.penalty, p.weights)
        np.testing.assert_allclose(theta, ref, rtol=1e-8, atol=1e-8 * max(1.0, np.linalg.norm(ref)))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 100_000))
    def test_risk_matches_independent_formula(self, seed):
        rng = np.random.default_rng(seed)
        p = random_instance(rng)
        theta = rng.normal(size=p.dim) + 1j * rng.normal(size=p.dim)
        assert empirical_risk(theta, p) == pytest.approx(
            risk(theta, p.features, p.targets, p.penalty, p.weights), rel=1e-10)

    def test_permutation_invariance(self):
        p = random_instance(np.random.default_rng(7))
        perm = np.random.default_rng(8).permutation(p.n)
        q = WeaklProblem(p.features[perm], p.targets[perm], p.penalty, p.weights)
        np.testing.assert_allclose(fit_weakl(q).theta, fit_weakl(p).theta, atol=1e-10)

    def test_gradient_vanishes(self):
        rng = np.random.default_rng(11)
        p = random_instance(rng)
        theta = fit_weakl(p).theta.astype(complex)
        G, rhs = p.normal_equations()
        h = 1e-6
        for i in range(p.dim):
            for step in (h, 1j * h):
                e = np.zeros(p.dim, dtype=complex)
                e[i] = step
                g = (empirical_risk(theta + e, p) - empirical_risk(theta - e, p)) / (2 * h)
                assert abs(g) < 1e-6 * (1 + np.linalg.norm(rhs))

    def test_penalty_bounds_smallest_eigenvalue(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            p = random_instance(rng)
            G, _ = p.normal_equations()
            MM = p.n * p.penalty.conj().T @ p.penalty
            assert np.linalg.eigvalsh(G)[0] >= np.linalg.eigvalsh(MM)[0] * (1 - 1e-10)


class TestSingular:
    def test_duplicate_columns_without_penalty(self):
        X = np.ones((4, 2))
        M = assemble_block_penalty([PenaltyBlock("ridge", 0.0, dim=2)])
        with pytest.raises(SingularSystemError) as info:
            fit_weakl(WeaklProblem(X, np.arange(4.0), M))
        assert info.value.zero_blocks == (0,)
        assert "lambda=0" in str(info.value)

    def test_zero_weights_zero_penalty(self):
        with pytest.raises(SingularSystemError):
            fit_weakl(WeaklProblem(np.ones((3, 1)), np.ones(3), None, np.zeros(1)))

    def test_non_finite_input(self):
        with pytest.raises(NumericalError):
            WeaklProblem(np.array([[np.nan]]), np.array([1.0]))

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            WeaklProblem(np.ones((3, 2)), np.ones(4))
        with pytest.raises(DataError):
            WeaklProblem(np.ones((3, 2)), np.ones(3), np.eye(3))

    def test_psd_weights_accepted(self):
        Phi = np.zeros((5, 2, 2))
        Phi[:, 0, 0] = 1.0
        Phi[:, 1, 1] = np.arange(5.0)
        p = WeaklProblem(Phi, np.ones((5, 2)), 0.1 * np.eye(2), np.array([1.0, 0.0]))
        theta = fit_weakl(p).theta
        assert np.all(np.isfinite(theta))
        assert theta[1] == 0.0

    def test_empty_system(self):
        theta, info = solve_gram(np.zeros((0, 0)), np.zeros(0))
        assert theta.size == 0


class TestPredict:
    def test_linear_value(self):
        ds = Dataset(np.arange(3.0), {"x": [-1.0, 0.0, 1.0]}, np.zeros(3), {"x": "numeric"})
        sc = Scaling.fit(ds)
        model = FittedModel(np.array([1.0]), [[FeatureMapSpec("linear", "x")]], sc)
        out = predict(model, Dataset(np.zeros(1), {"x": [2.0 / np.pi - 0.0]}, np.zeros(1),
                                     {"x": "numeric"}))
        # x = 2/pi rescales to 2 on the torus coordinate (range [-1, 1] -> [-pi, pi])
        np.testing.assert_allclose(out, [[2.0]])

    def test_fourier_imaginary_part_negligible(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-5, 5, 60)
        ds = Dataset(np.arange(60.0), {"x": x}, np.sin(x) + 0.1 * rng.normal(size=60), {"x": "numeric"})
        sc = Scaling.fit(ds)
        specs = resolve_specs([FeatureMapSpec("fourier", "x", m=5)], sc)
        M = assemble_block_penalty([PenaltyBlock.for_map(specs[0], 1e-4)])
        fitted = fit_weakl(WeaklProblem(stack_design(specs, ds, sc), ds.y, M), [specs], sc)
        _, imag = predict(fitted, ds, return_imag=True)
        assert imag < 1e-8

    def test_empty_input(self):
        ds = Dataset(np.arange(3.0), {"x": [0.0, 1.0, 2.0]}, np.zeros(3), {"x": "numeric"})
        sc = Scaling.fit(ds)
        model = FittedModel(np.array([1.0]), [[FeatureMapSpec("linear", "x")]], sc)
        assert predict(model, ds.rows(0, 0)).shape == (0, 1)

    def test_schema_mismatch(self):
        model = FittedModel(np.array([1.0, 2.0]), [[FeatureMapSpec("linear", "x")]])
        with pytest.raises(DataError):
            predict(model, {"x": [1.0]})


class TestConstrainedEstimator:
    """Adding a penalty sqrt(lam) C with C theta* = 0 never hurts the
    in-sample-plus-M-norm error."""

    def _errors(self, rng, lam):
        n, dim = int(rng.integers(5, 30)), int(rng.integers(2, 6))
        X = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
        P = rng.normal(size=(dim, int(rng.integers(1, dim))))
        C = orthogonal_complement_projector(P)
        theta_star = P @ rng.normal(size=P.shape[1])
        y = X @ theta_star + rng.normal(size=n)
        M = np.diag(rng.uniform(0.1, 1.0, dim))
        free = fit_weakl(WeaklProblem(X, y, M)).theta
        cons = fit_weakl(WeaklProblem(X, y, np.vstack([np.sqrt(lam) * C, M]))).theta

        def err(th):
            d = theta_star - th
            return np.mean(np.abs(X @ d) ** 2) + np.linalg.norm(M @ d) ** 2

        return err(cons), err(free), C, cons

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 100_000), st.sampled_from([0.1, 1.0, 10.0]))
    def test_inequality(self, seed, lam):
        e_c, e_f, _, _ = self._errors(np.random.default_rng(seed), lam)
        assert e_c <= e_f * (1 + 1e-12)

    def test_large_weight_enforces_constraint(self):
        e_c, e_f, C, cons = self._errors(np.random.default_rng(3), 1e8)
        assert e_c <= e_f * (1 + 1e-9)
        assert np.linalg.norm(C @ cons) < 1e-4 * np.linalg.norm(cons)

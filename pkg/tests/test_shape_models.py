import numpy as np
import pytest

from oracles import dense_solve
from weakl.constraints import ConstraintSpec, orthogonal_complement_projector
from weakl.data_model import Dataset, Scaling, SplitSpec, split
from weakl.errors import ConfigError, DataError
from weakl.feature_maps import FeatureMapSpec, eval_map
from weakl.shape_models import (
    AdditiveModel,
    CombinationModel,
    FunctionEffects,
    fit_additive,
    fit_combination,
    fit_online,
    rolling_refit,
)
from weakl.solver import FittedModel, WeaklProblem, fit_weakl
from weakl.synthetic import make_additive_data


def torus_dataset(x, y, extra=None, kinds=None):
    """Feature ``x`` padded so that its rescaling is the identity on [-pi, pi]."""
    x = np.concatenate([[-np.pi, np.pi], x])
    y = np.concatenate([[0.0, 0.0], y]) if y is not None else np.zeros(x.size)
    feats = {"x": x}
    all_kinds = {"x": "numeric"}
    if extra:
        feats.update(extra)
        all_kinds.update(kinds)
    return Dataset(np.arange(x.size, dtype=float), feats, y, all_kinds)


SPECS = [FeatureMapSpec("fourier", "temp", m=5), FeatureMapSpec("linear", "load_lag"),
         FeatureMapSpec("categorical", "day")]


class TestAdditive:
    def test_single_linear_matches_solver_bitwise(self):
        rng = np.random.default_rng(0)
        ds = Dataset(np.arange(30.0), {"x": rng.normal(size=30)}, rng.normal(size=30), {"x": "numeric"})
        model = fit_additive(ds, [FeatureMapSpec("linear", "x")], 0.3)
        sc = Scaling.fit(ds)
        X = sc.transform("x", ds.features["x"])[:, None]
        direct = fit_weakl(WeaklProblem(X, ds.y, np.sqrt(0.3) * np.eye(1))).theta
        assert np.array_equal(model.theta, direct)

    def test_zero_target(self):
        ds = make_additive_data(80)
        zero = Dataset(ds.timestamps, ds.features, np.zeros(ds.n), ds.kinds)
        model = fit_additive(zero, SPECS, 1e-3)
        np.testing.assert_allclose(model.effect_values(zero), 0.0, atol=1e-14)

    def test_recovers_generating_coefficients(self):
        rng = np.random.default_rng(1)
        spec = FeatureMapSpec("fourier", "x", m=1)
        c1 = 0.4 - 0.7j
        c = np.array([np.conj(c1), 1.3, c1])
        x = rng.uniform(-np.pi, np.pi, 50)
        y = (np.conj(eval_map(spec, x)) @ c).real
        ds = torus_dataset(x, y)
        y_full = (np.conj(eval_map(spec, ds.features["x"])) @ c).real
        ds = Dataset(ds.timestamps, ds.features, y_full, ds.kinds)
        model = fit_additive(ds, [spec], 1e-10)
        np.testing.assert_allclose(model.theta, c, atol=1e-6)

    def test_effect_curve_linear(self):
        ds = torus_dataset(np.array([0.0]), np.array([0.0]))
        sc = Scaling.fit(ds)
        spec = FeatureMapSpec("linear", "x")
        model = AdditiveModel([spec], np.array([1.0]), FittedModel(np.array([2.0]), [[spec]], sc))
        np.testing.assert_allclose(model.effect_curve(0, [0.0, 1.0]), [0.0, 2.0])

    def test_effect_curve_categories(self):
        ds = make_additive_data(120)
        model = fit_additive(ds, SPECS, 1e-4)
        days = [f"d{k}" for k in range(7)]
        vals, imag = model.effect_curve(2, days, return_imag=True)
        assert vals.shape == (7,) and np.all(np.isfinite(vals))
        assert imag < 1e-8

    def test_effect_curve_bad_index(self):
        model = fit_additive(make_additive_data(60), SPECS, 1e-3)
        with pytest.raises(IndexError):
            model.effect_curve(3, [0.0])

    def test_additivity(self):
        ds = make_additive_data(150)
        model = fit_additive(ds, SPECS, [1e-4, 1e-6, 1e-5])
        total = sum(model.effect_curve(l, ds.features[s.columns[0]]) for l, s in enumerate(model.specs))
        np.testing.assert_allclose(total, model.predict(ds), atol=1e-10)
        np.testing.assert_allclose(model.effect_values(ds).sum(axis=1), model.predict(ds), atol=1e-10)

    def test_recovers_synthetic_effects(self):
        train, _, test = split(make_additive_data(600, noise=0.05),
                               SplitSpec((0, 450), (450, 450), (450, 600)))
        model = fit_additive(train, SPECS, [1e-4, 1e-6, 1e-6])
        resid = model.predict(test) - test.y
        assert np.sqrt(np.mean(resid ** 2)) < 0.1

    def test_frequency_override(self):
        model = fit_additive(make_additive_data(100), SPECS, 1e-3, m=[2])
        assert model.specs[0].m == 2 and model.block(0).size == 5

    def test_rejects_multi_target(self):
        ds = Dataset(np.arange(3.0), {"x": [0.0, 1.0, 2.0]}, np.zeros((3, 2)), {"x": "numeric"})
        with pytest.raises(DataError):
            fit_additive(ds, [FeatureMapSpec("linear", "x")], 1.0)

    def test_lambda_length_checked(self):
        with pytest.raises(ConfigError):
            fit_additive(make_additive_data(50), SPECS, [1.0, 2.0])

    def test_inexact_constraint_pulls_toward_subspace(self):
        ds = make_additive_data(200)
        specs = [FeatureMapSpec("linear", "temp"), FeatureMapSpec("linear", "load_lag")]
        free = fit_additive(ds, specs, 1e-6)
        P = np.array([[1.0], [1.0]])
        tied = fit_additive(ds, specs, 1e-6, constraint=ConstraintSpec(P=P, weight=1e6))
        C = orthogonal_complement_projector(P)
        assert np.linalg.norm(C @ tied.theta) < 1e-3 * np.linalg.norm(C @ free.theta)

    def test_sobolev_rate_qualitative(self):
        rng = np.random.default_rng(5)

        def target(x):
            return np.sin(x) + 0.5 * np.cos(2 * x)

        x_val = rng.uniform(-np.pi, np.pi, 2000)
        mses = []
        for n in (64, 1024):
            x = rng.uniform(-np.pi, np.pi, n)
            ds = torus_dataset(x, target(x) + 0.5 * rng.normal(size=n))
            ds = Dataset(ds.timestamps, ds.features, np.concatenate([[target(-np.pi), target(np.pi)],
                                                                     ds.y[2:]]), ds.kinds)
            model = fit_additive(ds, [FeatureMapSpec("fourier", "x", m=10)], n ** (-4 / 5))
            val = torus_dataset(x_val, target(x_val))
            mses.append(np.mean((model.predict(val) - val.y) ** 2))
        assert mses[1] < mses[0]


def online_setup(seed=0):
    ds = make_additive_data(300, seed=seed)
    base = fit_additive(ds.rows(0, 150), SPECS, [1e-4, 1e-6, 1e-6])
    return ds, base


class TestOnline:
    def test_zero_residual_gives_zero_theta(self):
        ds, base = online_setup()
        exact = Dataset(ds.timestamps, ds.features, base.predict(ds), ds.kinds)
        model = fit_online(exact, base, 1e-2, m=2)
        np.testing.assert_allclose(model.theta, 0, atol=1e-12)
        np.testing.assert_allclose(model.predict(exact), base.predict(exact), atol=1e-12)

    def test_constant_corrections_recover_scale(self):
        ds, base = online_setup()
        g = base.effect_values(ds)
        c = 0.7
        # residual W = c * g_1: the only correction that explains it is h_1 = c
        y = g.sum(axis=1) + c * g[:, 0]
        data = Dataset(ds.timestamps, ds.features, y, ds.kinds)
        model = fit_online(data, base, 1e-12, m=0)
        h = model.corrections(ds.timestamps[:3])
        np.testing.assert_allclose(h[:, 1], c, atol=1e-6)
        np.testing.assert_allclose(h[:, 0], 0, atol=1e-6)
        np.testing.assert_allclose(h[:, 2:], 0, atol=1e-6)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(2)
        n = 30
        t = np.sort(rng.uniform(0, 10, n))
        g1 = rng.normal(size=n)
        effects = FunctionEffects([lambda d, g1=g1: g1])
        data = Dataset(t, {}, rng.normal(size=n), {})
        lam = np.array([0.3, 0.05])
        model = fit_online(data, effects, lam, m=[1, 0], s=2)
        tt = model.time_scaler(t)
        k = np.array([-1, 0, 1])
        phi = np.hstack([np.exp(0.5j * np.outer(tt, k)), g1[:, None]])
        M = np.diag(np.sqrt(np.concatenate([lam[0] * (1 + k ** 4.0), [lam[1]]])))
        ref = dense_solve(np.conj(phi), data.y - g1, M)
        np.testing.assert_allclose(model.theta, ref, atol=1e-8)
        assert model.theta.size == 4

    def test_without_intercept_correction(self):
        ds, base = online_setup()
        model = fit_online(ds, base, 1e-2, m=1, include_h0=False)
        assert model.theta.size == 3 * 3
        assert model.corrections([0.0]).shape == (1, 3)

    def test_non_finite_base_rejected(self):
        ds = make_additive_data(20)
        bad = FunctionEffects([lambda d: np.full(d.n, np.nan)])
        with pytest.raises(Exception, match="non-finite"):
            fit_online(ds, bad, 1.0)


class TestRolling:
    def fit(self, rows):
        return fit_additive(rows, SPECS, [1e-4, 1e-6, 1e-6])

    def test_empty_horizon(self):
        ds = make_additive_data(100)
        assert rolling_refit(ds, self.fit, 100).size == 0

    def test_single_refit_equals_fixed_model(self):
        ds = make_additive_data(200)
        fixed = self.fit(ds.rows(0, 150))
        stream = rolling_refit(ds, self.fit, 150, stride=50)
        np.testing.assert_allclose(stream, fixed.predict(ds.rows(150, 200)), atol=1e-10)

    def test_window_too_long(self):
        with pytest.raises(ConfigError):
            rolling_refit(make_additive_data(100), self.fit, 50, window=60)

    def test_worker_invariance(self):
        ds = make_additive_data(160)
        a = rolling_refit(ds, self.fit, 120, window=100, stride=8, workers=1)
        b = rolling_refit(ds, self.fit, 120, window=100, stride=8, workers=4)
        np.testing.assert_array_equal(a, b)

    def test_adapts_after_break(self):
        ds = make_additive_data(500, seed=3, break_at=250)
        base = fit_additive(ds.rows(0, 250), SPECS, [1e-4, 1e-6, 1e-6])
        stream = rolling_refit(ds, lambda rows: fit_online(rows, base, 1e-3, m=0), 250,
                               window=60, stride=5)
        post = ds.y[250:]
        assert np.mean(np.abs(stream - post)) < np.mean(np.abs(base.predict(ds.rows(250, 500)) - post))


class TestCombination:
    def test_single_perfect_expert(self):
        y = np.random.default_rng(0).normal(size=40)
        model = fit_combination(y[:, None], y, lam=1.0, m=2)
        np.testing.assert_allclose(model.weights(np.arange(40.0)), 1.0, atol=1e-12)

    def test_perfect_and_null_expert(self):
        y = np.random.default_rng(1).normal(size=60)
        E = np.column_stack([y, np.zeros(60)])
        model = fit_combination(E, y, lam=1e-12, m=0)
        w = model.weights(np.arange(60.0))
        np.testing.assert_allclose(w[:, 0], 1.0, atol=1e-6)
        np.testing.assert_allclose(model.predict(E, np.arange(60.0)), y, atol=1e-6)

    def test_identical_experts_share_weights(self):
        rng = np.random.default_rng(2)
        e = rng.normal(size=50)
        model = fit_combination(np.column_stack([e, e]), e + 0.3 * rng.normal(size=50), lam=0.1, m=1)
        np.testing.assert_allclose(model.theta[:3], model.theta[3:], atol=1e-10)

    def test_zero_theta_averages(self):
        rng = np.random.default_rng(3)
        E = rng.normal(size=(10, 3))
        model = fit_combination(E, rng.normal(size=10), lam=1.0, m=1)
        model = CombinationModel(3, 1, 2, model.lambdas, model.time_scaler, np.zeros(9, complex))
        np.testing.assert_allclose(model.predict(E, np.arange(10.0)), E.mean(axis=1), atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            fit_combination(np.ones((5, 2)), np.ones(4))

    def test_no_experts(self):
        with pytest.raises(DataError):
            fit_combination(np.ones((5, 0)), np.ones(5))

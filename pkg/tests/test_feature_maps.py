import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weakl.data_model import Dataset, Scaling
from weakl.errors import ConfigError, DataError
from weakl.feature_maps import (
    FeatureMapSpec,
    build_feature_matrix,
    eval_map,
    feature_tensor,
    frequency_grid,
    resolve_specs,
    stack_design,
)

FOURIER1 = FeatureMapSpec("fourier", "x", m=1)
LINEAR = FeatureMapSpec("linear", "x")


class TestEvalMap:
    def test_fourier_at_zero(self):
        np.testing.assert_allclose(eval_map(FOURIER1, 0.0), [1, 1, 1])

    def test_fourier_at_pi(self):
        np.testing.assert_allclose(eval_map(FOURIER1, np.pi), [-1j, 1, 1j], atol=1e-15)

    def test_linear(self):
        np.testing.assert_allclose(eval_map(LINEAR, 0.7), [0.7])

    def test_categorical_dimension(self):
        for card, dim in [(1, 1), (2, 3), (3, 3), (7, 7), (48, 49)]:
            assert FeatureMapSpec("categorical", "c", cardinality=card).dim == dim

    def test_multivariate_dimension_and_order(self):
        spec = FeatureMapSpec("fourier", ("a", "b"), m=2)
        assert spec.dim == 25
        k = spec.frequencies()
        np.testing.assert_array_equal(k[:3], [[-2, -2], [-2, -1], [-2, 0]])
        np.testing.assert_array_equal(k[-1], [2, 2])
        np.testing.assert_array_equal(frequency_grid(2, 2), k)

    def test_multivariate_value(self):
        spec = FeatureMapSpec("fourier", ("a", "b"), m=1)
        x = np.array([0.3, -1.1])
        expected = [np.exp(0.5j * (k1 * x[0] + k2 * x[1])) for k1 in (-1, 0, 1) for k2 in (-1, 0, 1)]
        np.testing.assert_allclose(eval_map(spec, x), expected)

    def test_batch_shape(self):
        out = eval_map(FeatureMapSpec("fourier", "x", m=3), np.linspace(-3, 3, 11))
        assert out.shape == (11, 7)

    @given(st.floats(-np.pi, np.pi), st.integers(0, 6))
    def test_conjugate_symmetry(self, x, m):
        phi = eval_map(FeatureMapSpec("fourier", "x", m=m), x)
        np.testing.assert_allclose(phi, np.conj(phi[::-1]), atol=1e-14)
        rng = np.random.default_rng(m)
        half = rng.normal(size=m) + 1j * rng.normal(size=m)
        theta = np.concatenate([np.conj(half[::-1]), [rng.normal()], half])
        assert abs(np.vdot(phi, theta).imag) < 1e-10

    def test_bad_specs(self):
        with pytest.raises(ConfigError):
            FeatureMapSpec("spline", "x")
        with pytest.raises(ConfigError):
            FeatureMapSpec("fourier", "x", m=-1)
        with pytest.raises(ConfigError):
            FeatureMapSpec("fourier", "x", s=0)
        with pytest.raises(ConfigError):
            FeatureMapSpec("linear", ("a", "b"))

    def test_spec_roundtrip(self):
        for spec in (FOURIER1, LINEAR, FeatureMapSpec("categorical", "c", cardinality=4)):
            assert FeatureMapSpec.from_dict(spec.to_dict()) == spec


class TestFeatureMatrix:
    def test_two_linear_targets(self):
        F = build_feature_matrix([[FeatureMapSpec("linear", "a")], [FeatureMapSpec("linear", "b")]],
                                 {"a": 2.0, "b": -3.0})
        np.testing.assert_array_equal(F, [[2.0, 0.0], [0.0, -3.0]])

    def test_single_fourier_row_is_conjugate(self):
        F = build_feature_matrix([FOURIER1], {"x": 0.4})
        assert F.shape == (1, 3)
        np.testing.assert_allclose(F[0], np.conj(eval_map(FOURIER1, 0.4)))

    def test_zero_off_blocks(self):
        F = build_feature_matrix([[FOURIER1], [FeatureMapSpec("linear", "z")]], {"x": 1.0, "z": 5.0})
        assert F.shape == (2, 4)
        assert F[0, 3] == 0
        np.testing.assert_array_equal(F[1, :3], 0)
        assert F[1, 3] == 5.0

    def test_missing_column(self):
        with pytest.raises(DataError):
            build_feature_matrix([FOURIER1], {"y": 1.0})

    def test_tensor_matches_rows(self):
        rng = np.random.default_rng(1)
        cols = {"x": rng.uniform(-3, 3, 5), "z": rng.uniform(-3, 3, 5)}
        specs = [[FOURIER1], [FeatureMapSpec("linear", "z")]]
        T = feature_tensor(specs, cols)
        for j in range(5):
            np.testing.assert_allclose(T[j], build_feature_matrix(specs, {k: v[j] for k, v in cols.items()}))


class TestStackDesign:
    def test_linear_stack(self):
        np.testing.assert_array_equal(stack_design([LINEAR], {"x": [1.0, -1.0]}), [[1.0], [-1.0]])

    def test_m_zero_is_ones(self):
        D = stack_design([FeatureMapSpec("fourier", "x", m=0)], {"x": [0.1, 2.0, -3.0]})
        np.testing.assert_allclose(D, np.ones((3, 1)))

    def test_gram_identity(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-np.pi, np.pi, 40)
        specs = [FeatureMapSpec("fourier", "x", m=4)]
        D = stack_design(specs, {"x": x})
        outer = sum(np.outer(eval_map(specs[0], v), np.conj(eval_map(specs[0], v))) for v in x)
        np.testing.assert_allclose(D.conj().T @ D, outer, atol=1e-12)

    def test_multi_target_rejected(self):
        with pytest.raises(DataError):
            stack_design([[LINEAR], [LINEAR]], {"x": [1.0]})

    def test_real_fast_path(self):
        D = stack_design([LINEAR, FeatureMapSpec("linear", "z")], {"x": [1.0], "z": [2.0]})
        assert not np.iscomplexobj(D)

    def test_dataset_input_uses_scaling(self):
        ds = Dataset(np.arange(3.0), {"x": [0.0, 5.0, 10.0], "c": ["a", "b", "a"]}, np.zeros(3),
                     {"x": "numeric", "c": "categorical"})
        sc = Scaling.fit(ds)
        specs = resolve_specs([LINEAR, FeatureMapSpec("categorical", "c")], sc)
        assert specs[1].cardinality == 2 and specs[1].dim == 3
        D = stack_design(specs, ds, sc)
        np.testing.assert_allclose(D[:, 0], [-np.pi, 0, np.pi])
        np.testing.assert_allclose(D[0, 1:], np.conj(eval_map(specs[1], -np.pi)))

    def test_unknown_category_at_predict(self):
        ds = Dataset(np.arange(2.0), {"c": ["a", "b"]}, np.zeros(2), {"c": "categorical"})
        sc = Scaling.fit(ds)
        specs = resolve_specs([FeatureMapSpec("categorical", "c")], sc)
        new = Dataset(np.arange(1.0), {"c": ["q"]}, np.zeros(1), {"c": "categorical"})
        with pytest.raises(DataError, match="unknown category"):
            stack_design(specs, new, sc)

import math

import numpy as np
import pytest

from speedkaf.features import (
    FeatureKind,
    FeatureMapSpec,
    GQMap,
    LinearMap,
    RFF1Map,
    RFF2Map,
    TaylorMap,
    feature_map,
    multi_indices,
)
from speedkaf.kernels import KernelConfig, kernel_eval

TAYLOR_REMAINDER = 0.00994849512571190203  # e - sum_{j<=4} 1/j!


def dots(fmap, X, Y):
    return np.sum(fmap.transform(X) * fmap.transform(Y), axis=1)


def unit_ball(rng, n, d):
    v = rng.normal(size=(n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(0, 1, size=(n, 1)) ** (1 / d)


@pytest.fixture(scope="module")
def pairs():
    rng = np.random.default_rng(123)
    X = rng.uniform(-0.6, 0.6, size=(20, 7))
    Y = X + rng.normal(scale=0.4, size=(20, 7))
    k = np.array([kernel_eval(KernelConfig(), x, y) for x, y in zip(X, Y)])
    return X, Y, k


class TestFeatureMapSpec:
    def test_rff1_even(self):
        with pytest.raises(ValueError):
            FeatureMapSpec(FeatureKind.RFF1, 7, 3)

    def test_taylor_dimension(self):
        FeatureMapSpec("taylor", 330, 7, degree=4)
        with pytest.raises(ValueError):
            FeatureMapSpec("taylor", 331, 7, degree=4)

    def test_builds_each_kind(self):
        X = np.zeros((1, 7))
        for kind, D in [("rff1", 10), ("rff2", 10), ("taylor", 330), ("gq", 10)]:
            spec = FeatureMapSpec(kind, D, 7, degree=4 if kind == "taylor" else 8)
            assert feature_map(spec).transform(X).shape == (1, D)

    def test_speed_needs_data(self):
        with pytest.raises(ValueError):
            feature_map(FeatureMapSpec("speed", 10, 7))


class TestRFF1:
    def test_odd_dimension(self):
        with pytest.raises(ValueError):
            RFF1Map(5, 2)

    def test_origin(self):
        z = RFF1Map(8, 3, seed=0).transform(np.zeros((1, 3)))[0]
        np.testing.assert_allclose(z, np.sqrt(2 / 8) * np.array([1, 0] * 4), atol=1e-16)

    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        Z = RFF1Map(64, 5, seed=1).transform(rng.normal(size=(30, 5)))
        np.testing.assert_allclose(np.sum(Z * Z, axis=1), 1.0, rtol=1e-14)

    def test_deterministic(self):
        X = np.random.default_rng(0).normal(size=(4, 3))
        np.testing.assert_array_equal(RFF1Map(20, 3, seed=9).transform(X), RFF1Map(20, 3, seed=9).transform(X))

    def test_frequency_scale(self):
        m = RFF1Map(20000, 2, KernelConfig(0.5), seed=0)
        assert np.std(m.frequencies) == pytest.approx(2.0, rel=0.02)

    def test_unbiased(self, pairs):
        X, Y, k = pairs
        est = np.mean([dots(RFF1Map(4000, 7, seed=s), X, Y) for s in range(50)], axis=0)
        assert np.abs(est - k).max() < 0.02


class TestRFF2:
    def test_single_zero_feature(self):
        m = RFF2Map(1, 2, seed=0)
        m.frequencies[:] = 0.0
        m.phases[:] = 0.0
        np.testing.assert_allclose(m.transform(np.ones((1, 2))), [[np.sqrt(2)]])

    def test_unbiased(self, pairs):
        X, Y, k = pairs
        est = np.mean([dots(RFF2Map(4000, 7, seed=s), X, Y) for s in range(50)], axis=0)
        assert np.abs(est - k).max() < 0.02

    def test_higher_variance_than_rff1(self, pairs):
        X, Y, _ = pairs
        v1 = np.var([dots(RFF1Map(200, 7, seed=s), X, Y) for s in range(200)], axis=0)
        v2 = np.var([dots(RFF2Map(200, 7, seed=s), X, Y) for s in range(200)], axis=0)
        assert np.mean(v2) > np.mean(v1)

    @pytest.mark.parametrize("cls", [RFF1Map, RFF2Map])
    def test_concentration(self, cls, pairs):
        X, Y, _ = pairs
        spread = [np.mean(np.std([dots(cls(D, 7, seed=s), X, Y) for s in range(60)], axis=0))
                  for D in (100, 400, 1600)]
        ratios = np.array(spread[:-1]) / np.array(spread[1:])
        assert np.all((ratios > 1.5) & (ratios < 2.7))


class TestTaylor:
    def test_dimension(self):
        assert TaylorMap(4, 7).dim == math.comb(11, 4) == 330
        assert multi_indices(7, 4).shape == (330, 7)

    def test_origin(self):
        z = TaylorMap(4, 7).transform(np.zeros((1, 7)))[0]
        assert z @ z == 1.0

    def test_truncated_series_identity(self):
        rng = np.random.default_rng(4)
        sigma = 1.3
        m = TaylorMap(4, 7, KernelConfig(sigma))
        X, Y = rng.uniform(-1, 1, size=(50, 7)), rng.uniform(-1, 1, size=(50, 7))
        s2 = sigma**2
        series = sum((np.sum(X * Y, axis=1) / s2) ** j / math.factorial(j) for j in range(5))
        direct = np.exp(-np.sum(X * X, 1) / (2 * s2)) * np.exp(-np.sum(Y * Y, 1) / (2 * s2)) * series
        np.testing.assert_allclose(dots(m, X, Y), direct, atol=1e-12)

    def test_remainder_bound(self):
        rng = np.random.default_rng(5)
        X, Y = unit_ball(rng, 1000, 7), unit_ball(rng, 1000, 7)
        k = np.exp(-np.sum((X - Y) ** 2, axis=1) / 2)
        assert np.abs(dots(TaylorMap(4, 7), X, Y) - k).max() <= TAYLOR_REMAINDER

    def test_degree_zero(self):
        m = TaylorMap(0, 3)
        assert m.dim == 1


class TestGQ:
    def test_origin_sines_vanish(self):
        z = GQMap(330, 7).transform(np.zeros((1, 7)))[0]
        np.testing.assert_array_equal(z[1::2], 0.0)
        assert z @ z == pytest.approx(1.0, rel=1e-14)

    def test_deterministic(self):
        a, b = GQMap(330, 7), GQMap(330, 7)
        np.testing.assert_array_equal(a.nodes, b.nodes)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_too_many_features(self):
        # 2 nodes per axis in 2-D: 4 grid nodes, 2 mirror pairs
        with pytest.raises(ValueError):
            GQMap(6, 2, degree=2)
        GQMap(4, 2, degree=2)

    def test_odd_dimension(self):
        with pytest.raises(ValueError):
            GQMap(5, 2)

    def test_systematic_resampling_one_dimension(self):
        """Five Hermite nodes in 1-D merge into pairs {+-2.857, +-1.356, 0} with
        weights 0.0225, 0.4444, 0.5333; the three picks at cumulative
        levels 1/6, 1/2, 5/6 are +-1.356 once and the origin twice."""
        from numpy.polynomial.hermite_e import hermegauss

        nodes, _ = hermegauss(5)
        m = GQMap(6, 1, degree=8)
        np.testing.assert_allclose(m.nodes[:, 0], [nodes[1], 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(m.weights, 1 / 3)

    def test_bandwidth_scales_nodes(self):
        np.testing.assert_allclose(GQMap(20, 3, KernelConfig(2.0)).nodes, GQMap(20, 3).nodes / 2.0)

    def test_beats_rff2_on_mg_pairs(self, mg_points):
        rng = np.random.default_rng(7)
        i, j = rng.integers(0, len(mg_points), (2, 1000))
        X, Y = mg_points[i], mg_points[j]
        k = np.exp(-np.sum((X - Y) ** 2, axis=1) / 2)
        gq = np.mean(np.abs(dots(GQMap(330, 7), X, Y) - k))
        rff = np.mean(np.abs(dots(RFF2Map(330, 7, seed=0), X, Y) - k))
        assert gq < rff


class TestLinear:
    def test_identity(self):
        X = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(LinearMap(3).transform(X), X)

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            LinearMap(3).transform(np.zeros((2, 4)))

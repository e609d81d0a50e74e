import numpy as np
import pytest

from speedkaf.errors import NumericalError
from speedkaf.timeseries import (
    MackeyGlassConfig,
    add_noise,
    embed_series,
    generate_mg,
    make_dataset,
    mg_rhs,
    read_series_csv,
    standardize,
    write_series_csv,
)


class TestMackeyGlassConfig:
    def test_defaults(self):
        cfg = MackeyGlassConfig()
        assert (cfg.beta, cfg.gamma, cfg.tau, cfg.exponent) == (0.2, 0.1, 30.0, 10.0)
        assert cfg.sample_period == 6.0 and cfg.y0 == 0.9
        assert cfg.substeps == 60 and cfg.lag == 300

    @pytest.mark.parametrize("kwargs", [
        dict(internal_step=0.0), dict(internal_step=0.35), dict(internal_step=0.7),
        dict(length=0), dict(interpolation="cubic"),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            MackeyGlassConfig(**kwargs)


class TestGenerate:
    def test_equilibrium(self):
        series = generate_mg(MackeyGlassConfig(y0=1.0, length=200))
        np.testing.assert_allclose(series, 1.0, atol=1e-14)

    def test_initial_derivative(self):
        cfg = MackeyGlassConfig()
        assert mg_rhs(cfg, 0.9, 0.9) == pytest.approx(0.0434639856678168603579, rel=1e-14)

    def test_first_sample_is_initial_condition(self):
        assert generate_mg(MackeyGlassConfig(length=3))[0] == 0.9

    def test_step_halving(self):
        coarse = generate_mg(MackeyGlassConfig(length=100))
        fine = generate_mg(MackeyGlassConfig(length=100, internal_step=0.05))
        assert np.abs(coarse - fine).max() < 1e-6

    def test_linear_interpolation_available(self):
        lin = generate_mg(MackeyGlassConfig(length=50, interpolation="linear"))
        her = generate_mg(MackeyGlassConfig(length=50))
        assert np.abs(lin - her).max() < 1e-3

    def test_bounded_and_not_constant(self, mg_series):
        assert np.all(np.isfinite(mg_series))
        assert np.all((mg_series > 0) & (mg_series < 2))
        assert np.std(mg_series[500:]) > 0.1

    def test_non_finite_state(self):
        with pytest.raises(NumericalError):
            generate_mg(MackeyGlassConfig(beta=1e308, gamma=-1e308, length=5, exponent=1.0))


class TestNoise:
    def test_zero_sigma(self, mg_series):
        np.testing.assert_array_equal(add_noise(mg_series, 0.0, 1), mg_series)

    def test_statistics(self):
        clean = np.zeros(100_000)
        noisy = add_noise(clean, 0.02, seed=7)
        assert np.std(noisy - clean) == pytest.approx(0.02, rel=0.02)

    def test_seeds(self, mg_series):
        a, b = add_noise(mg_series, 0.02, 1), add_noise(mg_series, 0.02, 2)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, add_noise(mg_series, 0.02, 1))

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            add_noise([1.0], -0.1, 0)


class TestStandardize:
    def test_hand_example(self):
        z, params = standardize([1.0, 2.0, 3.0])
        np.testing.assert_allclose(z, [-1.0, 0.0, 1.0], atol=1e-15)
        assert params.mean == 2.0
        assert params.std == pytest.approx(np.sqrt(2 / 3), rel=1e-15)

    def test_idempotent(self, mg_series):
        z, _ = standardize(mg_series)
        z2, _ = standardize(z)
        # population-std rescaling already has unit max; mean shift is tiny but not zero
        z_again, _ = standardize(z2)
        np.testing.assert_allclose(z_again, z2, atol=1e-12)

    def test_unit_max(self, mg_series):
        z, _ = standardize(mg_series)
        assert np.max(np.abs(z)) == 1.0

    def test_invert(self, mg_series):
        z, params = standardize(mg_series)
        np.testing.assert_allclose(params.invert(z), mg_series, atol=1e-13)
        np.testing.assert_allclose(params.apply(mg_series), z, atol=1e-15)

    def test_constant(self):
        with pytest.raises(ValueError):
            standardize([2.0, 2.0, 2.0])


class TestEmbedding:
    def test_scalar_embedding(self):
        X, y = embed_series([1.0, 2.0, 3.0], 1)
        np.testing.assert_array_equal(X, [[1.0], [2.0]])
        np.testing.assert_array_equal(y, [2.0, 3.0])

    def test_alignment(self, mg_series):
        X, y = embed_series(mg_series[:100], 7)
        for i in range(len(y)):
            np.testing.assert_array_equal(X[i], mg_series[i : i + 7])
            assert y[i] == mg_series[i + 7]

    def test_too_short(self):
        with pytest.raises(ValueError):
            embed_series([1.0, 2.0], 2)


class TestMakeDataset:
    def test_default_sizes(self, mg_series):
        ds = make_dataset(mg_series, seed=0)
        assert ds.train_inputs.shape == (2000, 7)
        assert ds.test_inputs.shape == (200, 7)
        assert ds.test_start == ds.start + 2200

    def test_split_positions(self, mg_series):
        ds = make_dataset(mg_series, d=7, start=10)
        np.testing.assert_array_equal(ds.train_inputs[0], mg_series[10:17])
        assert ds.train_targets[-1] == mg_series[10 + 1999 + 7]
        np.testing.assert_array_equal(ds.test_inputs[0], mg_series[2210:2217])

    def test_random_start_deterministic(self, mg_series):
        a, b = make_dataset(mg_series, seed=5), make_dataset(mg_series, seed=5)
        assert a.start == b.start
        assert 0 <= a.start <= len(mg_series) - 2407

    def test_too_short(self):
        with pytest.raises(ValueError):
            make_dataset(np.arange(100.0))

    def test_bad_start(self, mg_series):
        with pytest.raises(ValueError):
            make_dataset(mg_series, start=len(mg_series))


class TestCsv:
    def test_round_trip(self, tmp_path, mg_series):
        path = tmp_path / "mg.csv"
        write_series_csv(path, mg_series[:50])
        np.testing.assert_array_equal(read_series_csv(path), mg_series[:50])
        raw = path.read_bytes()
        assert raw.startswith(b"value\n") and b"\r" not in raw

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x\n1\n")
        with pytest.raises(ValueError):
            read_series_csv(path)

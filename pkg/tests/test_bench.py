import numpy as np
import pytest

from speedkaf.bench import (
    ConfigError,
    ExperimentConfig,
    MethodSpec,
    SubspaceTrace,
    continual_names,
    eval_steps,
    format_float,
    method_slug,
    moving_average,
    novelty_dictionary,
    parse_config_text,
    run_continual_experiment,
    run_prediction_experiment,
    run_reconstruction_experiment,
    run_subspace_experiment,
    trial_dataset,
    write_curves,
)
from speedkaf.kernels import KernelConfig
from speedkaf.spectral import fit_eigenmap, subspace_distance
from speedkaf.ispeed import sparsify


class TestMethodSpec:
    @pytest.mark.parametrize("name, fields", [
        ("speed(50/2000)-lms", ("speed", "lms", 50, 2000)),
        ("sspeed(20/100)-rls", ("sspeed", "rls", 20, 100)),
        ("rff2(330)-lms", ("rff2", "lms", 330, None)),
        ("gq(330)-exrls", ("gq", "exrls", 330, None)),
        ("ts(4)-lms", ("ts", "lms", 4, None)),
        ("linear-rls", ("linear", "rls", None, None)),
        ("KLMS", (None, "klms", None, None)),
    ])
    def test_parse(self, name, fields):
        spec = MethodSpec.parse(name)
        assert (spec.features, spec.filter, spec.dimension, spec.batch) == fields

    @pytest.mark.parametrize("name", [
        "speed(50)-lms", "rff2(10/20)-lms", "linear(3)-lms", "gq-lms", "speed(5/10)-nlms", "svm",
    ])
    def test_invalid(self, name):
        with pytest.raises(ConfigError):
            MethodSpec.parse(name)

    def test_with_values(self):
        spec = MethodSpec.parse("speed(50/2000)-lms").with_values(dimension=5)
        assert spec.name == "speed(5/2000)-lms"
        assert MethodSpec.parse("rff2(10)-lms").with_values(dimension=5).dimension == 10


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.trials == 100 and cfg.learning_rate == 0.1
        assert cfg.distance_threshold == 0.06 and cfg.seed_count == 100
        assert cfg.eval_every == 10

    def test_parse_text(self):
        cfg = parse_config_text(
            "# comment\nexperiment = prediction\nmethods = klms, linear-lms\n"
            "trials = 3  # inline\nseed_sparse = false\nnoise = 0.01\n"
        )
        assert cfg.methods == ("klms", "linear-lms")
        assert cfg.trials == 3 and cfg.seed_sparse is False and cfg.noise == 0.01

    def test_overrides_win(self):
        cfg = parse_config_text("trials = 3", trials=5, seed=None)
        assert cfg.trials == 5 and cfg.seed == 0

    @pytest.mark.parametrize("text", [
        "trials = 0", "colour = red", "trials = many", "no equals sign",
        "experiment = forecast", "methods = speed(50/3000)-lms", "transfer_mode = copy",
        "seed_sparse = maybe", "bandwidth = -1",
    ])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_digest_tracks_content(self):
        a = ExperimentConfig()
        assert a.digest() == ExperimentConfig().digest()
        assert a.digest() != a.replace(seed=1).digest()


class TestData:
    def test_eval_steps(self):
        np.testing.assert_array_equal(eval_steps(25, 10), [0, 10, 20, 25])
        assert len(eval_steps(2000, 10)) == 201

    def test_trial_dataset_deterministic(self):
        cfg = ExperimentConfig(trials=2)
        a, b, c = trial_dataset(cfg, 0), trial_dataset(cfg, 0), trial_dataset(cfg, 1)
        np.testing.assert_array_equal(a.train_inputs, b.train_inputs)
        assert not np.array_equal(a.train_inputs, c.train_inputs)
        assert a.train_inputs.shape == (2000, 7) and a.test_inputs.shape == (200, 7)


def _small(**kw):
    base = dict(trials=1, train_len=10, seed_count=10, eval_every=1)
    base.update(kw)
    return ExperimentConfig(**base)


class TestPrediction:
    def test_full_rank_speed_matches_klms(self):
        cfg = _small(methods=("speed(10/10)-lms", "klms"))
        curves = run_prediction_experiment(cfg)
        np.testing.assert_allclose(
            curves["speed(10/10)-lms"].mean_mse, curves["klms"].mean_mse, atol=1e-6, rtol=0
        )

    def test_zero_learning_rate_is_flat(self):
        cfg = _small(methods=("speed(10/10)-lms", "klms", "rff2(20)-lms"), learning_rate=0.0)
        ds = trial_dataset(cfg, 0)
        variance = np.mean(ds.test_targets**2)
        for curve in run_prediction_experiment(cfg).values():
            np.testing.assert_allclose(curve.mean_mse, variance, rtol=1e-14)

    def test_curve_shapes_and_summary(self):
        cfg = _small(methods=("linear-lms", "qklms"), trials=3, train_len=30, eval_every=10)
        curves = run_prediction_experiment(cfg)
        for curve in curves.values():
            assert curve.trial_mse.shape == (3, 4)
            assert curve.mean_mse.shape == (4,)
            assert curve.finals.shape == (3,)
            assert curve.final_se == pytest.approx(np.std(curve.finals, ddof=1) / np.sqrt(3))
            assert curve.config_digest == cfg.digest()
        assert curves["qklms"].extras["centers"].shape == (3,)

    def test_runs_every_filter(self):
        cfg = _small(methods=("ts(2)-rls", "gq(10)-exrls", "rff1(10)-lms", "sspeed(5/10)-rls"),
                     train_len=20, seed_count=20)
        for curve in run_prediction_experiment(cfg).values():
            assert np.all(np.isfinite(curve.mean_mse))


class TestReconstruction:
    def test_full_rank_and_monotone(self):
        cfg = ExperimentConfig(experiment="reconstruction", trials=2, recon_n=60)
        table = run_reconstruction_experiment(cfg)
        assert table.m[0] == 1
        assert table.m[-1] == 60
        assert table.plain_mean[-1] < 1e-8 * table.plain_mean[0]
        assert np.all(np.diff(table.plain, axis=1) <= 1e-12)
        explicit = run_reconstruction_experiment(cfg, ms=[5, 50])
        assert explicit.frobenius_mean[1] < explicit.frobenius_mean[0]

    def test_m_equals_n(self):
        cfg = ExperimentConfig(experiment="reconstruction", trials=1, recon_n=30)
        table = run_reconstruction_experiment(cfg)
        assert table.m[-1] == 30
        assert table.frobenius_mean[-1] < 1e-8

    def test_sparse_limits_m(self):
        cfg = ExperimentConfig(experiment="reconstruction", trials=2, recon_n=200, sparse=True)
        table = run_reconstruction_experiment(cfg)
        assert table.m[-1] <= table.dictionary_sizes.min()

    def test_bad_m(self):
        cfg = ExperimentConfig(experiment="reconstruction", trials=1, recon_n=20)
        with pytest.raises(ConfigError):
            run_reconstruction_experiment(cfg, ms=[0])


class TestSubspace:
    def test_zero_updates(self):
        # the threshold is never met, so only the initial distance is recorded
        cfg = ExperimentConfig(experiment="subspace", trials=1, train_len=150, m=5,
                               distance_threshold=np.inf, seed_sparse=False,
                               subspace_reference="full")
        trace = run_subspace_experiment(cfg)
        assert len(trace.distances[0]) == 1
        ds = trial_dataset(cfg, 0)
        expected = subspace_distance(fit_eigenmap(cfg.kernel, ds.train_inputs[:100], 5),
                                     fit_eigenmap(cfg.kernel, ds.train_inputs, 5))
        assert trace.distances[0][0] == pytest.approx(expected, abs=1e-6)

    def test_converges_to_sparse_reference(self):
        cfg = ExperimentConfig(experiment="subspace", trials=1, train_len=300, m=5)
        trace = run_subspace_experiment(cfg)
        d = trace.distances[0]
        assert len(d) > 1 and d[-1] < 1e-5 and d[-1] < d[0]

    def test_trace_statistics(self):
        trace = SubspaceTrace([np.array([3.0, 2.0, 1.0]), np.array([3.0, 4.0])])
        mean, count = trace.mean_trajectory()
        np.testing.assert_allclose(mean, [3.0, 3.0, 1.0])
        np.testing.assert_array_equal(count, [2, 2, 1])
        assert trace.fraction_improved() == 0.5

    def test_moving_average(self):
        np.testing.assert_allclose(moving_average([1, 2, 3, 4], 2), [1.5, 2.5, 3.5])
        np.testing.assert_allclose(moving_average([1, 2], 5), [1, 2])

    def test_novelty_dictionary_matches_sparsify(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(80, 2))
        np.testing.assert_array_equal(novelty_dictionary(X[:1], X[1:], 0.5), sparsify(X, 0.5))


class TestContinual:
    def test_names(self):
        cfg = ExperimentConfig(experiment="continual", m=30)
        assert continual_names(cfg) == ("sispeed(30/100)-lms", "sspeed(30/100)-lms",
                                        "speed(30/2000)-lms")

    def test_no_admissions_equals_fixed(self):
        cfg = ExperimentConfig(experiment="continual", trials=1, train_len=150, m=10,
                               distance_threshold=np.inf, seed_sparse=False)
        curves = run_continual_experiment(cfg)
        name, fixed, _ = continual_names(cfg)
        assert curves[name].extras["admitted"][0] == 0
        np.testing.assert_allclose(curves[name].mean_mse, curves[fixed].mean_mse,
                                   rtol=1e-10, atol=0)


class TestOutput:
    def test_format(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert method_slug("speed(50/2000)-lms") == "speed_50_2000_lms"

    def test_write_curves(self, tmp_path):
        cfg = _small(methods=("linear-lms",), train_len=20, eval_every=10)
        write_curves(tmp_path, run_prediction_experiment(cfg))
        lines = (tmp_path / "curve_linear_lms.csv").read_text().splitlines()
        assert lines[0] == "step,mean_mse,std_mse" and len(lines) == 4
        summary = (tmp_path / "summary.csv").read_text().splitlines()
        assert summary[0].startswith("method,final_mse_mean,final_mse_se")
        assert summary[1].startswith("linear-lms,")

"""Experiment harness: learning curves, Gram reconstruction, subspace
convergence and continual learning on Mackey-Glass prediction.

Methods are named by strings such as ``speed(50/2000)-lms``,
``sspeed(30/2000)-rls``, ``rff2(330)-lms``, ``gq(330)-lms``, ``ts(4)-lms``,
``linear-lms``, ``klms`` and ``qklms``. For ``speed(m/n)`` the eigenmap keeps
``m`` eigenfunctions of the Gram matrix on the first ``n`` training inputs;
``sspeed`` first thins those ``n`` inputs with the novelty threshold.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import hashlib
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from speedkaf.errors import NumericalError
from speedkaf.features import GQMap, LinearMap, RFF1Map, RFF2Map, TaylorMap
from speedkaf.filters import ExRLSFilter, KLMSFilter, LMSFilter, QKLMSFilter, RLSFilter
from speedkaf.ispeed import NoveltyGate, SpeedState, TransferMode, sispeed_step, sparsify
from speedkaf.kernels import KernelConfig, gram_matrix
from speedkaf.spectral import (
    build_eigenmap,
    decompose,
    fit_eigenmap,
    frobenius_error,
    subspace_distance,
    usable_rank,
)
from speedkaf.timeseries import (
    MackeyGlassConfig,
    RegressionDataset,
    add_noise,
    generate_mg,
    make_dataset,
    standardize,
)

EXPERIMENTS = ("prediction", "reconstruction", "subspace", "continual")

_METHOD_RE = re.compile(
    r"^(?P<feat>speed|sspeed|rff1|rff2|gq|ts|linear)"
    r"(?:\((?P<a>\d+)(?:/(?P<b>\d+))?\))?-(?P<filt>lms|rls|exrls)$"
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class MethodSpec:
    name: str
    features: str | None
    filter: str
    dimension: int | None = None
    batch: int | None = None

    @classmethod
    def parse(cls, name: str) -> "MethodSpec":
        name = name.strip().lower()
        if name in ("klms", "qklms"):
            return cls(name, None, name)
        match = _METHOD_RE.match(name)
        if not match:
            raise ConfigError(f"unrecognised method {name!r}")
        feat, a, b, filt = match["feat"], match["a"], match["b"], match["filt"]
        if feat in ("speed", "sspeed"):
            if a is None or b is None:
                raise ConfigError(f"{name!r}: SPEED methods need (m/n)")
            return cls(name, feat, filt, int(a), int(b))
        if b is not None:
            raise ConfigError(f"{name!r}: only SPEED methods take m/n")
        if feat == "linear":
            if a is not None:
                raise ConfigError(f"{name!r}: linear features take no size")
            return cls(name, feat, filt)
        if a is None:
            raise ConfigError(f"{name!r}: size in parentheses is required")
        return cls(name, feat, filt, int(a))

    def with_values(self, dimension=None, batch=None) -> "MethodSpec":
        """Rename a SPEED method with a new ``m`` and/or ``n``."""
        if self.features not in ("speed", "sspeed"):
            return self
        m = self.dimension if dimension is None else int(dimension)
        n = self.batch if batch is None else int(batch)
        return MethodSpec.parse(f"{self.features}({m}/{n})-{self.filter}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    Data: ``series_length`` Mackey-Glass samples with additive noise, globally
    standardised per trial, embedded with ``embedding`` lags and split into
    ``train_len`` training pairs, a ``gap`` and ``test_len`` test pairs at a
    random start.
    """

    experiment: str = "prediction"
    methods: tuple[str, ...] = ("speed(50/2000)-lms",)
    trials: int = 100
    seed: int = 0
    series_length: int = 5000
    noise: float = 0.02
    embedding: int = 7
    train_len: int = 2000
    test_len: int = 200
    gap: int = 200
    bandwidth: float = 1.0
    learning_rate: float = 0.1
    forgetting: float = 1.0
    delta: float = 1.0
    alpha: float = 1.0
    process_noise: float = 0.0
    quantization: float = 0.06
    taylor_degree: int = 4
    gq_degree: int = 8
    m: int = 20
    distance_threshold: float = 0.06
    seed_count: int = 100
    seed_sparse: bool = True
    update_batch: int = 1
    transfer_mode: str = "truncate"
    eval_every: int = 10
    recon_n: int = 500
    sparse: bool = False
    subspace_reference: str = "sparse"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be at least 1")
        try:
            TransferMode(self.transfer_mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for name in self.methods if self.experiment == "prediction" else ():
            spec = MethodSpec.parse(name)
            if spec.batch is not None and spec.batch > self.train_len:
                raise ConfigError(f"{name}: batch {spec.batch} exceeds train_len {self.train_len}")
            if spec.dimension is not None and spec.dimension < 1:
                raise ConfigError(f"{name}: dimension must be positive")
        if self.subspace_reference not in ("sparse", "full"):
            raise ConfigError("subspace_reference must be 'sparse' or 'full'")
        if self.seed_count > self.train_len:
            raise ConfigError("seed_count exceeds train_len")
        if self.bandwidth <= 0 or self.learning_rate < 0 or self.delta <= 0:
            raise ConfigError("bandwidth and delta must be positive, learning_rate non-negative")

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(self.bandwidth)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def digest(self) -> str:
        text = repr(sorted(dataclasses.asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, value: str):
    kind = _FIELD_TYPES[key]
    value = value.strip()
    try:
        if kind == "tuple[str, ...]":
            return tuple(v.strip() for v in value.split(",") if v.strip())
        if kind == "bool":
            lowered = value.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return lowered in ("true", "1", "yes")
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from exc
    return value


def parse_config_text(text: str, **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, **overrides)


# ---------------------------------------------------------------- data


@functools.lru_cache(maxsize=4)
def _clean_series(length: int) -> np.ndarray:
    series = generate_mg(MackeyGlassConfig(length=length))
    series.setflags(write=False)
    return series


def trial_seeds(base_seed: int, trial: int, count: int = 4) -> list[np.random.SeedSequence]:
    """Independent per-trial streams, a pure function of ``(base_seed, trial)``."""
    return np.random.SeedSequence([base_seed, trial]).spawn(count)


def trial_dataset(cfg: ExperimentConfig, trial: int) -> RegressionDataset:
    noise_seq, start_seq, *_ = trial_seeds(cfg.seed, trial)
    noisy = add_noise(_clean_series(cfg.series_length), cfg.noise, noise_seq)
    z, _ = standardize(noisy)
    return make_dataset(z, cfg.embedding, cfg.train_len, cfg.test_len, cfg.gap, seed=start_seq)


def _feature_seed(cfg: ExperimentConfig, trial: int) -> np.random.SeedSequence:
    return trial_seeds(cfg.seed, trial)[2]


# ---------------------------------------------------------------- curves


@dataclass
class LearningCurve:
    """Test MSE sampled along training, one row per trial."""

    method: str
    steps: np.ndarray
    trial_mse: np.ndarray
    config_digest: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return self.trial_mse.shape[0]

    @property
    def mean_mse(self) -> np.ndarray:
        return np.mean(self.trial_mse, axis=0)

    @property
    def std_mse(self) -> np.ndarray:
        return np.std(self.trial_mse, axis=0)

    @property
    def finals(self) -> np.ndarray:
        return self.trial_mse[:, -1]

    @property
    def final_mse(self) -> float:
        return float(np.mean(self.finals))

    @property
    def final_se(self) -> float:
        if self.trials < 2:
            return 0.0
        return float(np.std(self.finals, ddof=1) / np.sqrt(self.trials))


def eval_steps(train_len: int, every: int) -> np.ndarray:
    steps = list(range(0, train_len + 1, every))
    if steps[-1] != train_len:
        steps.append(train_len)
    return np.array(steps)


def _mse(pred: np.ndarray, target: np.ndarray) -> float:
    r = target - pred
    return float(np.mean(r * r))


def _make_linear_filter(cfg: ExperimentConfig, kind: str, dim: int):
    if kind == "lms":
        return LMSFilter(dim, cfg.learning_rate)
    if kind == "rls":
        return RLSFilter(dim, cfg.forgetting, cfg.delta)
    return ExRLSFilter(dim, cfg.forgetting, cfg.delta, alpha=cfg.alpha, process_noise=cfg.process_noise)


def _run_linear(filt, Phi_train, y_train, Phi_test, y_test, steps) -> np.ndarray:
    out = np.empty(len(steps))
    k = 0
    for i in range(Phi_train.shape[0] + 1):
        if i == steps[k]:
            out[k] = _mse(filt.predict(Phi_test), y_test)
            k += 1
            if k == len(steps):
                break
        filt.step(Phi_train[i], y_train[i])
    return out


def _run_kernel(filt, ds: RegressionDataset, steps) -> np.ndarray:
    out = np.empty(len(steps))
    k = 0
    for i in range(ds.train_inputs.shape[0] + 1):
        if i == steps[k]:
            out[k] = _mse(filt.predict(ds.test_inputs), ds.test_targets)
            k += 1
            if k == len(steps):
                break
        filt.step(ds.train_inputs[i], ds.train_targets[i])
    return out


@functools.lru_cache(maxsize=8)
def _fixed_map(kind: str, dimension: int, input_dim: int, bandwidth: float, degree: int):
    kernel = KernelConfig(bandwidth)
    if kind == "gq":
        return GQMap(dimension, input_dim, kernel, degree=degree)
    return TaylorMap(dimension, input_dim, kernel)


def build_features(cfg: ExperimentConfig, spec: MethodSpec, ds: RegressionDataset, trial: int):
    """Feature map for one trial; data-dependent maps use the training inputs."""
    d = ds.train_inputs.shape[1]
    kernel = cfg.kernel
    if spec.features == "speed":
        return fit_eigenmap(kernel, ds.train_inputs[: spec.batch], spec.dimension)
    if spec.features == "sspeed":
        dictionary = sparsify(ds.train_inputs[: spec.batch], cfg.distance_threshold)
        return fit_eigenmap(kernel, dictionary, spec.dimension)
    if spec.features == "rff1":
        return RFF1Map(spec.dimension, d, kernel, _feature_seed(cfg, trial))
    if spec.features == "rff2":
        return RFF2Map(spec.dimension, d, kernel, _feature_seed(cfg, trial))
    if spec.features == "gq":
        return _fixed_map("gq", spec.dimension, d, cfg.bandwidth, cfg.gq_degree)
    if spec.features == "ts":
        return _fixed_map("ts", spec.dimension, d, cfg.bandwidth, 0)
    return LinearMap(d)


def run_method_trial(cfg: ExperimentConfig, spec: MethodSpec, ds: RegressionDataset, trial: int):
    """Test-MSE trajectory of one method on one trial; returns ``(mse, extras)``."""
    steps = eval_steps(ds.train_inputs.shape[0], cfg.eval_every)
    if spec.filter in ("klms", "qklms"):
        if spec.filter == "klms":
            filt = KLMSFilter(cfg.kernel, cfg.learning_rate, ds.d)
        else:
            filt = QKLMSFilter(cfg.kernel, cfg.learning_rate, cfg.quantization, ds.d)
        mse = _run_kernel(filt, ds, steps)
        return mse, {"centers": len(filt)}
    fmap = build_features(cfg, spec, ds, trial)
    Phi_train = fmap.transform(ds.train_inputs)
    Phi_test = fmap.transform(ds.test_inputs)
    filt = _make_linear_filter(cfg, spec.filter, fmap.dim)
    mse = _run_linear(filt, Phi_train, ds.train_targets, Phi_test, ds.test_targets, steps)
    extras = {"dimension": fmap.dim}
    if spec.features in ("speed", "sspeed"):
        extras["dictionary"] = fmap.n
    return mse, extras


class TrialError(RuntimeError):
    """A trial failed; carries the trial index and base seed."""


def _prediction_trial(cfg: ExperimentConfig, trial: int):
    ds = trial_dataset(cfg, trial)
    results = {}
    for name in cfg.methods:
        spec = MethodSpec.parse(name)
        try:
            results[name] = run_method_trial(cfg, spec, ds, trial)
        except (NumericalError, ValueError, np.linalg.LinAlgError) as exc:
            raise TrialError(f"{name}: trial {trial} (base seed {cfg.seed}) failed: {exc}") from exc
    return results


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SPEED_THREADS", "1")))
    except ValueError:
        return 1


def map_trials(func, cfg: ExperimentConfig) -> list:
    """Run ``func(cfg, trial)`` for every trial; results come back in trial order.

    ``SPEED_THREADS`` sets the number of worker processes (default 1).
    """
    workers = min(_workers(), cfg.trials)
    if workers == 1:
        return [func(cfg, t) for t in range(cfg.trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, [cfg] * cfg.trials, range(cfg.trials)))


def _collect(cfg: ExperimentConfig, per_trial: list[dict], names) -> dict[str, LearningCurve]:
    steps = eval_steps(cfg.train_len, cfg.eval_every)
    curves = {}
    for name in names:
        rows = np.array([r[name][0] for r in per_trial])
        extras = {}
        for key in per_trial[0][name][1]:
            extras[key] = np.array([r[name][1][key] for r in per_trial])
        curves[name] = LearningCurve(name, steps, rows, cfg.digest(), extras)
    return curves


def run_prediction_experiment(cfg: ExperimentConfig) -> dict[str, LearningCurve]:
    """Learning curve for every configured method, averaged over trials."""
    per_trial = map_trials(_prediction_trial, cfg)
    return _collect(cfg, per_trial, cfg.methods)


# ---------------------------------------------------------------- reconstruction


@dataclass
class ReconstructionTable:
    m: np.ndarray
    normalized: np.ndarray  # (trials, len(m))
    plain: np.ndarray  # (trials, len(m))
    dictionary_sizes: np.ndarray

    @property
    def frobenius_mean(self) -> np.ndarray:
        return np.mean(self.normalized, axis=0)

    @property
    def plain_mean(self) -> np.ndarray:
        return np.mean(self.plain, axis=0)


def reconstruction_errors(kernel: KernelConfig, points, ms) -> tuple[np.ndarray, np.ndarray]:
    """Normalized and plain Frobenius errors of the top-``m`` Gram reconstructions."""
    K = gram_matrix(kernel, points)
    sys = decompose(K)
    entries = K.entries
    normalized, plain = [], []
    for m in ms:
        emap = build_eigenmap(sys, K.dictionary, kernel, int(m))
        F = emap.psi @ entries
        K_hat = F.T @ F
        normalized.append(frobenius_error(entries, K_hat))
        plain.append(float(np.linalg.norm(entries - K_hat)))
    return np.array(normalized), np.array(plain)


def _reconstruction_points(cfg: ExperimentConfig, trial: int) -> np.ndarray:
    n = max(cfg.recon_n, 1)
    ds = trial_dataset(cfg.replace(train_len=n, seed_count=min(cfg.seed_count, n)), trial)
    points = ds.train_inputs[: cfg.recon_n]
    if cfg.sparse:
        points = sparsify(points, cfg.distance_threshold)
    return points


def _reconstruction_trial(cfg: ExperimentConfig, trial: int):
    points = _reconstruction_points(cfg, trial)
    K = gram_matrix(cfg.kernel, points)
    return points, usable_rank(decompose(K).eigenvalues)


def run_reconstruction_experiment(cfg: ExperimentConfig, ms=None) -> ReconstructionTable:
    """Mean normalized Frobenius error versus ``m``.

    ``m`` defaults to ``1 .. r`` where ``r`` is the smallest usable rank (and,
    for the sparse variant, dictionary size) over trials.
    """
    prepared = map_trials(_reconstruction_trial, cfg)
    limit = min(rank for _, rank in prepared)
    if ms is None:
        ms = np.arange(1, limit + 1)
    ms = np.asarray(ms, dtype=int)
    if ms.size == 0 or ms.min() < 1 or ms.max() > limit:
        raise ConfigError(f"m values must lie in [1, {limit}]")
    norm_rows, plain_rows = [], []
    for points, _ in prepared:
        a, b = reconstruction_errors(cfg.kernel, points, ms)
        norm_rows.append(a)
        plain_rows.append(b)
    sizes = np.array([p.shape[0] for p, _ in prepared])
    return ReconstructionTable(ms, np.array(norm_rows), np.array(plain_rows), sizes)


# ---------------------------------------------------------------- subspace / continual


def _seed_points(cfg: ExperimentConfig, inputs: np.ndarray) -> np.ndarray:
    seed = inputs[: cfg.seed_count]
    return sparsify(seed, cfg.distance_threshold) if cfg.seed_sparse else seed


def _seeded_state(cfg: ExperimentConfig, inputs: np.ndarray, m: int) -> SpeedState:
    return SpeedState.from_batch(
        cfg.kernel, _seed_points(cfg, inputs), m, transfer_mode=TransferMode(cfg.transfer_mode)
    )


@dataclass
class SubspaceTrace:
    """Distance to the reference subspace, initially and after each grow."""

    distances: list[np.ndarray]

    def mean_trajectory(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean over trials that reached each update count, and that count."""
        longest = max(len(d) for d in self.distances)
        total = np.zeros(longest)
        count = np.zeros(longest, dtype=int)
        for d in self.distances:
            total[: len(d)] += d
            count[: len(d)] += 1
        return total / count, count

    def fraction_improved(self) -> float:
        return float(np.mean([d[-1] < d[0] for d in self.distances]))


def moving_average(values, window: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[0] < window:
        return values.copy()
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


def novelty_dictionary(initial, stream, distance_threshold: float) -> np.ndarray:
    """Dictionary that novelty-gated growth from ``initial`` ends with."""
    kept = list(np.asarray(initial, dtype=float))
    for x in np.asarray(stream, dtype=float):
        diff = np.asarray(kept) - x
        if np.min(np.sum(diff * diff, axis=1)) >= distance_threshold:
            kept.append(x)
    return np.asarray(kept)


def _subspace_trial(cfg: ExperimentConfig, trial: int) -> np.ndarray:
    ds = trial_dataset(cfg, trial)
    inputs = ds.train_inputs
    if cfg.subspace_reference == "sparse":
        reference_points = novelty_dictionary(_seed_points(cfg, inputs), inputs[cfg.seed_count :],
                                              cfg.distance_threshold)
    else:
        reference_points = inputs
    reference = fit_eigenmap(cfg.kernel, reference_points, cfg.m)
    state = _seeded_state(cfg, inputs, cfg.m)
    gate = NoveltyGate(cfg.distance_threshold, cfg.update_batch)
    distances = [subspace_distance(state.eigenmap, reference)]
    for x in inputs[cfg.seed_count :]:
        grows = state.grows
        state, admitted = sispeed_step(state, gate, x)
        if state.grows != grows:
            distances.append(subspace_distance(state.eigenmap, reference))
    return np.array(distances)


def run_subspace_experiment(cfg: ExperimentConfig) -> SubspaceTrace:
    """Track the distance between the incremental eigenmap and a batch
    reference after every grow.

    The reference is the batch eigenmap of the dictionary that novelty-gated
    growth ends with (``subspace_reference = sparse``) or of all training
    inputs (``full``).
    """
    return SubspaceTrace(map_trials(_subspace_trial, cfg))


def continual_names(cfg: ExperimentConfig) -> tuple[str, str, str]:
    base = "sspeed" if cfg.seed_sparse else "speed"
    return (
        f"sispeed({cfg.m}/{cfg.seed_count})-lms",
        f"{base}({cfg.m}/{cfg.seed_count})-lms",
        f"speed({cfg.m}/{cfg.train_len})-lms",
    )


def _continual_trial(cfg: ExperimentConfig, trial: int):
    ds = trial_dataset(cfg, trial)
    steps = eval_steps(cfg.train_len, cfg.eval_every)
    state = _seeded_state(cfg, ds.train_inputs, cfg.m)
    gate = NoveltyGate(cfg.distance_threshold, cfg.update_batch)
    lms = LMSFilter(cfg.m, cfg.learning_rate)
    out = np.empty(len(steps))
    admissions = np.zeros(cfg.train_len, dtype=bool)
    k = 0
    for i in range(cfg.train_len + 1):
        if i == steps[k]:
            out[k] = _mse(state.predict(ds.test_inputs), ds.test_targets)
            k += 1
            if k == len(steps):
                break
        x = ds.train_inputs[i]
        lms.weights = state.weights
        lms.step(state.transform(x[None, :])[0], ds.train_targets[i])
        state.weights = lms.weights
        if i >= cfg.seed_count:
            state, admissions[i] = sispeed_step(state, gate, x)
    name, fixed, full = continual_names(cfg)
    result = {name: (out, {"dictionary": state.n, "admitted": int(admissions.sum())})}
    for other in (fixed, full):
        result[other] = run_method_trial(cfg, MethodSpec.parse(other), ds, trial)
    return result


def run_continual_experiment(cfg: ExperimentConfig) -> dict[str, LearningCurve]:
    """siSPEED-LMS seeded with the first ``seed_count`` samples, alongside the
    fixed seed-batch eigenmap and the full-batch eigenmap with the same ``m``."""
    per_trial = map_trials(_continual_trial, cfg)
    return _collect(cfg, per_trial, continual_names(cfg))


# ---------------------------------------------------------------- output


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def method_slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def write_curves(out_dir, curves: dict[str, LearningCurve]) -> None:
    out_dir = Path(out_dir)
    summary = []
    for name, curve in curves.items():
        write_csv(
            out_dir / f"curve_{method_slug(name)}.csv",
            ["step", "mean_mse", "std_mse"],
            zip(curve.steps.tolist(), curve.mean_mse, curve.std_mse),
        )
        extras = {k: float(np.mean(v)) for k, v in curve.extras.items()}
        summary.append([
            name, curve.final_mse, curve.final_se, float(np.std(curve.finals)),
            extras.get("centers", extras.get("dictionary", extras.get("dimension", float("nan")))),
        ])
    write_csv(
        out_dir / "summary.csv",
        ["method", "final_mse_mean", "final_mse_se", "final_mse_std", "mean_size"],
        summary,
    )


def write_reconstruction(out_dir, table: ReconstructionTable) -> None:
    write_csv(
        Path(out_dir) / "reconstruction.csv",
        ["m", "frobenius_mean"],
        zip(table.m.tolist(), table.frobenius_mean),
    )


def write_subspace(out_dir, trace: SubspaceTrace) -> None:
    mean, count = trace.mean_trajectory()
    write_csv(
        Path(out_dir) / "subspace.csv",
        ["update", "mean_distance", "trials"],
        zip(range(len(mean)), mean, count.tolist()),
    )
    write_csv(
        Path(out_dir) / "subspace_trials.csv",
        ["trial", "updates", "initial", "final"],
        ([t, len(d) - 1, d[0], d[-1]] for t, d in enumerate(trace.distances)),
    )


def run_experiment(cfg: ExperimentConfig, out_dir=None):
    """Dispatch on ``cfg.experiment``; write CSVs into ``out_dir`` if given."""
    if cfg.experiment == "prediction":
        result = run_prediction_experiment(cfg)
        writer = write_curves
    elif cfg.experiment == "continual":
        result = run_continual_experiment(cfg)
        writer = write_curves
    elif cfg.experiment == "reconstruction":
        result = run_reconstruction_experiment(cfg)
        writer = write_reconstruction
    else:
        result = run_subspace_experiment(cfg)
        writer = write_subspace
    if out_dir is not None:
        writer(out_dir, result)
    return result

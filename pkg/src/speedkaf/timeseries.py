"""Mackey-Glass series generation and regression dataset preparation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from speedkaf.errors import NumericalError


@dataclass(frozen=True)
class MackeyGlassConfig:
    """Parameters of ``dy/dt = beta y(t-tau) / (1 + y(t-tau)^n) - gamma y(t)``.

    ``internal_step`` is the RK4 step; it must divide both ``sample_period``
    and ``tau`` exactly. ``interpolation`` selects how the delayed value at
    RK4 half steps is read from the fine-grid history: ``"linear"`` or
    ``"hermite"`` (cubic, using the stored derivatives).
    """

    beta: float = 0.2
    gamma: float = 0.1
    tau: float = 30.0
    exponent: float = 10.0
    sample_period: float = 6.0
    y0: float = 0.9
    internal_step: float = 0.1
    length: int = 5000
    interpolation: str = "hermite"

    def __post_init__(self):
        if self.internal_step <= 0:
            raise ValueError("internal_step must be positive")
        if self.length < 1:
            raise ValueError("length must be at least 1")
        for name in ("sample_period", "tau"):
            ratio = getattr(self, name) / self.internal_step
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ValueError(f"internal_step must divide {name} exactly")
        if self.interpolation not in ("linear", "hermite"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    @property
    def substeps(self) -> int:
        return int(round(self.sample_period / self.internal_step))

    @property
    def lag(self) -> int:
        return int(round(self.tau / self.internal_step))


def mg_rhs(cfg: MackeyGlassConfig, y: float, y_delayed: float) -> float:
    return cfg.beta * y_delayed / (1.0 + y_delayed**cfg.exponent) - cfg.gamma * y


def generate_mg(cfg: MackeyGlassConfig = MackeyGlassConfig()) -> np.ndarray:
    """Integrate the Mackey-Glass equation with classical RK4.

    The history is constant (``y0``) for ``t <= 0``. Samples are emitted at
    ``t = 0, sample_period, 2 sample_period, ...``.
    """
    h = cfg.internal_step
    lag = cfg.lag
    every = cfg.substeps
    total = (cfg.length - 1) * every
    beta, gamma, p = cfg.beta, cfg.gamma, cfg.exponent
    hermite = cfg.interpolation == "hermite"

    def rhs(y, yd):
        return beta * yd / (1.0 + yd**p) - gamma * y

    ys = [0.0] * (total + 1)
    fs = [0.0] * (total + 1)
    y0 = cfg.y0
    ys[0] = y0

    def delayed(j):
        return y0 if j <= 0 else ys[j]

    def delayed_mid(j):
        # value at the midpoint of [t_j, t_{j+1}] on the fine grid
        if j + 1 <= 0:
            return y0
        ya, yb = delayed(j), ys[j + 1]
        if not hermite:
            return 0.5 * (ya + yb)
        fa = 0.0 if j < 0 else fs[j]
        return 0.5 * (ya + yb) + h * (fa - fs[j + 1]) / 8.0

    out = np.empty(cfg.length)
    out[0] = y0
    y = y0
    for i in range(total):
        j = i - lag
        k1 = rhs(y, delayed(j))
        fs[i] = k1
        yd_mid = delayed_mid(j)
        k2 = rhs(y + 0.5 * h * k1, yd_mid)
        k3 = rhs(y + 0.5 * h * k2, yd_mid)
        k4 = rhs(y + h * k3, delayed(j + 1))
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not math.isfinite(y):
            raise NumericalError(f"non-finite state at step {i + 1}")
        ys[i + 1] = y
        if (i + 1) % every == 0:
            out[(i + 1) // every] = y
    return out


def add_noise(series, sigma_noise: float, seed) -> np.ndarray:
    """Add i.i.d. ``Normal(0, sigma_noise^2)`` noise, deterministic per seed."""
    if sigma_noise < 0:
        raise ValueError("sigma_noise must be non-negative")
    series = np.asarray(series, dtype=float)
    if sigma_noise == 0:
        return series.copy()
    rng = np.random.default_rng(seed)
    return series + rng.normal(0.0, sigma_noise, size=series.shape)


@dataclass(frozen=True)
class Standardization:
    mean: float
    std: float
    scale: float

    def apply(self, series) -> np.ndarray:
        return (np.asarray(series, dtype=float) - self.mean) / self.std / self.scale

    def invert(self, series) -> np.ndarray:
        return np.asarray(series, dtype=float) * self.scale * self.std + self.mean


def standardize(series) -> tuple[np.ndarray, Standardization]:
    """Zero mean, unit (population) std, then divide by the max magnitude."""
    series = np.asarray(series, dtype=float)
    mean = float(np.mean(series))
    std = float(np.std(series))
    if std == 0 or not np.isfinite(std):
        raise ValueError("cannot standardize a constant series")
    z = (series - mean) / std
    scale = float(np.max(np.abs(z)))
    params = Standardization(mean, std, scale)
    return z / scale, params


def embed_series(series, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Time-delay embedding: ``inputs[i] = u[i:i+d]``, ``targets[i] = u[i+d]``."""
    series = np.asarray(series, dtype=float)
    if d < 1:
        raise ValueError("embedding dimension must be at least 1")
    count = series.shape[0] - d
    if count < 1:
        raise ValueError(f"series of length {series.shape[0]} too short for d={d}")
    inputs = np.lib.stride_tricks.sliding_window_view(series, d)[:count].copy()
    return inputs, series[d:].copy()


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    train_inputs: np.ndarray
    train_targets: np.ndarray
    test_inputs: np.ndarray
    test_targets: np.ndarray
    d: int
    start: int
    test_start: int


def make_dataset(
    series,
    d: int = 7,
    train_len: int = 2000,
    test_len: int = 200,
    gap: int = 200,
    start: int | None = None,
    seed=None,
) -> RegressionDataset:
    """Split an embedded series into consecutive train and test pairs.

    Training pairs are indices ``[start, start + train_len)`` and test pairs
    ``[start + train_len + gap, ... + test_len)``. When ``start`` is None it
    is drawn uniformly over all valid starts using ``seed``.
    """
    series = np.asarray(series, dtype=float)
    if min(train_len, test_len) < 1 or gap < 0:
        raise ValueError("train_len and test_len must be positive and gap non-negative")
    span = train_len + gap + test_len + d
    last_start = series.shape[0] - span
    if last_start < 0:
        raise ValueError(
            f"series of length {series.shape[0]} too short: need at least {span} samples"
        )
    if start is None:
        start = int(np.random.default_rng(seed).integers(0, last_start + 1))
    elif not 0 <= start <= last_start:
        raise ValueError(f"start must lie in [0, {last_start}], got {start}")
    inputs, targets = embed_series(series, d)
    test_start = start + train_len + gap
    return RegressionDataset(
        train_inputs=inputs[start : start + train_len],
        train_targets=targets[start : start + train_len],
        test_inputs=inputs[test_start : test_start + test_len],
        test_targets=targets[test_start : test_start + test_len],
        d=d,
        start=start,
        test_start=test_start,
    )


def write_series_csv(path, series) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value"])
        for v in np.asarray(series, dtype=float):
            writer.writerow([f"{v:.17g}"])


def read_series_csv(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["value"]:
            raise ValueError(f"{path}: expected a single 'value' column")
        return np.array([float(row["value"]) for row in reader])

"""Kernel evaluation, kernel vectors and Gram matrices."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class KernelFamily(enum.Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family and bandwidth.

    The Gaussian kernel is ``exp(-||x - y||^2 / (2 sigma^2))`` where the
    squared norm is accumulated as ``sum((x_i - y_i)**2)``.
    """

    bandwidth: float = 1.0
    family: KernelFamily = KernelFamily.GAUSSIAN

    def __post_init__(self):
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not isinstance(self.family, KernelFamily):
            object.__setattr__(self, "family", KernelFamily(self.family))

    def self_similarity(self) -> float:
        return 1.0


def as_points(points, name: str = "points") -> np.ndarray:
    """Coerce a list of vectors into a 2-D float array of shape (n, d)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a list of vectors, got shape {arr.shape}")
    return arr


def _as_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    return arr


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows of ``a`` and ``b``.

    Differences are formed explicitly so that ``d(a, b)`` and ``d(b, a)`` are
    transposes of each other bit for bit.
    """
    out = np.zeros((a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        diff = a[:, k, None] - b[None, :, k]
        out += diff * diff
    return out


def kernel_eval(cfg: KernelConfig, x, y) -> float:
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    diff = x - y
    return float(np.exp(-np.sum(diff * diff) / (2.0 * cfg.bandwidth**2)))


def cross_kernel(cfg: KernelConfig, a, b) -> np.ndarray:
    """Kernel matrix with entry ``(i, j) = k(a[i], b[j])``."""
    a = as_points(a, "a")
    b = as_points(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return np.exp(-squared_distances(a, b) / (2.0 * cfg.bandwidth**2))


def kernel_vector(cfg: KernelConfig, dictionary, x) -> np.ndarray:
    """Kernel evaluations between every dictionary point and ``x``."""
    dictionary = as_points(dictionary, "dictionary")
    if dictionary.shape[0] == 0:
        raise ValueError("dictionary is empty")
    x = _as_vector(x, "x")
    if x.shape[0] != dictionary.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {dictionary.shape[1]}")
    diff = dictionary - x
    return np.exp(-np.sum(diff * diff, axis=1) / (2.0 * cfg.bandwidth**2))


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    dictionary: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def gram_matrix(cfg: KernelConfig, dictionary) -> GramMatrix:
    dictionary = as_points(dictionary, "dictionary")
    if dictionary.shape[0] == 0:
        raise ValueError("dictionary is empty")
    sq = squared_distances(dictionary, dictionary)
    entries = np.exp(-sq / (2.0 * cfg.bandwidth**2))
    entries.setflags(write=False)
    dictionary = dictionary.copy()
    dictionary.setflags(write=False)
    return GramMatrix(entries, dictionary)

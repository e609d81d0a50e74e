"""Data-independent explicit feature maps for the Gaussian kernel.

Every map exposes ``dim`` and ``transform(X) -> (N, dim)`` so that
``transform(X) @ transform(Y).T`` approximates the Gram matrix.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from speedkaf.kernels import KernelConfig, as_points


class FeatureKind(enum.Enum):
    RFF1 = "rff1"
    RFF2 = "rff2"
    TAYLOR = "taylor"
    GQ = "gq"
    SPEED = "speed"


@dataclass(frozen=True)
class FeatureMapSpec:
    kind: FeatureKind
    dimension: int
    input_dim: int
    kernel: KernelConfig = KernelConfig()
    seed: int = 0
    degree: int = 4

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        if self.kind is FeatureKind.RFF1 and self.dimension % 2:
            raise ValueError(f"RFF1 needs an even dimension, got {self.dimension}")
        if self.kind is FeatureKind.TAYLOR:
            expected = math.comb(self.input_dim + self.degree, self.degree)
            if self.dimension != expected:
                raise ValueError(
                    f"Taylor map of degree {self.degree} on {self.input_dim} inputs has "
                    f"dimension {expected}, not {self.dimension}"
                )
        if self.dimension < 1 or self.input_dim < 1:
            raise ValueError("dimension and input_dim must be positive")


def _check_input(X, d: int) -> np.ndarray:
    X = as_points(X, "X")
    if X.shape[1] != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {X.shape[1]}")
    return X


class RFF1Map:
    """Random Fourier features as sine-cosine pairs.

    ``z(x) = sqrt(2/D) [cos(w_1.x), sin(w_1.x), ..., cos(w_{D/2}.x), sin(w_{D/2}.x)]``
    with ``w_i ~ N(0, sigma^-2 I)``.
    """

    def __init__(self, dimension: int, input_dim: int, kernel: KernelConfig = KernelConfig(), seed=0):
        if dimension % 2:
            raise ValueError(f"RFF1 needs an even dimension, got {dimension}")
        self.dim = dimension
        self.input_dim = input_dim
        rng = np.random.default_rng(seed)
        self.frequencies = rng.normal(0.0, 1.0 / kernel.bandwidth, size=(dimension // 2, input_dim))

    def transform(self, X) -> np.ndarray:
        X = _check_input(X, self.input_dim)
        proj = X @ self.frequencies.T
        Z = np.empty((X.shape[0], self.dim))
        Z[:, 0::2] = np.cos(proj)
        Z[:, 1::2] = np.sin(proj)
        return Z * np.sqrt(2.0 / self.dim)


class RFF2Map:
    """Random Fourier features with random phase: ``sqrt(2/D) cos(w.x + b)``."""

    def __init__(self, dimension: int, input_dim: int, kernel: KernelConfig = KernelConfig(), seed=0):
        self.dim = dimension
        self.input_dim = input_dim
        rng = np.random.default_rng(seed)
        self.frequencies = rng.normal(0.0, 1.0 / kernel.bandwidth, size=(dimension, input_dim))
        self.phases = rng.uniform(0.0, 2.0 * np.pi, size=dimension)

    def transform(self, X) -> np.ndarray:
        X = _check_input(X, self.input_dim)
        return np.sqrt(2.0 / self.dim) * np.cos(X @ self.frequencies.T + self.phases)


def multi_indices(d: int, degree: int) -> np.ndarray:
    """Exponent vectors with total degree <= ``degree``, by degree then lexicographically."""
    rows = []
    for j in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(d), j):
            alpha = [0] * d
            for c in combo:
                alpha[c] += 1
            rows.append(alpha)
    return np.array(rows, dtype=int).reshape(-1, d)


class TaylorMap:
    """Truncated Taylor expansion of the Gaussian kernel.

    The feature for exponent vector ``a`` is
    ``exp(-|x|^2 / 2s^2) x^a / sqrt(s^(2|a|) prod(a_i!))``, so that
    ``z(x).z(y) = exp(-|x|^2/2s^2) exp(-|y|^2/2s^2) sum_{j<=r} (x.y)^j / (s^2j j!)``.
    """

    def __init__(self, degree: int, input_dim: int, kernel: KernelConfig = KernelConfig()):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.degree = degree
        self.input_dim = input_dim
        self.sigma = kernel.bandwidth
        self.exponents = multi_indices(input_dim, degree)
        self.dim = self.exponents.shape[0]
        order = self.exponents.sum(axis=1)
        fact = np.array([math.prod(math.factorial(a) for a in row) for row in self.exponents], dtype=float)
        self.coefficients = 1.0 / np.sqrt(self.sigma ** (2 * order) * fact)

    def transform(self, X) -> np.ndarray:
        X = _check_input(X, self.input_dim)
        # powers[n, k, p] = X[n, k] ** p
        powers = X[:, :, None] ** np.arange(self.degree + 1)[None, None, :]
        mono = np.ones((X.shape[0], self.dim))
        for k in range(self.input_dim):
            mono *= powers[:, k, self.exponents[:, k]]
        envelope = np.exp(-np.sum(X * X, axis=1) / (2.0 * self.sigma**2))
        return envelope[:, None] * mono * self.coefficients


class GQMap:
    """Deterministic Fourier features from a sub-sampled Gauss-Hermite grid.

    The Gaussian kernel is ``E[cos(w.(x - y))]`` with ``w ~ N(0, sigma^-2 I)``.
    A tensor-product Gauss-Hermite rule with ``degree // 2 + 1`` nodes per
    axis (exact for polynomials up to ``degree``) discretises that
    expectation. Nodes ``u`` and ``-u`` contribute identically, so each
    mirrored pair is merged into one representative carrying both weights.
    ``D/2`` representatives are then drawn by systematic resampling: walking
    the representatives in lexicographic index order, pick the node whose
    cumulative weight first reaches ``(k + 1/2) / (D/2)``. Each pick gets
    weight ``2/D``, so ``z(x).z(x) = 1``. Features are ``sqrt(v) cos(u.x)``
    and ``sqrt(v) sin(u.x)`` interleaved.
    """

    def __init__(self, dimension: int, input_dim: int, kernel: KernelConfig = KernelConfig(),
                 degree: int = 8, points: int | None = None):
        if dimension % 2:
            raise ValueError(f"GQ features come in pairs; dimension must be even, got {dimension}")
        self.dim = dimension
        self.input_dim = input_dim
        self.degree = degree
        self.points = degree // 2 + 1 if points is None else points
        nodes_1d, weights_1d = hermegauss(self.points)
        weights_1d = weights_1d / np.sqrt(2.0 * np.pi)
        p, d = self.points, input_dim

        grid = np.indices((p,) * d, dtype=np.int64).reshape(d, -1).T
        mirror = (p - 1) - grid
        # canonical representative: lexicographically not greater than its mirror
        canon = _lex_le(grid, mirror)
        self_mirror = np.all(grid == mirror, axis=1)[canon]
        reps = grid[canon]
        w = np.prod(weights_1d[reps], axis=1) * np.where(self_mirror, 1.0, 2.0)
        half = dimension // 2
        if half > reps.shape[0]:
            raise ValueError(
                f"dimension {dimension} needs {half} nodes but the rule has "
                f"only {reps.shape[0]} distinct node pairs"
            )
        cumulative = np.cumsum(w) / np.sum(w)
        targets = (np.arange(half) + 0.5) / half
        picks = np.minimum(np.searchsorted(cumulative, targets), reps.shape[0] - 1)
        self.nodes = nodes_1d[reps[picks]] / kernel.bandwidth
        self.weights = np.full(half, 1.0 / half)

    def transform(self, X) -> np.ndarray:
        X = _check_input(X, self.input_dim)
        proj = X @ self.nodes.T
        root = np.sqrt(self.weights)
        Z = np.empty((X.shape[0], self.dim))
        Z[:, 0::2] = root * np.cos(proj)
        Z[:, 1::2] = root * np.sin(proj)
        return Z


def _lex_le(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise lexicographic ``a <= b`` for integer arrays."""
    diff = a - b
    nz = diff != 0
    first = np.argmax(nz, axis=1)
    lead = diff[np.arange(a.shape[0]), first]
    return ~np.any(nz, axis=1) | (lead < 0)


class LinearMap:
    """Identity features; the plain linear filter baseline."""

    def __init__(self, input_dim: int):
        self.dim = input_dim
        self.input_dim = input_dim

    def transform(self, X) -> np.ndarray:
        return _check_input(X, self.input_dim).copy()


def feature_map(spec: FeatureMapSpec):
    """Build the data-independent map described by ``spec``."""
    if spec.kind is FeatureKind.RFF1:
        return RFF1Map(spec.dimension, spec.input_dim, spec.kernel, spec.seed)
    if spec.kind is FeatureKind.RFF2:
        return RFF2Map(spec.dimension, spec.input_dim, spec.kernel, spec.seed)
    if spec.kind is FeatureKind.TAYLOR:
        return TaylorMap(spec.degree, spec.input_dim, spec.kernel)
    if spec.kind is FeatureKind.GQ:
        return GQMap(spec.dimension, spec.input_dim, spec.kernel, degree=spec.degree)
    raise ValueError(f"{spec.kind.value} features depend on data; build them from a dictionary")

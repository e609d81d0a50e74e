"""Gram-matrix eigendecomposition and the eigenfunction feature map.

An eigenmap stores ``psi = Lambda_m^{-1/2} V_m^T`` for the ``m`` dominant
eigenpairs of a Gram matrix built on a dictionary. Applying it to the kernel
vector of a point gives that point's coordinates along the ``m`` leading
kernel eigenfunctions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from speedkaf.errors import NumericalError
from speedkaf.kernels import GramMatrix, KernelConfig, as_points, cross_kernel, gram_matrix

#: relative eigenvalue cutoff; pairs below ``CUTOFF * n * lambda_max`` are unusable
CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenpairs sorted by descending eigenvalue; column ``i`` of
    ``eigenvectors`` belongs to ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def apply_sign_convention(V: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is positive."""
    V = np.array(V, dtype=float)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sorted_system(eigenvalues, eigenvectors) -> EigenSystem:
    """Sort eigenpairs descending (stable) and apply the sign convention."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    order = np.argsort(-eigenvalues, kind="stable")
    return EigenSystem(eigenvalues[order], apply_sign_convention(eigenvectors[:, order]))


def decompose(K) -> EigenSystem:
    """Full symmetric eigendecomposition of a Gram matrix (LAPACK ``syevd``)."""
    entries = K.entries if isinstance(K, GramMatrix) else np.asarray(K, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError(f"Gram matrix must be square, got shape {entries.shape}")
    try:
        w, V = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed on {entries.shape[0]}x"
                             f"{entries.shape[0]} matrix: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(V))):
        raise NumericalError("symmetric eigensolver returned non-finite eigenpairs "
                             "(non-finite Gram entries?)")
    return sorted_system(w, V)


def eigen_cutoff(eigenvalues) -> float:
    eigenvalues = np.asarray(eigenvalues)
    return CUTOFF * eigenvalues.shape[0] * float(np.max(eigenvalues))


def usable_rank(eigenvalues) -> int:
    """Number of eigenvalues above the cutoff ``1e-10 * n * lambda_max``."""
    eigenvalues = np.asarray(eigenvalues)
    return int(np.count_nonzero(eigenvalues > eigen_cutoff(eigenvalues)))


@dataclass(frozen=True, eq=False)
class Eigenmap:
    """Explicit feature map onto the ``m`` dominant kernel eigenfunctions.

    Attributes
    ----------
    psi : ndarray of shape (m, n)
        Row ``i`` is eigenvector ``i`` divided by ``sqrt(lambda_i)``.
    dictionary : ndarray of shape (n, d)
        Points the Gram matrix was built on.
    kernel : KernelConfig
    eigenvalues : ndarray of shape (m,)
        Kept eigenvalues, descending.
    vectors : ndarray of shape (n, m)
        The kept eigenvectors ``V_m``.
    """

    psi: np.ndarray
    dictionary: np.ndarray
    kernel: KernelConfig
    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def m(self) -> int:
        return self.psi.shape[0]

    @property
    def n(self) -> int:
        return self.psi.shape[1]

    @property
    def dim(self) -> int:
        return self.m

    def transform(self, X) -> np.ndarray:
        """Embed the rows of ``X``; returns shape (N, m)."""
        X = as_points(X, "X")
        if X.shape[1] != self.dictionary.shape[1]:
            raise ValueError(
                f"dimension mismatch: {X.shape[1]} vs {self.dictionary.shape[1]}"
            )
        return cross_kernel(self.kernel, X, self.dictionary) @ self.psi.T


def build_eigenmap(sys: EigenSystem, dictionary, kernel: KernelConfig, m: int | None = None) -> Eigenmap:
    """Keep the ``m`` leading eigenpairs (default: all usable ones)."""
    dictionary = as_points(dictionary, "dictionary")
    if dictionary.shape[0] != sys.n:
        raise ValueError(f"dictionary has {dictionary.shape[0]} points, eigensystem {sys.n}")
    rank = usable_rank(sys.eigenvalues)
    if m is None:
        m = rank
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    if m > rank:
        raise ValueError(f"m={m} exceeds the numerically usable rank {rank}")
    lam = sys.eigenvalues[:m].copy()
    V = sys.eigenvectors[:, :m].copy()
    psi = V.T / np.sqrt(lam)[:, None]
    for arr in (lam, V, psi):
        arr.setflags(write=False)
    dictionary = dictionary.copy()
    dictionary.setflags(write=False)
    return Eigenmap(psi, dictionary, kernel, lam, V)


def fit_eigenmap(kernel: KernelConfig, dictionary, m: int | None = None) -> Eigenmap:
    """Gram matrix, batch decomposition and eigenmap in one call."""
    K = gram_matrix(kernel, dictionary)
    return build_eigenmap(decompose(K), K.dictionary, kernel, m)


def embed(emap: Eigenmap, x) -> np.ndarray:
    """``psi @ k_x`` for a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    return emap.transform(x[None, :])[0]


def reconstruct_gram(emap: Eigenmap) -> np.ndarray:
    """Gram matrix rebuilt from dot products of the embedded dictionary.

    Computes ``(psi K)^T (psi K)``, which equals ``V_m Lambda_m V_m^T``.
    """
    K = gram_matrix(emap.kernel, emap.dictionary).entries
    F = emap.psi @ K
    return F.T @ F


def frobenius_error(K, K_hat) -> float:
    """Elementwise-normalized RMS error ``sqrt(mean((|k - k_hat| / |k|)^2))``."""
    K = np.asarray(K.entries if isinstance(K, GramMatrix) else K, dtype=float)
    K_hat = np.asarray(K_hat, dtype=float)
    if K.shape != K_hat.shape:
        raise ValueError(f"shape mismatch: {K.shape} vs {K_hat.shape}")
    if np.any(K == 0):
        raise ValueError("cannot normalize by zero kernel entries")
    rel = np.abs(K - K_hat) / np.abs(K)
    return float(np.sqrt(np.mean(rel**2)))


def principal_cosines(map_a: Eigenmap, map_b: Eigenmap) -> np.ndarray:
    """Cosines of the principal angles between two eigenfunction spans.

    Eigenfunction ``i`` of ``map_a`` is ``sum_k psi_a[i, k] phi(x_k)``, so the
    RKHS inner products between the two bases are ``psi_a K_ab psi_b^T``.
    Both bases are orthonormal, hence the singular values are the cosines.
    """
    if map_a.m != map_b.m:
        raise ValueError(f"subspace dimensions differ: {map_a.m} vs {map_b.m}")
    if map_a.kernel != map_b.kernel:
        raise ValueError("eigenmaps use different kernels")
    K_ab = cross_kernel(map_a.kernel, map_a.dictionary, map_b.dictionary)
    M = map_a.psi @ K_ab @ map_b.psi.T
    s = np.linalg.svd(M, compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def subspace_distance(map_a: Eigenmap, map_b: Eigenmap) -> float:
    """Root-sum-square of the principal angles, in ``[0, m pi / 2]``."""
    theta = np.arccos(principal_cosines(map_a, map_b))
    return float(np.sqrt(np.sum(theta**2)))

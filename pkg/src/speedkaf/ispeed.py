"""Incremental eigenmaps with weight transfer, and the novelty-gated variant.

A linear model on eigenfunction features has weights ``w`` in ``R^m``. When a
point joins the dictionary the eigenmap changes, so the weights are carried
over through their preimage ``k_w = V Lambda^{1/2} w`` (the kernel-vector
representation with ``psi k_w = w``) and re-projected with the new eigenmap.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field

import numpy as np

from speedkaf.errors import NumericalError
from speedkaf.kernels import KernelConfig, as_points, gram_matrix, kernel_vector
from speedkaf.rank1 import grow_eigensystem, reorthonormalize
from speedkaf.spectral import EigenSystem, Eigenmap, build_eigenmap, decompose


class TransferMode(enum.Enum):
    TRUNCATE = "truncate"
    NEAREST_NEIGHBOR = "nearest"
    EVALUATE = "evaluate"


def right_inverse(emap: Eigenmap) -> np.ndarray:
    """``V_m Lambda_m^{1/2}``, satisfying ``psi @ right_inverse(psi) = I_m``."""
    return emap.vectors * np.sqrt(emap.eigenvalues)


def weight_preimage(emap: Eigenmap, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (emap.m,):
        raise ValueError(f"weights must have length {emap.m}, got shape {w.shape}")
    return right_inverse(emap) @ w


@dataclass(frozen=True)
class NoveltyGate:
    """Admit a point when its squared distance to the dictionary is at least
    ``distance_threshold``.

    ``batch_size > 1`` defers admitted points and grows the eigensystem once
    that many have accumulated; pending points count as dictionary members
    for the novelty test.
    """

    distance_threshold: float
    batch_size: int = 1

    def __post_init__(self):
        if not self.distance_threshold >= 0:
            raise ValueError("distance_threshold must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass
class SpeedState:
    """Eigenmap, eigensystem and weights of an incrementally grown SPEED model.

    Mutated in place by :func:`ispeed_step` and :func:`sispeed_step`; use
    :meth:`snapshot` for an independent copy.
    """

    kernel: KernelConfig
    dictionary: np.ndarray
    eigensystem: EigenSystem
    eigenmap: Eigenmap
    weights: np.ndarray
    transfer_mode: TransferMode = TransferMode.TRUNCATE
    reorth_every: int | None = 50
    grows: int = 0
    pending: list = field(default_factory=list)

    @classmethod
    def from_batch(
        cls,
        kernel: KernelConfig,
        dictionary,
        m: int,
        weights=None,
        transfer_mode: TransferMode = TransferMode.TRUNCATE,
        reorth_every: int | None = 50,
    ) -> "SpeedState":
        K = gram_matrix(kernel, dictionary)
        sys = decompose(K)
        emap = build_eigenmap(sys, K.dictionary, kernel, m)
        w = np.zeros(m) if weights is None else np.array(weights, dtype=float)
        if w.shape != (m,):
            raise ValueError(f"weights must have length {m}")
        return cls(kernel, np.array(K.dictionary), sys, emap, w,
                   TransferMode(transfer_mode), reorth_every)

    @property
    def m(self) -> int:
        return self.eigenmap.m

    @property
    def n(self) -> int:
        return self.dictionary.shape[0]

    @property
    def dim(self) -> int:
        return self.m

    def transform(self, X) -> np.ndarray:
        return self.eigenmap.transform(X)

    def predict(self, X) -> np.ndarray:
        return self.transform(X) @ self.weights

    def snapshot(self) -> "SpeedState":
        return copy.deepcopy(self)

    def min_sq_distance(self, x) -> float:
        pts = self.dictionary
        if self.pending:
            pts = np.vstack([pts, np.asarray(self.pending)])
        diff = pts - np.asarray(x, dtype=float)
        return float(np.min(np.sum(diff * diff, axis=1)))


def transfer_weights(state: SpeedState, new_map: Eigenmap, new_point) -> np.ndarray:
    """Express ``state.weights`` in the coordinates of ``new_map``.

    ``new_map`` is built on ``state.dictionary`` plus ``new_point``. The
    preimage holds the model's values at the dictionary points, so it needs
    one more entry for ``new_point``:

    * truncate: zero, i.e. drop the new column of ``new_map.psi``;
    * nearest: the entry of the dictionary point closest to ``new_point``;
    * evaluate: the current model's prediction at ``new_point``, which is
      the value the nearest-neighbor entry approximates.

    Passing a map on the unchanged dictionary re-projects without padding.
    """
    old_map = state.eigenmap
    n = old_map.n
    k_w = weight_preimage(old_map, state.weights)
    if new_map.n == n:
        return new_map.psi @ k_w
    if new_map.n != n + 1:
        raise ValueError(
            f"new eigenmap has {new_map.n} columns, expected {n + 1} (old dictionary + 1)"
        )
    mode = TransferMode(state.transfer_mode)
    if mode is TransferMode.TRUNCATE:
        return new_map.psi[:, :n] @ k_w
    if mode is TransferMode.EVALUATE:
        value = float(state.predict(np.asarray(new_point, dtype=float)[None, :])[0])
        return new_map.psi @ np.append(k_w, value)
    diff = state.dictionary - np.asarray(new_point, dtype=float)
    nearest = int(np.argmin(np.sum(diff * diff, axis=1)))
    return new_map.psi @ np.append(k_w, k_w[nearest])


def _grow(state: SpeedState, x: np.ndarray) -> None:
    k_vec = kernel_vector(state.kernel, state.dictionary, x)
    sys = grow_eigensystem(state.eigensystem, k_vec, state.kernel.self_similarity())
    state.grows += 1
    if state.reorth_every and state.grows % state.reorth_every == 0:
        sys = reorthonormalize(sys)
    dictionary = np.vstack([state.dictionary, x[None, :]])
    try:
        new_map = build_eigenmap(sys, dictionary, state.kernel, state.m)
    except ValueError as exc:
        raise NumericalError(f"eigenmap lost rank after grow to n={dictionary.shape[0]}: {exc}") from exc
    state.weights = transfer_weights(state, new_map, x)
    state.eigensystem = sys
    state.eigenmap = new_map
    state.dictionary = dictionary


def ispeed_step(state: SpeedState, new_point) -> SpeedState:
    """Grow the eigensystem by one point, rebuild the top-m eigenmap and
    transfer the weights. Mutates and returns ``state``."""
    x = np.atleast_1d(np.asarray(new_point, dtype=float))
    if x.shape[0] != state.dictionary.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {state.dictionary.shape[1]}")
    _grow(state, x)
    return state


def sispeed_step(state: SpeedState, gate: NoveltyGate, new_point) -> tuple[SpeedState, bool]:
    """Novelty-gated :func:`ispeed_step`; returns ``(state, admitted)``."""
    x = np.atleast_1d(np.asarray(new_point, dtype=float))
    if state.min_sq_distance(x) < gate.distance_threshold:
        return state, False
    state.pending.append(x.copy())
    if len(state.pending) >= gate.batch_size:
        pending, state.pending = state.pending, []
        for p in pending:
            _grow(state, p)
    return state, True


def flush_pending(state: SpeedState) -> SpeedState:
    """Apply any deferred admissions immediately."""
    pending, state.pending = state.pending, []
    for p in pending:
        _grow(state, p)
    return state


def sparsify(points, distance_threshold: float) -> np.ndarray:
    """Greedy novelty filter: keep points whose squared distance to every
    previously kept point is at least ``distance_threshold``."""
    points = as_points(points)
    kept = [points[0]]
    for x in points[1:]:
        diff = np.asarray(kept) - x
        if np.min(np.sum(diff * diff, axis=1)) >= distance_threshold:
            kept.append(x)
    return np.asarray(kept)

"""Online adaptive filters.

Linear filters (LMS, RLS, extended RLS) act on an explicit feature vector;
the kernel filters (KLMS, QKLMS) keep a growing set of centers and act on
raw inputs. Every ``step`` predicts with the current weights first, then
updates, and returns ``(prediction, error)``.
"""

from __future__ import annotations

import numpy as np

from speedkaf.errors import NumericalError
from speedkaf.kernels import KernelConfig, as_points, cross_kernel, squared_distances


def _finite_vector(phi, dim: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (dim,):
        raise ValueError(f"feature vector must have shape ({dim},), got {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise NumericalError("non-finite feature vector")
    return phi


def _finite_scalar(y) -> float:
    y = float(y)
    if not np.isfinite(y):
        raise NumericalError("non-finite target")
    return y


class LMSFilter:
    """Least mean squares: ``w <- w + eta * e * phi``."""

    def __init__(self, dim: int, learning_rate: float):
        if dim < 1:
            raise ValueError("dim must be positive")
        if learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        self.weights = np.zeros(dim)
        self.learning_rate = float(learning_rate)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def predict(self, Phi) -> np.ndarray:
        return np.asarray(Phi, dtype=float) @ self.weights

    def step(self, phi, y) -> tuple[float, float]:
        phi = _finite_vector(phi, self.dim)
        y = _finite_scalar(y)
        prediction = float(self.weights @ phi)
        error = y - prediction
        self.weights = self.weights + self.learning_rate * error * phi
        if not np.all(np.isfinite(self.weights)):
            raise NumericalError("LMS weights diverged")
        return prediction, error


class RLSFilter:
    """Exponentially weighted recursive least squares.

    Parameters
    ----------
    dim : int
        Feature dimension.
    forgetting : float
        Forgetting factor in (0, 1].
    delta : float
        ``P`` starts at ``delta * I``; with ``forgetting = 1`` the weights
        solve ridge regression with penalty ``1 / delta``.
    """

    def __init__(self, dim: int, forgetting: float = 1.0, delta: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be positive")
        if not 0.0 < forgetting <= 1.0:
            raise ValueError("forgetting must lie in (0, 1]")
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.weights = np.zeros(dim)
        self.P = delta * np.eye(dim)
        self.forgetting = float(forgetting)
        self.delta = float(delta)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def predict(self, Phi) -> np.ndarray:
        return np.asarray(Phi, dtype=float) @ self.weights

    def _gain(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Pphi = self.P @ phi
        denom = self.forgetting + phi @ Pphi
        if not denom > 0:
            raise NumericalError(f"RLS gain denominator is {denom}; P lost positive definiteness")
        return Pphi / denom, Pphi

    def step(self, phi, y) -> tuple[float, float]:
        phi = _finite_vector(phi, self.dim)
        y = _finite_scalar(y)
        prediction = float(self.weights @ phi)
        error = y - prediction
        g, Pphi = self._gain(phi)
        P = (self.P - np.outer(g, Pphi)) / self.forgetting
        self.P = 0.5 * (P + P.T)
        self.weights = self.weights + g * error
        return prediction, error


class ExRLSFilter(RLSFilter):
    """RLS with a linear state-transition model.

    The weights follow ``w_i = A w_{i-1} + noise``; ``A`` defaults to
    ``alpha * I``. With ``A = I`` and ``q = 0`` every step performs exactly
    the floating-point operations of :class:`RLSFilter`.
    """

    def __init__(self, dim: int, forgetting: float = 1.0, delta: float = 1.0,
                 transition=None, alpha: float = 1.0, process_noise: float = 0.0):
        super().__init__(dim, forgetting, delta)
        if process_noise < 0:
            raise ValueError("process_noise must be non-negative")
        if transition is None:
            self.transition = None
            self.alpha = float(alpha)
        else:
            A = np.array(transition, dtype=float)
            if A.shape != (dim, dim):
                raise ValueError(f"transition must be {dim}x{dim}, got {A.shape}")
            self.transition = A
            self.alpha = None
        self.process_noise = float(process_noise)

    def _apply(self, v: np.ndarray) -> np.ndarray:
        return self.alpha * v if self.transition is None else self.transition @ v

    def _congruence(self, M: np.ndarray) -> np.ndarray:
        if self.transition is None:
            return (self.alpha * self.alpha) * M
        return self.transition @ M @ self.transition.T

    def step(self, phi, y) -> tuple[float, float]:
        phi = _finite_vector(phi, self.dim)
        y = _finite_scalar(y)
        prediction = float(self.weights @ phi)
        error = y - prediction
        k, Pphi = self._gain(phi)
        P = self._congruence((self.P - np.outer(k, Pphi)) / self.forgetting)
        if self.process_noise:
            P = P + self.forgetting * self.process_noise * np.eye(self.dim)
        self.P = 0.5 * (P + P.T)
        self.weights = self._apply(self.weights) + self._apply(k) * error
        return prediction, error


class KLMSFilter:
    """Kernel LMS: every sample becomes a center with coefficient ``eta * e``."""

    def __init__(self, kernel: KernelConfig, learning_rate: float, input_dim: int | None = None):
        if learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        self.kernel = kernel
        self.learning_rate = float(learning_rate)
        self._centers = None if input_dim is None else np.empty((0, input_dim))
        self._coefficients = np.empty(0)
        self._size = 0

    @property
    def centers(self) -> np.ndarray:
        if self._centers is None:
            return np.empty((0, 0))
        return self._centers[: self._size]

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefficients[: self._size]

    def __len__(self) -> int:
        return self._size

    def predict(self, X) -> np.ndarray:
        X = as_points(X, "X")
        if self._size == 0:
            return np.zeros(X.shape[0])
        return cross_kernel(self.kernel, X, self.centers) @ self.coefficients

    def _append(self, x: np.ndarray, c: float) -> None:
        if self._centers is None:
            self._centers = np.empty((0, x.shape[0]))
        if self._size == self._centers.shape[0]:
            cap = max(16, 2 * self._size)
            centers = np.empty((cap, x.shape[0]))
            centers[: self._size] = self._centers[: self._size]
            coefficients = np.empty(cap)
            coefficients[: self._size] = self._coefficients[: self._size]
            self._centers, self._coefficients = centers, coefficients
        self._centers[self._size] = x
        self._coefficients[self._size] = c
        self._size += 1

    def _prepare(self, x, y) -> tuple[np.ndarray, float]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise NumericalError("non-finite input")
        if self._centers is not None and x.shape != (self._centers.shape[1],):
            raise ValueError(f"input must have shape ({self._centers.shape[1]},), got {x.shape}")
        return x, _finite_scalar(y)

    def step(self, x, y) -> tuple[float, float]:
        x, y = self._prepare(x, y)
        prediction = float(self.predict(x[None, :])[0])
        error = y - prediction
        self._append(x, self.learning_rate * error)
        return prediction, error


class QKLMSFilter(KLMSFilter):
    """Quantized kernel LMS.

    A sample whose squared distance to the nearest center is below
    ``quantization`` updates that center's coefficient (lowest index on
    ties) instead of becoming a new center.
    """

    def __init__(self, kernel: KernelConfig, learning_rate: float, quantization: float,
                 input_dim: int | None = None):
        super().__init__(kernel, learning_rate, input_dim)
        if not quantization >= 0:
            raise ValueError("quantization must be non-negative")
        self.quantization = float(quantization)

    def step(self, x, y) -> tuple[float, float]:
        x, y = self._prepare(x, y)
        if self._size == 0:
            prediction = 0.0
            error = y
            self._append(x, self.learning_rate * error)
            return prediction, error
        centers = self.centers
        k = cross_kernel(self.kernel, x[None, :], centers)[0]
        prediction = float(k @ self.coefficients)
        error = y - prediction
        dist = squared_distances(x[None, :], centers)[0]
        nearest = int(np.argmin(dist))
        if dist[nearest] < self.quantization:
            self._coefficients[nearest] += self.learning_rate * error
        else:
            self._append(x, self.learning_rate * error)
        return prediction, error

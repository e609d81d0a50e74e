"""Rank-1 updates of a symmetric eigendecomposition.

``rank1_update`` returns the eigensystem of ``V diag(lam) V^T + rho kappa kappa^T``
from that of the unperturbed matrix. The eigenvalues are the roots of the
secular equation ``1 + rho sum_i kt_i^2 / (lam_i - x) = 0`` with
``kt = V^T kappa``; each root is confined to its interlacing interval and
solved for as an offset from the nearer pole so that roots crowding an old
eigenvalue keep full relative accuracy. Eigenvectors are ``D_i^{-1} kt``
normalised, where ``kt`` is recomputed from the converged roots (Loewner's
formula) so that the new eigenvector matrix stays numerically orthogonal
over long chains of updates.

``grow_eigensystem`` expands the eigensystem of a Gram matrix ``K_n`` to that
of ``K_{n+1}`` through a zero-padded expansion followed by two rank-1 updates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from speedkaf.errors import NumericalError
from speedkaf.spectral import EigenSystem, apply_sign_convention, sorted_system

#: components of ``V^T kappa`` below this fraction of its norm are deflated
ZERO_TOL = 1e-12
#: eigenvalues closer than this fraction of ``max|lambda|`` are treated as equal
TIE_TOL = 1e-12
MAX_ITER = 200

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Rank1Perturbation:
    rho: float
    kappa: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.rho) or self.rho == 0:
            raise ValueError(f"rho must be finite and nonzero, got {self.rho}")
        object.__setattr__(self, "kappa", np.asarray(self.kappa, dtype=float))


@dataclass
class _SecularSolution:
    d: np.ndarray        # ascending poles, rho > 0 convention
    z: np.ndarray
    rho: float
    origin: np.ndarray   # index of the pole each root is measured from
    tau: np.ndarray      # root_j = d[origin[j]] + tau[j]

    @property
    def roots(self) -> np.ndarray:
        return self.d[self.origin] + self.tau

    def pole_gaps(self) -> np.ndarray:
        """``G[i, j] = d_i - root_j`` without cancellation."""
        return (self.d[:, None] - self.d[self.origin][None, :]) - self.tau[None, :]


def _solve_secular(d: np.ndarray, z: np.ndarray, rho: float, max_iter: int = MAX_ITER) -> _SecularSolution:
    """Roots of ``1 + rho sum z_i^2 / (d_i - x)`` for strictly increasing ``d``,
    nonzero ``z`` and ``rho > 0``.

    Root ``j`` lies in ``(d_j, d_{j+1})`` (the last in ``(d_k, d_k + rho z^T z)``).
    A midpoint test picks the nearer pole as origin; Newton's method is then
    run on ``g(t) = rho z_o^2 - t (1 + rho sum_{i != o} z_i^2 / (d_i - d_o - t))``,
    which has no pole at the origin, and safeguarded by bisection.
    """
    k = d.shape[0]
    z2 = z * z
    znorm2 = float(np.sum(z2))
    idx = np.arange(k)

    upper = np.empty(k)
    upper[:-1] = d[1:]
    upper[-1] = d[-1] + rho * znorm2
    half = 0.5 * (upper - d)

    # midpoint test: w(mid) >= 0 means the root sits in the left half
    mid = d + half
    with np.errstate(divide="ignore"):
        w_mid = 1.0 + rho * np.sum(z2[None, :] / (d[None, :] - mid[:, None]), axis=1)
    left = w_mid >= 0
    left[-1] = True
    origin = np.where(left, idx, idx + 1)
    origin[-1] = k - 1
    lo = np.where(left, 0.0, -half)
    hi = np.where(left, half, 0.0)
    hi[-1] = rho * znorm2

    delta = d[None, :] - d[origin][:, None]          # delta[j, i] = d_i - origin_j
    mask = np.ones((k, k), dtype=bool)
    mask[idx, origin] = False
    z2_off = np.where(mask, z2[None, :], 0.0)
    z2_o = z2[origin]

    tau = 0.5 * (lo + hi)
    active = np.ones(k, dtype=bool)
    for _ in range(max_iter):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        t = tau[rows]
        diff = delta[rows] - t[:, None]
        diff[~mask[rows]] = 1.0
        terms = z2_off[rows] / diff
        s1 = np.sum(terms, axis=1)
        s2 = np.sum(terms / diff, axis=1)
        g = rho * z2_o[rows] - t * (1.0 + rho * s1)
        dg = -(1.0 + rho * s1) - t * rho * s2
        # rounding-error bound on the evaluation of g
        g_err = 8 * _EPS * (rho * z2_o[rows] + np.abs(t) * (1.0 + rho * np.sum(np.abs(terms), axis=1)))

        # w = -g / t shares its sign with -g*t; w increases through the root
        w_sign = -np.sign(g) * np.sign(t)
        r_lo, r_hi = lo[rows], hi[rows]
        r_lo = np.where(w_sign < 0, t, r_lo)
        r_hi = np.where(w_sign > 0, t, r_hi)
        lo[rows], hi[rows] = r_lo, r_hi

        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t - g / dg
        inside = np.isfinite(newton) & (newton >= r_lo) & (newton <= r_hi)
        t_new = np.where(inside, newton, 0.5 * (r_lo + r_hi))
        converged = np.abs(g) <= g_err
        t_new = np.where(converged, t, t_new)
        step = np.abs(t_new - t)
        tau[rows] = t_new
        width = r_hi - r_lo
        scale = np.maximum(np.abs(t_new), np.finfo(float).tiny)
        done = converged | (step <= 4 * _EPS * scale) | (width <= 4 * _EPS * scale)
        active[rows[done]] = False
    else:
        if np.any(active):
            bad = np.nonzero(active)[0]
            raise NumericalError(
                f"secular root finder did not converge in {max_iter} iterations "
                f"for {bad.size} of {k} roots (first index {bad[0]}, bracket "
                f"[{lo[bad[0]]:.3e}, {hi[bad[0]]:.3e}] around pole {d[origin[bad[0]]]:.6e})"
            )
    return _SecularSolution(d=d, z=z, rho=rho, origin=origin, tau=tau)


def _loewner_z(sol: _SecularSolution) -> np.ndarray:
    """Perturbation vector for which the computed roots are exact.

    ``zhat_i^2 = prod_j (root_j - d_i) / (rho prod_{j != i} (d_j - d_i))``,
    evaluated as a product of positive O(1) ratios: root ``j`` is paired with
    pole ``j`` when ``j < i``, with pole ``j + 1`` when ``i <= j < k - 1`` and
    with ``rho`` for the last root.
    """
    d, rho = sol.d, sol.rho
    k = d.shape[0]
    i = np.arange(k)[:, None]
    j = np.arange(k)[None, :]
    den = np.where(j < i, d[j] - d[i], d[np.minimum(j + 1, k - 1)] - d[i])
    den[:, -1] = rho
    ratio = -sol.pole_gaps() / den
    if not np.all(ratio > 0):
        # rounding broke strict interlacing somewhere; keep the input vector
        return sol.z
    zhat = np.exp(0.5 * np.sum(np.log(ratio), axis=1))
    return np.copysign(zhat, sol.z)


def _deflate(d, z, V):
    """Zero negligible components of ``z`` and rotate tied poles together.

    ``d`` ascending. Mutates ``z`` and ``V`` in place and returns the mask of
    components that take part in the secular equation.
    """
    znorm = float(np.linalg.norm(z))
    active = np.abs(z) > ZERO_TOL * znorm
    z[~active] = 0.0
    tie = TIE_TOL * max(float(np.max(np.abs(d))), np.finfo(float).tiny)
    prev = -1
    for j in np.nonzero(active)[0]:
        if prev >= 0 and d[j] - d[prev] <= tie:
            r = float(np.hypot(z[prev], z[j]))
            c, s = z[j] / r, z[prev] / r
            vp, vj = V[:, prev].copy(), V[:, j].copy()
            V[:, prev] = c * vp - s * vj
            V[:, j] = s * vp + c * vj
            z[prev], z[j] = 0.0, r
            active[prev] = False
        prev = j
    return active


def _normalise(eigenvalues, rho, kappa_tilde):
    """Map to the ``rho > 0``, ascending convention used by the solver."""
    sign = 1.0 if rho > 0 else -1.0
    d = sign * np.asarray(eigenvalues, dtype=float)
    order = np.argsort(d, kind="stable")
    return sign, order, d[order], np.array(kappa_tilde, dtype=float)[order]


def secular_roots(eigenvalues, rho: float, kappa_tilde, max_iter: int = MAX_ITER) -> np.ndarray:
    """Eigenvalues of ``diag(eigenvalues) + rho kt kt^T``, sorted descending.

    ``kappa_tilde`` is the perturbation already expressed in the eigenbasis.
    Deflated pairs (negligible ``kt_i`` or tied eigenvalues) pass through.
    """
    if not np.isfinite(rho) or rho == 0:
        raise ValueError(f"rho must be finite and nonzero, got {rho}")
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if np.linalg.norm(kappa_tilde) == 0:
        return np.sort(eigenvalues)[::-1].copy()
    sign, _, d, z = _normalise(eigenvalues, rho, kappa_tilde)
    dummy = np.eye(d.shape[0])
    active = _deflate(d, z, dummy)
    roots = d.copy()
    if np.any(active):
        sol = _solve_secular(d[active], z[active], abs(rho), max_iter)
        roots[active] = sol.roots
    return np.sort(sign * roots)[::-1]


def update_eigenvectors(V, eigenvalues_old, eigenvalues_new, kappa_tilde) -> np.ndarray:
    """Apply ``V'_i = V D_i^{-1} kt / ||D_i^{-1} kt||`` with ``D_i = Lambda - lam'_i I``.

    All arrays are paired positionally; ``eigenvalues_new`` must not coincide
    with any old eigenvalue (deflate first). The sign convention is applied.
    """
    V = np.asarray(V, dtype=float)
    lam = np.asarray(eigenvalues_old, dtype=float)
    new = np.asarray(eigenvalues_new, dtype=float)
    kt = np.asarray(kappa_tilde, dtype=float)
    if np.linalg.norm(kt) == 0:
        return V.copy()
    D = lam[:, None] - new[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        U = kt[:, None] / D
        norms = np.linalg.norm(U, axis=0)
    if not np.all(np.isfinite(norms)) or np.any(norms == 0):
        raise NumericalError(
            "D_i^{-1} kappa overflowed: an updated eigenvalue coincides with an "
            "old one; deflate before updating eigenvectors"
        )
    return apply_sign_convention(V @ (U / norms))


def rank1_update(system: EigenSystem, rho: float, kappa, max_iter: int = MAX_ITER) -> EigenSystem:
    """Eigensystem of ``V Lambda V^T + rho kappa kappa^T``."""
    pert = Rank1Perturbation(rho, kappa)
    V = system.eigenvectors
    kt = V.T @ pert.kappa
    if np.linalg.norm(kt) == 0:
        return system
    sign, order, d, z = _normalise(system.eigenvalues, pert.rho, kt)
    W = V[:, order].copy()
    active = _deflate(d, z, W)
    lam = d.copy()
    if np.any(active):
        sol = _solve_secular(d[active], z[active], abs(pert.rho), max_iter)
        lam[active] = sol.roots
        zhat = _loewner_z(sol)
        U = zhat[:, None] / sol.pole_gaps()
        U /= np.linalg.norm(U, axis=0)
        W[:, active] = W[:, active] @ U
    return sorted_system(sign * lam, W)


Rank1Algorithm = Callable[[EigenSystem, float, np.ndarray], EigenSystem]


def grow_eigensystem(
    system: EigenSystem,
    k_vec,
    k_self: float = 1.0,
    update: Rank1Algorithm = rank1_update,
) -> EigenSystem:
    """Eigensystem of the Gram matrix extended by one point.

    ``k_vec`` holds the kernel values between the new point and the existing
    dictionary and ``k_self`` its self-similarity (1 for the Gaussian kernel).
    The zero-padded matrix ``[[K, 0], [0, k_self/4]]`` gains
    ``rho k1 k1^T - rho k2 k2^T`` with ``rho = 4/k_self``,
    ``k1 = [k_vec, k_self/2]`` and ``k2 = [k_vec, k_self/4]``.
    """
    k_vec = np.asarray(k_vec, dtype=float)
    n = system.n
    if k_vec.shape != (n,):
        raise ValueError(f"k_vec must have length {n}, got shape {k_vec.shape}")
    if not k_self > 0:
        raise ValueError(f"k_self must be positive, got {k_self}")
    lam = np.append(system.eigenvalues, k_self / 4.0)
    V = np.zeros((n + 1, n + 1))
    V[:n, :n] = system.eigenvectors
    V[n, n] = 1.0
    padded = EigenSystem(lam, V)
    rho = 4.0 / k_self
    kappa1 = np.append(k_vec, k_self / 2.0)
    kappa2 = np.append(k_vec, k_self / 4.0)
    grown = update(padded, rho, kappa1)
    grown = update(grown, -rho, kappa2)
    return sorted_system(grown.eigenvalues, grown.eigenvectors)


def interlacing_violations(old, new, rho: float, kappa_norm2: float, tol: float = 0.0) -> int:
    """Count violations of the rank-1 interlacing bounds.

    ``old`` and ``new`` are the spectra before and after adding
    ``rho kappa kappa^T``; ``kappa_norm2 = kappa^T kappa`` (invariant under the
    orthogonal change to the eigenbasis). With ascending order and ``rho > 0``:
    ``old_i <= new_i <= old_{i+1}`` and ``old_n <= new_n <= old_n + rho kappa_norm2``;
    mirrored for ``rho < 0``.
    """
    a = np.sort(np.asarray(old, dtype=float))
    b = np.sort(np.asarray(new, dtype=float))
    if a.shape != b.shape:
        raise ValueError("spectra differ in length")
    lower = np.empty_like(a)
    upper = np.empty_like(a)
    if rho > 0:
        lower[:] = a
        upper[:-1] = a[1:]
        upper[-1] = a[-1] + rho * kappa_norm2
    else:
        upper[:] = a
        lower[1:] = a[:-1]
        lower[0] = a[0] + rho * kappa_norm2
    return int(np.count_nonzero((b < lower - tol) | (b > upper + tol)))


def reorthonormalize(system: EigenSystem) -> EigenSystem:
    """Modified Gram-Schmidt on the eigenvectors, in eigenvalue order."""
    Q = np.array(system.eigenvectors, dtype=float)
    n = Q.shape[1]
    for i in range(n):
        norm = np.linalg.norm(Q[:, i])
        if norm == 0:
            raise NumericalError(f"eigenvector {i} vanished during re-orthonormalization")
        Q[:, i] /= norm
        if i + 1 < n:
            Q[:, i + 1 :] -= np.outer(Q[:, i], Q[:, i] @ Q[:, i + 1 :])
    return EigenSystem(system.eigenvalues.copy(), Q)

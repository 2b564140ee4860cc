"""FastICA baseline: fixed-point negentropy maximization with deflation."""

from __future__ import annotations

import warnings

import numpy as np

from .core import normalize_columns, rng
from .mixing import MixtureSet
from .mca import SeparationResult

_NONLINEARITIES = ("tanh", "cube")


def _contrast(name: str, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if name == "tanh":
        g = np.tanh(u)
        return g, 1.0 - g * g
    if name == "cube":
        return u ** 3, 3.0 * u * u
    raise ValueError(f"unknown nonlinearity {name!r}; choose from {_NONLINEARITIES}")


def fastica(X, n: int, nonlinearity: str = "tanh", seed: int = 0,
            max_iter: int = 200, tol: float = 1e-6) -> SeparationResult:
    """Estimate n independent components from mixtures X (one channel per row).

    Centering and PCA whitening (dimension reduction to the n leading
    eigendirections) happen internally. Units are extracted one at a time and
    kept decorrelated from the previously found ones by Gram-Schmidt; a unit
    converges when the old and new weight vectors point in the same direction
    up to sign within `tol`. Non-convergence is reported per unit via a
    warning and in result.info["converged"].
    """
    data = X.data if isinstance(X, MixtureSet) else np.atleast_2d(np.asarray(X, dtype=float))
    m, t = data.shape
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got n={n}, m={m}")
    _contrast(nonlinearity, np.zeros(1))  # validate the name early

    mean = data.mean(axis=1)
    centered = data - mean[:, None]
    cov = centered @ centered.T / t
    evals, evecs = np.linalg.eigh(cov)
    top = slice(m - n, m)
    if evals[top].min() <= 1e-12 * max(evals.max(), 1e-300):
        raise ValueError("covariance is rank deficient in the leading subspace")
    V = (evecs[:, top] / np.sqrt(evals[top])).T  # n x m PCA whitening map
    Z = V @ centered

    gen = rng(seed)
    W = np.zeros((n, n))
    trace_rows = []
    converged = []
    for p in range(n):
        w = gen.standard_normal(n)
        w /= np.linalg.norm(w)
        delta = np.inf
        for it in range(max_iter):
            wz = w @ Z
            g, gprime = _contrast(nonlinearity, wz)
            w_new = Z @ g / t - gprime.mean() * w
            w_new -= W[:p].T @ (W[:p] @ w_new)  # deflation: stay orthogonal
            norm = np.linalg.norm(w_new)
            if norm == 0:
                break
            w_new /= norm
            delta = 1.0 - abs(float(w_new @ w))
            w = w_new
            trace_rows.append((p, it, delta))
            if delta < tol:
                break
        ok = delta < tol
        converged.append(ok)
        if not ok:
            warnings.warn(
                f"fastica unit {p} did not converge after {max_iter} iterations "
                f"(final delta {delta:.3g})", RuntimeWarning)
        W[p] = w

    S_hat = W @ Z
    unmix = W @ V  # n x m demixing on centered data
    A_hat = normalize_columns(np.linalg.pinv(unmix))
    trace = np.array(trace_rows) if trace_rows else np.zeros((0, 3))
    return SeparationResult(
        A_hat=A_hat, S_hat=S_hat, trace=trace, iterations_run=len(trace_rows),
        info={"converged": converged, "mean": mean, "whitening": V,
              "trace_columns": ("unit", "iteration", "delta")})

"""Instantaneous linear mixtures X = A S + N, plus centering and whitening."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import normalize_columns, rng


@dataclass(frozen=True)
class MixtureSet:
    """Observed channels, one per row, with the injected noise level recorded."""

    data: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        object.__setattr__(self, "data", data)
        if not np.all(np.isfinite(data)):
            raise ValueError("mixture data must be finite")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class WhiteningTransform:
    """Affine map z = matrix @ (x - mean) giving unit sample covariance."""

    mean: np.ndarray
    matrix: np.ndarray

    def apply(self, data: np.ndarray) -> np.ndarray:
        return self.matrix @ (np.asarray(data, dtype=float) - self.mean[:, None])


def _as_data(x) -> np.ndarray:
    if isinstance(x, MixtureSet):
        return x.data
    return np.atleast_2d(np.asarray(x, dtype=float))


def random_mixing_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """Random column-normalized m x n mixing matrix, deterministic per seed."""
    if n < 1 or m < n:
        raise ValueError(f"need m >= n >= 1, got m={m}, n={n} (underdetermined mixing rejected)")
    return normalize_columns(rng(seed).standard_normal((m, n)))


def mix(sources: np.ndarray, A: np.ndarray, psnr_db: float | None = None,
        seed: int = 0) -> MixtureSet:
    """Mix sources (rows) through A, optionally adding white Gaussian noise.

    The noise standard deviation follows the image PSNR convention
    sigma = peak * 10^(-psnr_db/20) with peak = max|S|.
    """
    S = np.atleast_2d(np.asarray(sources, dtype=float))
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != S.shape[0]:
        raise ValueError(f"mixing matrix shape {A.shape} does not accept {S.shape[0]} sources")
    X = A @ S
    sigma = 0.0
    if psnr_db is not None:
        if psnr_db <= 0:
            raise ValueError("psnr_db must be positive")
        peak = float(np.max(np.abs(S)))
        sigma = peak * 10.0 ** (-psnr_db / 20.0)
        X = X + sigma * rng(seed).standard_normal(X.shape)
    return MixtureSet(X, sigma)


def center(X) -> tuple[MixtureSet | np.ndarray, np.ndarray]:
    """Remove per-row means; adding the returned mean vector back restores the input."""
    data = _as_data(X)
    mean = data.mean(axis=1)
    centered = data - mean[:, None]
    if isinstance(X, MixtureSet):
        return MixtureSet(centered, X.noise_sigma), mean
    return centered, mean


def whiten(X, eps_eig_rel: float = 1e-10) -> tuple[MixtureSet | np.ndarray, WhiteningTransform]:
    """EVD whitening: output rows have identity sample covariance.

    Covariance convention is C = Xc Xcᵀ / t on the centered data. Eigenvalues
    at or below eps_eig_rel times the largest are treated as rank deficiency.
    """
    data = _as_data(X)
    mean = data.mean(axis=1)
    centered = data - mean[:, None]
    t = centered.shape[1]
    cov = centered @ centered.T / t
    evals, evecs = np.linalg.eigh(cov)
    eps = eps_eig_rel * float(evals[-1])
    if evals[0] <= eps:
        raise ValueError(
            f"covariance is rank deficient: eigenvalue {evals[0]:.6g} <= threshold {eps:.6g}")
    matrix = (evecs / np.sqrt(evals)).T  # rows: lambda^(-1/2) eᵀ
    transform = WhiteningTransform(mean, matrix)
    white = matrix @ centered
    if isinstance(X, MixtureSet):
        return MixtureSet(white, X.noise_sigma), transform
    return white, transform

"""Separation quality metrics and scale/permutation alignment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class AlignmentMap:
    """Permutation, per-source sign and positive scale mapping truth to estimate."""

    permutation: tuple[int, ...]  # estimate row i matches true source permutation[i]
    signs: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ValueError("permutation must be a bijection")
        if np.any(np.asarray(self.scales) <= 0):
            raise ValueError("scales must be positive")


@dataclass
class MetricReport:
    """Per-source correlation and error metrics plus the mixing criterion."""

    rho: np.ndarray
    mean_abs_rho: float
    c_a: float
    mse: np.ndarray
    psnr_db: np.ndarray
    extras: dict = field(default_factory=dict)


def correlation(s_hat: np.ndarray, s: np.ndarray) -> float:
    """Pearson correlation coefficient between two equal-length signals."""
    a = np.asarray(s_hat, dtype=float).ravel()
    b = np.asarray(s, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    a = a - a.mean()
    b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero-variance input")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def mse(s_hat: np.ndarray, s: np.ndarray) -> float:
    a = np.asarray(s_hat, dtype=float)
    b = np.asarray(s, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(s_hat: np.ndarray, s: np.ndarray, peak: float) -> float:
    """10 log10(peak^2 / MSE); +inf when the signals coincide."""
    if peak <= 0:
        raise ValueError("peak must be positive")
    err = mse(s_hat, s)
    if err == 0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / err))


def mixing_criterion(A: np.ndarray, A_hat: np.ndarray) -> float:
    """Frobenius distance of the permuted, rescaled product pinv(A_hat) @ A from I.

    Zero (within round-off) exactly when A_hat equals A up to column
    permutation and scaling. The permutation is chosen by the Hungarian
    assignment on |pinv(A_hat) @ A|; the diagonal is then scaled to one.
    """
    A = np.asarray(A, dtype=float)
    A_hat = np.asarray(A_hat, dtype=float)
    if A.shape != A_hat.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {A_hat.shape}")
    n = A.shape[1]
    if np.linalg.matrix_rank(A_hat) < n:
        raise ValueError("estimated mixing matrix is rank deficient")
    M = np.linalg.pinv(A_hat) @ A
    rows, cols = linear_sum_assignment(-np.abs(M))
    perm = np.empty(n, dtype=int)
    perm[cols] = rows  # place matched entry (rows[i], cols[i]) on the diagonal
    Mp = M[perm, :]
    diag = np.diag(Mp).copy()
    if np.any(diag == 0):
        raise ValueError("degenerate assignment: zero diagonal entry after permutation")
    scaled = Mp / diag[:, None]
    return float(np.linalg.norm(np.eye(n) - scaled, "fro"))


def align(S_hat: np.ndarray, S: np.ndarray) -> tuple[AlignmentMap, np.ndarray]:
    """Match estimated sources to ground truth with the Hungarian algorithm.

    Cost of pairing estimate i with truth j is 1 - |rho(i, j)|. The returned
    aligned copy is reordered to the truth's row order with sign and scale
    divided out, so aligned row j compares directly with S row j.
    """
    S_hat = np.atleast_2d(np.asarray(S_hat, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S_hat.shape != S.shape:
        raise ValueError(f"shape mismatch: {S_hat.shape} vs {S.shape}")
    n = S.shape[0]
    cost = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            cost[i, j] = 1.0 - abs(correlation(S_hat[i], S[j]))
    rows, cols = linear_sum_assignment(cost)
    perm = tuple(int(c) for c in cols)  # estimate i explains truth perm[i]

    signs = np.empty(n)
    scales = np.empty(n)
    aligned = np.empty_like(S)
    for i, j in enumerate(perm):
        inner = float(S_hat[i] @ S[j])
        denom = float(S[j] @ S[j])
        if denom == 0 or inner == 0:
            # fall back to the correlation sign and unit scale for centered data
            sign = np.sign(correlation(S_hat[i], S[j])) or 1.0
            scale = 1.0
        else:
            sign = 1.0 if inner > 0 else -1.0
            scale = abs(inner) / denom  # factor mapping truth j to estimate i
        signs[i] = sign
        scales[i] = scale
        aligned[j] = S_hat[i] / (sign * scale)
    return AlignmentMap(perm, signs, scales), aligned


def evaluate(S_hat: np.ndarray, S: np.ndarray, A: np.ndarray | None = None,
             A_hat: np.ndarray | None = None, peak: float | None = None) -> MetricReport:
    """Full metric report: align, then per-source rho/mse/psnr and C_A."""
    amap, aligned = align(S_hat, S)
    n = np.atleast_2d(S).shape[0]
    rho = np.array([correlation(aligned[j], np.atleast_2d(S)[j]) for j in range(n)])
    errs = np.array([mse(aligned[j], np.atleast_2d(S)[j]) for j in range(n)])
    pk = float(np.max(np.abs(S))) if peak is None else peak
    psnrs = np.array([psnr(aligned[j], np.atleast_2d(S)[j], pk) for j in range(n)])
    c_a = float("nan")
    if A is not None and A_hat is not None:
        c_a = mixing_criterion(A, A_hat)
    return MetricReport(rho, float(np.mean(np.abs(rho))), c_a, errs, psnrs,
                        extras={"alignment": amap})

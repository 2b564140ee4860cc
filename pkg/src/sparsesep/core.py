"""Shared numerical helpers used across the toolkit."""

from __future__ import annotations

import numpy as np


class SolverError(RuntimeError):
    """An iterative solver hit an unrecoverable numerical condition."""


def rng(seed: int) -> np.random.Generator:
    """Named 64-bit generator (PCG64); every stochastic entry point takes a seed."""
    return np.random.default_rng(seed)


def normalize_columns(A: np.ndarray) -> np.ndarray:
    """Return a copy of A with unit l2-norm columns.

    Raises ValueError on an exactly zero column (normalizing it is undefined).
    """
    A = np.asarray(A, dtype=float)
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero column")
    return A / norms


def mad_sigma(x: np.ndarray) -> float:
    """Robust noise scale: 1.4826 * median(|x - median(x)|)."""
    x = np.asarray(x, dtype=float).ravel()
    med = np.median(x)
    return 1.4826 * float(np.median(np.abs(x - med)))

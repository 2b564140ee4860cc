"""Pursuit and thresholding primitives shared by every solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import SolverError
from .transforms import BlockStructure, Dictionary


def soft_threshold(x: np.ndarray, delta: float) -> np.ndarray:
    """sign(x) * max(|x| - delta, 0), elementwise."""
    if delta < 0:
        raise ValueError("threshold must be >= 0")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - delta, 0.0)


def hard_threshold(x: np.ndarray, delta: float) -> np.ndarray:
    """Keep entries with |x| > delta, zero the rest."""
    if delta < 0:
        raise ValueError("threshold must be >= 0")
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > delta, x, 0.0)


@dataclass(frozen=True)
class ThresholdSchedule:
    """Linearly decreasing threshold sequence delta0, delta0 - decrement, ...

    Construction follows the convention delta0 = decrement * L_max, so the
    sequence ends exactly at `decrement`; values below `floor` are dropped.
    """

    delta0: float
    decrement: float
    floor: float = 0.0

    def __post_init__(self):
        if self.delta0 <= 0 or self.decrement <= 0:
            raise ValueError("delta0 and decrement must be positive")
        if self.floor < 0:
            raise ValueError("floor must be >= 0")
        steps = self.delta0 / self.decrement
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("delta0 must be an integer multiple of decrement")

    @property
    def l_max(self) -> int:
        return int(round(self.delta0 / self.decrement))

    def values(self) -> np.ndarray:
        deltas = self.delta0 - self.decrement * np.arange(self.l_max)
        return deltas[deltas >= self.floor]

    @classmethod
    def linear(cls, l_max: int, decrement: float, floor: float = 0.0) -> "ThresholdSchedule":
        if l_max < 1:
            raise ValueError("l_max must be >= 1")
        return cls(decrement * l_max, decrement, floor)


@dataclass
class SparseCode:
    """K x L coefficient matrix with per-column support bookkeeping."""

    coeffs: np.ndarray
    supports: list[np.ndarray]

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.ndim != 2:
            raise ValueError("coeffs must be a K x L matrix")
        if coeffs.shape[1] != len(self.supports):
            raise ValueError("one support list per column required")
        self.coeffs = coeffs
        self.supports = [np.sort(np.asarray(s, dtype=int)) for s in self.supports]

    @property
    def n_atoms(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_signals(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def from_dense(cls, coeffs: np.ndarray) -> "SparseCode":
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        supports = [np.flatnonzero(coeffs[:, j]) for j in range(coeffs.shape[1])]
        return cls(coeffs, supports)


def _greedy_pursuit(atoms, y, groups, scorer, max_groups, residual_norm):
    """Shared OMP / Block-OMP engine.

    Greedy group selection by projected residual energy (plain correlation
    for single atoms), with an incrementally updated thin QR of the selected
    atoms: the residual stays orthogonal to the active set at every round and
    normal equations are avoided.
    """
    n, k = atoms.shape
    score_basis, score_group_of, n_groups = scorer
    r = y.astype(float).copy()
    rnorm = np.linalg.norm(r)
    stop_norm = max(residual_norm, 1e-12 * max(1.0, rnorm))

    selected_groups: list[int] = []
    selected_atoms: list[int] = []
    taken = np.zeros(n_groups, dtype=bool)
    cap = min(n, k)
    q_basis = np.empty((n, cap))
    r_tri = np.zeros((cap, cap))
    z = np.empty(cap)
    n_sel = 0

    while len(selected_groups) < max_groups and rnorm > stop_norm:
        corr = score_basis.T @ r
        scores = np.bincount(score_group_of, weights=corr * corr, minlength=n_groups)
        scores[taken] = -1.0
        g = int(np.argmax(scores))  # ties resolved to the lowest group index
        if scores[g] <= (1e-12 * max(1.0, rnorm)) ** 2:
            break
        if n_sel + len(groups[g]) > cap:
            break
        taken[g] = True
        for a_idx in groups[g]:
            a = atoms[:, a_idx]
            u = q_basis[:, :n_sel].T @ a
            q_new = a - q_basis[:, :n_sel] @ u
            rho = np.linalg.norm(q_new)
            if rho < 1e-8:
                if len(groups[g]) == 1:
                    raise SolverError(
                        f"rank-deficient support: atom {a_idx} dependent on atoms {selected_atoms}")
                # a dependent atom inside a selected block gets a zero coefficient
                continue
            q_new /= rho
            qy = float(q_new @ y)
            r_tri[:n_sel, n_sel] = u
            r_tri[n_sel, n_sel] = rho
            z[n_sel] = qy
            q_basis[:, n_sel] = q_new
            r -= qy * q_new
            selected_atoms.append(int(a_idx))
            n_sel += 1
        selected_groups.append(g)
        rnorm = np.linalg.norm(r)

    coeffs = np.zeros(k)
    if n_sel:
        x = solve_triangular(r_tri[:n_sel, :n_sel], z[:n_sel])
        coeffs[selected_atoms] = x
    return coeffs, selected_atoms, selected_groups


def _singleton_groups(d: Dictionary):
    k = d.n_atoms
    groups = [np.array([i]) for i in range(k)]
    return groups, (d.atoms, np.arange(k), k)


def _block_groups(d: Dictionary):
    """Groups plus an orthonormalized scoring basis per block, so the block
    score is the energy of the residual's projection onto the block span."""
    if d.block_structure is None:
        raise ValueError("dictionary carries no block structure")
    groups = [np.asarray(b, dtype=int) for b in d.block_structure.blocks]
    bases, owner = [], []
    for g, idx in enumerate(groups):
        if len(idx) == 1:
            bases.append(d.atoms[:, idx])
            owner.append(g)
            continue
        q, r = np.linalg.qr(d.atoms[:, idx])
        keep = np.abs(np.diag(r)) > 1e-12
        bases.append(q[:, keep])
        owner.extend([g] * int(keep.sum()))
    return groups, (np.hstack(bases), np.asarray(owner, dtype=int), len(groups))


def _check_signal(d: Dictionary, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != d.n_dims:
        raise ValueError(f"signal length {y.shape[0]} != dictionary N {d.n_dims}")
    return y


def omp(d: Dictionary, y: np.ndarray, max_atoms: int | None = None,
        residual_norm: float | None = None) -> SparseCode:
    """Orthogonal matching pursuit for one signal.

    Stops at the atom budget or when the residual norm reaches the target;
    at least one stopping rule must be given.
    """
    y = _check_signal(d, y)
    if max_atoms is None and residual_norm is None:
        raise ValueError("need max_atoms and/or residual_norm")
    if max_atoms is not None and max_atoms < 0:
        raise ValueError("max_atoms must be >= 0")
    budget = d.n_atoms if max_atoms is None else max_atoms
    target = 0.0 if residual_norm is None else float(residual_norm)
    groups, scorer = _singleton_groups(d)
    coeffs, support, _ = _greedy_pursuit(d.atoms, y, groups, scorer, budget, target)
    return SparseCode(coeffs[:, None], [support])


def block_omp(d: Dictionary, y: np.ndarray, k_blocks: int,
              residual_norm: float | None = None) -> SparseCode:
    """Block-sparse pursuit: greedily pick the block whose span best matches
    the residual, then refit on the union of selected blocks."""
    if k_blocks < 1:
        raise ValueError("k_blocks must be >= 1")
    y = _check_signal(d, y)
    groups, scorer = _block_groups(d)
    target = 0.0 if residual_norm is None else float(residual_norm)
    coeffs, support, _ = _greedy_pursuit(d.atoms, y, groups, scorer, k_blocks, target)
    return SparseCode(coeffs[:, None], [support])


def _code_matrix(d: Dictionary, Y: np.ndarray, groups, scorer, budget, target) -> SparseCode:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != d.n_dims:
        raise ValueError(f"signal dimension {Y.shape[0]} != dictionary N {d.n_dims}")
    coeffs = np.empty((d.n_atoms, Y.shape[1]))
    supports = []
    for j in range(Y.shape[1]):
        col, support, _ = _greedy_pursuit(d.atoms, Y[:, j], groups, scorer, budget, target)
        coeffs[:, j] = col
        supports.append(support)
    return SparseCode(coeffs, supports)


def sparse_code(d: Dictionary, Y: np.ndarray, max_atoms: int | None = None,
                residual_norm: float | None = None) -> SparseCode:
    """Column-by-column OMP over a signal matrix."""
    if max_atoms is None and residual_norm is None:
        raise ValueError("need max_atoms and/or residual_norm")
    budget = d.n_atoms if max_atoms is None else max_atoms
    target = 0.0 if residual_norm is None else float(residual_norm)
    groups, scorer = _singleton_groups(d)
    return _code_matrix(d, Y, groups, scorer, budget, target)


def block_sparse_code(d: Dictionary, Y: np.ndarray, k_blocks: int,
                      residual_norm: float | None = None) -> SparseCode:
    """Column-by-column Block-OMP over a signal matrix."""
    groups, scorer = _block_groups(d)
    target = 0.0 if residual_norm is None else float(residual_norm)
    return _code_matrix(d, Y, groups, scorer, k_blocks, target)

"""Block-coordinate-relaxation solvers: MCA, MMCA, GMCA and FastGMCA.

All four share the same skeleton: alternate thresholded coefficient updates
against a linearly decreasing threshold schedule, renormalizing mixing
columns after every update. Sources are stored as rows; image problems set
`image_shape`, in which case dictionaries are applied separably to the
square reshaped rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import SolverError, mad_sigma
from .mixing import MixtureSet, random_mixing_matrix
from .sparse_coding import ThresholdSchedule, hard_threshold, soft_threshold
from .transforms import ORTHONORMAL, Dictionary, analyze, analyze2, synthesize, synthesize2

_DEAD_REL = 1e-12  # source energy below this fraction of ||X|| counts as dead


@dataclass
class McaProblem:
    """Single-signal morphological decomposition setup."""

    observation: np.ndarray
    components: list[Dictionary]
    schedule: ThresholdSchedule

    def __post_init__(self):
        self.observation = np.asarray(self.observation, dtype=float)
        if len(self.components) < 2:
            raise ValueError("MCA needs at least 2 component dictionaries")
        dims = {d.n_dims for d in self.components}
        if len(dims) != 1:
            raise ValueError(f"component dictionaries disagree on dimension: {sorted(dims)}")


@dataclass
class McaResult:
    components: list[np.ndarray]
    thresholds: np.ndarray
    residuals: np.ndarray  # ||y - sum(components)||_2 after each outer iteration


@dataclass
class BssProblem:
    """Multichannel separation setup shared by MMCA, GMCA and FastGMCA.

    `dictionaries` holds one basis per source for MMCA, or the shared
    component list for GMCA/FastGMCA. `noise_cov` is the (symmetric positive
    definite) channel noise covariance; identity when omitted.
    """

    mixtures: MixtureSet | np.ndarray
    n_sources: int
    dictionaries: list[Dictionary]
    schedule: ThresholdSchedule | None = None
    noise_cov: np.ndarray | None = None
    image_shape: tuple[int, int] | None = None
    l_max: int = 100
    seed: int = 0
    init_mixing: np.ndarray | None = None  # column-normalized warm start

    def __post_init__(self):
        data = self.mixtures.data if isinstance(self.mixtures, MixtureSet) else \
            np.atleast_2d(np.asarray(self.mixtures, dtype=float))
        self._data = data
        if self.n_sources > data.shape[0]:
            raise ValueError(f"n_sources={self.n_sources} exceeds channel count {data.shape[0]}")
        if self.noise_cov is not None:
            g = np.asarray(self.noise_cov, dtype=float)
            if g.shape != (data.shape[0],) * 2 or not np.allclose(g, g.T):
                raise ValueError("noise covariance must be symmetric m x m")
            try:
                np.linalg.cholesky(g)
            except np.linalg.LinAlgError:
                raise ValueError("noise covariance must be positive definite") from None
        if self.image_shape is not None:
            h, w = self.image_shape
            if h != w:
                raise ValueError("image problems require square images")
            if h * w != data.shape[1]:
                raise ValueError("image_shape does not match sample count")
        if self.init_mixing is not None:
            init = np.asarray(self.init_mixing, dtype=float)
            if init.shape != (data.shape[0], self.n_sources):
                raise ValueError("init_mixing shape does not match (m, n_sources)")
            if np.any(np.abs(np.linalg.norm(init, axis=0) - 1.0) > 1e-10):
                raise ValueError("init_mixing columns must have unit norm")
            self.init_mixing = init

    def initial_mixing(self) -> np.ndarray:
        if self.init_mixing is not None:
            return self.init_mixing.copy()
        return random_mixing_matrix(self.data.shape[0], self.n_sources, self.seed)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def noise_sigma(self) -> float | None:
        """Known noise level; None when the input carries no noise record."""
        return self.mixtures.noise_sigma if isinstance(self.mixtures, MixtureSet) else None


@dataclass
class SeparationResult:
    """Estimated mixing and sources plus the per-iteration diagnostic trace.

    Trace columns for the MCA family are (threshold, ||X - A S||_F,
    objective); FastICA stores its own columns, named in info.
    """

    A_hat: np.ndarray
    S_hat: np.ndarray
    trace: np.ndarray
    iterations_run: int
    info: dict = field(default_factory=dict)


def _row_analyze(d: Dictionary, row: np.ndarray, image_shape) -> np.ndarray:
    if image_shape is None:
        return analyze(d, row)
    return analyze2(d, row.reshape(image_shape)).ravel()


def _row_synthesize(d: Dictionary, coeffs: np.ndarray, image_shape) -> np.ndarray:
    if image_shape is None:
        return synthesize(d, coeffs)
    side = d.n_dims
    return synthesize2(d, coeffs.reshape((side, side))).ravel()


def auto_schedule(coeff_sets: list[np.ndarray], l_max: int,
                  noise_sigma: float = 0.0, k_mad: float = 3.0) -> ThresholdSchedule:
    """Data-driven linear schedule: start at the largest coefficient magnitude,
    stop at k_mad times the (known or MAD-estimated) noise scale."""
    cmax = max(float(np.max(np.abs(c))) for c in coeff_sets)
    if cmax == 0:
        cmax = 1.0
    if noise_sigma > 0:
        floor = k_mad * noise_sigma
    else:
        floor = k_mad * float(np.median([mad_sigma(c) for c in coeff_sets]))
    if l_max > 2:
        floor = min(floor, cmax * (l_max - 2) / l_max)
    return ThresholdSchedule.linear(l_max, cmax / l_max, floor)


def _require_orthonormal(dicts: list[Dictionary], who: str):
    for d in dicts:
        if d.kind != ORTHONORMAL:
            raise ValueError(f"{who} requires orthonormal component dictionaries")


def mca_decompose(problem: McaProblem) -> McaResult:
    """Split one signal or image into its morphological components (Alg. MCA).

    Per outer iteration and component i, the coefficients of component i plus
    the full residual are soft-thresholded at the current delta and the
    component resynthesized; the threshold then decreases linearly.
    """
    _require_orthonormal(problem.components, "mca_decompose")
    y = problem.observation
    image_shape = y.shape if y.ndim == 2 else None
    if image_shape is not None and image_shape[0] != image_shape[1]:
        raise ValueError("image decomposition requires a square image")
    flat = y.ravel()
    comps = [np.zeros_like(flat) for _ in problem.components]
    deltas = problem.schedule.values()
    residuals = np.empty(len(deltas))
    for it, delta in enumerate(deltas):
        for i, d in enumerate(problem.components):
            partial = flat - sum(comps[l] for l in range(len(comps)) if l != i)
            coeffs = soft_threshold(_row_analyze(d, partial, image_shape), delta)
            comps[i] = _row_synthesize(d, coeffs, image_shape)
        residuals[it] = np.linalg.norm(flat - sum(comps))
    shaped = [c.reshape(y.shape) for c in comps]
    return McaResult(shaped, deltas, residuals)


def _restart_column(A: np.ndarray, k: int, residual: np.ndarray, events: list, it: int,
                    rank: int = 0):
    """Reseed a dead mixing column from the residual's leading subspace.

    `rank` picks successive singular vectors so that several dead sources in
    one iteration do not collapse onto the same direction.
    """
    if np.linalg.norm(residual) == 0:
        return
    u = np.linalg.svd(residual, full_matrices=False)[0]
    A[:, k] = u[:, min(rank, u.shape[1] - 1)]
    events.append((it, k))


def mmca_separate(problem: BssProblem) -> SeparationResult:
    """Multichannel MCA: one orthonormal basis per source (Alg. MMCA).

    Per source k the rank-one residual D_k is projected onto the current
    mixing column (noise-covariance weighted), the projection's coefficients
    are soft-thresholded, and the column is refit by least squares and
    renormalized.
    """
    X = problem.data
    m, t = X.shape
    n = problem.n_sources
    if len(problem.dictionaries) != n:
        raise ValueError("MMCA needs exactly one dictionary per source")
    _require_orthonormal(problem.dictionaries, "mmca_separate")
    gamma_inv = np.eye(m) if problem.noise_cov is None else np.linalg.inv(problem.noise_cov)

    A = problem.initial_mixing()
    S = np.zeros((n, t))
    x_norm = np.linalg.norm(X)

    schedule = problem.schedule
    if schedule is None:
        init = np.linalg.pinv(A) @ X
        coeffs = [_row_analyze(problem.dictionaries[k], init[k], problem.image_shape)
                  for k in range(n)]
        schedule = auto_schedule(coeffs, problem.l_max, problem.noise_sigma)

    deltas = schedule.values()
    trace = np.empty((len(deltas), 3))
    restarts: list[tuple[int, int]] = []
    for it, delta in enumerate(deltas):
        n_dead = 0
        l1 = 0.0
        for k in range(n):
            a = A[:, k]
            Dk = X - A @ S + np.outer(a, S[k])
            denom = float(a @ gamma_inv @ a)
            if denom == 0:
                raise SolverError(f"degenerate mixing column {k} at iteration {it}")
            proj = (a @ gamma_inv @ Dk) / denom
            coeffs = soft_threshold(
                _row_analyze(problem.dictionaries[k], proj, problem.image_shape), delta)
            l1 += float(np.abs(coeffs).sum())
            S[k] = _row_synthesize(problem.dictionaries[k], coeffs, problem.image_shape)
            energy = float(S[k] @ S[k])
            if np.linalg.norm(S[k]) <= _DEAD_REL * x_norm:
                _restart_column(A, k, Dk, restarts, it, rank=n_dead)
                n_dead += 1
                continue
            if energy == 0:
                raise SolverError(f"dead source {k} at iteration {it}")
            a_new = Dk @ S[k] / energy
            norm = np.linalg.norm(a_new)
            if norm == 0:
                _restart_column(A, k, Dk, restarts, it, rank=n_dead)
                n_dead += 1
                continue
            A[:, k] = a_new / norm
        resid = np.linalg.norm(X - A @ S)
        trace[it] = (delta, resid, resid ** 2 + delta * l1)
    return SeparationResult(A, S, trace, len(deltas),
                            info={"restarts": restarts, "schedule": schedule,
                                  "trace_columns": ("threshold", "residual", "objective")})


def gmca_separate(problem: BssProblem) -> SeparationResult:
    """Generalized MCA: every source is a sum of morphological components
    sparse in a shared list of orthonormal bases (Alg. GMCA).
    """
    X = problem.data
    m, t = X.shape
    n = problem.n_sources
    dicts = problem.dictionaries
    if len(dicts) < 1:
        raise ValueError("GMCA needs at least one component dictionary")
    _require_orthonormal(dicts, "gmca_separate")
    n_comp = len(dicts)

    A = problem.initial_mixing()
    phi = np.zeros((n, n_comp, t))
    S = np.zeros((n, t))
    x_norm = np.linalg.norm(X)

    schedule = problem.schedule
    if schedule is None:
        init = np.linalg.pinv(A) @ X
        coeffs = [_row_analyze(d, init[i], problem.image_shape)
                  for i in range(n) for d in dicts]
        schedule = auto_schedule(coeffs, problem.l_max, problem.noise_sigma)

    deltas = schedule.values()
    trace = np.empty((len(deltas), 3))
    restarts: list[tuple[int, int]] = []
    model = A @ S
    for it, delta in enumerate(deltas):
        n_dead = 0
        l1 = 0.0
        for i in range(n):
            a = A[:, i]
            for kc in range(n_comp):
                # single-channel residual seen by morphological component (i, kc)
                r = a @ (X - model + np.outer(a, phi[i, kc]))
                coeffs = soft_threshold(_row_analyze(dicts[kc], r, problem.image_shape), delta)
                l1 += float(np.abs(coeffs).sum())
                phi_new = _row_synthesize(dicts[kc], coeffs, problem.image_shape)
                model += np.outer(a, phi_new - phi[i, kc])
                S[i] += phi_new - phi[i, kc]
                phi[i, kc] = phi_new
            Ri = X - model + np.outer(a, S[i])
            energy = float(S[i] @ S[i])
            if np.linalg.norm(S[i]) <= _DEAD_REL * x_norm:
                _restart_column(A, i, Ri, restarts, it, rank=n_dead)
                n_dead += 1
                model = A @ S
                continue
            a_new = Ri @ S[i] / energy
            norm = np.linalg.norm(a_new)
            if norm == 0:
                _restart_column(A, i, Ri, restarts, it, rank=n_dead)
                n_dead += 1
                model = A @ S
                continue
            A[:, i] = a_new / norm
            model = A @ S
        resid = np.linalg.norm(X - model)
        trace[it] = (delta, resid, resid ** 2 + delta * l1)
    return SeparationResult(A, S, trace, len(deltas),
                            info={"restarts": restarts, "schedule": schedule,
                                  "trace_columns": ("threshold", "residual", "objective")})


def fast_gmca_separate(problem: BssProblem, threshold: str = "hard") -> SeparationResult:
    """GMCA run entirely in the coefficient domain of one orthonormal basis.

    The mixtures are transformed once; each iteration thresholds the
    pseudo-inverse source coefficients and refits the mixing matrix by least
    squares. Hard thresholding by default (the l0 reading); "soft" is
    accepted for the convex variant.
    """
    if len(problem.dictionaries) != 1:
        raise ValueError("FastGMCA uses a single shared orthonormal dictionary")
    d = problem.dictionaries[0]
    _require_orthonormal([d], "fast_gmca_separate")
    thresh = {"hard": hard_threshold, "soft": soft_threshold}.get(threshold)
    if thresh is None:
        raise ValueError("threshold must be 'hard' or 'soft'")

    X = problem.data
    m, t = X.shape
    n = problem.n_sources
    theta_x = np.vstack([_row_analyze(d, X[i], problem.image_shape) for i in range(m)])
    A = problem.initial_mixing()

    schedule = problem.schedule
    if schedule is None:
        init = np.linalg.pinv(A) @ theta_x
        schedule = auto_schedule([init], problem.l_max, problem.noise_sigma)

    deltas = schedule.values()
    trace = np.empty((len(deltas), 3))
    theta_s = np.zeros((n, t))
    restarts: list[tuple[int, int]] = []
    tx_norm = np.linalg.norm(theta_x)
    tx_sq = tx_norm ** 2
    iterations = 0
    for it, delta in enumerate(deltas):
        theta_s = thresh(np.linalg.pinv(A) @ theta_x, delta)
        # columns that are all-zero after thresholding contribute nothing to the
        # Gram or cross factors, so the update runs on the active columns only
        cols = np.flatnonzero(np.any(theta_s != 0.0, axis=0))
        ts = theta_s[:, cols]
        norms_s = np.linalg.norm(ts, axis=1)
        active = norms_s > _DEAD_REL * tx_norm
        tx_cols = theta_x[:, cols]
        A_active = None
        while np.any(active):
            gram = ts[active] @ ts[active].T
            cross = ts[active] @ tx_cols.T  # n_active x m
            try:
                A_active = np.linalg.solve(gram, cross).T
                break
            except np.linalg.LinAlgError:
                # duplicated coefficient rows make the Gram singular; drop the
                # later duplicate of the worst pair and treat it as dead
                idx = np.flatnonzero(active)
                dropped = False
                for pos_i, i in enumerate(idx):
                    for j in idx[pos_i + 1:]:
                        if abs(ts[i] @ ts[j]) >= (1 - 1e-12) * norms_s[i] * norms_s[j]:
                            active[j] = False
                            ts[j] = 0.0
                            theta_s[j] = 0.0
                            dropped = True
                            break
                    if dropped:
                        break
                if not dropped:
                    break
        if not np.any(active):
            trace[it] = (delta, tx_norm, tx_sq)
            iterations += 1
            continue
        if A_active is None:
            warnings.warn(
                f"fast_gmca: singular coefficient Gram matrix at iteration {it}; "
                "stopping with the last valid mixing estimate", RuntimeWarning)
            break
        norms = np.linalg.norm(A_active, axis=0)
        if np.any(norms == 0):
            warnings.warn(
                f"fast_gmca: zero mixing column at iteration {it}; "
                "stopping with the last valid mixing estimate", RuntimeWarning)
            break
        if not np.all(active):
            # the dead sources' content lives in columns the active ones do not
            # retain, so reseed from the full-domain residual
            residual = theta_x - A[:, active] @ theta_s[active]
            for rank, k in enumerate(np.flatnonzero(~active)):
                _restart_column(A, k, residual, restarts, it, rank=rank)
        A[:, active] = A_active / norms
        # ||Theta_X - A Theta_S||^2 from the small factors already computed
        Aact = A[:, active]
        resid_sq = max(tx_sq - 2.0 * np.sum(Aact * cross.T) + np.sum((Aact.T @ Aact) * gram), 0.0)
        trace[it] = (delta, np.sqrt(resid_sq), resid_sq + delta * np.abs(ts).sum())
        iterations += 1
    S = np.vstack([_row_synthesize(d, theta_s[i], problem.image_shape) for i in range(n)])
    return SeparationResult(A, S, trace[:iterations], iterations,
                            info={"restarts": restarts, "schedule": schedule,
                                  "trace_columns": ("threshold", "residual", "objective")})

"""Adaptive-dictionary blind separation: K-SVD or SAC+BK-SVD inside MMCA.

Each outer iteration re-estimates every source by projecting its rank-one
residual onto the current mixing column, denoising the projection patchwise
with that source's learned dictionary, and refitting the column by least
squares. Dictionaries start from the overcomplete DCT and receive one
learning round per source per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SolverError, mad_sigma, rng
from .dictlearn import _svd_block_sweep, sac_cluster
from .mca import SeparationResult, _restart_column
from .mixing import MixtureSet
from .patches import PatchGrid, extract_patches, reassemble_patches
from .sparse_coding import block_sparse_code, sparse_code
from .transforms import LEARNED, BlockStructure, Dictionary, overcomplete_dct

_DEAD_REL = 1e-12


@dataclass
class AdaptiveBssConfig:
    """Settings for the dictionary-learning separation drivers."""

    n_sources: int
    image_shape: tuple[int, int]
    patch: int = 8
    stride: int = 4  # half the patch for the 50% overlap convention
    n_atoms: int = 256
    method: str = "ksvd"  # or "sac_bksvd"
    sparsity: int = 2     # active blocks (sac_bksvd); with block_size, the atom budget
    block_size: int = 3
    l_max: int = 50
    sigma_decay: float = 0.9
    omp_cap: int | None = None  # ksvd atom budget; defaults to sparsity * block_size
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("ksvd", "sac_bksvd"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.block_size < 1 or self.sparsity < 1:
            raise ValueError("need block_size >= 1 and sparsity >= 1")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.omp_cap is None:
            # same atom budget as a sparsity-block code of block_size atoms each
            self.omp_cap = self.sparsity * self.block_size


def estimate_noise_sigma(image: np.ndarray) -> float:
    """Donoho-style noise estimate from the finest diagonal Haar band."""
    image = np.asarray(image, dtype=float)
    h = image.shape[0] - image.shape[0] % 2
    w = image.shape[1] - image.shape[1] % 2
    block = image[:h, :w]
    diag = (block[0::2, 0::2] - block[1::2, 0::2]
            - block[0::2, 1::2] + block[1::2, 1::2]) / 2.0
    return mad_sigma(diag)


def _denoise_pass(proj_img, grid, atoms, blocks, cfg, sigma_target):
    """One sparse-coding + dictionary-update round on the patches of one image.

    Returns the denoised image; atoms are edited in place, the (possibly
    re-clustered) block structure is returned.
    """
    P = extract_patches(proj_img, grid)
    dc = P.mean(axis=0)
    P0 = P - dc
    target = sigma_target * np.sqrt(grid.patch_dim)
    working = Dictionary(atoms, LEARNED, block_structure=blocks)
    if cfg.method == "ksvd":
        code = sparse_code(working, P0, max_atoms=cfg.omp_cap, residual_norm=target)
        new_blocks = blocks
    else:
        flat = sparse_code(working, P0, max_atoms=cfg.sparsity * cfg.block_size,
                           residual_norm=target)
        new_blocks = sac_cluster(flat, cfg.block_size)
        working = Dictionary(atoms, LEARNED, block_structure=new_blocks)
        code = block_sparse_code(working, P0, k_blocks=cfg.sparsity, residual_norm=target)
    coeffs = code.coeffs.copy()
    _svd_block_sweep(atoms, coeffs, P0, new_blocks.blocks)
    denoised = reassemble_patches(atoms @ coeffs + dc, grid)
    return denoised, new_blocks


def adaptive_separate(Y, cfg: AdaptiveBssConfig) -> tuple[SeparationResult, list[Dictionary]]:
    """Blind separation with per-source learned dictionaries (K-SVD or
    SAC+BK-SVD embedded in the MMCA loop).

    Returns the separation result and the learned per-source dictionaries.
    """
    data = Y.data if isinstance(Y, MixtureSet) else np.atleast_2d(np.asarray(Y, dtype=float))
    m, t = data.shape
    n = cfg.n_sources
    if n > m:
        raise ValueError(f"n_sources={n} exceeds channel count {m}")
    h, w = cfg.image_shape
    if h * w != t:
        raise ValueError("image_shape does not match sample count")
    grid = PatchGrid(cfg.patch, cfg.patch, cfg.stride, h, w)

    gen = rng(cfg.seed)
    A = gen.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0)
    S = A.T @ data
    atoms_per_source = [overcomplete_dct(grid.patch_dim, cfg.n_atoms).atoms.copy()
                        for _ in range(n)]
    blocks_per_source = [BlockStructure.singletons(cfg.n_atoms) for _ in range(n)]

    # recorded mixture noise level when available, Donoho MAD estimate otherwise
    if isinstance(Y, MixtureSet):
        sigma0 = np.full(n, max(Y.noise_sigma, 1e-6))
    else:
        sigma0 = np.array([max(estimate_noise_sigma(S[j].reshape(h, w)), 1e-6)
                           for j in range(n)])
    x_norm = np.linalg.norm(data)
    trace = np.empty((cfg.l_max, 3))
    restarts: list[tuple[int, int]] = []
    for it in range(cfg.l_max):
        # geometric error-target decay from 2 sigma down to the noise floor
        sigma_it = np.maximum(2.0 * sigma0 * cfg.sigma_decay ** it, sigma0)
        for j in range(n):
            a = A[:, j]
            Ej = data - A @ S + np.outer(a, S[j])
            proj = a @ Ej / float(a @ a)
            try:
                denoised, blocks_per_source[j] = _denoise_pass(
                    proj.reshape(h, w), grid, atoms_per_source[j],
                    blocks_per_source[j], cfg, float(sigma_it[j]))
            except Exception as exc:
                raise SolverError(f"pursuit failed for source {j} at iteration {it}: {exc}") \
                    from exc
            S[j] = denoised.ravel()
            if np.linalg.norm(S[j]) <= _DEAD_REL * x_norm:
                _restart_column(A, j, Ej, restarts, it)
                continue
            a_new = Ej @ S[j]
            norm = np.linalg.norm(a_new)
            if norm == 0:
                _restart_column(A, j, Ej, restarts, it)
                continue
            A[:, j] = a_new / norm
        resid = np.linalg.norm(data - A @ S)
        trace[it] = (float(sigma_it.mean()), resid, resid ** 2)
    dictionaries = [
        Dictionary(atoms_per_source[j], LEARNED, block_structure=blocks_per_source[j])
        for j in range(n)]
    result = SeparationResult(A, S, trace, cfg.l_max,
                              info={"restarts": restarts,
                                    "trace_columns": ("sigma", "residual", "objective")})
    return result, dictionaries

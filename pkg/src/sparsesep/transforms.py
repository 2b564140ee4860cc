"""Fixed analysis/synthesis dictionaries.

Orthonormal DCT-II and periodized orthogonal wavelet bases, the overcomplete
sampled-cosine dictionary used to seed dictionary learning, and unions of
orthonormal bases. Dictionaries are explicit matrices with one unit-norm atom
per column; no fast transform paths, desk scale only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHONORMAL = "orthonormal-basis"
UNION = "union-of-bases"
OVERCOMPLETE = "overcomplete"
LEARNED = "learned"

_KINDS = (ORTHONORMAL, UNION, OVERCOMPLETE, LEARNED)

# 8-tap Daubechies scaling filter with 4 vanishing moments (pywt "db4").
_DB4_LO = np.array([
    0.23037781330885523, 0.7148465705525415, 0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278,
])
_HAAR_LO = np.array([np.sqrt(0.5), np.sqrt(0.5)])

_WAVELETS = {"haar": _HAAR_LO, "db4": _DB4_LO}


@dataclass(frozen=True)
class BlockStructure:
    """Partition of atom indices into blocks of size at most `max_block_size`."""

    blocks: tuple[tuple[int, ...], ...]
    max_block_size: int

    def __post_init__(self):
        seen = sorted(i for b in self.blocks for i in b)
        k = len(seen)
        if seen != list(range(k)):
            raise ValueError("blocks must partition the atom indices 0..K-1")
        if any(len(b) == 0 for b in self.blocks):
            raise ValueError("empty block")
        if self.max_block_size < 1:
            raise ValueError("max_block_size must be >= 1")
        if any(len(b) > self.max_block_size for b in self.blocks):
            raise ValueError("block exceeds max_block_size")
        for b in self.blocks:
            if list(b) != sorted(b):
                raise ValueError("atom indices within a block must be sorted")

    @property
    def n_atoms(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def block_of(self) -> np.ndarray:
        """Length-K map atom index -> block id."""
        out = np.empty(self.n_atoms, dtype=int)
        for j, b in enumerate(self.blocks):
            out[list(b)] = j
        return out

    @classmethod
    def singletons(cls, k: int) -> "BlockStructure":
        return cls(tuple((i,) for i in range(k)), 1)


@dataclass(frozen=True)
class Dictionary:
    """Atom matrix (one unit-norm column per atom) plus structural metadata."""

    atoms: np.ndarray
    kind: str = OVERCOMPLETE
    block_structure: BlockStructure | None = None
    members: tuple["Dictionary", ...] = field(default=(), repr=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        object.__setattr__(self, "atoms", atoms)
        if atoms.ndim != 2 or atoms.size == 0:
            raise ValueError("atoms must be a nonempty N x K matrix")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown dictionary kind {self.kind!r}")
        norms = np.linalg.norm(atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"atom {worst} has norm {norms[worst]:.12g}, expected 1")
        if self.kind == ORTHONORMAL:
            n, k = atoms.shape
            if n != k:
                raise ValueError("orthonormal basis must be square")
            gram_err = np.max(np.abs(atoms.T @ atoms - np.eye(n)))
            if gram_err > 1e-10:
                raise ValueError(f"basis not orthonormal (max Gram error {gram_err:.3g})")
        if self.kind == UNION:
            if len(self.members) < 2:
                raise ValueError("union dictionary needs at least 2 members")
            if atoms.shape[1] != sum(m.n_atoms for m in self.members):
                raise ValueError("union atom count does not match members")
        if self.block_structure is not None and self.block_structure.n_atoms != atoms.shape[1]:
            raise ValueError("block structure does not cover all atoms")

    @property
    def n_dims(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    @property
    def member_offsets(self) -> tuple[tuple[int, int], ...]:
        """Half-open atom index ranges, one per union member."""
        out, start = [], 0
        for m in self.members:
            out.append((start, start + m.n_atoms))
            start += m.n_atoms
        return tuple(out)


def dct_basis(n: int) -> Dictionary:
    """Orthonormal DCT-II basis of dimension n (atom 0 is the DC waveform)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = np.arange(n)
    atoms = np.cos(np.pi * (2 * grid[:, None] + 1) * grid[None, :] / (2 * n))
    atoms *= np.sqrt(2.0 / n)
    atoms[:, 0] = np.sqrt(1.0 / n)
    return Dictionary(atoms, ORTHONORMAL)


def _analysis_stage(n: int, lo: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Rows are double shifts of the decimated filters, periodized mod n.
    hi = (lo[::-1] * (-1.0) ** np.arange(len(lo)))
    rows = np.arange(n // 2)
    lo_mat = np.zeros((n // 2, n))
    hi_mat = np.zeros((n // 2, n))
    for k in range(len(lo)):
        cols = (2 * rows + k) % n
        np.add.at(lo_mat, (rows, cols), lo[k])
        np.add.at(hi_mat, (rows, cols), hi[k])
    return lo_mat, hi_mat


def dwt_basis(n: int, wavelet: str = "haar", levels: int | None = None) -> Dictionary:
    """Orthonormal periodized wavelet basis of dimension n (a power of two).

    Coefficient order after analysis: coarsest approximation first, then
    detail bands from coarsest to finest.
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two, got {n}")
    if wavelet not in _WAVELETS:
        raise ValueError(f"unknown wavelet {wavelet!r}; choose from {sorted(_WAVELETS)}")
    max_levels = int(np.log2(n))
    if levels is None:
        levels = max_levels
    if not 1 <= levels <= max_levels:
        raise ValueError(f"levels must be in [1, {max_levels}]")
    lo = _WAVELETS[wavelet]
    analysis = np.eye(n)
    size = n
    for _ in range(levels):
        lo_mat, hi_mat = _analysis_stage(size, lo)
        head = analysis[:size]
        analysis[:size] = np.vstack([lo_mat @ head, hi_mat @ head])
        size //= 2
    return Dictionary(analysis.T, ORTHONORMAL)


def overcomplete_dct(n: int, k: int) -> Dictionary:
    """n x k sampled-cosine dictionary: mean-removed, normalized columns."""
    if k < n:
        raise ValueError(f"need k >= n, got k={k} < n={n}")
    grid = np.arange(n)
    atoms = np.cos(np.pi * grid[:, None] * np.arange(k)[None, :] / k)
    atoms[:, 1:] -= atoms[:, 1:].mean(axis=0)
    atoms /= np.linalg.norm(atoms, axis=0)
    return Dictionary(atoms, OVERCOMPLETE)


def union_basis(members: list[Dictionary] | tuple[Dictionary, ...]) -> Dictionary:
    """Concatenate orthonormal bases into a union-of-bases dictionary."""
    members = tuple(members)
    if len(members) < 2:
        raise ValueError("need at least 2 member bases")
    if any(m.kind != ORTHONORMAL for m in members):
        raise ValueError("union members must be orthonormal bases")
    dims = {m.n_dims for m in members}
    if len(dims) != 1:
        raise ValueError(f"members disagree on signal dimension: {sorted(dims)}")
    atoms = np.hstack([m.atoms for m in members])
    return Dictionary(atoms, UNION, members=members)


def analyze(d: Dictionary, signal: np.ndarray) -> np.ndarray:
    """Coefficients of `signal` against d: atomsᵀ @ signal.

    Accepts one signal (length N) or a batch as N x L columns.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.shape[0] != d.n_dims:
        raise ValueError(f"signal dimension {signal.shape[0]} != dictionary N {d.n_dims}")
    return d.atoms.T @ signal


def synthesize(d: Dictionary, coeffs: np.ndarray) -> np.ndarray:
    """Signal reconstruction atoms @ coeffs; inverse of analyze for orthonormal kinds."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != d.n_atoms:
        raise ValueError(f"coefficient dimension {coeffs.shape[0]} != atom count {d.n_atoms}")
    return d.atoms @ coeffs


def analyze2(d: Dictionary, image: np.ndarray) -> np.ndarray:
    """Separable 2-D analysis of a square image with an orthonormal basis."""
    image = np.asarray(image, dtype=float)
    if d.kind != ORTHONORMAL:
        raise ValueError("2-D transforms require an orthonormal basis")
    if image.shape != (d.n_dims, d.n_dims):
        raise ValueError(f"image shape {image.shape} does not match basis dim {d.n_dims}")
    return d.atoms.T @ image @ d.atoms


def synthesize2(d: Dictionary, coeffs: np.ndarray) -> np.ndarray:
    """Inverse of analyze2."""
    coeffs = np.asarray(coeffs, dtype=float)
    if d.kind != ORTHONORMAL:
        raise ValueError("2-D transforms require an orthonormal basis")
    if coeffs.shape != (d.n_dims, d.n_dims):
        raise ValueError(f"coefficient shape {coeffs.shape} does not match basis dim {d.n_dims}")
    return d.atoms @ coeffs @ d.atoms.T


def render_mosaic(d: Dictionary, patch_shape: tuple[int, int] | None = None,
                  pad: int = 1) -> np.ndarray:
    """Tile atoms into an 8-bit mosaic image, one min-max normalized cell per atom."""
    n = d.n_dims
    if patch_shape is None:
        side = int(round(np.sqrt(n)))
        patch_shape = (side, side) if side * side == n else (n, 1)
    ph, pw = patch_shape
    if ph * pw != n:
        raise ValueError(f"patch shape {patch_shape} does not hold {n} samples")
    cols = int(np.ceil(np.sqrt(d.n_atoms)))
    rows = int(np.ceil(d.n_atoms / cols))
    mosaic = np.zeros((rows * (ph + pad) + pad, cols * (pw + pad) + pad), dtype=np.uint8)
    for idx in range(d.n_atoms):
        atom = d.atoms[:, idx].reshape(ph, pw, order="F")
        lo, hi = atom.min(), atom.max()
        cell = np.zeros_like(atom) if hi == lo else (atom - lo) / (hi - lo)
        r, c = divmod(idx, cols)
        top, left = pad + r * (ph + pad), pad + c * (pw + pad)
        mosaic[top:top + ph, left:left + pw] = np.round(cell * 255).astype(np.uint8)
    return mosaic

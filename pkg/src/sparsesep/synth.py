"""Seeded synthetic sources with distinct morphologies.

Stand-ins for the experiment photographs: oscillatory textures (DCT-sparse),
piecewise-constant cartoons (wavelet-sparse), sparse spikes and smooth blobs.
All generators emit images or signals scaled to [0, 255].
"""

from __future__ import annotations

import numpy as np

from .core import rng


def _to_pixel_range(x: np.ndarray) -> np.ndarray:
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.full_like(x, 127.5)
    return (x - lo) * (255.0 / (hi - lo))


def texture(side: int, seed: int, n_waves: int = 4) -> np.ndarray:
    """Sum of a few oriented cosine gratings."""
    gen = rng(seed)
    yy, xx = np.mgrid[0:side, 0:side]
    img = np.zeros((side, side))
    for _ in range(n_waves):
        fx, fy = gen.integers(2, max(3, side // 4), size=2)
        phase = gen.uniform(0, 2 * np.pi)
        amp = gen.uniform(0.5, 1.0)
        img += amp * np.cos(2 * np.pi * (fx * xx + fy * yy) / side + phase)
    return _to_pixel_range(img)


def cartoon(side: int, seed: int, split_p: float = 0.7, min_cell: int = 8) -> np.ndarray:
    """Piecewise-constant quadtree cartoon.

    Cells sit on dyadic boundaries, so the image is exactly sparse in the
    Haar basis; that is what makes it a clean morphological opposite of the
    oscillatory texture.
    """
    gen = rng(seed)
    img = np.zeros((side, side))

    def fill(r: int, c: int, size: int):
        # the root always splits so the image is never a constant
        if size > min_cell and (size == side or gen.uniform() < split_p):
            half = size // 2
            for dr, dc in ((0, 0), (0, half), (half, 0), (half, half)):
                fill(r + dr, c + dc, half)
        else:
            img[r:r + size, c:c + size] = gen.uniform(0, 255)

    fill(0, 0, side)
    return _to_pixel_range(img)


def spikes(side: int, seed: int, density: float = 0.02) -> np.ndarray:
    """Sparse impulses on a mid-gray background."""
    gen = rng(seed)
    img = np.zeros((side, side))
    count = max(1, int(density * side * side))
    rows = gen.integers(0, side, count)
    cols = gen.integers(0, side, count)
    img[rows, cols] = gen.uniform(-1, 1, count)
    return _to_pixel_range(img)


def blobs(side: int, seed: int, n_blobs: int = 4) -> np.ndarray:
    """Smooth sum of Gaussian bumps."""
    gen = rng(seed)
    yy, xx = np.mgrid[0:side, 0:side]
    img = np.zeros((side, side))
    for _ in range(n_blobs):
        cy, cx = gen.uniform(0, side, 2)
        width = gen.uniform(side / 10, side / 4)
        img += gen.uniform(0.4, 1.0) * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2)
                                              / (2 * width ** 2))
    return _to_pixel_range(img)


def cloth(side: int, seed: int, noise: float = 3.0) -> np.ndarray:
    """Two stripe families tiled in an alternating pattern, plus fine detail.

    Many patches share each family's oscillation pair, giving the patch set
    the repeating low-dimensional structure that block-sparse dictionary
    learning feeds on.
    """
    gen = rng(seed)
    yy, xx = np.mgrid[0:side, 0:side]
    fams = []
    for _ in range(2):
        fx, fy = gen.integers(3, max(4, side // 3), size=2)
        fams.append(gen.uniform(60, 110)
                    * np.cos(2 * np.pi * (fx * xx + fy * yy) / side + gen.uniform(0, 2 * np.pi)))
    img = np.full((side, side), float(gen.uniform(90, 130)))
    q = max(1, side // 4)
    for ti in range(4):
        for tj in range(4):
            reg = (slice(ti * q, (ti + 1) * q), slice(tj * q, (tj + 1) * q))
            img[reg] += fams[(ti + tj) % 2][reg]
    img += gen.standard_normal((side, side)) * noise
    return np.clip(img, 0, 255)


def stripes(side: int, seed: int) -> np.ndarray:
    """Hard-edged bars at a seeded orientation and period (texture/cartoon hybrid)."""
    gen = rng(seed)
    yy, xx = np.mgrid[0:side, 0:side]
    period = int(gen.integers(6, max(7, side // 6)))
    if gen.integers(0, 2) == 0:
        phase = xx
    else:
        phase = yy
    img = ((phase // period) % 2).astype(float)
    return _to_pixel_range(img)


def oscillation_1d(n: int, seed: int, n_tones: int = 3) -> np.ndarray:
    gen = rng(seed)
    grid = np.arange(n)
    sig = np.zeros(n)
    for _ in range(n_tones):
        f = gen.integers(2, max(3, n // 6))
        sig += gen.uniform(0.5, 1.0) * np.cos(2 * np.pi * f * grid / n + gen.uniform(0, 2 * np.pi))
    return _to_pixel_range(sig)


def piecewise_constant_1d(n: int, seed: int, n_jumps: int = 4) -> np.ndarray:
    gen = rng(seed)
    sig = np.zeros(n)
    edges = np.sort(gen.choice(np.arange(1, n), size=n_jumps, replace=False))
    start = 0
    for e in list(edges) + [n]:
        sig[start:e] = gen.uniform(0, 255)
        start = e
    return _to_pixel_range(sig)


GENERATORS = {
    "texture": texture,
    "cartoon": cartoon,
    "cloth": cloth,
    "spikes": spikes,
    "blobs": blobs,
    "stripes": stripes,
}


def generate(spec: str, seed: int) -> np.ndarray:
    """Build a source from a "name:side" spec string, e.g. "texture:64"."""
    name, _, size = spec.partition(":")
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    if not size:
        raise ValueError(f"generator spec {spec!r} needs a size, e.g. 'texture:64'")
    return GENERATORS[name](int(size), seed)

"""Overlapping patch extraction and overlap-averaged reassembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PatchGrid:
    """Sliding-window layout over an image; edge positions are clamped so the
    grid always covers the full image."""

    patch_h: int
    patch_w: int
    stride: int
    image_h: int
    image_w: int

    def __post_init__(self):
        if min(self.patch_h, self.patch_w) < 1:
            raise ValueError("patch dimensions must be >= 1")
        if not 1 <= self.stride <= min(self.patch_h, self.patch_w):
            raise ValueError("stride must lie in [1, patch size]")
        if self.patch_h > self.image_h or self.patch_w > self.image_w:
            raise ValueError("patch larger than image")

    @staticmethod
    def _positions(image_dim: int, patch_dim: int, stride: int) -> list[int]:
        pos = list(range(0, image_dim - patch_dim + 1, stride))
        if pos[-1] != image_dim - patch_dim:
            pos.append(image_dim - patch_dim)
        return pos

    @property
    def row_positions(self) -> list[int]:
        return self._positions(self.image_h, self.patch_h, self.stride)

    @property
    def col_positions(self) -> list[int]:
        return self._positions(self.image_w, self.patch_w, self.stride)

    @property
    def n_patches(self) -> int:
        return len(self.row_positions) * len(self.col_positions)

    @property
    def patch_dim(self) -> int:
        return self.patch_h * self.patch_w


def extract_patches(image: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Vectorized patches, one per column, column-major within each patch."""
    image = np.asarray(image, dtype=float)
    if image.shape != (grid.image_h, grid.image_w):
        raise ValueError(f"image shape {image.shape} does not match grid "
                         f"({grid.image_h}, {grid.image_w})")
    out = np.empty((grid.patch_dim, grid.n_patches))
    col = 0
    for c in grid.col_positions:
        for r in grid.row_positions:
            out[:, col] = image[r:r + grid.patch_h, c:c + grid.patch_w].ravel(order="F")
            col += 1
    return out


def reassemble_patches(patches: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Inverse of extract_patches; overlapping pixels are averaged uniformly."""
    patches = np.asarray(patches, dtype=float)
    if patches.shape != (grid.patch_dim, grid.n_patches):
        raise ValueError(f"patch matrix shape {patches.shape} does not match grid "
                         f"({grid.patch_dim}, {grid.n_patches})")
    acc = np.zeros((grid.image_h, grid.image_w))
    weight = np.zeros((grid.image_h, grid.image_w))
    col = 0
    for c in grid.col_positions:
        for r in grid.row_positions:
            acc[r:r + grid.patch_h, c:c + grid.patch_w] += \
                patches[:, col].reshape(grid.patch_h, grid.patch_w, order="F")
            weight[r:r + grid.patch_h, c:c + grid.patch_w] += 1.0
            col += 1
    return acc / weight

"""File formats: headerless CSV matrices, binary 8-bit PGM images, JSON manifests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def write_csv_matrix(path, arr: np.ndarray):
    """Row-major CSV, '.' decimal separator, no header; %.17g round-trips doubles."""
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    np.savetxt(path, arr, delimiter=",", fmt="%.17g")


def read_csv_matrix(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))


def write_pgm(path, image: np.ndarray):
    """Binary PGM (P5), maxval 255; values are clipped to [0, 255] and rounded."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    data = np.clip(np.round(image), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM into a float array with values in [0, 255]."""
    with open(path, "rb") as fh:
        content = fh.read()
    if not content.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(content) and content[pos:pos + 1].isspace():
            pos += 1
        if content[pos:pos + 1] == b"#":
            while pos < len(content) and content[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(content) and not content[pos:pos + 1].isspace():
            pos += 1
        tokens.append(content[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
    data = np.frombuffer(content, dtype=np.uint8, count=w * h, offset=pos)
    return data.reshape(h, w).astype(float)


def write_manifest(path, payload: dict):
    """Canonical JSON (sorted keys, fixed separators) so re-runs are byte-identical."""
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="ascii")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="ascii"))

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from dedge.imgproc import edge_map_to_bytes, write_gray

FIXTURES = Path(__file__).parent / "fixtures"

_TOKENS = {"r2": math.sqrt(2.0), "-r2": -math.sqrt(2.0)}


def load_grid(name: str, size: int) -> np.ndarray:
    """Parse a checked-in kernel grid, transcribed separately from the code."""
    path = FIXTURES / "kernels" / f"{name}_{size}.txt"
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append([_TOKENS[tok] if tok in _TOKENS else float(tok) for tok in line.split()])
    grid = np.array(rows, dtype=np.float64)
    assert grid.shape == (size, size)
    return grid


def fixture_names() -> list[tuple[str, int]]:
    out = []
    for path in sorted((FIXTURES / "kernels").glob("*.txt")):
        stem, _, size = path.stem.rpartition("_")
        out.append((stem, int(size)))
    return out


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(196883)


def random_image(rng: np.random.Generator, shape: tuple[int, int] = (32, 32)) -> np.ndarray:
    return rng.integers(0, 256, size=shape, dtype=np.uint8)


def step_image(h: int = 24, w: int = 24, lo: int = 40, hi: int = 210) -> np.ndarray:
    """Vertical step edge: left half lo, right half hi."""
    img = np.full((h, w), lo, dtype=np.uint8)
    img[:, w // 2 :] = hi
    return img


def random_blobs(rng: np.random.Generator, shape: tuple[int, int] = (16, 16), blobs: int = 3) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for _ in range(blobs):
        cy = int(rng.integers(2, shape[0] - 2))
        cx = int(rng.integers(2, shape[1] - 2))
        ry = int(rng.integers(1, 4))
        rx = int(rng.integers(1, 4))
        yy, xx = np.ogrid[: shape[0], : shape[1]]
        mask |= (np.abs(yy - cy) <= ry) & (np.abs(xx - cx) <= rx)
    return mask


def build_dataset(root: Path, rng: np.random.Generator, n: int = 3, annotators: int = 2) -> Path:
    """Write a small detection dataset: images/ plus per-image boundary maps in gt/."""
    images = root / "images"
    gt = root / "gt"
    images.mkdir(parents=True)
    gt.mkdir()
    for i in range(n):
        img = np.full((40, 48), 50, dtype=np.uint8)
        col = 12 + 8 * i
        img[:, col:] = 200
        noise = rng.integers(-6, 7, size=img.shape)
        img = np.clip(img.astype(np.int16) + noise, 0, 255).astype(np.uint8)
        write_gray(images / f"img{i}.png", img)
        for a in range(annotators):
            ref = np.zeros((40, 48), dtype=bool)
            ref[:, col + a] = True
            write_gray(gt / f"img{i}.gt{a}.png", edge_map_to_bytes(ref))
    return root

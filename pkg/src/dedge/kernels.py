"""Kernel catalog and constructors for dilated edge-detection filters.

A kernel is a small real-valued mask with an odd number of rows and
columns.  Dilation inserts a fixed number of zero rows/columns between
every pair of neighbouring coefficients, growing the footprint of the
mask without adding nonzero coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT2 = math.sqrt(2.0)

FAMILIES = ("orthogonal", "compass", "frei_chen", "laplace", "gaussian", "log")


class UnknownKernelError(ValueError):
    """Requested name is not in the catalog."""


class UnsupportedSizeError(ValueError):
    """Catalog has the name but not at the requested size."""


@dataclass(frozen=True)
class Kernel:
    """A dense mask plus the metadata the pipelines need.

    Attributes
    ----------
    name : str
        Catalog name (e.g. ``"sobel"``, ``"laplace_v1"``).
    family : str
        One of ``FAMILIES``.
    coeffs : np.ndarray
        Read-only float64 array of shape (H, W), H and W odd.
    dilation_factor : int
        Number of zero gaps between original coefficients (0 = undilated).
    """

    name: str
    family: str
    coeffs: np.ndarray
    dilation_factor: int = 0

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 2 or coeffs.shape[0] % 2 == 0 or coeffs.shape[1] % 2 == 0:
            raise ValueError(f"kernel must be 2-D with odd sides, got {coeffs.shape}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape

    @property
    def anchor(self) -> tuple[int, int]:
        """Geometric centre (row, col)."""
        return (self.coeffs.shape[0] // 2, self.coeffs.shape[1] // 2)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.coeffs))

    @property
    def base_size(self) -> int:
        """Side length of the undilated mask."""
        f = self.dilation_factor
        return (self.coeffs.shape[0] + f) // (f + 1)


@dataclass(frozen=True)
class SparseKernel:
    """Nonzero taps of a kernel, as (dy, dx, weight) offsets from the anchor.

    Taps are stored in row-major scan order of the dense mask so that
    accumulating them reproduces the dense accumulation order exactly.
    """

    taps: tuple[tuple[int, int, float], ...]
    base_nnz: int
    shape: tuple[int, int] = field(default=(1, 1))


def sparse_from_kernel(k: Kernel) -> SparseKernel:
    """Extract the nonzero taps of ``k`` in row-major order."""
    cy, cx = k.anchor
    taps = []
    for (y, x), w in np.ndenumerate(k.coeffs):
        if w != 0.0:
            taps.append((y - cy, x - cx, float(w)))
    return SparseKernel(taps=tuple(taps), base_nnz=len(taps), shape=k.coeffs.shape)


def dilate(k: Kernel, factor: int) -> Kernel:
    """Insert ``factor`` zero gaps between neighbouring coefficients.

    A k x k mask becomes (k + (k-1)*factor) square; the coefficient at
    (i, j) moves to (i*(factor+1), j*(factor+1)).  The number of nonzero
    coefficients is unchanged.

    Parameters
    ----------
    k : Kernel
        An undilated kernel (dilation_factor 0).
    factor : int
        Gap count, >= 0.  ``factor=0`` returns an identical kernel.
    """
    if factor < 0:
        raise ValueError(f"dilation factor must be >= 0, got {factor}")
    if k.dilation_factor != 0:
        raise ValueError("kernel is already dilated; dilate the base mask")
    if factor == 0:
        return k
    h, w = k.coeffs.shape
    out = np.zeros((h + (h - 1) * factor, w + (w - 1) * factor), dtype=np.float64)
    step = factor + 1
    out[::step, ::step] = k.coeffs
    return Kernel(name=k.name, family=k.family, coeffs=out, dilation_factor=factor)


def undilate(k: Kernel) -> Kernel:
    """Recover the base mask of a dilated kernel (inverse of ``dilate``)."""
    if k.dilation_factor == 0:
        return k
    step = k.dilation_factor + 1
    return Kernel(name=k.name, family=k.family, coeffs=k.coeffs[::step, ::step])


def rotate_orthogonal(k: Kernel) -> Kernel:
    """Rotate an orthogonal mask 90 degrees clockwise (x-kernel -> y-kernel)."""
    if k.family != "orthogonal":
        raise ValueError(f"rotate_orthogonal needs an orthogonal kernel, got {k.family}")
    return Kernel(
        name=k.name,
        family=k.family,
        coeffs=np.rot90(k.coeffs, k=-1),
        dilation_factor=k.dilation_factor,
    )


# Outer ring of a 3x3 mask, clockwise from the top-left corner.
_RING = ((0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0))


def _ring_shift(coeffs: np.ndarray, steps: int) -> np.ndarray:
    ring = [coeffs[p] for p in _RING]
    ring = np.roll(ring, -steps)
    out = coeffs.copy()
    for p, v in zip(_RING, ring):
        out[p] = v
    return out


def compass_set(k: Kernel) -> list[Kernel]:
    """All 8 orientations of a compass base mask, in 45-degree steps.

    The orientations are produced by cyclically shifting the outer ring
    of the 3x3 base; index 0 is the base itself.  If ``k`` is dilated,
    each rotated base is dilated by the same factor afterwards.
    """
    if k.family != "compass":
        raise ValueError(f"compass_set needs a compass kernel, got {k.family}")
    base = undilate(k)
    if base.coeffs.shape != (3, 3):
        raise UnsupportedSizeError("compass bases are 3x3 masks")
    out = []
    for step in range(8):
        rotated = Kernel(
            name=base.name, family="compass", coeffs=_ring_shift(np.array(base.coeffs), step)
        )
        out.append(dilate(rotated, k.dilation_factor))
    return out


def default_gaussian_size(sigma: float) -> int:
    """Default truncation: 2*ceil(3*sigma) + 1."""
    return 2 * math.ceil(3.0 * sigma) + 1


def build_gaussian(sigma: float, size: int | None = None) -> Kernel:
    """Sampled 2-D Gaussian normalised to unit sum.

    Parameters
    ----------
    sigma : float
        Standard deviation, > 0.
    size : int, optional
        Odd side length; defaults to ``2*ceil(3*sigma) + 1``.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if size is None:
        size = default_gaussian_size(sigma)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"size must be odd and >= 1, got {size}")
    r = size // 2
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    g = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2))
    g /= g.sum()
    return Kernel(name=f"gaussian_{sigma:g}", family="gaussian", coeffs=g)


def build_log(
    sigma: float,
    size: int | None = None,
    mode: str = "analytic",
    variant: str = "v1",
    dilation: int = 0,
) -> Kernel:
    """Laplacian-of-Gaussian kernel.

    ``mode="analytic"`` samples the continuous LoG surface and subtracts
    the sample mean so the coefficients sum to exactly zero.  The centre
    sample is negative and the surface changes sign near radius
    sigma*sqrt(2).

    ``mode="laplace_conv"`` composes the kernel discretely: the sampled
    Gaussian is convolved (full, no truncation) with the chosen Laplace
    mask, dilated by ``dilation``, so a size-n Gaussian grows by the
    Laplace footprint minus one.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if size is None:
        size = default_gaussian_size(sigma)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"size must be odd and >= 1, got {size}")
    if mode == "analytic":
        r = size // 2
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
        r2 = xx**2 + yy**2
        g = -(1.0 / (math.pi * sigma**4)) * (1.0 - r2 / (2.0 * sigma**2)) * np.exp(
            -r2 / (2.0 * sigma**2)
        )
        g -= g.mean()  # enforce zero DC response on the truncated window
        return Kernel(name=f"log_{sigma:g}", family="log", coeffs=g)
    if mode == "laplace_conv":
        from scipy.signal import convolve2d

        gauss = build_gaussian(sigma, size)
        lap = dilate(catalog_get(f"laplace_{variant}", 3), dilation)
        coeffs = convolve2d(gauss.coeffs, lap.coeffs, mode="full")
        return Kernel(name=f"log_{sigma:g}_{variant}", family="log", coeffs=coeffs)
    raise ValueError(f"unknown LoG mode {mode!r}")


# --- catalog -----------------------------------------------------------------
# Masks are transcribed digit for digit from their printed sources; several
# (laplace_v5, scharr 5x5, the 5x5 Laplace pair) are asymmetric or have a
# nonzero sum as printed, and are kept that way deliberately.

_S2 = SQRT2

_CATALOG: dict[tuple[str, int], tuple[str, list[list[float]]]] = {
    # orthogonal first-order masks (x-direction form)
    ("pixel_difference", 3): ("orthogonal", [[0, 0, 0], [0, -1, 1], [0, 0, 0]]),
    ("separated_pixel_difference", 3): ("orthogonal", [[0, 0, 0], [-1, 0, 1], [0, 0, 0]]),
    ("sobel", 3): ("orthogonal", [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]),
    ("prewitt", 3): ("orthogonal", [[-1, 0, 1], [-1, 0, 1], [-1, 0, 1]]),
    ("kirsch", 3): ("orthogonal", [[-3, -3, 5], [-3, 0, 5], [-3, -3, 5]]),
    ("kitchen", 3): ("orthogonal", [[-2, 0, 2], [-3, 0, 3], [-2, 0, 2]]),
    ("kayyali", 3): ("orthogonal", [[-6, 0, 6], [0, 0, 0], [6, 0, -6]]),
    ("scharr", 3): ("orthogonal", [[-3, 0, 3], [-10, 0, 10], [-3, 0, 3]]),
    ("kroon", 3): ("orthogonal", [[-17, 0, 17], [-61, 0, 61], [-17, 0, 17]]),
    ("orhei", 3): ("orthogonal", [[-1, 0, 1], [-4, 0, 4], [-1, 0, 1]]),
    ("sobel", 5): (
        "orthogonal",
        [
            [-5, -4, 0, 4, 5],
            [-8, -10, 0, 10, 8],
            [-10, -20, 0, 20, 10],
            [-8, -10, 0, 10, 8],
            [-5, -4, 0, 4, 5],
        ],
    ),
    ("prewitt", 5): (
        "orthogonal",
        [
            [-2, -1, 0, 1, 2],
            [-2, -1, 0, 1, 2],
            [-2, -1, 0, 1, 2],
            [-2, -1, 0, 1, 2],
            [-2, -1, 0, 1, 2],
        ],
    ),
    ("kirsch", 5): (
        "orthogonal",
        [
            [-7, -7, -7, 9, 9],
            [-7, -3, -3, 5, 9],
            [-7, -3, 0, 5, 9],
            [-7, -3, -3, 5, 9],
            [-7, -7, -7, 9, 9],
        ],
    ),
    ("scharr", 5): (
        "orthogonal",
        [
            [-1, -1, 0, 1, 1],
            [-2, -2, 0, 1, 2],
            [-3, -6, 0, 6, 3],
            [-2, -2, 0, 2, 2],
            [-1, -1, 0, 1, 1],
        ],
    ),
    ("orhei", 5): (
        "orthogonal",
        [
            [-2, -1, 0, 1, 2],
            [-2, -1, 0, 1, 2],
            [-8, -4, 0, 4, 8],
            [-2, -1, 0, 1, 2],
            [-2, -1, 0, 1, 2],
        ],
    ),
    ("sobel", 7): (
        "orthogonal",
        [
            [-780, -720, -468, 0, 468, 720, 780],
            [-1080, -1170, -936, 0, 936, 1170, 1080],
            [-1404, -1872, -2340, 0, 2340, 1872, 1404],
            [-1560, -2340, -4680, 0, 4680, 2340, 1560],
            [-1404, -1872, -2340, 0, 2340, 1872, 1404],
            [-1080, -1170, -936, 0, 936, 1170, 1080],
            [-780, -720, -468, 0, 468, 720, 780],
        ],
    ),
    ("prewitt", 7): (
        "orthogonal",
        [[-3, -2, -1, 0, 1, 2, 3]] * 7,
    ),
    # compass base masks
    ("prewitt_compass", 3): ("compass", [[-1, 1, 1], [-1, -2, 1], [-1, 1, 1]]),
    ("robinson_compass", 3): ("compass", [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]),
    ("kirsch_compass", 3): ("compass", [[-3, -3, 5], [-3, 0, 5], [-3, -3, 5]]),
    # second-order (Laplace) masks
    ("laplace_v1", 3): ("laplace", [[0, 1, 0], [1, -4, 1], [0, 1, 0]]),
    ("laplace_v2", 3): ("laplace", [[1, 1, 1], [1, -8, 1], [1, 1, 1]]),
    ("laplace_v3", 3): ("laplace", [[-1, 2, -1], [2, -4, 2], [-1, 2, -1]]),
    ("laplace_v4", 3): ("laplace", [[1, 4, 1], [4, -20, 4], [1, 4, 1]]),
    ("laplace_v5", 3): ("laplace", [[2, -1, 2], [-1, -4, 1], [2, -1, 2]]),
    ("laplace_v1", 5): (
        "laplace",
        [
            [0, 0, 1, 0, 0],
            [0, 1, 2, 1, 0],
            [1, 2, -17, 2, 1],
            [0, 1, 2, 1, 0],
            [0, 0, 1, 0, 0],
        ],
    ),
    ("laplace_v2", 5): (
        "laplace",
        [
            [1, 1, 1, 1, 1],
            [1, 1, 1, 1, 1],
            [1, 1, -18, 1, 1],
            [1, 1, 1, 1, 1],
            [1, 1, 1, 1, 1],
        ],
    ),
    # Frei-Chen basis masks (unit scale)
    ("frei_chen_g1", 3): ("frei_chen", [[-1, 0, 1], [-_S2, 0, _S2], [-1, 0, 1]]),
    ("frei_chen_g2", 3): ("frei_chen", [[-1, -_S2, -1], [0, 0, 0], [1, _S2, 1]]),
    ("frei_chen_g3", 3): ("frei_chen", [[0, -1, _S2], [1, 0, -1], [_S2, 1, 0]]),
    ("frei_chen_g4", 3): ("frei_chen", [[_S2, -1, 0], [-1, 0, 1], [0, 1, _S2]]),
    ("frei_chen_g5", 3): ("frei_chen", [[0, 1, 0], [-1, 0, -1], [0, 1, 0]]),
    ("frei_chen_g6", 3): ("frei_chen", [[-1, 0, 1], [0, 0, 0], [1, 0, -1]]),
    ("frei_chen_g7", 3): ("frei_chen", [[1, -2, 1], [-2, 4, -2], [1, -2, 1]]),
    ("frei_chen_g8", 3): ("frei_chen", [[-2, 1, -2], [1, 4, 1], [-2, 1, -2]]),
    ("frei_chen_g9", 3): ("frei_chen", [[1, 1, 1], [1, 1, 1], [1, 1, 1]]),
}


def catalog_names() -> list[str]:
    """Sorted unique kernel names in the catalog."""
    return sorted({name for name, _ in _CATALOG})


def catalog_entries() -> list[tuple[str, int]]:
    """All (name, size) pairs in the catalog, sorted."""
    return sorted(_CATALOG)


def catalog_sizes(name: str) -> list[int]:
    sizes = sorted(size for n, size in _CATALOG if n == name)
    if not sizes:
        raise UnknownKernelError(f"no kernel named {name!r}")
    return sizes


def catalog_get(name: str, size: int = 3) -> Kernel:
    """Fetch an undilated catalog kernel by name and side length."""
    sizes = catalog_sizes(name)
    if size not in sizes:
        raise UnsupportedSizeError(
            f"kernel {name!r} has no {size}x{size} form (available: {sizes})"
        )
    family, grid = _CATALOG[(name, size)]
    return Kernel(name=name, family=family, coeffs=np.array(grid, dtype=np.float64))


def frei_chen_masks(dilation: int = 0) -> list[Kernel]:
    """The nine Frei-Chen basis masks g1..g9, optionally dilated."""
    return [dilate(catalog_get(f"frei_chen_g{i}", 3), dilation) for i in range(1, 10)]

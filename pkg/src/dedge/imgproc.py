"""Image plumbing: grayscale conversion, convolution, thresholding, file I/O.

Array conventions used across the package:

* gray image  -- 2-D uint8 array
* real plane  -- 2-D float64 array (filter responses)
* edge map    -- 2-D bool array; serialised as 8-bit {0, 255}

Convolution is plain correlation (no kernel flip) with replicate border
handling.  The dense and the sparse path accumulate the very same terms
in the very same row-major order, so their outputs are bit-identical;
the sparse path simply skips zero coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .kernels import Kernel, SparseKernel, build_gaussian, sparse_from_kernel


@dataclass
class MacCounter:
    """Tallies multiply-accumulate work done by instrumented convolutions."""

    macs: int = 0
    pixels: int = 0
    calls: int = 0
    per_pixel: list[int] = field(default_factory=list)

    def add(self, pixels: int, taps: int) -> None:
        self.macs += pixels * taps
        self.pixels += pixels
        self.calls += 1
        self.per_pixel.append(taps)


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Convert an RGB byte image to luma bytes: round(0.299R + 0.587G + 0.114B).

    A 2-D input is assumed to be grayscale already and is passed through.
    """
    if rgb.ndim == 2:
        return rgb.astype(np.uint8, copy=False)
    if rgb.ndim != 3 or rgb.shape[2] < 3:
        raise ValueError(f"expected HxWx3 RGB array, got shape {rgb.shape}")
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    return np.clip(np.rint(y), 0, 255).astype(np.uint8)


def _replicate_pad(plane: np.ndarray, ry: int, rx: int) -> np.ndarray:
    if ry == 0 and rx == 0:
        return plane
    return np.pad(plane, ((ry, ry), (rx, rx)), mode="edge")


def _accumulate(padded: np.ndarray, taps, ry: int, rx: int, h: int, w: int) -> np.ndarray:
    out = np.zeros((h, w), dtype=np.float64)
    for dy, dx, weight in taps:
        y0 = ry + dy
        x0 = rx + dx
        out += weight * padded[y0 : y0 + h, x0 : x0 + w]
    return out


def convolve_dense(
    img: np.ndarray, k: Kernel, counter: MacCounter | None = None
) -> np.ndarray:
    """Correlate ``img`` with every coefficient of ``k`` (zeros included).

    Border samples are replicated.  Output is float64 with the input's
    shape.
    """
    plane = np.asarray(img, dtype=np.float64)
    h, w = plane.shape
    ry, rx = k.anchor
    padded = _replicate_pad(plane, ry, rx)
    taps = [
        (y - ry, x - rx, float(v)) for (y, x), v in np.ndenumerate(k.coeffs)
    ]
    if counter is not None:
        counter.add(pixels=h * w, taps=len(taps))
    return _accumulate(padded, taps, ry, rx, h, w)


def convolve_sparse(
    img: np.ndarray, sk: SparseKernel, counter: MacCounter | None = None
) -> np.ndarray:
    """Correlate ``img`` with the nonzero taps of a sparse kernel.

    Accumulation order matches ``convolve_dense`` (row-major over the
    mask), and skipped zero coefficients contribute exactly nothing, so
    the result is bit-identical to the dense path on the same kernel.
    """
    plane = np.asarray(img, dtype=np.float64)
    h, w = plane.shape
    ry, rx = sk.shape[0] // 2, sk.shape[1] // 2
    padded = _replicate_pad(plane, ry, rx)
    if counter is not None:
        counter.add(pixels=h * w, taps=len(sk.taps))
    return _accumulate(padded, sk.taps, ry, rx, h, w)


def convolve(img: np.ndarray, k: Kernel, counter: MacCounter | None = None) -> np.ndarray:
    """Convolve through the sparse path (identical output, gaps skipped)."""
    return convolve_sparse(img, sparse_from_kernel(k), counter=counter)


def gaussian_blur(img: np.ndarray, sigma: float, size: int | None = None) -> np.ndarray:
    """Blur with a sampled Gaussian; default size is 2*ceil(3*sigma) + 1."""
    return convolve_dense(img, build_gaussian(sigma, size))


def scale_to_byte(plane: np.ndarray, mode: str = "clamp_abs") -> np.ndarray:
    """Map a real plane to bytes.

    ``clamp_abs``: v -> clamp(|v|, 0, 255); ``shift_half``: v -> clamp(v/2 + 128, 0, 255).
    """
    plane = np.asarray(plane, dtype=np.float64)
    if mode == "clamp_abs":
        mapped = np.abs(plane)
    elif mode == "shift_half":
        mapped = plane / 2.0 + 128.0
    else:
        raise ValueError(f"unknown scale mode {mode!r}")
    return np.clip(np.rint(mapped), 0, 255).astype(np.uint8)


def threshold_global(img: np.ndarray, thr: float) -> np.ndarray:
    """Edge map of pixels >= thr."""
    return np.asarray(img) >= thr


def edge_map_to_bytes(edges: np.ndarray) -> np.ndarray:
    """Bool edge map -> uint8 {0, 255}."""
    return np.where(np.asarray(edges, dtype=bool), 255, 0).astype(np.uint8)


def bytes_to_edge_map(img: np.ndarray) -> np.ndarray:
    """Any nonzero byte counts as an edge pixel."""
    return np.asarray(img) > 0


# --- file I/O ----------------------------------------------------------------


def read_image(path: str | Path) -> np.ndarray:
    """Read PNG/JPEG/PPM/PGM.  RGB images return HxWx3 uint8, gray HxW uint8."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def read_gray(path: str | Path) -> np.ndarray:
    """Read an image and convert to luma bytes if it has colour channels."""
    return to_grayscale(read_image(path))


def write_gray(path: str | Path, img: np.ndarray) -> None:
    """Write a 2-D uint8 array as 8-bit grayscale PNG or binary PGM (P5)."""
    path = Path(path)
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError(f"expected 2-D gray image, got shape {img.shape}")
    if path.suffix.lower() == ".pgm":
        _write_pgm(path, img)
    else:
        Image.fromarray(img, mode="L").save(path)


def write_edge_map(path: str | Path, edges: np.ndarray) -> None:
    """Serialise a bool edge map as 8-bit {0, 255}."""
    write_gray(path, edge_map_to_bytes(edges))


def read_edge_map(path: str | Path) -> np.ndarray:
    return bytes_to_edge_map(read_gray(path))


def _write_pgm(path: Path, img: np.ndarray) -> None:
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary (P5) PGM file."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM file")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit PGM not supported")
    return np.frombuffer(data, dtype=np.uint8, count=h * w, offset=pos).reshape(h, w)


def write_response_plane(path: str | Path, plane: np.ndarray) -> None:
    """Dump a raw response plane: 32-bit float TIFF or a text grid (.txt)."""
    path = Path(path)
    plane = np.asarray(plane, dtype=np.float64)
    if path.suffix.lower() in (".tif", ".tiff"):
        Image.fromarray(plane.astype(np.float32), mode="F").save(path)
    elif path.suffix.lower() == ".txt":
        np.savetxt(path, plane, fmt="%.9g", delimiter="\t")
    else:
        raise ValueError(f"response dumps must be .tif/.tiff or .txt, got {path.suffix!r}")

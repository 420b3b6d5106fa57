"""First- and second-order derivative operators built on the kernel catalog."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .imgproc import convolve, gaussian_blur
from .kernels import Kernel, build_log, catalog_get, dilate, rotate_orthogonal


@dataclass(frozen=True)
class GradientMap:
    """Directional derivatives plus magnitude/orientation planes.

    ``orientation`` is the two-argument arctangent of (gx, gy) in
    (-pi, pi].  ``vertical`` flags pixels whose edge runs vertically,
    i.e. |gx| >= |gy|.
    """

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    orientation: np.ndarray
    vertical: np.ndarray


@dataclass(frozen=True)
class CompassResponse:
    """Pointwise maximum over 8 orientations and the winning index."""

    magnitude: np.ndarray
    best_index: np.ndarray


@dataclass(frozen=True)
class FreiChenResponse:
    """Edge-space and line-space projection ratios, each in [0, 1]."""

    edge: np.ndarray
    line: np.ndarray


def gradient_orthogonal(img: np.ndarray, base: Kernel, mode: str = "exact") -> GradientMap:
    """Apply an orthogonal mask pair (base and its 90-degree rotation).

    Parameters
    ----------
    img : np.ndarray
        Gray image or real plane.
    base : Kernel
        Orthogonal-family kernel, possibly dilated.
    mode : str
        ``"exact"`` magnitude sqrt(gx^2 + gy^2) or ``"approx"`` |gx| + |gy|.
    """
    if base.family != "orthogonal":
        raise ValueError(f"gradient_orthogonal needs an orthogonal kernel, got {base.family}")
    if mode not in ("exact", "approx"):
        raise ValueError(f"unknown magnitude mode {mode!r}")
    gx = convolve(img, base)
    gy = convolve(img, rotate_orthogonal(base))
    if mode == "exact":
        magnitude = np.hypot(gx, gy)
    else:
        magnitude = np.abs(gx) + np.abs(gy)
    orientation = np.arctan2(gx, gy)
    vertical = np.abs(gx) >= np.abs(gy)
    return GradientMap(gx=gx, gy=gy, magnitude=magnitude, orientation=orientation, vertical=vertical)


def compass_gradient(img: np.ndarray, base: Kernel) -> CompassResponse:
    """Pointwise maximum response over the 8 rotations of a compass mask.

    Ties keep the lowest orientation index.
    """
    responses = np.stack([convolve(img, k) for k in kernels.compass_set(base)])
    return CompassResponse(
        magnitude=responses.max(axis=0),
        best_index=responses.argmax(axis=0).astype(np.uint8),
    )


def frei_chen(img: np.ndarray, dilation: int = 0) -> FreiChenResponse:
    """Project onto the nine Frei-Chen basis masks.

    edge = sqrt(sum of squared responses to g1..g4 / total), line uses
    g5..g8.  Pixels with zero total energy map to 0 in both planes.
    """
    s = np.stack([convolve(img, k) ** 2 for k in kernels.frei_chen_masks(dilation)])
    total = s.sum(axis=0)
    edge_num = s[0:4].sum(axis=0)
    line_num = s[4:8].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        edge = np.sqrt(np.where(total > 0, edge_num / total, 0.0))
        line = np.sqrt(np.where(total > 0, line_num / total, 0.0))
    return FreiChenResponse(edge=edge, line=line)


def laplace(img: np.ndarray, variant: str = "v1", size: int = 3, dilation: int = 0) -> np.ndarray:
    """Second-derivative response of one Laplace mask variant."""
    return convolve(img, dilate(catalog_get(f"laplace_{variant}", size), dilation))


def log_response(
    img: np.ndarray,
    sigma: float,
    variant: str = "v1",
    dilation: int = 0,
    form: str = "factored",
    size: int | None = None,
) -> np.ndarray:
    """Laplacian-of-Gaussian response.

    ``form`` selects how the two stages combine:

    * ``"factored"``  -- Gaussian blur, then the (dilated) Laplace mask.
    * ``"composite"`` -- one convolution with the discrete composition of
      the two kernels; matches ``factored`` away from the border.
    * ``"analytic"``  -- one convolution with the sampled continuous LoG
      surface (``variant``/``dilation`` unused).
    """
    if form == "factored":
        return laplace(gaussian_blur(img, sigma, size), variant=variant, dilation=dilation)
    if form == "composite":
        k = build_log(sigma, size, mode="laplace_conv", variant=variant, dilation=dilation)
        return convolve(img, k)
    if form == "analytic":
        return convolve(img, build_log(sigma, size, mode="analytic"))
    raise ValueError(f"unknown LoG form {form!r}")

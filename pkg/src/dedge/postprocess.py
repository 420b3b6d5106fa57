"""Edge-map post-processing: zero crossings, NMS, hysteresis, thinning."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .operators import GradientMap

# Opposite neighbour pairs for zero-crossing tests: (W,E), (N,S), (NW,SE), (NE,SW).
_OPPOSITE_PAIRS = (
    ((0, -1), (0, 1)),
    ((-1, 0), (1, 0)),
    ((-1, -1), (1, 1)),
    ((-1, 1), (1, -1)),
)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def _neighbour(plane: np.ndarray, dy: int, dx: int):
    """Plane of neighbour values: out[y, x] = plane[y+dy, x+dx], 0 outside."""
    h, w = plane.shape
    out = np.zeros_like(plane)
    ys = slice(max(-dy, 0), h + min(-dy, 0))
    xs = slice(max(-dx, 0), w + min(-dx, 0))
    ys_src = slice(max(dy, 0), h + min(dy, 0))
    xs_src = slice(max(dx, 0), w + min(dx, 0))
    out[ys, xs] = plane[ys_src, xs_src]
    return out


def _neighbour_replicate(plane: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Like ``_neighbour`` but out-of-image values replicate the border."""
    padded = np.pad(plane, 1, mode="edge")
    h, w = plane.shape
    return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]


def zero_crossing(plane: np.ndarray, min_delta: float = 0.0) -> np.ndarray:
    """Mark pixels where opposite neighbours straddle zero.

    A pixel is marked iff, for at least one of the four opposite
    neighbour pairs, one value is strictly negative and the other
    strictly positive, and their absolute difference is >= ``min_delta``.
    Exact zeros never participate, so a (-v, 0) pair is not a crossing.
    Out-of-image neighbours are replicated.
    """
    plane = np.asarray(plane, dtype=np.float64)
    marked = np.zeros(plane.shape, dtype=bool)
    for (dy1, dx1), (dy2, dx2) in _OPPOSITE_PAIRS:
        a = _neighbour_replicate(plane, dy1, dx1)
        b = _neighbour_replicate(plane, dy2, dx2)
        opposite = ((a < 0) & (b > 0)) | ((a > 0) & (b < 0))
        marked |= opposite & (np.abs(a - b) >= min_delta)
    return marked


# Neighbour offsets along the quantised gradient direction, per bin:
# 0 deg (E/W), 45 deg (SE/NW), 90 deg (N/S), 135 deg (SW/NE).
_NMS_OFFSETS = (
    ((0, 1), (0, -1)),
    ((1, 1), (-1, -1)),
    ((1, 0), (-1, 0)),
    ((1, -1), (-1, 1)),
)


def non_max_suppression(g: GradientMap) -> np.ndarray:
    """Keep magnitude only at local ridge maxima across the gradient.

    The gradient direction is quantised to 4 bins; a pixel survives iff
    its magnitude is >= both neighbours along that direction (ties keep
    the pixel, so flat plateaus survive whole).  Out-of-image neighbours
    count as 0.
    """
    mag = g.magnitude
    angle = np.mod(np.arctan2(g.gy, g.gx), np.pi)
    bins = (np.floor((angle + np.pi / 8) / (np.pi / 4)).astype(int)) % 4
    out = np.zeros_like(mag)
    for b, ((dy1, dx1), (dy2, dx2)) in enumerate(_NMS_OFFSETS):
        n1 = _neighbour(mag, dy1, dx1)
        n2 = _neighbour(mag, dy2, dx2)
        keep = (bins == b) & (mag >= n1) & (mag >= n2)
        out[keep] = mag[keep]
    return out


def resolve_hysteresis_thresholds(
    plane: np.ndarray, low: float, high: float, relative_to_max: bool = False
) -> tuple[float, float]:
    """Absolute (t_lo, t_hi); in relative mode t = (value/255) * max(plane)."""
    if low > high:
        raise ValueError(f"hysteresis low {low} exceeds high {high}")
    if relative_to_max:
        peak = float(np.max(plane)) if plane.size else 0.0
        return (low / 255.0) * peak, (high / 255.0) * peak
    return float(low), float(high)


def classify_strengths(
    plane: np.ndarray, low: float, high: float, relative_to_max: bool = False
) -> np.ndarray:
    """Debug view of hysteresis classes: 255 strong, 128 weak, 0 out."""
    t_lo, t_hi = resolve_hysteresis_thresholds(plane, low, high, relative_to_max)
    out = np.zeros(plane.shape, dtype=np.uint8)
    out[plane >= t_lo] = 128
    out[plane >= t_hi] = 255
    return out


def hysteresis_link(
    plane: np.ndarray, low: float, high: float, relative_to_max: bool = False
) -> np.ndarray:
    """Double-threshold linking.

    Strong pixels (>= t_hi) are kept; weak pixels (in [t_lo, t_hi)) are
    kept iff 8-connected to a strong pixel through other weak or strong
    pixels.
    """
    plane = np.asarray(plane, dtype=np.float64)
    t_lo, t_hi = resolve_hysteresis_thresholds(plane, low, high, relative_to_max)
    if relative_to_max and t_hi <= 0:  # no signal anywhere
        return np.zeros(plane.shape, dtype=bool)
    strong = plane >= t_hi
    candidate = plane >= t_lo
    if not strong.any():
        return np.zeros(plane.shape, dtype=bool)
    labels, _ = ndimage.label(candidate, structure=_EIGHT_CONNECTED)
    keep = np.unique(labels[strong])
    return candidate & np.isin(labels, keep[keep > 0])


def _neighbours(edges: np.ndarray) -> tuple[np.ndarray, ...]:
    # p2..p9 clockwise from north, y axis pointing down
    p2 = _neighbour(edges, -1, 0)  # N
    p3 = _neighbour(edges, -1, 1)  # NE
    p4 = _neighbour(edges, 0, 1)  # E
    p5 = _neighbour(edges, 1, 1)  # SE
    p6 = _neighbour(edges, 1, 0)  # S
    p7 = _neighbour(edges, 1, -1)  # SW
    p8 = _neighbour(edges, 0, -1)  # W
    p9 = _neighbour(edges, -1, -1)  # NW
    return p2, p3, p4, p5, p6, p7, p8, p9


def _thin_subiteration(edges: np.ndarray, odd: bool) -> np.ndarray:
    p2, p3, p4, p5, p6, p7, p8, p9 = _neighbours(edges)
    c = (
        (~p2 & (p3 | p4)).astype(np.uint8)
        + (~p4 & (p5 | p6)).astype(np.uint8)
        + (~p6 & (p7 | p8)).astype(np.uint8)
        + (~p8 & (p9 | p2)).astype(np.uint8)
    )
    n1 = (
        (p9 | p2).astype(np.uint8)
        + (p3 | p4).astype(np.uint8)
        + (p5 | p6).astype(np.uint8)
        + (p7 | p8).astype(np.uint8)
    )
    n2 = (
        (p2 | p3).astype(np.uint8)
        + (p4 | p5).astype(np.uint8)
        + (p6 | p7).astype(np.uint8)
        + (p8 | p9).astype(np.uint8)
    )
    n = np.minimum(n1, n2)
    if odd:
        m = (p2 | p3 | ~p5) & p4
    else:
        m = (p6 | p7 | ~p9) & p8
    deletable = edges & (c == 1) & (n >= 2) & (n <= 3) & ~m
    return edges & ~deletable


def guo_hall_thin(edges: np.ndarray) -> np.ndarray:
    """Two-subiteration thinning run to a fixpoint.

    Each pass marks all deletable pixels of one subiteration and removes
    them simultaneously; passes alternate the directional condition.
    Stops when a full pair of subiterations deletes nothing.
    """
    current = np.asarray(edges, dtype=bool).copy()
    while True:
        after_odd = _thin_subiteration(current, odd=True)
        after_even = _thin_subiteration(after_odd, odd=False)
        if np.array_equal(after_even, current):
            return after_even
        current = after_even

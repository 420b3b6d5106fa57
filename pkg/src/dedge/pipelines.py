"""End-to-end edge-detection pipelines.

Every runner takes an RGB or gray byte image and returns a bool edge
map.  Parameter objects are plain dataclasses with a ``validate``
method enforcing structural constraints (the CLI layers advisory range
checks on top).
"""

from __future__ import annotations

import typing
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import ndimage, signal

from .imgproc import gaussian_blur, scale_to_byte, threshold_global, to_grayscale
from .kernels import catalog_get, catalog_names, catalog_sizes, dilate
from .operators import compass_gradient, frei_chen, gradient_orthogonal, laplace, log_response
from .postprocess import guo_hall_thin, hysteresis_link, non_max_suppression, zero_crossing


class ParameterError(ValueError):
    """A pipeline parameter is structurally invalid."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterError(msg)


def _check_operator(name: str, size: int) -> None:
    if name not in catalog_names():
        raise ParameterError(f"unknown operator {name!r}")
    if size not in catalog_sizes(name):
        raise ParameterError(f"operator {name!r} has no {size}x{size} mask")


def _check_laplace_variant(variant: str, size: int) -> None:
    _check_operator(f"laplace_{variant}", size)


def _check_byte_range(name: str, value: float) -> None:
    _require(0 <= value <= 255, f"{name} must be in [0, 255], got {value}")


@dataclass
class FirstOrderParams:
    operator: str = "sobel"
    size: int = 3
    dilation: int = 0
    sigma: float = 2.75
    threshold: float = 50.0
    magnitude_mode: str = "exact"

    def validate(self) -> None:
        _check_operator(self.operator, self.size)
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")
        _require(self.dilation >= 0, f"dilation must be >= 0, got {self.dilation}")
        _check_byte_range("threshold", self.threshold)
        _require(
            self.magnitude_mode in ("exact", "approx"),
            f"magnitude_mode must be exact or approx, got {self.magnitude_mode!r}",
        )


@dataclass
class LaplaceParams:
    variant: str = "v1"
    size: int = 3
    dilation: int = 0
    threshold: float = 75.0

    def validate(self) -> None:
        _check_laplace_variant(self.variant, self.size)
        _require(self.dilation >= 0, f"dilation must be >= 0, got {self.dilation}")
        _check_byte_range("threshold", self.threshold)


@dataclass
class LogParams:
    sigma: float = 1.8
    variant: str = "v1"
    dilation: int = 0
    threshold: float = 5.0

    def validate(self) -> None:
        _check_laplace_variant(self.variant, 3)
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")
        _require(self.dilation >= 0, f"dilation must be >= 0, got {self.dilation}")
        _check_byte_range("threshold", self.threshold)


@dataclass
class MarrHildrethParams:
    sigma: float = 1.8
    variant: str = "v1"
    dilation: int = 0
    zc_delta: float = 85.0

    def validate(self) -> None:
        _check_laplace_variant(self.variant, 3)
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")
        _require(self.dilation >= 0, f"dilation must be >= 0, got {self.dilation}")
        _require(self.zc_delta >= 0, f"zc_delta must be >= 0, got {self.zc_delta}")


@dataclass
class CannyParams:
    operator: str = "sobel"
    size: int = 3
    dilation: int = 0
    sigma: float = 1.5
    low: float = 80.0
    high: float = 90.0

    def validate(self) -> None:
        _check_operator(self.operator, self.size)
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")
        _require(self.dilation >= 0, f"dilation must be >= 0, got {self.dilation}")
        _check_byte_range("low", self.low)
        _check_byte_range("high", self.high)
        _require(self.low <= self.high, f"low {self.low} exceeds high {self.high}")


@dataclass
class IsefParams:
    b: float = 0.9
    window: int = 7
    zc_ratio: float = 0.9
    thinning_factor: float = 0.5
    laplace_threshold: float = 40.0

    def validate(self) -> None:
        _require(0 < self.b < 1, f"b must be in (0, 1), got {self.b}")
        _require(
            self.window >= 3 and self.window % 2 == 1,
            f"window must be odd and >= 3, got {self.window}",
        )
        _require(0 <= self.zc_ratio <= 1, f"zc_ratio must be in [0, 1], got {self.zc_ratio}")
        _require(
            0 <= self.thinning_factor <= 1,
            f"thinning_factor must be in [0, 1], got {self.thinning_factor}",
        )
        _require(
            self.laplace_threshold >= 0,
            f"laplace_threshold must be >= 0, got {self.laplace_threshold}",
        )


@dataclass
class EdParams:
    operator: str = "sobel"
    size: int = 3
    dilation: int = 0
    sigma: float = 1.0
    gauss_size: int = 9
    grad_thr: float = 50.0
    anchor_thr: float = 10.0
    scan_interval: int = 1

    def validate(self) -> None:
        _check_operator(self.operator, self.size)
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")
        _require(self.dilation >= 0, f"dilation must be >= 0, got {self.dilation}")
        _require(
            self.gauss_size >= 1 and self.gauss_size % 2 == 1,
            f"gauss_size must be odd and >= 1, got {self.gauss_size}",
        )
        _require(self.grad_thr >= 0, f"grad_thr must be >= 0, got {self.grad_thr}")
        _require(self.anchor_thr >= 0, f"anchor_thr must be >= 0, got {self.anchor_thr}")
        _require(self.scan_interval >= 1, f"scan_interval must be >= 1, got {self.scan_interval}")


def _operator_kernel(name: str, size: int, dilation: int):
    return dilate(catalog_get(name, size), dilation)


def run_first_order(rgb: np.ndarray, p: FirstOrderParams, family: str = "orthogonal") -> np.ndarray:
    """Blur, first-order response, global threshold, thinning.

    ``family`` picks the response: ``"orthogonal"`` gradient magnitude,
    ``"compass"`` maximum over 8 rotations, ``"frei_chen_edge"`` or
    ``"frei_chen_line"`` projection ratios scaled to bytes.
    """
    p.validate()
    blurred = gaussian_blur(to_grayscale(rgb), p.sigma)
    if family == "orthogonal":
        k = _operator_kernel(p.operator, p.size, p.dilation)
        response = gradient_orthogonal(blurred, k, p.magnitude_mode).magnitude
    elif family == "compass":
        k = _operator_kernel(p.operator, p.size, p.dilation)
        response = compass_gradient(blurred, k).magnitude
    elif family == "frei_chen_edge":
        response = frei_chen(blurred, p.dilation).edge * 255.0
    elif family == "frei_chen_line":
        response = frei_chen(blurred, p.dilation).line * 255.0
    else:
        raise ParameterError(f"unknown first-order family {family!r}")
    edges = threshold_global(scale_to_byte(response, "clamp_abs"), p.threshold)
    return guo_hall_thin(edges)


def run_laplace(rgb: np.ndarray, p: LaplaceParams) -> np.ndarray:
    """Second-order response (no smoothing), threshold, thinning."""
    p.validate()
    response = laplace(to_grayscale(rgb), variant=p.variant, size=p.size, dilation=p.dilation)
    edges = threshold_global(scale_to_byte(response, "clamp_abs"), p.threshold)
    return guo_hall_thin(edges)


def run_log(rgb: np.ndarray, p: LogParams) -> np.ndarray:
    """Gaussian blur then Laplace mask, threshold, thinning."""
    p.validate()
    response = log_response(
        to_grayscale(rgb), p.sigma, variant=p.variant, dilation=p.dilation, form="factored"
    )
    edges = threshold_global(scale_to_byte(response, "clamp_abs"), p.threshold)
    return guo_hall_thin(edges)


def run_marr_hildreth(rgb: np.ndarray, p: MarrHildrethParams) -> np.ndarray:
    """Single-kernel LoG response, thresholded zero crossings, thinning."""
    p.validate()
    response = log_response(
        to_grayscale(rgb), p.sigma, variant=p.variant, dilation=p.dilation, form="composite"
    )
    return guo_hall_thin(zero_crossing(response, min_delta=p.zc_delta))


def run_canny(rgb: np.ndarray, p: CannyParams) -> np.ndarray:
    """Blur, gradient, non-max suppression, hysteresis linking.

    The double thresholds are fractions of the suppressed plane's peak:
    t = (value/255) * max.
    """
    p.validate()
    blurred = gaussian_blur(to_grayscale(rgb), p.sigma)
    g = gradient_orthogonal(blurred, _operator_kernel(p.operator, p.size, p.dilation), "exact")
    suppressed = non_max_suppression(g)
    return hysteresis_link(suppressed, p.low, p.high, relative_to_max=True)


def isef_filter(img: np.ndarray, b: float) -> np.ndarray:
    """Infinite symmetric exponential filter, rows then columns.

    Each 1-D pass combines a causal and an anticausal first-order
    recursion into a symmetric two-sided exponential with unit DC gain,
    so constant images pass through unchanged.  Border samples are
    treated as if the image continued with its edge value.
    """
    if not 0 < b < 1:
        raise ParameterError(f"b must be in (0, 1), got {b}")
    out = np.asarray(img, dtype=np.float64)
    for axis in (1, 0):
        out = _isef_1d(out, b, axis)
    return out


def _isef_1d(x: np.ndarray, b: float, axis: int) -> np.ndarray:
    if axis == 0:
        return _isef_1d(x.T, b, 1).T
    num = [1.0 - b]
    den = [1.0, -b]
    # zi = b * first sample reproduces a replicated border exactly
    zi_fwd = b * x[:, :1]
    fwd, _ = signal.lfilter(num, den, x, axis=1, zi=zi_fwd)
    rev = x[:, ::-1]
    zi_bwd = b * rev[:, :1]
    bwd, _ = signal.lfilter(num, den, rev, axis=1, zi=zi_bwd)
    bwd = bwd[:, ::-1]
    return (fwd + bwd - (1.0 - b) * x) / (1.0 + b)


def _box_sum(plane: np.ndarray, size: int) -> np.ndarray:
    return ndimage.uniform_filter(plane, size=size, mode="constant", cval=0.0) * (size * size)


def run_shen_castan(
    rgb: np.ndarray,
    p: IsefParams,
    variant: str = "bli",
    dilation: int = 0,
) -> np.ndarray:
    """ISEF smoothing, band-limited Laplacian, adaptive-gradient linking.

    ``variant="bli"`` uses smoothed - original as the second-derivative
    plane; any Laplace variant id convolves the smoothed image with that
    (optionally dilated) mask instead, keeping only responses at or above
    ``laplace_threshold``.  Candidate edges are the inner borders of the
    positive region.  Each candidate's strength is the absolute
    difference between the mean smoothed intensity over positive and
    over non-positive pixels within the window; linking thresholds are
    t_hi = zc_ratio * peak strength and t_lo = thinning_factor * t_hi.
    """
    p.validate()
    _require(dilation >= 0, f"dilation must be >= 0, got {dilation}")
    gray = to_grayscale(rgb).astype(np.float64)
    smoothed = isef_filter(gray, p.b)
    if variant == "bli":
        positives = (smoothed - gray) > 0
    else:
        lap = laplace(smoothed, variant=variant, dilation=dilation)
        positives = lap >= p.laplace_threshold if p.laplace_threshold > 0 else lap > 0

    # inner boundary of the positive region (a non-positive 4-neighbour exists)
    eroded = ndimage.binary_erosion(
        positives, structure=ndimage.generate_binary_structure(2, 1), border_value=1
    )
    candidates = positives & ~eroded

    pos = positives.astype(np.float64)
    sum_pos = _box_sum(smoothed * pos, p.window)
    cnt_pos = _box_sum(pos, p.window)
    sum_neg = _box_sum(smoothed * (1.0 - pos), p.window)
    cnt_neg = _box_sum(1.0 - pos, p.window)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_pos = np.where(cnt_pos > 0.5, sum_pos / np.maximum(cnt_pos, 1e-12), 0.0)
        mean_neg = np.where(cnt_neg > 0.5, sum_neg / np.maximum(cnt_neg, 1e-12), 0.0)
    strength = np.zeros_like(smoothed)
    strength[candidates] = np.abs(mean_pos - mean_neg)[candidates]

    t_hi = p.zc_ratio * float(strength.max())
    if t_hi <= 0:  # no candidate has any contrast
        return np.zeros(strength.shape, dtype=bool)
    t_lo = p.thinning_factor * t_hi
    edges = hysteresis_link(strength, t_lo, t_hi)
    return guo_hall_thin(edges)


# candidate steps per heading: straight first, then clockwise, then
# counterclockwise diagonal (compass order N -> E -> S -> W)
_ROUTE_STEPS = {
    "L": ((0, -1), (-1, -1), (1, -1)),
    "R": ((0, 1), (1, 1), (-1, 1)),
    "U": ((-1, 0), (-1, 1), (-1, -1)),
    "D": ((1, 0), (1, -1), (1, 1)),
}
_CLOCKWISE_SWITCH = {"L": "U", "R": "D", "U": "R", "D": "L"}


def _best_step(mag: np.ndarray, r: int, c: int, heading: str) -> tuple[int, int] | None:
    h, w = mag.shape
    best = None
    best_val = -1.0
    for dy, dx in _ROUTE_STEPS[heading]:
        y, x = r + dy, c + dx
        if 0 <= y < h and 0 <= x < w and mag[y, x] > best_val:
            best = (y, x)
            best_val = mag[y, x]
    if best is None or best_val <= 0.0:
        return None
    return best


def _side_peak(mag: np.ndarray, r: int, c: int, heading: str) -> float:
    h, w = mag.shape
    peak = 0.0
    for dy, dx in _ROUTE_STEPS[heading]:
        y, x = r + dy, c + dx
        if 0 <= y < h and 0 <= x < w:
            peak = max(peak, mag[y, x])
    return peak


def _turn(mag: np.ndarray, r: int, c: int, heading: str, to_vertical: bool) -> str:
    options = ("U", "D") if to_vertical else ("L", "R")
    peaks = [_side_peak(mag, r, c, o) for o in options]
    if peaks[0] == peaks[1]:
        return _CLOCKWISE_SWITCH[heading]
    return options[0] if peaks[0] > peaks[1] else options[1]


def _route(mag, vertical, visited, r: int, c: int, heading: str) -> None:
    h, w = mag.shape
    while True:
        if vertical[r, c] and heading in ("L", "R"):
            heading = _turn(mag, r, c, heading, to_vertical=True)
        elif not vertical[r, c] and heading in ("U", "D"):
            heading = _turn(mag, r, c, heading, to_vertical=False)
        step = _best_step(mag, r, c, heading)
        if step is None:
            return
        r, c = step
        if visited[r, c]:
            return
        visited[r, c] = True


def run_edge_drawing(rgb: np.ndarray, p: EdParams) -> np.ndarray:
    """Anchor extraction plus gradient-guided routing.

    Blur, approximate gradient, threshold the magnitude map, pick
    anchors (grid-sampled strict local maxima across the edge
    direction), then walk chains from each anchor along the edge,
    stepping to the strongest of the three forward neighbours, stopping
    at zero gradient or already-routed pixels.
    """
    p.validate()
    blurred = gaussian_blur(to_grayscale(rgb), p.sigma, p.gauss_size)
    g = gradient_orthogonal(blurred, _operator_kernel(p.operator, p.size, p.dilation), "approx")
    mag = g.magnitude.copy()
    mag[mag < p.grad_thr] = 0.0
    vertical = g.vertical

    h, w = mag.shape
    rr, cc = np.mgrid[0:h, 0:w]
    on_grid = (rr % p.scan_interval == 0) & (cc % p.scan_interval == 0)

    def margin(dy: int, dx: int) -> np.ndarray:
        padded = np.pad(mag, 1, mode="constant")
        neighbour = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        return (mag - neighbour >= p.anchor_thr) & (mag > neighbour)

    horiz_peak = margin(0, -1) & margin(0, 1)  # peak across a vertical edge
    vert_peak = margin(-1, 0) & margin(1, 0)
    anchors = on_grid & (mag > 0) & np.where(vertical, horiz_peak, vert_peak)

    ar, ac = np.nonzero(anchors)
    if ar.size == 0:
        return np.zeros((h, w), dtype=bool)
    order = np.lexsort((ac, ar, -mag[ar, ac]))
    visited = np.zeros((h, w), dtype=bool)
    for i in order:
        r, c = int(ar[i]), int(ac[i])
        if visited[r, c]:
            continue
        visited[r, c] = True
        first, second = ("U", "D") if vertical[r, c] else ("L", "R")
        _route(mag, vertical, visited, r, c, first)
        _route(mag, vertical, visited, r, c, second)
    return visited


# --- registry used by the CLI and the benchmark harness ----------------------

PIPELINE_IDS = (
    "first-order",
    "compass",
    "frei-chen",
    "laplace",
    "log",
    "marr-hildreth",
    "canny",
    "shen-castan",
    "ed",
)

_PARAM_CLASSES = {
    "first-order": FirstOrderParams,
    "compass": FirstOrderParams,
    "frei-chen": FirstOrderParams,
    "laplace": LaplaceParams,
    "log": LogParams,
    "marr-hildreth": MarrHildrethParams,
    "canny": CannyParams,
    "shen-castan": IsefParams,
    "ed": EdParams,
}

# options handled outside the param dataclasses, with their defaults
_EXTRA_OPTIONS = {
    "frei-chen": {"response": "edge"},
    "shen-castan": {"variant": "bli", "dilation": 0},
}


def pipeline_option_names(pipeline: str) -> list[str]:
    cls = _PARAM_CLASSES[pipeline]
    names = [f.name for f in fields(cls)]
    names += list(_EXTRA_OPTIONS.get(pipeline, {}))
    return names


def _coerce(cls, raw: dict) -> dict:
    hints = typing.get_type_hints(cls)
    out = {}
    for key, value in raw.items():
        target = hints[key]
        if isinstance(value, str) and target is not str:
            out[key] = target(value)
        else:
            out[key] = target(value) if target in (int, float) else value
    return out


def build_runner(pipeline: str, options: dict | None = None):
    """Resolve a pipeline id plus option overrides into a runner.

    Returns ``(runner, resolved)`` where ``runner(image) -> edge map``
    and ``resolved`` is the full option dict the run will use (suitable
    for sidecar files and result tables).  Unknown options raise
    ParameterError.
    """
    if pipeline not in _PARAM_CLASSES:
        raise ParameterError(f"unknown pipeline {pipeline!r} (choose from {PIPELINE_IDS})")
    options = dict(options or {})
    if pipeline == "compass":
        options.setdefault("operator", "robinson_compass")
    extras = dict(_EXTRA_OPTIONS.get(pipeline, {}))
    for key in list(options):
        if key in extras:
            value = options.pop(key)
            extras[key] = type(extras[key])(value)
    cls = _PARAM_CLASSES[pipeline]
    known = {f.name for f in fields(cls)}
    unknown = set(options) - known
    if unknown:
        raise ParameterError(f"unknown option(s) for {pipeline}: {sorted(unknown)}")
    params = cls(**_coerce(cls, options))
    params.validate()

    if pipeline == "first-order":
        runner = lambda img: run_first_order(img, params, family="orthogonal")
    elif pipeline == "compass":
        runner = lambda img: run_first_order(img, params, family="compass")
    elif pipeline == "frei-chen":
        response = extras["response"]
        _require(response in ("edge", "line"), f"response must be edge or line, got {response!r}")
        runner = lambda img: run_first_order(img, params, family=f"frei_chen_{response}")
    elif pipeline == "laplace":
        runner = lambda img: run_laplace(img, params)
    elif pipeline == "log":
        runner = lambda img: run_log(img, params)
    elif pipeline == "marr-hildreth":
        runner = lambda img: run_marr_hildreth(img, params)
    elif pipeline == "canny":
        runner = lambda img: run_canny(img, params)
    elif pipeline == "shen-castan":
        variant = str(extras["variant"])
        dil = int(extras["dilation"])
        runner = lambda img: run_shen_castan(img, params, variant=variant, dilation=dil)
    else:
        runner = lambda img: run_edge_drawing(img, params)

    resolved = {"pipeline": pipeline, **asdict(params), **extras}
    return runner, resolved

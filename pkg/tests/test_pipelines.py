from __future__ import annotations

import numpy as np
import pytest

from dedge.pipelines import (
    CannyParams,
    EdParams,
    FirstOrderParams,
    IsefParams,
    LaplaceParams,
    LogParams,
    MarrHildrethParams,
    PIPELINE_IDS,
    ParameterError,
    build_runner,
    isef_filter,
    pipeline_option_names,
    run_canny,
    run_edge_drawing,
    run_first_order,
    run_laplace,
    run_log,
    run_marr_hildreth,
    run_shen_castan,
)
from dedge.postprocess import guo_hall_thin

from conftest import step_image


def _noisy_scene(rng_seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    img = np.full((48, 64), 60, dtype=np.uint8)
    img[:, 32:] = 190
    img[10:30, 10:24] = 120
    noise = rng.integers(-5, 6, size=img.shape)
    return np.clip(img.astype(np.int16) + noise, 0, 255).astype(np.uint8)


CONSTANT = np.full((32, 32), 140, dtype=np.uint8)


class TestParamValidation:
    def test_negative_dilation(self):
        with pytest.raises(ParameterError):
            FirstOrderParams(dilation=-1).validate()

    def test_unknown_operator(self):
        with pytest.raises(ParameterError):
            FirstOrderParams(operator="roberts").validate()

    def test_threshold_byte_range(self):
        with pytest.raises(ParameterError):
            FirstOrderParams(threshold=256).validate()
        with pytest.raises(ParameterError):
            LaplaceParams(threshold=-1).validate()

    def test_canny_low_above_high(self):
        with pytest.raises(ParameterError):
            CannyParams(low=120, high=90).validate()

    def test_isef_b_bounds(self):
        with pytest.raises(ParameterError):
            IsefParams(b=0.0).validate()
        with pytest.raises(ParameterError):
            IsefParams(b=1.0).validate()
        IsefParams(b=0.9).validate()

    def test_isef_window_odd(self):
        with pytest.raises(ParameterError):
            IsefParams(window=6).validate()

    def test_ed_scan_interval(self):
        with pytest.raises(ParameterError):
            EdParams(scan_interval=0).validate()

    def test_log_sigma_positive(self):
        with pytest.raises(ParameterError):
            LogParams(sigma=0.0).validate()

    def test_mh_delta_negative(self):
        with pytest.raises(ParameterError):
            MarrHildrethParams(zc_delta=-1).validate()

    def test_laplace_unknown_variant(self):
        with pytest.raises(ParameterError):
            LaplaceParams(variant="v9").validate()


def _run_all(img: np.ndarray) -> dict[str, np.ndarray]:
    return {
        "first-order": run_first_order(img, FirstOrderParams()),
        "compass": run_first_order(
            img, FirstOrderParams(operator="robinson_compass"), family="compass"
        ),
        "frei-chen-edge": run_first_order(img, FirstOrderParams(), family="frei_chen_edge"),
        "frei-chen-line": run_first_order(img, FirstOrderParams(), family="frei_chen_line"),
        "laplace": run_laplace(img, LaplaceParams()),
        "log": run_log(img, LogParams()),
        "marr-hildreth": run_marr_hildreth(img, MarrHildrethParams()),
        "canny": run_canny(img, CannyParams()),
        "shen-castan": run_shen_castan(img, IsefParams()),
        "ed": run_edge_drawing(img, EdParams()),
    }


class TestPipelineContracts:
    def test_bool_output_everywhere(self):
        for name, out in _run_all(_noisy_scene()).items():
            assert out.dtype == np.bool_, name
            assert out.shape == (48, 64), name

    def test_constant_image_is_empty(self):
        outputs = _run_all(CONSTANT)
        # the frei-chen edge response of a flat image is nonzero by
        # construction (two of the printed masks have nonzero sum), so it
        # is the one documented exception
        for name, out in outputs.items():
            if name == "frei-chen-edge":
                assert out.sum() > 0
            else:
                assert not out.any(), name

    def test_step_detected_by_gradient_pipelines(self):
        img = _noisy_scene()
        outputs = _run_all(img)
        for name in ("first-order", "compass", "canny", "shen-castan", "laplace", "log"):
            out = outputs[name]
            # some detection near the main vertical boundary at x=32
            band = out[:, 28:36]
            assert band.sum() > 0, name

    def test_step_detected_by_edge_drawing(self):
        # a symmetric step yields a balanced two-pixel gradient plateau,
        # so no pixel beats both neighbours by the default anchor margin;
        # a smaller margin lets the noise-broken ties seed anchors
        out = run_edge_drawing(_noisy_scene(), EdParams(anchor_thr=5))
        assert out[:, 28:36].sum() > 0

    def test_thin_ending_pipelines_at_fixpoint(self):
        img = _noisy_scene()
        outputs = _run_all(img)
        for name in ("first-order", "compass", "laplace", "log", "marr-hildreth", "shen-castan"):
            out = outputs[name]
            np.testing.assert_array_equal(guo_hall_thin(out), out, err_msg=name)

    def test_threshold_monotone(self):
        img = _noisy_scene()
        lo = run_first_order(img, FirstOrderParams(threshold=30.0))
        hi = run_first_order(img, FirstOrderParams(threshold=90.0))
        # thinning is not monotone in general, so compare pre-thinning masks
        # indirectly: the high-threshold map cannot contain a detection in a
        # region the low-threshold response left empty
        assert hi.sum() <= lo.sum() or not (hi & ~guo_hall_thin(lo)).any()

    def test_first_order_unknown_family(self):
        with pytest.raises(ValueError):
            run_first_order(CONSTANT, FirstOrderParams(), family="diagonal")

    def test_rgb_input_accepted(self):
        rgb = np.stack([_noisy_scene()] * 3, axis=-1)
        out = run_canny(rgb, CannyParams())
        np.testing.assert_array_equal(out, run_canny(_noisy_scene(), CannyParams()))


class TestIsef:
    def test_constant_preserved(self):
        img = np.full((16, 16), 93.0)
        np.testing.assert_allclose(isef_filter(img, 0.9), img, atol=1e-6)

    def test_unit_dc_gain_impulse_sum(self):
        # total mass of the impulse response is 1 up to truncated tails
        img = np.zeros((61, 61))
        img[30, 30] = 1.0
        out = isef_filter(img, 0.85)
        assert abs(out.sum() - 1.0) < 0.02

    def test_impulse_symmetric_decay(self):
        img = np.zeros((21, 21))
        img[10, 10] = 1000.0
        out = isef_filter(img, 0.8)
        np.testing.assert_allclose(out[10, 9], out[10, 11], atol=1e-9)
        np.testing.assert_allclose(out[9, 10], out[11, 10], atol=1e-9)
        assert out[10, 10] > out[10, 11] > out[10, 12]

    def test_small_b_stays_closer_to_input(self, rng):
        img = rng.random((16, 16)) * 100
        near = np.abs(isef_filter(img, 0.05) - img).mean()
        far = np.abs(isef_filter(img, 0.9) - img).mean()
        assert near < far

    def test_large_b_smooths_more(self, rng):
        img = rng.random((24, 24)) * 255
        light = isef_filter(img, 0.3)
        heavy = isef_filter(img, 0.95)
        assert heavy.std() < light.std()


class TestCannyStructure:
    def test_subset_of_nms_support(self):
        from dedge.imgproc import gaussian_blur, to_grayscale
        from dedge.kernels import catalog_get
        from dedge.operators import gradient_orthogonal
        from dedge.postprocess import non_max_suppression

        img = _noisy_scene()
        p = CannyParams()
        out = run_canny(img, p)
        blurred = gaussian_blur(to_grayscale(img), p.sigma)
        g = gradient_orthogonal(blurred, catalog_get(p.operator, p.size))
        nms = non_max_suppression(g)
        assert not (out & (nms == 0)).any()

    def test_higher_thresholds_never_add(self):
        img = _noisy_scene()
        loose = run_canny(img, CannyParams(low=60, high=70))
        tight = run_canny(img, CannyParams(low=100, high=120))
        assert not (tight & ~loose).any()


class TestEdgeDrawing:
    def test_chains_are_connected_to_anchors(self):
        out = run_edge_drawing(_noisy_scene(), EdParams())
        from scipy import ndimage

        labels, n = ndimage.label(out, structure=np.ones((3, 3), dtype=int))
        assert n >= 1
        # every chain has at least 2 pixels (anchor plus routed step)
        # except possibly trapped single anchors
        sizes = ndimage.sum(out, labels, index=range(1, n + 1))
        assert sizes.max() >= 2

    def test_no_detection_below_gradient_threshold(self):
        out = run_edge_drawing(CONSTANT, EdParams())
        assert not out.any()

    def test_scan_interval_reduces_anchor_seeds(self):
        img = _noisy_scene()
        dense = run_edge_drawing(img, EdParams(scan_interval=1))
        sparse = run_edge_drawing(img, EdParams(scan_interval=4))
        # routing can recover most pixels; require it to not find more
        assert sparse.sum() <= dense.sum() * 1.2


class TestBuildRunner:
    def test_ids(self):
        assert set(PIPELINE_IDS) == {
            "first-order",
            "compass",
            "frei-chen",
            "laplace",
            "log",
            "marr-hildreth",
            "canny",
            "shen-castan",
            "ed",
        }

    def test_all_runners_build_and_run(self):
        img = _noisy_scene()
        for pid in PIPELINE_IDS:
            runner, resolved = build_runner(pid, {})
            out = runner(img)
            assert out.dtype == np.bool_, pid
            assert resolved["pipeline"] == pid

    def test_compass_defaults_to_compass_operator(self):
        _, resolved = build_runner("compass", {})
        assert resolved["operator"] == "robinson_compass"

    def test_option_override(self):
        _, resolved = build_runner("first-order", {"operator": "scharr", "threshold": 42})
        assert resolved["operator"] == "scharr"
        assert resolved["threshold"] == 42.0

    def test_frei_chen_response_option(self):
        _, resolved = build_runner("frei-chen", {"response": "line"})
        assert resolved["response"] == "line"

    def test_unknown_pipeline(self):
        with pytest.raises(ParameterError):
            build_runner("susan", {})

    def test_unknown_option(self):
        with pytest.raises(ParameterError):
            build_runner("canny", {"sharpness": 3})

    def test_option_names_exposed(self):
        names = pipeline_option_names("canny")
        assert "low" in names and "high" in names and "sigma" in names

    def test_invalid_value_rejected_at_build(self):
        with pytest.raises(ParameterError):
            build_runner("canny", {"low": 120, "high": 90})


class TestMarrHildreth:
    def test_all_positive_plane_empty(self):
        # zero crossings need strictly opposite signs
        out = run_marr_hildreth(np.full((24, 24), 200, dtype=np.uint8), MarrHildrethParams())
        assert not out.any()

    def test_low_delta_fires_on_step(self):
        out = run_marr_hildreth(step_image(32, 32, 10, 245), MarrHildrethParams(zc_delta=5.0))
        assert out.any()

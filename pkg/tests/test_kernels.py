from __future__ import annotations

import math

import numpy as np
import pytest

from dedge.kernels import (
    UnknownKernelError,
    UnsupportedSizeError,
    build_gaussian,
    build_log,
    catalog_entries,
    catalog_get,
    catalog_names,
    catalog_sizes,
    compass_set,
    default_gaussian_size,
    dilate,
    frei_chen_masks,
    rotate_orthogonal,
    sparse_from_kernel,
    undilate,
)

from conftest import fixture_names, load_grid


class TestCatalogFidelity:
    @pytest.mark.parametrize("name,size", fixture_names())
    def test_matches_checked_in_grid(self, name, size):
        kernel = catalog_get(name, size)
        expected = load_grid(name, size)
        np.testing.assert_array_equal(kernel.coeffs, expected)
        assert kernel.coeffs.dtype == np.float64

    def test_every_entry_has_a_fixture(self):
        assert sorted(catalog_entries()) == sorted(fixture_names())

    def test_names_and_sizes(self):
        assert "sobel" in catalog_names()
        assert catalog_sizes("sobel") == [3, 5, 7]
        assert catalog_sizes("kroon") == [3]

    def test_unknown_name(self):
        with pytest.raises(UnknownKernelError):
            catalog_get("roberts", 3)

    def test_unsupported_size(self):
        with pytest.raises(UnsupportedSizeError):
            catalog_get("kirsch", 7)

    def test_coeffs_are_frozen(self):
        kernel = catalog_get("sobel", 3)
        with pytest.raises(ValueError):
            kernel.coeffs[0, 0] = 99.0


class TestDilation:
    @pytest.mark.parametrize("factor", [0, 1, 2, 3])
    @pytest.mark.parametrize("name,size", fixture_names())
    def test_size_law_and_tap_placement(self, name, size, factor):
        base = catalog_get(name, size)
        dilated = dilate(base, factor)
        expect = size + (size - 1) * factor
        assert dilated.shape == (expect, expect)
        assert dilated.dilation_factor == factor
        step = factor + 1
        np.testing.assert_array_equal(dilated.coeffs[::step, ::step], base.coeffs)
        # everything off the coarse lattice must be zero
        filled = np.zeros_like(dilated.coeffs)
        filled[::step, ::step] = base.coeffs
        np.testing.assert_array_equal(dilated.coeffs, filled)

    def test_nnz_preserved(self):
        base = catalog_get("sobel", 3)
        for factor in range(4):
            assert dilate(base, factor).nnz == base.nnz

    def test_sobel_factor_two_example(self):
        dilated = dilate(catalog_get("sobel", 3), 2)
        assert dilated.shape == (7, 7)
        assert dilated.nnz == 6
        taps = sparse_from_kernel(dilated).taps
        offsets = {(dy, dx) for dy, dx, _ in taps}
        assert offsets == {(-3, -3), (-3, 3), (0, -3), (0, 3), (3, -3), (3, 3)}

    def test_undilate_round_trip(self):
        base = catalog_get("scharr", 5)
        again = undilate(dilate(base, 3))
        np.testing.assert_array_equal(again.coeffs, base.coeffs)
        assert again.dilation_factor == 0

    def test_dilating_a_dilated_kernel_rejected(self):
        dilated = dilate(catalog_get("sobel", 3), 1)
        with pytest.raises(ValueError):
            dilate(dilated, 1)

    def test_negative_factor_rejected(self):
        with pytest.raises(ValueError):
            dilate(catalog_get("sobel", 3), -1)


class TestRotation:
    def test_sobel_quarter_turn(self):
        rotated = rotate_orthogonal(catalog_get("sobel", 3))
        np.testing.assert_array_equal(
            rotated.coeffs, [[-1, -2, -1], [0, 0, 0], [1, 2, 1]]
        )

    @pytest.mark.parametrize("name", ["sobel", "prewitt", "scharr", "kroon"])
    def test_four_turns_identity(self, name):
        kernel = catalog_get(name, 3)
        out = kernel
        for _ in range(4):
            out = rotate_orthogonal(out)
        np.testing.assert_array_equal(out.coeffs, kernel.coeffs)

    def test_commutes_with_dilation(self):
        base = catalog_get("sobel", 3)
        a = dilate(rotate_orthogonal(base), 2)
        b = rotate_orthogonal(dilate(base, 2))
        np.testing.assert_array_equal(a.coeffs, b.coeffs)


class TestCompassSet:
    def test_kirsch_one_step(self):
        masks = compass_set(catalog_get("kirsch_compass", 3))
        np.testing.assert_array_equal(
            masks[1].coeffs, [[-3, 5, 5], [-3, 0, 5], [-3, -3, -3]]
        )

    def test_period_eight(self):
        masks = compass_set(catalog_get("prewitt_compass", 3))
        assert len(masks) == 8
        np.testing.assert_array_equal(masks[0].coeffs, catalog_get("prewitt_compass", 3).coeffs)
        # ring entries are a cyclic shift, so all eight share multiset of values
        base = np.sort(masks[0].coeffs.ravel())
        for m in masks[1:]:
            np.testing.assert_array_equal(np.sort(m.coeffs.ravel()), base)

    def test_robinson_rotations_sum_to_zero(self):
        for m in compass_set(catalog_get("robinson_compass", 3)):
            assert m.coeffs.sum() == 0

    def test_center_fixed(self):
        for m in compass_set(catalog_get("kirsch_compass", 3)):
            assert m.coeffs[1, 1] == 0

    def test_dilated_compass_round_trip(self):
        masks = compass_set(dilate(catalog_get("kirsch_compass", 3), 2))
        assert all(m.shape == (7, 7) for m in masks)
        np.testing.assert_array_equal(
            masks[1].coeffs[::3, ::3], [[-3, 5, 5], [-3, 0, 5], [-3, -3, -3]]
        )

    def test_rejects_non_compass(self):
        with pytest.raises(ValueError):
            compass_set(catalog_get("sobel", 3))


class TestGaussian:
    def test_default_size(self):
        assert default_gaussian_size(1.0) == 7
        assert default_gaussian_size(1.5) == 11

    @pytest.mark.parametrize("sigma", [0.6, 1.0, 1.5, 2.75])
    def test_unit_sum(self, sigma):
        kernel = build_gaussian(sigma)
        assert abs(kernel.coeffs.sum() - 1.0) <= 1e-9

    def test_symmetry_and_center_max(self):
        kernel = build_gaussian(1.5, size=9)
        g = kernel.coeffs
        np.testing.assert_allclose(g, g[::-1, :])
        np.testing.assert_allclose(g, g[:, ::-1])
        np.testing.assert_allclose(g, g.T)
        assert g[4, 4] == g.max()

    def test_even_size_rejected(self):
        with pytest.raises(ValueError):
            build_gaussian(1.0, size=8)


class TestLog:
    def test_laplace_conv_shape_and_sum(self):
        kernel = build_log(1.8, size=9, mode="laplace_conv", variant="v1")
        assert kernel.shape == (11, 11)
        assert abs(kernel.coeffs.sum()) <= 1e-9

    def test_laplace_conv_dilated_variant(self):
        kernel = build_log(1.8, size=9, mode="laplace_conv", variant="v1", dilation=2)
        assert kernel.shape == (15, 15)
        assert abs(kernel.coeffs.sum()) <= 1e-9

    def test_analytic_zero_sum_and_sign(self):
        sigma = 1.8
        kernel = build_log(sigma, size=13, mode="analytic")
        g = kernel.coeffs
        assert abs(g.sum()) <= 1e-3
        c = kernel.anchor[0]
        # center sits below the mean correction, far ring above it
        assert g[c, c] < 0
        yy, xx = np.ogrid[: g.shape[0], : g.shape[1]]
        far = np.hypot(yy - c, xx - c) > sigma * math.sqrt(2.0) + 0.5
        assert np.all(g[far] > g[c, c])
        assert np.all(g[far] >= 0) or g[far].max() > 0

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            build_log(1.8, mode="nope")


class TestFreiChenMasks:
    def test_nine_masks(self):
        masks = frei_chen_masks()
        assert len(masks) == 9
        np.testing.assert_array_equal(masks[8].coeffs, np.ones((3, 3)))

    def test_dilated(self):
        masks = frei_chen_masks(dilation=1)
        assert all(m.shape == (5, 5) for m in masks)

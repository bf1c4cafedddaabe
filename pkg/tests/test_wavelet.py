import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavechaos.errors import InvalidInputError
from wavechaos.wavelet import (
    WaveletPyramid,
    default_cdf97,
    dwt1d_forward,
    dwt1d_inverse,
    dwt2d_forward,
    dwt2d_inverse,
)

SQRT2 = np.sqrt(2.0)


# --- reference oracle: scalar loops, independent of the kernel modules ------


def ref_ws(i, n):
    if n == 1:
        return 0
    period = 2 * n - 2
    j = i % period
    return j if j < n else period - j


def ref_dwt1d(x, bank):
    lo = bank.analysis_low * SQRT2
    hi = bank.analysis_high / SQRT2
    n = len(x)
    a = np.empty(n // 2)
    d = np.empty(n // 2)
    for k in range(n // 2):
        a[k] = sum(lo[j + 4] * x[ref_ws(2 * k + j, n)] for j in range(-4, 5))
        d[k] = sum(hi[j + 3] * x[ref_ws(2 * k + 1 + j, n)] for j in range(-3, 4))
    return a, d


def ref_idwt1d(a, d, bank):
    lo = bank.synthesis_low / SQRT2
    hi = bank.synthesis_high * SQRT2
    n = 2 * len(a)
    ua = np.zeros(n)
    ud = np.zeros(n)
    ua[0::2] = a
    ud[1::2] = d
    x = np.empty(n)
    for m in range(n):
        x[m] = sum(lo[j + 3] * ua[ref_ws(m + j, n)] for j in range(-3, 4))
        x[m] += sum(hi[j + 4] * ud[ref_ws(m + j, n)] for j in range(-4, 5))
    return x


# --- filter bank -------------------------------------------------------------


class TestDefaultBank:
    def test_published_tap_values(self, bank):
        assert bank.tap("analysis_low", 0) == pytest.approx(0.602949018236360, abs=1e-15)
        assert bank.tap("analysis_high", 1) == pytest.approx(-0.591271763114250, abs=1e-15)
        assert bank.tap("analysis_low", -4) == bank.tap("analysis_low", 4)
        assert bank.tap("analysis_low", 4) == pytest.approx(0.026748757410810, abs=1e-15)
        assert bank.tap("synthesis_low", 0) == pytest.approx(1.115087052457000, abs=1e-15)
        assert bank.tap("synthesis_high", 3) == pytest.approx(0.016864118442875, abs=1e-15)

    def test_filters_symmetric(self, bank):
        for name in ("analysis_low", "analysis_high", "synthesis_low", "synthesis_high"):
            taps = getattr(bank, name)
            assert np.array_equal(taps, taps[::-1]), name

    def test_highpass_zero_sum(self, bank):
        assert abs(bank.analysis_high.sum()) < 1e-12

    def test_tap_out_of_range(self, bank):
        with pytest.raises(InvalidInputError):
            bank.tap("analysis_high", 4)


# --- 1-D transform ------------------------------------------------------------


class TestDwt1d:
    def test_constant_signal_zero_details(self, bank):
        approx, detail = dwt1d_forward(np.full(16, 5.0), bank)
        assert np.abs(detail).max() < 1e-12
        assert len(approx) == len(detail) == 8

    def test_empty_signal_rejected(self, bank):
        with pytest.raises(InvalidInputError):
            dwt1d_forward([], bank)

    def test_odd_length_rejected(self, bank):
        with pytest.raises(InvalidInputError):
            dwt1d_forward(np.ones(15), bank)

    def test_cubic_ramp_interior_details_annihilated(self, bank):
        s = np.arange(64, dtype=np.float64) ** 3
        _, detail = dwt1d_forward(s, bank)
        assert np.abs(detail[4:28]).max() < 1e-8

    def test_matches_direct_convolution_oracle(self, bank, rng):
        x = rng.normal(size=48)
        a, d = dwt1d_forward(x, bank)
        a_ref, d_ref = ref_dwt1d(x, bank)
        np.testing.assert_allclose(a, a_ref, atol=1e-12)
        np.testing.assert_allclose(d, d_ref, atol=1e-12)

    def test_roundtrip_random_128(self, bank, rng):
        x = rng.normal(size=128)
        xr = dwt1d_inverse(*dwt1d_forward(x, bank), bank)
        assert np.abs(xr - x).max() < 1e-10

    def test_inverse_matches_oracle(self, bank, rng):
        a = rng.normal(size=16)
        d = rng.normal(size=16)
        np.testing.assert_allclose(
            dwt1d_inverse(a, d, bank), ref_idwt1d(a, d, bank), atol=1e-12
        )

    def test_single_coefficient_inverse(self, bank):
        x = dwt1d_inverse([3.0], [0.0], bank)
        assert x.shape == (2,)
        # constant-extended: both samples reconstruct the same value
        np.testing.assert_allclose(x[0], x[1], atol=1e-12)

    def test_mismatched_lengths_rejected(self, bank):
        with pytest.raises(InvalidInputError):
            dwt1d_inverse(np.ones(4), np.ones(5), bank)

    @given(st.integers(min_value=1, max_value=96))
    def test_roundtrip_any_even_length(self, half):
        bank = default_cdf97()
        x = np.random.default_rng(half).normal(size=2 * half)
        xr = dwt1d_inverse(*dwt1d_forward(x, bank), bank)
        assert np.abs(xr - x).max() < 1e-10

    def test_linearity(self, bank, rng):
        x = rng.normal(size=64)
        y = rng.normal(size=64)
        ax, dx = dwt1d_forward(x, bank)
        ay, dy = dwt1d_forward(y, bank)
        am, dm = dwt1d_forward(2.5 * x - 1.5 * y, bank)
        np.testing.assert_allclose(am, 2.5 * ax - 1.5 * ay, atol=1e-10)
        np.testing.assert_allclose(dm, 2.5 * dx - 1.5 * dy, atol=1e-10)


# --- 2-D transform ------------------------------------------------------------


class TestDwt2d:
    def test_levels6_shapes(self, bank, rng):
        pyr = dwt2d_forward(rng.normal(size=(512, 512)), bank, 6)
        assert pyr.approx.shape == (8, 8)
        assert len(pyr.details) == 6
        assert pyr.details[0][0].shape == (256, 256)  # finest first
        assert pyr.details[-1][2].shape == (8, 8)
        assert pyr.coefficient_count() == 512 * 512

    def test_zero_image_zero_pyramid(self, bank):
        pyr = dwt2d_forward(np.zeros((64, 64)), bank, 3)
        assert np.abs(pyr.approx).max() == 0
        assert all(np.abs(b).max() == 0 for t in pyr.details for b in t)

    def test_indivisible_shape_rejected(self, bank):
        with pytest.raises(InvalidInputError):
            dwt2d_forward(np.zeros((100, 100)), bank, 3)

    def test_roundtrip_256_level4(self, bank, rng):
        x = rng.normal(size=(256, 256))
        xr = dwt2d_inverse(dwt2d_forward(x, bank, 4), bank)
        assert np.abs(xr - x).max() < 1e-9

    def test_roundtrip_rectangular(self, bank, rng):
        x = rng.normal(size=(64, 128))
        xr = dwt2d_inverse(dwt2d_forward(x, bank, 3), bank)
        assert np.abs(xr - x).max() < 1e-9

    def test_zero_pyramid_reconstructs_zero(self, bank):
        pyr = dwt2d_forward(np.zeros((32, 32)), bank, 2)
        assert np.abs(dwt2d_inverse(pyr, bank)).max() == 0

    def test_eight_bit_roundtrip_psnr(self, bank, rng):
        x = rng.integers(0, 256, size=(128, 128)).astype(np.float64) / 255.0
        xr = dwt2d_inverse(dwt2d_forward(x, bank, 4), bank)
        mse = ((xr - x) ** 2).mean()
        psnr = 10.0 * np.log10(1.0 / mse)
        assert psnr > 200.0

    def test_inconsistent_pyramid_rejected(self, bank, rng):
        pyr = dwt2d_forward(rng.normal(size=(64, 64)), bank, 2)
        bad = WaveletPyramid(
            levels=pyr.levels,
            approx=pyr.approx,
            details=[(np.zeros((3, 3)),) * 3] + pyr.details[1:],
            source_shape=pyr.source_shape,
        )
        with pytest.raises(InvalidInputError):
            dwt2d_inverse(bad, bank)

    def test_energy_envelope(self, bank, rng):
        for levels in (1, 3, 6):
            x = rng.normal(size=(128, 128))
            pyr = dwt2d_forward(x, bank, levels)
            coeff_energy = (pyr.approx**2).sum() + sum(
                (b**2).sum() for t in pyr.details for b in t
            )
            ratio = coeff_energy / (x**2).sum()
            assert 0.95 < ratio < 1.05, (levels, ratio)

    @given(
        st.sampled_from([16, 32, 64, 96]),
        st.sampled_from([16, 32, 64]),
        st.integers(min_value=1, max_value=4),
    )
    def test_roundtrip_property(self, h, w, levels):
        if h % (1 << levels) or w % (1 << levels):
            return
        bank = default_cdf97()
        x = np.random.default_rng(h * w + levels).normal(size=(h, w))
        xr = dwt2d_inverse(dwt2d_forward(x, bank, levels), bank)
        assert np.abs(xr - x).max() < 1e-9

    def test_constant_image_details_vanish_all_levels(self, bank):
        pyr = dwt2d_forward(np.full((64, 64), 3.7), bank, 3)
        for triple in pyr.details:
            for band in triple:
                assert np.abs(band).max() < 1e-10
        # approximation carries the full energy: gain sqrt(2) per dim per level
        np.testing.assert_allclose(pyr.approx, 3.7 * 2.0**3, atol=1e-9)

    def test_dump_pyramid_files(self, bank, rng, tmp_path):
        from wavechaos.imageio import read_matrix_csv
        from wavechaos.wavelet import dump_pyramid

        pyr = dwt2d_forward(rng.normal(size=(32, 32)), bank, 2)
        written = dump_pyramid(pyr, tmp_path / "bands")
        assert len(written) == 1 + 3 * 2
        np.testing.assert_array_equal(read_matrix_csv(written[0]), pyr.approx)
        np.testing.assert_array_equal(
            read_matrix_csv(tmp_path / "bands" / "level1_hh.csv"), pyr.details[0][2]
        )

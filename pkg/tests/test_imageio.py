import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavechaos.errors import FormatError, InvalidInputError, InvalidStateError
from wavechaos.imageio import (
    AugmentationPlan,
    DatasetItem,
    GrayImage,
    LabeledDataset,
    augment,
    brightness,
    encode_pgm,
    horizontal_flip,
    load_pgm,
    normalize,
    parse_pgm,
    quantize,
    read_manifest,
    read_matrix_csv,
    resize_nearest,
    rotate_90,
    save_pgm,
    vertical_flip,
    vertical_scale,
    write_manifest,
    write_matrix_csv,
)


def raw(array):
    return GrayImage(np.asarray(array, dtype=np.uint8))


def norm(array):
    return GrayImage(np.asarray(array, dtype=np.float64))


class TestPgm:
    def test_parse_2x2(self):
        img = parse_pgm(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
        np.testing.assert_array_equal(img.pixels, [[0, 255], [128, 64]])

    def test_ascii_variant_rejected(self):
        with pytest.raises(FormatError):
            parse_pgm(b"P2\n2 2\n255\n0 1 2 3")

    def test_truncated_payload_reports_offset(self):
        header = b"P5\n2 2\n255\n"
        with pytest.raises(FormatError) as err:
            parse_pgm(header + bytes([0, 255, 128]))
        assert err.value.offset == len(header) + 3

    def test_wrong_maxval_rejected(self):
        with pytest.raises(FormatError):
            parse_pgm(b"P5\n2 2\n65535\n" + bytes(8))

    def test_comments_and_whitespace(self):
        img = parse_pgm(b"P5 # format\n# a comment\n 2\t2 \n255\n" + bytes(4))
        assert img.pixels.shape == (2, 2)

    def test_roundtrip_file(self, tmp_path, rng):
        img = raw(rng.integers(0, 256, size=(7, 5)))
        save_pgm(img, tmp_path / "x.pgm")
        back = load_pgm(tmp_path / "x.pgm")
        np.testing.assert_array_equal(back.pixels, img.pixels)

    def test_normalized_write_quantizes(self):
        data = encode_pgm(norm([[0.0, 1.0], [0.5, 2.0]]))
        img = parse_pgm(data)
        np.testing.assert_array_equal(img.pixels, [[0, 255], [128, 255]])


class TestResize:
    def test_integer_upscale_duplicates_blocks(self):
        img = raw([[1, 2], [3, 4]])
        out = resize_nearest(img, 4, 4)
        np.testing.assert_array_equal(
            out.pixels,
            [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]],
        )

    def test_identity(self, rng):
        img = raw(rng.integers(0, 256, size=(6, 9)))
        np.testing.assert_array_equal(resize_nearest(img, 6, 9).pixels, img.pixels)

    def test_one_hot_against_bruteforce_oracle(self):
        # 315x560 source downscaled to 512x512; brute-force the center map
        src = np.zeros((315, 560), dtype=np.uint8)
        src[100, 333] = 255
        out = resize_nearest(raw(src), 512, 512)
        expected = np.zeros((512, 512), dtype=np.uint8)
        for i in range(512):
            for j in range(512):
                si = int((i + 0.5) * 315 / 512)
                sj = int((j + 0.5) * 560 / 512)
                expected[i, j] = src[si, sj]
        np.testing.assert_array_equal(out.pixels, expected)
        assert out.pixels.sum() > 0  # the hot pixel survives downscale

    def test_invalid_dims_rejected(self):
        with pytest.raises(InvalidInputError):
            resize_nearest(raw([[1]]), 0, 4)


class TestNormalize:
    def test_extremes_and_midpoint(self):
        img = normalize(raw([[0, 255, 128]]))
        np.testing.assert_allclose(img.pixels, [[0.0, 1.0, 128 / 255]])

    def test_double_normalize_rejected(self):
        with pytest.raises(InvalidStateError):
            normalize(normalize(raw([[1]])))

    def test_quantize_inverts_normalize(self, rng):
        img = raw(rng.integers(0, 256, size=(4, 4)))
        np.testing.assert_array_equal(quantize(normalize(img)).pixels, img.pixels)


class TestOps:
    def test_flip_involutions(self, rng):
        img = norm(rng.random((5, 7)))
        np.testing.assert_array_equal(
            horizontal_flip(horizontal_flip(img)).pixels, img.pixels
        )
        np.testing.assert_array_equal(
            vertical_flip(vertical_flip(img)).pixels, img.pixels
        )

    def test_rot90_four_times_is_identity(self, rng):
        img = norm(rng.random((6, 6)))
        out = img
        for _ in range(4):
            out = rotate_90(out)
        np.testing.assert_array_equal(out.pixels, img.pixels)

    def test_rot90_non_square_rejected(self, rng):
        with pytest.raises(InvalidInputError):
            rotate_90(norm(rng.random((4, 6))))

    @given(st.floats(min_value=0.2, max_value=1.0))
    def test_brightness_bounds_and_monotonicity(self, factor):
        img = norm(np.linspace(0, 1, 12).reshape(3, 4))
        out = brightness(img, factor)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0
        assert np.all(out.pixels <= img.pixels + 1e-12)

    def test_brightness_factor_validated(self, rng):
        with pytest.raises(InvalidInputError):
            brightness(norm(rng.random((2, 2))), 1.5)

    def test_vertical_scale_preserves_shape(self, rng):
        img = norm(rng.random((10, 6)))
        out = vertical_scale(img)
        assert out.pixels.shape == (10, 6)
        # middle rows carry the squashed content, borders are edge-replicated
        assert np.array_equal(out.pixels[0], out.pixels[1])

    def test_ops_require_normalized(self):
        with pytest.raises(InvalidStateError):
            horizontal_flip(raw([[1, 2]]))


def make_dataset(n_per_class, side=8, seed=0):
    rng = np.random.default_rng(seed)
    ds = LabeledDataset()
    for label in ("benign", "malignant"):
        for i in range(n_per_class):
            ds.items.append(
                DatasetItem(
                    image=norm(rng.random((side, side))),
                    label=label,
                    source_id=f"{label[0]}{i:03d}",
                )
            )
    return ds


class TestAugment:
    def test_target_reached_and_balanced(self):
        ds = make_dataset(14)
        out = augment(ds, AugmentationPlan(target_count=2048, seed=7))
        assert len(out.items) == 2048
        assert out.class_counts == (1024, 1024)

    def test_originals_preserved(self):
        ds = make_dataset(3)
        out = augment(ds, AugmentationPlan(target_count=20, seed=7))
        assert len(out.originals()) == 6

    def test_deterministic(self):
        ds = make_dataset(4)
        plan = AugmentationPlan(target_count=64, seed=99)
        a = augment(ds, plan)
        b = augment(ds, plan)
        assert len(a.items) == len(b.items)
        for x, y in zip(a.items, b.items):
            assert x.label == y.label and x.source_id == y.source_id
            np.testing.assert_array_equal(x.image.pixels, y.image.pixels)

    def test_target_below_source_rejected(self):
        ds = make_dataset(10)
        with pytest.raises(InvalidInputError):
            augment(ds, AugmentationPlan(target_count=10, seed=1))

    def test_provenance_labels_match_sources(self):
        ds = make_dataset(5)
        by_id = {it.source_id: it.label for it in ds.items}
        out = augment(ds, AugmentationPlan(target_count=50, seed=3))
        for item in out.items:
            assert by_id[item.source_id] == item.label

    def test_pixels_stay_in_unit_interval(self):
        ds = make_dataset(3)
        out = augment(ds, AugmentationPlan(target_count=60, seed=11))
        for item in out.items:
            assert item.image.pixels.min() >= 0.0
            assert item.image.pixels.max() <= 1.0

    def test_unknown_op_rejected(self):
        with pytest.raises(InvalidInputError):
            AugmentationPlan(target_count=10, seed=0, ops=("sharpen",))


class TestManifest:
    def test_roundtrip(self, tmp_path):
        ds = augment(make_dataset(3), AugmentationPlan(target_count=16, seed=5))
        manifest = write_manifest(ds, tmp_path / "data")
        back = read_manifest(manifest)
        assert len(back.items) == 16
        assert back.class_counts == ds.class_counts
        assert len(back.originals()) == 6
        # pixels survive the 8-bit quantization exactly when requantized
        for a, b in zip(ds.items, back.items):
            np.testing.assert_array_equal(
                quantize(a.image).pixels, quantize(b.image).pixels
            )

    def test_rewrite_is_byte_identical(self, tmp_path):
        ds = augment(make_dataset(3), AugmentationPlan(target_count=16, seed=5))
        m1 = write_manifest(ds, tmp_path / "a")
        m2 = write_manifest(ds, tmp_path / "b")
        assert m1.read_bytes() == m2.read_bytes()

    def test_matrix_csv_roundtrip(self, tmp_path, rng):
        m = rng.normal(size=(5, 3))
        write_matrix_csv(m, tmp_path / "m.csv")
        np.testing.assert_array_equal(read_matrix_csv(tmp_path / "m.csv"), m)

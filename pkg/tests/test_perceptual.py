"""Partitioning, probe functions, fuzzification, description pipeline."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzynear.errors import ImageTooSmall, UnknownProbe
from fuzzynear.membership import build_bank
from fuzzynear.perceptual import (
    DEFAULT_PROBES,
    BankSpec,
    DescribeConfig,
    ObjectDescription,
    PerceptualSystem,
    describe_image,
    extract_features,
    fmt9,
    fuzzify,
    partition_image,
    round9,
    to_rgb01,
)


def solid(height, width, rgb):
    return np.tile(np.asarray(rgb, dtype=np.float64), (height, width, 1))


class TestCanonicalRounding:
    def test_round9_idempotent(self):
        rng = np.random.default_rng(3)
        vals = rng.uniform(-2, 2, 500)
        once = round9(vals)
        assert np.array_equal(round9(once), once)

    def test_round9_scalar(self):
        assert round9(1 / 3) == 0.333333333

    def test_fmt9_round_trip(self):
        rng = np.random.default_rng(4)
        for v in round9(rng.uniform(0, 1, 200)):
            assert float(fmt9(v)) == v

    def test_round9_preserves_order(self):
        a, b = 0.12345678912, 0.12345678998
        assert round9(a) <= round9(b)


class TestIngestion:
    def test_uint8_scaling(self):
        img = np.full((4, 4, 3), 255, dtype=np.uint8)
        assert np.all(to_rgb01(img) == 1.0)

    def test_gray_replicated(self):
        img = np.full((4, 4), 128, dtype=np.uint8)
        rgb = to_rgb01(img)
        assert rgb.shape == (4, 4, 3)
        assert np.all(rgb == 128 / 255)

    def test_float_passthrough_clipped(self):
        img = np.full((2, 2, 3), 1.25)
        assert np.all(to_rgb01(img) == 1.0)

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            to_rgb01(np.zeros((4, 4, 2)))


class TestPartition:
    def test_standard_photo_geometry(self):
        img = np.zeros((256, 384, 3), dtype=np.uint8)
        grid, blocks = partition_image(img, 13, 19)
        assert grid.cols == 29
        assert grid.rows == 13
        assert len(blocks) == 377
        assert blocks[0].shape == (19, 13, 3)

    def test_exact_single_block(self):
        img = np.zeros((19, 13, 3), dtype=np.uint8)
        grid, blocks = partition_image(img, 13, 19)
        assert (grid.rows, grid.cols) == (1, 1)
        assert len(blocks) == 1

    def test_too_small_raises(self):
        img = np.zeros((19, 12, 3), dtype=np.uint8)
        with pytest.raises(ImageTooSmall):
            partition_image(img, 13, 19)

    def test_row_major_order(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        img[0, 2:] = 255  # marks block (0, 1)
        _, blocks = partition_image(img, 2, 2)
        means = [float(b.mean()) for b in blocks]
        assert means[1] > 0 and means[0] == means[2] == means[3] == 0

    @given(st.integers(1, 120), st.integers(1, 120), st.integers(1, 40),
           st.integers(1, 40))
    def test_block_count_formula(self, width, height, bw, bh):
        img = np.zeros((height, width), dtype=np.uint8)
        if width // bw < 1 or height // bh < 1:
            with pytest.raises(ImageTooSmall):
                partition_image(img, bw, bh)
        else:
            grid, blocks = partition_image(img, bw, bh)
            assert len(blocks) == (width // bw) * (height // bh)
            assert grid.block_count == len(blocks)


class TestProbes:
    def test_black_and_white_mean_gray(self):
        assert extract_features(solid(4, 4, (0, 0, 0)), ["mean_gray"])[0] == 0.0
        assert extract_features(solid(4, 4, (1, 1, 1)), ["mean_gray"])[0] == 1.0

    def test_alternating_extremes_block(self):
        block = np.array([[0, 255], [0, 255]], dtype=np.uint8)
        feats = extract_features(block, ["mean_gray", "gray_std"])
        assert feats[0] == 0.5
        # population stddev of {0,255,0,255} is 127.5; normalized by 127.5
        assert feats[1] == 1.0

    def test_channel_means(self):
        block = solid(3, 3, (1.0, 0.5, 0.25))
        feats = extract_features(block, ["red_mean", "green_mean", "blue_mean"])
        assert np.allclose(feats, [1.0, 0.5, 0.25], atol=1e-12)

    def test_edge_density_uniform_is_zero(self):
        assert extract_features(solid(5, 5, (0.4, 0.4, 0.4)),
                                ["edge_density"])[0] == 0.0

    def test_edge_density_half_split(self):
        # 4x4 block, left half black, right half white: the two middle
        # columns see a horizontal Sobel response of 4, the outer ones 0
        block = np.zeros((4, 4), dtype=np.uint8)
        block[:, 2:] = 255
        assert extract_features(block, ["edge_density"])[0] == 0.5

    def test_unknown_probe(self):
        with pytest.raises(UnknownProbe):
            extract_features(solid(2, 2, (0, 0, 0)), ["hue_histogram"])

    def test_random_rasters_stay_normalized(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            h = int(rng.integers(19, 60))
            w = int(rng.integers(13, 60))
            img = rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
            _, blocks = partition_image(img, 13, 19)
            for blk in blocks:
                feats = extract_features(blk, DEFAULT_PROBES)
                assert np.all((0.0 <= feats) & (feats <= 1.0))


class TestFuzzify:
    def test_single_term_peak(self):
        bank = build_bank(1)
        lower, upper = fuzzify([0.5], bank)
        assert lower[0] == upper[0] == 1.0

    def test_three_term_first_center(self):
        bank = build_bank(3)
        lower, _ = fuzzify([1 / 6], bank)
        assert np.allclose(lower, [1.0, 0.0, 0.0], atol=1e-12)

    def test_interval_bank_order_and_length(self):
        bank = build_bank(3, it2_spread=0.1)
        vals = np.linspace(0, 1, 7)
        lower, upper = fuzzify(vals, bank)
        assert lower.shape == upper.shape == (21,)
        assert np.all(lower <= upper)

    def test_zero_spread_collapses(self):
        bank = build_bank(3, it2_spread=0.0)
        lower, upper = fuzzify(np.linspace(0, 1, 11), bank)
        assert np.array_equal(lower, upper)


class TestDescribeConfig:
    def test_canonical_string_is_stable(self):
        cfg = DescribeConfig()
        assert cfg.canonical() == (
            "fmt=1;block=13x19;probes=mean_gray,red_mean,green_mean,"
            "blue_mean,gray_std,edge_density;"
            "bank=beta,m=3,spread=0.1,alpha=2,beta=2,literal=0")

    def test_fingerprint_shape_and_sensitivity(self):
        base = DescribeConfig()
        assert len(base.fingerprint()) == 16
        assert int(base.fingerprint(), 16) >= 0
        other = DescribeConfig(block_width=8, block_height=8)
        assert other.fingerprint() != base.fingerprint()
        t1 = DescribeConfig(bank=BankSpec(it2_spread=None))
        assert t1.fingerprint() != base.fingerprint()

    def test_description_length(self):
        assert DescribeConfig().description_length == 18

    def test_unknown_probe_rejected(self):
        with pytest.raises(UnknownProbe):
            DescribeConfig(probes=("mean_gray", "bogus"))

    def test_spread_override_changes_spec(self):
        spec = BankSpec().with_spread(None)
        assert spec.it2_spread is None
        assert spec.m == BankSpec().m


class TestDescribeImage:
    def test_standard_photo_description_count(self):
        img = np.zeros((256, 384, 3), dtype=np.uint8)
        descs = describe_image(img, DescribeConfig(), image_id=7)
        assert len(descs) == 377
        assert descs[0].image_id == 7
        assert (descs[0].block_row, descs[0].block_col) == (0, 0)
        assert (descs[-1].block_row, descs[-1].block_col) == (12, 28)

    def test_uniform_image_identical_descriptions(self):
        img = np.full((38, 26, 3), 77, dtype=np.uint8)
        descs = describe_image(img, DescribeConfig())
        vecs = {(d.raw_features, d.fuzzy_lower, d.fuzzy_upper) for d in descs}
        assert len(vecs) == 1

    def test_single_block_image(self):
        img = np.zeros((19, 13, 3), dtype=np.uint8)
        assert len(describe_image(img, DescribeConfig())) == 1

    def test_determinism(self):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, size=(60, 60, 3)).astype(np.uint8)
        cfg = DescribeConfig()
        assert describe_image(img, cfg, image_id=1) == \
            describe_image(img, cfg, image_id=1)

    def test_vector_lengths_and_order(self):
        rng = np.random.default_rng(6)
        img = rng.integers(0, 256, size=(40, 40, 3)).astype(np.uint8)
        cfg = DescribeConfig(block_width=8, block_height=8)
        descs = describe_image(img, cfg)
        assert len(descs) == 25
        for d in descs:
            assert len(d.raw_features) == 6
            assert len(d.fuzzy_lower) == len(d.fuzzy_upper) == 18
            assert all(lo <= up for lo, up in zip(d.fuzzy_lower, d.fuzzy_upper))
            assert all(0.0 <= v <= 1.0 for v in
                       d.raw_features + d.fuzzy_lower + d.fuzzy_upper)

    def test_type1_bank_gives_equal_envelopes(self):
        img = np.full((19, 13, 3), 90, dtype=np.uint8)
        cfg = DescribeConfig(bank=BankSpec(it2_spread=None))
        d = describe_image(img, cfg)[0]
        assert d.fuzzy_lower == d.fuzzy_upper

    def test_descriptions_are_canonically_rounded(self):
        rng = np.random.default_rng(8)
        img = rng.integers(0, 256, size=(19, 26, 3)).astype(np.uint8)
        for d in describe_image(img, DescribeConfig()):
            for v in d.raw_features + d.fuzzy_lower + d.fuzzy_upper:
                assert float(fmt9(v)) == v

    def test_fuzzify_matches_per_block_path(self):
        rng = np.random.default_rng(9)
        img = rng.integers(0, 256, size=(38, 26, 3)).astype(np.uint8)
        cfg = DescribeConfig()
        bank = cfg.bank.build()
        for d in describe_image(img, cfg):
            lo, up = fuzzify(np.asarray(d.raw_features), bank)
            assert np.array_equal(round9(lo), np.asarray(d.fuzzy_lower))
            assert np.array_equal(round9(up), np.asarray(d.fuzzy_upper))


class TestPerceptualSystem:
    def test_accepts_consistent_objects(self):
        img = np.zeros((19, 26, 3), dtype=np.uint8)
        descs = describe_image(img, DescribeConfig())
        system = PerceptualSystem(tuple(descs), DEFAULT_PROBES)
        assert system.description_length == 6

    def test_rejects_wrong_feature_count(self):
        bad = ObjectDescription("x", 0, 0, (0.5,), (0.5,), (0.5,))
        from fuzzynear.errors import DimensionMismatch
        with pytest.raises(DimensionMismatch):
            PerceptualSystem((bad,), DEFAULT_PROBES)

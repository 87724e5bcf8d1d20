"""Tai Ji generator, XOR corners, and IDX serialization."""

import numpy as np
import pytest

from quadnet.data import (
    IdxFormatError,
    LabeledDataset,
    gen_taiji,
    gen_xor,
    images_to_idx_bytes,
    labels_to_idx_bytes,
    load_idx,
    load_idx_files,
    taiji_label,
)

from _oracles import lattice_circle_count, lattice_disk_count


class TestTaijiCounts:
    def test_canonical_sizes(self):
        """The strict-interior rule gives the canonical 1245/7825 counts."""
        assert len(gen_taiji(20)) == 1245
        assert len(gen_taiji(50)) == 7825

    def test_boundary_point_arithmetic(self):
        # 1245 = 1257 closed-disk points minus 12 on the circle, and
        # 7825 = 7845 minus 20: the strict test is the unique fit.
        assert lattice_disk_count(20) == 1245 and lattice_circle_count(20) == 12
        assert lattice_disk_count(50) == 7825 and lattice_circle_count(50) == 20

    def test_counts_match_brute_force(self):
        for r in (1, 2, 3, 7, 13, 20):
            assert len(gen_taiji(r)) == lattice_disk_count(r)

    def test_r1_single_origin_point(self):
        ds = gen_taiji(1)
        assert len(ds) == 1
        assert np.array_equal(ds.x, [[0.0, 0.0]])
        assert ds.labels[0] == 0

    def test_generation_order_row_major(self):
        ds = gen_taiji(4)
        expected = [(i / 4, j / 4) for j in range(-4, 5) for i in range(-4, 5)
                    if i * i + j * j < 16]
        assert [tuple(p) for p in ds.x] == expected

    def test_bad_reciprocal_rejected(self):
        with pytest.raises(ValueError):
            gen_taiji(0)


class TestTaijiLabels:
    def test_rule_examples(self):
        assert taiji_label(0.0, 0.5) == 1      # center of the upper eye
        assert taiji_label(0.25, -0.5) == 0    # inside the lower eye
        assert taiji_label(-0.9, 0.0) == 1     # left half, outside both eyes
        assert taiji_label(0.9, 0.0) == 0
        assert taiji_label(0.0, 0.0) == 0

    def test_outside_disk_rejected(self):
        with pytest.raises(ValueError):
            taiji_label(1.0, 0.0)
        with pytest.raises(ValueError):
            taiji_label(0.8, 0.8)

    def test_rotation_complement(self):
        """Labels flip under 180-degree rotation everywhere except the origin."""
        for r in (5, 20):
            ds = gen_taiji(r)
            table = {(round(x * r), round(y * r)): l
                     for (x, y), l in zip(ds.x, ds.labels)}
            for (i, j), label in table.items():
                if (i, j) == (0, 0):
                    continue
                assert label == 1 - table[(-i, -j)], (i, j)

    def test_class_balance(self):
        for r in range(1, 13):
            labels = gen_taiji(r).labels
            ones = int(labels.sum())
            assert abs(ones - (len(labels) - ones)) <= 1

    def test_generator_labels_match_float_rule(self):
        for r in (20, 50):
            ds = gen_taiji(r)
            for (x, y), label in zip(ds.x, ds.labels):
                assert taiji_label(x, y) == label


class TestXor:
    def test_four_points_two_positive(self):
        ds = gen_xor()
        assert len(ds) == 4
        assert ds.labels.sum() == 2

    def test_swap_symmetry(self):
        ds = gen_xor()
        table = {tuple(p): l for p, l in zip(ds.x, ds.labels)}
        for (a, b), label in table.items():
            assert table[(b, a)] == label


class TestIdx:
    def roundtrip(self, images, labels):
        return load_idx(images_to_idx_bytes(images), labels_to_idx_bytes(labels))

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(7, 5, 4), dtype=np.uint8)
        labels = rng.integers(0, 10, size=7)
        ds = self.roundtrip(images, labels)
        assert ds.x.shape == (7, 1, 5, 4)
        assert np.array_equal(ds.labels, labels)
        assert np.array_equal((ds.x[:, 0] * 255).round().astype(np.uint8), images)

    def test_pixel_scaling(self):
        images = np.array([[[0, 255], [128, 51]]], dtype=np.uint8)
        ds = self.roundtrip(images, np.array([3]))
        assert ds.x[0, 0, 0, 0] == 0.0
        assert ds.x[0, 0, 0, 1] == 1.0
        assert ds.x[0, 0, 1, 0] == pytest.approx(128 / 255)

    def test_empty_file_is_empty_dataset(self):
        ds = self.roundtrip(np.zeros((0, 3, 3), dtype=np.uint8), np.zeros(0, dtype=int))
        assert len(ds) == 0

    def test_bad_image_magic(self):
        good = images_to_idx_bytes(np.zeros((1, 2, 2), dtype=np.uint8))
        bad = b"\x00\x00\x08\x04" + good[4:]
        with pytest.raises(IdxFormatError, match="magic"):
            load_idx(bad, labels_to_idx_bytes(np.array([0])))

    def test_bad_label_magic(self):
        images = images_to_idx_bytes(np.zeros((1, 2, 2), dtype=np.uint8))
        labels = labels_to_idx_bytes(np.array([0]))
        bad = b"\x00\x00\x07\x01" + labels[4:]
        with pytest.raises(IdxFormatError, match="magic"):
            load_idx(images, bad)

    def test_truncated_payload(self):
        images = images_to_idx_bytes(np.zeros((2, 3, 3), dtype=np.uint8))
        with pytest.raises(IdxFormatError, match="truncated image payload"):
            load_idx(images[:-5], labels_to_idx_bytes(np.array([0, 1])))

    def test_count_mismatch_names_both_counts(self):
        images = images_to_idx_bytes(np.zeros((2, 3, 3), dtype=np.uint8))
        labels = labels_to_idx_bytes(np.array([0, 1, 2]))
        with pytest.raises(IdxFormatError, match="2 images vs 3 labels"):
            load_idx(images, labels)

    def test_gzip_paths(self, tmp_path):
        import gzip

        rng = np.random.default_rng(1)
        images = rng.integers(0, 256, size=(3, 4, 4), dtype=np.uint8)
        labels = rng.integers(0, 10, size=3)
        ipath = tmp_path / "imgs.gz"
        lpath = tmp_path / "lbls"
        ipath.write_bytes(gzip.compress(images_to_idx_bytes(images)))
        lpath.write_bytes(labels_to_idx_bytes(labels))
        ds = load_idx_files(ipath, lpath)
        assert np.array_equal(ds.labels, labels)


class TestLabeledDataset:
    def test_label_range_validated(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((2, 2)), np.array([0, 5]), 2)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((2, 2)), np.array([0]), 2)

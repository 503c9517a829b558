import numpy as np
import pytest
import torch

from dsn_trainer.data import (
    SpectrogramDataset,
    num_classes,
    read_manifest,
    read_pgm,
    verify_images_exist,
)

from conftest import make_synthetic_dataset, write_pgm


def test_read_manifest(synth_train):
    rows = read_manifest(synth_train)
    assert len(rows) == 30
    assert {r.label for r in rows} == {1, 2, 3, 4, 5}
    assert num_classes(rows) == 5
    verify_images_exist(rows)


def test_read_manifest_bad_header(tmp_path):
    path = tmp_path / "manifest.csv"
    path.write_text("nope\n")
    with pytest.raises(ValueError):
        read_manifest(path)


def test_missing_image_detected(synth_train):
    rows = read_manifest(synth_train)
    rows[0].image_path.unlink()
    with pytest.raises(FileNotFoundError):
        verify_images_exist(rows)


def test_read_pgm_round_trip(tmp_path):
    pixels = np.arange(0, 96 * 48, dtype=np.uint32).reshape(48, 96) % 256
    write_pgm(tmp_path / "x.pgm", pixels.astype(np.uint8))
    back = read_pgm(tmp_path / "x.pgm")
    assert np.array_equal(back, pixels.astype(np.uint8))


def test_read_pgm_rejects_ascii(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(ValueError):
        read_pgm(tmp_path / "a.pgm")


def test_dataset_resize_and_labels(synth_train):
    rows = read_manifest(synth_train)
    ds = SpectrogramDataset(rows, size=(128, 128))
    x, label = ds[0]
    assert x.shape == (1, 128, 128)
    assert x.dtype == torch.float32
    assert 0.0 <= float(x.min()) and float(x.max()) <= 1.0
    assert label == rows[0].label - 1


def test_dataset_crop_policy(tmp_path):
    manifest = make_synthetic_dataset(tmp_path / "wide", n_per_class=1, width=300, seed=5)
    rows = read_manifest(manifest)
    ds = SpectrogramDataset(rows, size=(128, 128), policy="crop")
    x, _ = ds[0]
    assert x.shape == (1, 128, 128)
    with pytest.raises(ValueError):
        SpectrogramDataset(rows, policy="stretch")

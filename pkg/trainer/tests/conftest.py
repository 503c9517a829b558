import csv
import hashlib

import numpy as np
import pytest


def write_pgm(path, pixels):
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.astype(np.uint8).tobytes())


def make_synthetic_dataset(directory, n_per_class, n_classes=5, width=160, seed=0):
    """Class-separable fake spectrograms: a bright band whose frequency row
    depends on the class, plus speckle. Writes images and a manifest CSV in
    the generator's format and returns the manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for label in range(1, n_classes + 1):
        for j in range(n_per_class):
            img = rng.integers(0, 40, size=(128, width)).astype(np.uint8)
            center = 12 + 20 * (label - 1) + int(rng.integers(-3, 4))
            img[center - 4 : center + 4, :] = rng.integers(180, 256, (8, width))
            name = f"class{label}_{j:03d}.pgm"
            write_pgm(directory / name, img)
            digest = hashlib.sha256((directory / name).read_bytes()).hexdigest()
            rows.append([name, label, f"class{label}", digest, int(rng.integers(1 << 31))])
    manifest = directory / "manifest.csv"
    with manifest.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_path", "label", "class_name", "scenario_hash", "seed"])
        writer.writerows(rows)
    return manifest


@pytest.fixture
def synth_train(tmp_path):
    return make_synthetic_dataset(tmp_path / "train", n_per_class=6, seed=1)


@pytest.fixture
def synth_test(tmp_path):
    return make_synthetic_dataset(tmp_path / "test", n_per_class=4, seed=2)

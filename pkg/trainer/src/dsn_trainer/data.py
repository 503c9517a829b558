"""Manifest and image loading for generated spectrogram datasets.

The generator's interface is a CSV manifest with header
``image_path,label,class_name,scenario_hash,seed`` next to binary PGM
images (P5, maxval 255). Spectrogram widths vary with the collection
length, so images are resampled to a fixed size before batching.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch.utils.data import Dataset

MANIFEST_HEADER = ["image_path", "label", "class_name", "scenario_hash", "seed"]


@dataclass(frozen=True)
class ManifestRow:
    image_path: Path
    label: int
    class_name: str
    scenario_hash: str
    seed: int


def read_manifest(path) -> list[ManifestRow]:
    """Parse a manifest CSV; image paths resolve relative to the file."""
    path = Path(path)
    root = path.parent
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ValueError(f"{path}:1: expected header {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append(
                    ManifestRow(root / row[0], int(row[1]), row[2], row[3], int(row[4]))
                )
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad manifest row {row!r}") from exc
    if not rows:
        raise ValueError(f"{path}: manifest has no entries")
    return rows


def read_pgm(path) -> np.ndarray:
    """Binary PGM (P5, maxval 255) as a (H, W) uint8 array."""
    blob = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(blob[start:pos])
    if tokens[0] != b"P5" or int(tokens[3]) != 255:
        raise ValueError(f"{path}: expected binary PGM with maxval 255")
    w, h = int(tokens[1]), int(tokens[2])
    body = blob[pos + 1 : pos + 1 + w * h]
    if len(body) != w * h:
        raise ValueError(f"{path}: body has {len(body)} bytes, expected {w * h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def verify_images_exist(rows) -> None:
    missing = [str(r.image_path) for r in rows if not r.image_path.exists()]
    if missing:
        raise FileNotFoundError(
            f"{len(missing)} manifest images missing, first: {missing[0]}"
        )


class SpectrogramDataset(Dataset):
    """Gray spectrograms resampled to a fixed grid, labels zero-based.

    ``policy`` selects how variable-width images reach ``size``:
    "resize" (bilinear, default) or "crop" (center crop/pad along time).
    """

    def __init__(self, rows, size=(128, 128), policy="resize"):
        if policy not in ("resize", "crop"):
            raise ValueError(f"unknown resize policy {policy!r}")
        self.rows = list(rows)
        self.size = tuple(size)
        self.policy = policy

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, index):
        row = self.rows[index]
        pixels = read_pgm(row.image_path).astype(np.float32) / 255.0
        x = torch.from_numpy(pixels)[None, None]  # 1 x 1 x H x W
        if self.policy == "resize":
            x = F.interpolate(x, size=self.size, mode="bilinear", align_corners=False)
        else:
            x = self._center_crop(x)
        return x[0], row.label - 1

    def _center_crop(self, x):
        h, w = self.size
        _, _, xh, xw = x.shape
        if xh != h:
            x = F.interpolate(x, size=(h, xw), mode="bilinear", align_corners=False)
        if xw >= w:
            lo = (xw - w) // 2
            x = x[:, :, :, lo : lo + w]
        else:
            pad = w - xw
            x = F.pad(x, (pad // 2, pad - pad // 2))
        return x


def num_classes(rows) -> int:
    return max(r.label for r in rows)

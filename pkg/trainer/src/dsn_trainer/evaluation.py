"""Deterministic evaluation: confusion matrix, per-class accuracy, error."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .data import SpectrogramDataset, num_classes, read_manifest, verify_images_exist


@dataclass(eq=False)
class EvalReport:
    model_id: str
    error_rate: float
    per_class_accuracy: dict
    confusion: np.ndarray  # rows = true class, columns = predicted
    n_test: int

    def __post_init__(self):
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError("error rate must lie in [0, 1]")


def evaluate(model, test_manifest, train_manifest=None, input_size=(128, 128),
             resize_policy="resize", batch_size=64) -> EvalReport:
    """Score the model on a held-out manifest.

    When ``train_manifest`` is given, the two manifests must be disjoint by
    scenario hash; any overlap aborts the evaluation (data-leakage guard).
    """
    rows = read_manifest(test_manifest)
    verify_images_exist(rows)
    if train_manifest is not None:
        train_rows = read_manifest(train_manifest)
        overlap = {r.scenario_hash for r in rows} & {r.scenario_hash for r in train_rows}
        if overlap:
            raise ValueError(
                f"train/test leakage: {len(overlap)} shared scenario hashes, "
                f"e.g. {sorted(overlap)[0][:12]}"
            )

    m = num_classes(rows)
    dataset = SpectrogramDataset(rows, size=input_size, policy=resize_policy)
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False, num_workers=0)
    confusion = np.zeros((m, m), dtype=int)
    model.eval()
    with torch.no_grad():
        for images, labels in loader:
            predicted = model(images).argmax(dim=1)
            for t, p in zip(labels.tolist(), predicted.tolist()):
                confusion[t, p] += 1

    totals = confusion.sum(axis=1)
    correct = np.diag(confusion)
    per_class = {
        f"class_{c + 1}": (float(correct[c] / totals[c]) if totals[c] else float("nan"))
        for c in range(m)
    }
    n = int(confusion.sum())
    error = 1.0 - float(correct.sum()) / n
    return EvalReport(getattr(model, "model_id", "model"), error, per_class, confusion, n)


def save_report_json(report: EvalReport, path) -> Path:
    path = Path(path)
    payload = {
        "model_id": report.model_id,
        "error_rate": report.error_rate,
        "per_class_accuracy": report.per_class_accuracy,
        "n_test": report.n_test,
        "confusion": report.confusion.tolist(),
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def save_confusion_csv(report: EvalReport, path) -> Path:
    path = Path(path)
    m = report.confusion.shape[0]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\predicted"] + [str(c + 1) for c in range(m)])
        for c in range(m):
            writer.writerow([str(c + 1)] + [int(v) for v in report.confusion[c]])
    return path

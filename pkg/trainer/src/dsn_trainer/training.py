"""Momentum-SGD training loop over manifest datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader

from .data import SpectrogramDataset, read_manifest, verify_images_exist


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings. The stated defaults are the full-scale recipe;
    ``desk_scale()`` is the configuration used by the commodity-hardware
    tests (smaller batches need a cooler learning rate).

    ``lr_decay_epochs`` lists epochs at which the learning rate is scaled by
    ``lr_decay_factor`` (empty: constant rate)."""

    learning_rate: float = 0.06
    momentum: float = 0.9
    batch_size: int = 500
    epochs: int = 500
    input_size: tuple[int, int] = (128, 128)
    resize_policy: str = "resize"
    lr_decay_epochs: tuple[int, ...] = ()
    lr_decay_factor: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")


def desk_scale(**overrides) -> TrainConfig:
    base = TrainConfig(learning_rate=0.01, batch_size=64, epochs=50)
    return replace(base, **overrides)


def train(model, manifest_path, config: TrainConfig, loss_csv_path=None):
    """Train in place; returns (model, history).

    History rows are (epoch, mean loss, training error). Shuffling and
    initial weights are driven by the config seed, so reruns on the same
    machine converge to the same curve within framework determinism limits.
    """
    rows = read_manifest(manifest_path)
    verify_images_exist(rows)
    dataset = SpectrogramDataset(rows, size=config.input_size, policy=config.resize_policy)

    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    loader = DataLoader(
        dataset,
        batch_size=min(config.batch_size, len(dataset)),
        shuffle=True,
        generator=generator,
        num_workers=0,
    )
    optimizer = torch.optim.SGD(
        model.parameters(), lr=config.learning_rate, momentum=config.momentum
    )

    history = []
    model.train()
    for epoch in range(config.epochs):
        if epoch in config.lr_decay_epochs:
            for group in optimizer.param_groups:
                group["lr"] *= config.lr_decay_factor
        total_loss = 0.0
        wrong = 0
        seen = 0
        for images, labels in loader:
            optimizer.zero_grad()
            logits = model.logits(images)
            loss = F.cross_entropy(logits, labels)
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * labels.numel()
            wrong += int((logits.argmax(dim=1) != labels).sum())
            seen += labels.numel()
        history.append((epoch, total_loss / seen, wrong / seen))

    if loss_csv_path is not None:
        write_history_csv(history, loss_csv_path)
    return model, history


def write_history_csv(history, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "train_error"])
        for epoch, loss, err in history:
            writer.writerow([epoch, repr(loss), repr(err)])
    return path

"""Spectrogram classifiers: a residual network and its plain-stack twin.

The residual model stacks five identical pre-activation blocks (BN, ReLU,
conv, BN, ReLU, conv) around parameter-free shortcuts, so each block learns
the difference between its input and output. The baseline CNN is the same
stack with the shortcut additions removed; both models therefore have
exactly the same layer count and parameter shapes, which makes the
comparison between them a controlled one.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

WIDTHS = (16, 16, 32, 32, 64)
STRIDES = (1, 2, 1, 2, 1)


def _shortcut(x, out_channels, stride):
    """Parameter-free identity path: strided average pooling plus channel
    zero-padding when the branch changes shape."""
    if stride != 1:
        x = F.avg_pool2d(x, stride, stride)
    pad = out_channels - x.shape[1]
    if pad > 0:
        x = F.pad(x, (0, 0, 0, 0, 0, pad))
    return x


class _BlockBody(nn.Module):
    """The six-layer pre-activation branch shared by both models."""

    def __init__(self, in_channels, out_channels, stride):
        super().__init__()
        self.out_channels = out_channels
        self.stride = stride
        self.bn1 = nn.BatchNorm2d(in_channels)
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, 1, 1, bias=False)

    def branch(self, x):
        y = self.conv1(F.relu(self.bn1(x)))
        return self.conv2(F.relu(self.bn2(y)))


class ResidualBlock(_BlockBody):
    def shortcut(self, x):
        return _shortcut(x, self.out_channels, self.stride)

    def forward(self, x):
        return self.shortcut(x) + self.branch(x)


class PlainBlock(_BlockBody):
    def forward(self, x):
        return self.branch(x)


class SpectrogramClassifier(nn.Module):
    """Stem conv, five blocks, BN-ReLU head, global pooling, softmax out."""

    def __init__(self, num_classes, block_cls, widths=WIDTHS, strides=STRIDES,
                 model_id="model"):
        super().__init__()
        if num_classes < 2:
            raise ValueError("need at least two classes")
        self.model_id = model_id
        self.stem = nn.Conv2d(1, widths[0], 3, 1, 1, bias=False)
        blocks = []
        in_ch = widths[0]
        for out_ch, stride in zip(widths, strides):
            blocks.append(block_cls(in_ch, out_ch, stride))
            in_ch = out_ch
        self.blocks = nn.ModuleList(blocks)
        self.head_bn = nn.BatchNorm2d(in_ch)
        self.fc = nn.Linear(in_ch, num_classes)

    def logits(self, x):
        y = self.stem(x)
        for block in self.blocks:
            y = block(y)
        y = F.relu(self.head_bn(y))
        y = F.adaptive_avg_pool2d(y, 1).flatten(1)
        return self.fc(y)

    def forward(self, x):
        return torch.softmax(self.logits(x), dim=1)


def build_dsn(num_classes, widths=WIDTHS, strides=STRIDES) -> SpectrogramClassifier:
    """Residual spectrogram network: probabilities over the motion classes."""
    return SpectrogramClassifier(num_classes, ResidualBlock, widths, strides, "dsn")


def build_cnn_baseline(num_classes, widths=WIDTHS, strides=STRIDES) -> SpectrogramClassifier:
    """The residual model minus its skip connections; same depth and widths."""
    return SpectrogramClassifier(num_classes, PlainBlock, widths, strides, "cnn")


def layer_counts(model: nn.Module) -> dict:
    counts = {"conv": 0, "bn": 0, "linear": 0}
    for module in model.modules():
        if isinstance(module, nn.Conv2d):
            counts["conv"] += 1
        elif isinstance(module, nn.BatchNorm2d):
            counts["bn"] += 1
        elif isinstance(module, nn.Linear):
            counts["linear"] += 1
    return counts

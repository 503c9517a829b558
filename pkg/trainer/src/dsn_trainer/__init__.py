"""Residual spectrogram classifier trainer for generated radar datasets."""

from .data import ManifestRow, SpectrogramDataset, num_classes, read_manifest, read_pgm
from .evaluation import EvalReport, evaluate, save_confusion_csv, save_report_json
from .models import build_cnn_baseline, build_dsn, layer_counts
from .training import TrainConfig, desk_scale, train

__version__ = "0.1.0"

"""Raw IQ frames to denoised micro-Doppler spectrograms and gray-level pmfs.

Processing chain: mix each frame against the conjugate reference chirp,
strip quasi-static clutter with a truncated SVD, collapse fast time, run a
sliding Kaiser-window DFT over slow time, quantise to 8-bit gray and
histogram the gray levels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .waveform import IQMatrix, SampledWaveform

LOG_FLOOR = 1e-12  # keeps 20*log10 finite on empty bins


@dataclass(eq=False)
class Spectrogram:
    """Time-frequency magnitude grid in dB, frequency bins x time steps."""

    magnitudes_db: np.ndarray
    freq_axis: np.ndarray     # Hz, fftshift order (DC at index W // 2)
    time_axis: np.ndarray     # s, window centers
    window_length: int
    hop: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.magnitudes_db)):
            raise ValueError("spectrogram contains non-finite values")
        if self.magnitudes_db.shape[0] != self.freq_axis.size:
            raise ValueError("one frequency-axis entry per spectrogram row expected")


@dataclass(eq=False)
class GrayImage:
    """8-bit quantisation of a spectrogram, anchored to the per-image peak."""

    pixels: np.ndarray
    dynamic_range_db: float

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)


@dataclass(eq=False)
class Pmf:
    """Normalised gray-level histogram."""

    probabilities: np.ndarray

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.probabilities.ndim != 1:
            raise ValueError("pmf must be a 1-D vector")
        if np.any(self.probabilities < 0):
            raise ValueError("pmf entries must be non-negative")
        if abs(self.probabilities.sum() - 1.0) > 1e-12:
            raise ValueError("pmf must sum to 1")

    @property
    def n_bins(self) -> int:
        return self.probabilities.size


def dechirp_conj(matrix: IQMatrix, reference: SampledWaveform) -> IQMatrix:
    """Beat-frequency conversion of every frame.

    Each column is mixed with the conjugate reference sweep, turning a
    reflector at delay tau into a constant beat tone. The mixing order is
    chosen so the slow-time phase keeps its physical sign: an approaching
    target produces positive Doppler in the final spectrogram (range beats
    land at negative beat frequencies, which the magnitude pipeline never
    sees).
    """
    ref = reference.samples
    if ref.size != matrix.n_fast:
        raise ValueError(
            f"reference has {ref.size} samples, frames have {matrix.n_fast}"
        )
    return IQMatrix(matrix.data * np.conj(ref)[:, None], matrix.meta)


def svd_denoise(matrix: IQMatrix, threshold_index: int) -> IQMatrix:
    """Remove the strongest threshold_index - 1 singular components.

    With X = sum_j a_j b_j c_j^H (singular values descending), returns
    sum_{j >= threshold_index} a_j b_j c_j^H. Static clutter concentrates in
    the leading components because it is constant along slow time, so
    threshold_index = 2 strips the dominant wall return.
    """
    r = threshold_index
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise ValueError(f"threshold index must be an integer >= 1, got {r!r}")
    max_rank = min(matrix.data.shape)
    if r > max_rank + 1:
        raise ValueError(f"threshold index {r} exceeds rank bound {max_rank} + 1")
    if r == 1:
        return IQMatrix(matrix.data.copy(), matrix.meta)
    u, s, vh = np.linalg.svd(matrix.data, full_matrices=False)
    s = s.copy()
    s[: r - 1] = 0.0
    return IQMatrix((u * s) @ vh, matrix.meta)


def slow_time(matrix: IQMatrix) -> np.ndarray:
    """Collapse fast time: y[i] = sum over samples of frame i."""
    return matrix.data.sum(axis=0)


def stft_spectrogram(
    y: np.ndarray,
    window_length: int = 128,
    hop: int = 1,
    kaiser_beta: float = 0.5,
    frame_period: float = 1e-3,
) -> Spectrogram:
    """Sliding-window DFT of the slow-time sequence.

    Step l transforms y[l*hop : l*hop + W] under a Kaiser window; output is
    20*log10(|z| + eps) with the frequency axis centred on DC and spanning
    +-1/(2*frame_period).
    """
    y = np.asarray(y, dtype=np.complex128)
    w = int(window_length)
    if w < 1 or hop < 1:
        raise ValueError("window_length and hop must be positive")
    if w > y.size:
        raise ValueError(f"window of {w} samples exceeds sequence of {y.size}")
    window = np.kaiser(w, kaiser_beta)
    segments = np.lib.stride_tricks.sliding_window_view(y, w)[::hop]
    z = np.fft.fftshift(np.fft.fft(segments * window, axis=1), axes=1)
    mags = 20.0 * np.log10(np.abs(z) + LOG_FLOOR)
    freq = np.fft.fftshift(np.fft.fftfreq(w, d=frame_period))
    n_steps = segments.shape[0]
    times = (np.arange(n_steps) * hop + (w - 1) / 2.0) * frame_period
    return Spectrogram(mags.T, freq, times, w, hop)


def to_grayscale(spec: Spectrogram, dynamic_range_db: float = 60.0) -> GrayImage:
    """Map dB magnitudes to 0..255, 255 at the image peak.

    Values at or below peak - dynamic_range_db clip to 0; the mapping is
    linear in dB in between, rounded half-up. A constant spectrogram maps to
    all-255 (everything sits at the peak).
    """
    if dynamic_range_db <= 0:
        raise ValueError("dynamic range must be positive")
    top = float(np.max(spec.magnitudes_db))
    rel = (spec.magnitudes_db - (top - dynamic_range_db)) / dynamic_range_db
    rel = np.clip(rel, 0.0, 1.0)
    pixels = np.floor(255.0 * rel + 0.5).astype(np.uint8)
    return GrayImage(pixels, dynamic_range_db)


def gray_pmf(image: GrayImage, n_bins: int = 256) -> Pmf:
    """Histogram the gray levels into n_bins equal-width bins (sum = 1)."""
    if image.pixels.size == 0:
        raise ValueError("cannot histogram an empty image")
    if n_bins < 1 or 256 % n_bins != 0:
        raise ValueError(f"n_bins must divide 256, got {n_bins}")
    width = 256 // n_bins
    idx = image.pixels.ravel() // width
    counts = np.bincount(idx, minlength=n_bins).astype(float)
    return Pmf(counts / counts.sum())


def save_pgm(image: GrayImage, path: str | Path) -> Path:
    """Binary PGM (P5, maxval 255), rows = frequency bins."""
    path = Path(path)
    h, w = image.pixels.shape
    with path.open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.pixels.tobytes())
    return path


def load_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    blob = path.read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":  # comment line
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(blob[start:pos])
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    body = blob[pos + 1 : pos + 1 + w * h]
    if len(body) != w * h:
        raise FormatError(f"{path}: body has {len(body)} bytes, expected {w * h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def save_png(image: GrayImage, path: str | Path) -> Path:
    """Optional PNG export for documentation; needs matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    plt.imsave(path, image.pixels, cmap="gray", vmin=0, vmax=255, origin="lower")
    return path


def save_pmf_csv(pmf: Pmf, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_index", "probability"])
        for i, p in enumerate(pmf.probabilities):
            writer.writerow([i, repr(float(p))])
    return path


def load_pmf_csv(path: str | Path) -> Pmf:
    path = Path(path)
    probs = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["bin_index", "probability"]:
            raise FormatError(f"{path}:1: expected header 'bin_index,probability'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                probs.append(float(row[1]))
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad pmf row {row!r}") from exc
    return Pmf(np.asarray(probs))


def spectrogram_to_csv(spec: Spectrogram, path: str | Path) -> Path:
    """Debug dump: header row of times, then one row per frequency bin."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_hz\\time_s"] + [repr(float(t)) for t in spec.time_axis])
        for f, row in zip(spec.freq_axis, spec.magnitudes_db):
            writer.writerow([repr(float(f))] + [repr(float(v)) for v in row])
    return path

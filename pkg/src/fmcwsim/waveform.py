"""FMCW probe waveform generation and the shared fast-time/slow-time layout.

A frame is one complex-baseband chirp sweep of ``samples_per_frame`` samples;
``n_frames`` frames spaced ``frame_period`` apart form the slow-time axis.
All downstream modules share these conventions through :class:`RadarParams`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, FormatError

SPEED_OF_LIGHT = 3.0e8  # m/s


@dataclass(frozen=True)
class RadarParams:
    """Radar timing and power parameters.

    Defaults describe a 3.5 GHz indoor sensing radar: 50 MHz sweep over 1 us,
    one sweep per millisecond, sampled at 100 MHz complex baseband.
    """

    carrier_freq: float = 3.5e9      # Hz
    bandwidth: float = 50e6          # Hz, swept linearly over one sweep
    sweep_time: float = 1e-6         # s, active chirp duration
    frame_period: float = 1e-3       # s, spacing between sweep starts
    sample_rate: float = 100e6       # Hz, complex baseband
    n_frames: int = 1000
    tx_power_w: float = 1.0
    antenna_gain_db: float = 25.0
    noise_power_dbm: float | None = -100.0  # None disables receiver noise

    def __post_init__(self):
        n = self.sweep_time * self.sample_rate
        if not np.isclose(n, round(n), rtol=0, atol=1e-6) or round(n) < 1:
            raise ConfigError(
                f"sweep_time*sample_rate = {n} must be a positive integer sample count"
            )
        if self.frame_period < self.sweep_time:
            raise ConfigError("frame_period must be at least the sweep time")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if self.bandwidth > self.sample_rate:
            raise ConfigError("bandwidth exceeds complex sampling rate")
        if self.bandwidth <= 0 or self.carrier_freq <= 0:
            raise ConfigError("carrier_freq and bandwidth must be positive")

    @property
    def samples_per_frame(self) -> int:
        return int(round(self.sweep_time * self.sample_rate))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def chirp_rate(self) -> float:
        """Sweep slope in Hz/s."""
        return self.bandwidth / self.sweep_time

    def frame_times(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.frame_period


@dataclass(frozen=True)
class SampledWaveform:
    """Complex baseband samples of one sweep."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.complex128))


@dataclass(frozen=True)
class IqMeta:
    """Sidecar metadata persisted next to raw IQ files."""

    sample_rate: float
    carrier_freq: float
    frame_period: float
    sweep_time: float
    scenario_id: str = ""
    seed: int = 0


@dataclass(eq=False)
class IQMatrix:
    """Fast-time x slow-time complex sample block, one column per frame."""

    data: np.ndarray  # complex, shape (samples_per_frame, n_frames)
    meta: IqMeta

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2:
            raise ValueError("IQMatrix data must be 2-D (fast time x slow time)")

    @property
    def n_fast(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]


def fmcw_chirp(params: RadarParams) -> SampledWaveform:
    """Generate the unit-amplitude up-chirp s[n] = exp(j*pi*slope*t_n^2).

    The instantaneous frequency sweeps 0 -> bandwidth over the sweep time;
    the carrier phase is handled analytically in the channel model, so the
    baseband representation is exact.
    """
    n = np.arange(params.samples_per_frame)
    t = n / params.sample_rate
    phase = np.pi * params.chirp_rate * t * t
    return SampledWaveform(np.exp(1j * phase), params.sample_rate)


def sample_frames(frames: Sequence[np.ndarray], meta: IqMeta) -> IQMatrix:
    """Concatenate per-frame sample vectors into the fast x slow matrix."""
    if len(frames) == 0:
        raise ValueError("need at least one frame")
    length = len(frames[0])
    for i, f in enumerate(frames):
        if len(f) != length:
            raise ValueError(f"frame {i} has {len(f)} samples, expected {length}")
    data = np.stack([np.asarray(f, dtype=np.complex128) for f in frames], axis=1)
    return IQMatrix(data, meta)


def save_iq(matrix: IQMatrix, path: str | Path) -> Path:
    """Write raw interleaved float32 (re, im) pairs, fast-time fastest.

    The binary body goes to ``<path>`` and a JSON sidecar with the frame
    layout goes to ``<path>.json``.
    """
    path = Path(path)
    flat = matrix.data.astype(np.complex64).ravel(order="F")
    flat = flat.astype("<c8", copy=False)
    path.write_bytes(flat.view("<f4").tobytes())
    header = {
        "L": matrix.n_fast,
        "C": matrix.n_frames,
        "f_s": matrix.meta.sample_rate,
        "f_c": matrix.meta.carrier_freq,
        "T": matrix.meta.frame_period,
        "T0": matrix.meta.sweep_time,
        "scenario_id": matrix.meta.scenario_id,
        "seed": matrix.meta.seed,
    }
    Path(str(path) + ".json").write_text(json.dumps(header, sort_keys=True, indent=1))
    return path


def load_iq(path: str | Path) -> IQMatrix:
    path = Path(path)
    sidecar = Path(str(path) + ".json")
    if not sidecar.exists():
        raise FormatError(f"missing sidecar header {sidecar}")
    try:
        header = json.loads(sidecar.read_text())
        n_fast, n_frames = int(header["L"]), int(header["C"])
        meta = IqMeta(
            sample_rate=float(header["f_s"]),
            carrier_freq=float(header["f_c"]),
            frame_period=float(header["T"]),
            sweep_time=float(header["T0"]),
            scenario_id=str(header.get("scenario_id", "")),
            seed=int(header.get("seed", 0)),
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad IQ sidecar {sidecar}: {exc}") from exc
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != 2 * n_fast * n_frames:
        raise FormatError(
            f"{path}: {raw.size} floats, header promises {2 * n_fast * n_frames}"
        )
    data = raw.view("<c8").astype(np.complex128).reshape((n_fast, n_frames), order="F")
    return IQMatrix(data, meta)


def meta_from_params(params: RadarParams, scenario_id: str = "", seed: int = 0) -> IqMeta:
    return IqMeta(
        sample_rate=params.sample_rate,
        carrier_freq=params.carrier_freq,
        frame_period=params.frame_period,
        sweep_time=params.sweep_time,
        scenario_id=scenario_id,
        seed=seed,
    )

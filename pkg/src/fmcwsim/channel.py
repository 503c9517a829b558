"""Hybrid indoor sensing channel: body echo plus evolving wall interference.

The channel of each frame is the tap-wise sum of a deterministic body
component (one ray per primitive, placed at the round-trip delay with exact
carrier phase) and a stochastic interference component built from
image-method wall clusters dressed with random intra-cluster rays. The
interference evolves across frames through a first-order autoregressive
recursion controlled by the evolution rate ``rho``: rho = 1 freezes it,
rho = 0 redraws it every frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BoundsError, ConfigError
from .kinematics import PrimitiveTrack
from .waveform import (
    RadarParams,
    SampledWaveform,
    SPEED_OF_LIGHT,
    meta_from_params,
    sample_frames,
)


@dataclass(eq=False)
class TapVector:
    """Discrete delay-domain impulse response at the fast-time sample period."""

    taps: np.ndarray

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.complex128)
        if self.taps.ndim != 1 or self.taps.size < 1:
            raise ValueError("taps must be a non-empty 1-D complex vector")

    @property
    def n_taps(self) -> int:
        return self.taps.size

    def copy(self) -> "TapVector":
        return TapVector(self.taps.copy())


@dataclass(frozen=True)
class QdConfig:
    """Geometry and statistics of the wall-interference snapshot.

    ``wall_loss`` holds the linear power reflection loss of the six box faces
    in the order (x=0, x=Lx, y=0, y=Ly, z=0, z=Lz); each wall interaction on
    a path multiplies its loss in. Ray arrivals inside a cluster follow a
    Poisson process of rate ``ray_rate`` truncated to ``ray_window`` seconds
    and capped at ``max_rays`` rays; ray amplitudes are Rayleigh with a scale
    that decays as exp(-offset / (2 * ray_decay)) so the mean ray power
    halves every ``ray_decay * ln 2`` seconds.
    """

    room: tuple[float, float, float]
    radar_position: tuple[float, float, float]
    wall_loss: tuple[float, ...] = (0.1,) * 6
    ray_rate: float = 2e8          # rays / s
    ray_decay: float = 10e-9       # s
    max_rays: int = 16
    ray_window: float = 50e-9      # s
    d0: float = 0.0                # reference path-length offset, m
    redraw_ray_delays: bool = True

    def __post_init__(self):
        dims = np.asarray(self.room, dtype=float)
        pos = np.asarray(self.radar_position, dtype=float)
        if dims.shape != (3,) or np.any(dims <= 0):
            raise ConfigError("room must be three positive dimensions")
        if pos.shape != (3,) or np.any(pos <= 0) or np.any(pos >= dims):
            raise ConfigError("radar must sit strictly inside the room")
        if len(self.wall_loss) != 6 or any(not 0 < h <= 1 for h in self.wall_loss):
            raise ConfigError("wall_loss needs six linear values in (0, 1]")
        if self.ray_rate <= 0 or self.ray_decay <= 0 or self.ray_window <= 0:
            raise ConfigError("ray rate, decay and window must be positive")
        if self.max_rays < 1:
            raise ConfigError("max_rays must be >= 1")
        if self.d0 < 0:
            raise ConfigError("d0 must be non-negative")
        object.__setattr__(self, "room", tuple(float(v) for v in dims))
        object.__setattr__(self, "radar_position", tuple(float(v) for v in pos))
        object.__setattr__(self, "wall_loss", tuple(float(h) for h in self.wall_loss))


@dataclass(frozen=True)
class Cluster:
    """One specular wall path: round-trip delay and accumulated loss."""

    delay_s: float
    loss: float
    bounces: int


def _reflect(point: np.ndarray, axis: int, plane: float) -> np.ndarray:
    out = point.copy()
    out[axis] = 2.0 * plane - out[axis]
    return out


def image_clusters(config: QdConfig) -> tuple[Cluster, ...]:
    """First- and second-order image-method reflections of the radar.

    For a monostatic radar the specular path bouncing off a wall set equals
    the distance from the radar to its mirrored image, so cluster delays are
    |radar - image| / c. Images that coincide (mirrors across perpendicular
    walls commute) are merged.
    """
    pos = np.asarray(config.radar_position, dtype=float)
    faces = [(axis, plane) for axis in range(3) for plane in (0.0, config.room[axis])]
    seen: dict[tuple, Cluster] = {}

    def add(image: np.ndarray, loss: float, bounces: int):
        dist = float(np.linalg.norm(image - pos))
        if dist <= 0:
            return
        key = tuple(np.round(image, 9))
        if key not in seen:
            seen[key] = Cluster(dist / SPEED_OF_LIGHT, loss, bounces)

    for i, (axis_i, plane_i) in enumerate(faces):
        img1 = _reflect(pos, axis_i, plane_i)
        add(img1, config.wall_loss[i], 1)
        for j, (axis_j, plane_j) in enumerate(faces):
            if i == j:
                continue
            img2 = _reflect(img1, axis_j, plane_j)
            add(img2, config.wall_loss[i] * config.wall_loss[j], 2)

    return tuple(sorted(seen.values(), key=lambda c: c.delay_s))


def required_taps(config: QdConfig, params: RadarParams, clusters=None) -> int:
    """Tap count covering every wall cluster, its ray window, and any target
    inside the room. Rejected when it would exceed one frame."""
    clusters = clusters or image_clusters(config)
    dims = np.asarray(config.room, dtype=float)
    pos = np.asarray(config.radar_position, dtype=float)
    corners = np.array([[x, y, z] for x in (0, dims[0]) for y in (0, dims[1]) for z in (0, dims[2])])
    target_delay = 2.0 * np.max(np.linalg.norm(corners - pos, axis=1)) / SPEED_OF_LIGHT
    tau_max = max(clusters[-1].delay_s + config.ray_window, target_delay)
    n = int(np.ceil(tau_max * params.sample_rate)) + 2
    if n > params.samples_per_frame:
        raise BoundsError(
            f"room needs {n} channel taps but a frame has only "
            f"{params.samples_per_frame} samples"
        )
    return n


def amplitude_constant(params: RadarParams) -> float:
    """Two-way range-equation constant folding transmit power, antenna gain
    and aperture: sqrt(P * 10^(G/10)) * lambda / (4 pi)."""
    return float(
        np.sqrt(params.tx_power_w * 10.0 ** (params.antenna_gain_db / 10.0))
        * params.wavelength
        / (4.0 * np.pi)
    )


def primitive_channel(
    track: PrimitiveTrack,
    frame_index: int,
    params: RadarParams,
    phases: np.ndarray,
    n_taps: int,
) -> TapVector:
    """Body echo for one frame: each primitive contributes one delayed ray.

    Ray b lands on tap round(2 D_b f_s / c) with amplitude
    A / sqrt(4 pi) * sqrt(G_b) / D_b^2 and phase
    exp(-j 4 pi f_c D_b / c) * exp(j phi_b). The delay is quantised to the
    nearest tap but the carrier phase uses the exact distance, because the
    frame-to-frame phase progression is what carries the Doppler.
    ``phases`` are the per-primitive initial phases, drawn once per scenario
    and held fixed across frames.
    """
    if not 0 <= frame_index < track.n_frames:
        raise ValueError(f"frame_index {frame_index} outside track of {track.n_frames}")
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (track.n_primitives,):
        raise ValueError("need one initial phase per primitive")

    d = track.distances[:, frame_index]
    g = track.gains[:, frame_index]
    idx = np.rint(2.0 * d * params.sample_rate / SPEED_OF_LIGHT).astype(int)
    if np.any(idx >= n_taps) or np.any(idx < 0):
        worst = float(d[np.argmax(idx)])
        raise BoundsError(
            f"target at {worst:.2f} m maps outside the {n_taps}-tap unambiguous range"
        )
    amp = amplitude_constant(params) / np.sqrt(4.0 * np.pi) * np.sqrt(g) / d**2
    phase = -4.0 * np.pi * params.carrier_freq * d / SPEED_OF_LIGHT + phases
    taps = np.zeros(n_taps, dtype=np.complex128)
    np.add.at(taps, idx, amp * np.exp(1j * phase))
    return TapVector(taps)


def draw_cluster_rays(config: QdConfig, n_clusters: int, rng: np.random.Generator):
    """Sample intra-cluster ray offsets, amplitudes and phases.

    Offsets are cumulative exponential gaps (a Poisson arrival process)
    truncated to the ray window; entries beyond the window are masked out.
    Returns (offsets, amplitudes, phases, live_mask), each of shape
    (n_clusters, max_rays).
    """
    shape = (n_clusters, config.max_rays)
    gaps = rng.exponential(1.0 / config.ray_rate, shape)
    offsets = np.cumsum(gaps, axis=1)
    live = offsets < config.ray_window
    scales = np.exp(-offsets / (2.0 * config.ray_decay))
    amps = rng.rayleigh(scale=scales)
    phis = rng.uniform(-np.pi, np.pi, shape)
    return offsets, amps, phis, live


def accumulate_rays(
    clusters,
    offsets: np.ndarray,
    amps: np.ndarray,
    phis: np.ndarray,
    live: np.ndarray,
    config: QdConfig,
    params: RadarParams,
    n_taps: int,
) -> TapVector:
    """Assemble an interference snapshot from explicit per-cluster rays."""
    taps = np.zeros(n_taps, dtype=np.complex128)
    delays = np.array([c.delay_s for c in clusters])
    losses = np.array([c.loss for c in clusters])
    lead = np.sqrt(losses) * params.wavelength / (
        4.0 * np.pi * (config.d0 + delays * SPEED_OF_LIGHT)
    )
    ray_delays = delays[:, None] + offsets
    idx = np.rint(ray_delays * params.sample_rate).astype(int)
    if np.any(idx[live] >= n_taps):
        raise BoundsError("ray delay beyond tap capacity; enlarge n_taps")
    coeff = lead[:, None] * amps * np.exp(1j * phis)
    np.add.at(taps, idx[live], coeff[live])
    return TapVector(taps)


def qd_snapshot(
    config: QdConfig,
    params: RadarParams,
    rng: np.random.Generator,
    n_taps: int | None = None,
    clusters=None,
) -> TapVector:
    """Draw one quasi-deterministic interference snapshot.

    Cluster delays come from the room geometry (image method); the rays
    dressing each cluster are random and are drawn from ``rng``.
    """
    clusters = clusters or image_clusters(config)
    if n_taps is None:
        n_taps = required_taps(config, params, clusters)
    offsets, amps, phis, live = draw_cluster_rays(config, len(clusters), rng)
    return accumulate_rays(clusters, offsets, amps, phis, live, config, params, n_taps)


@dataclass
class EvolutionState:
    """Autoregressive memory of the interference channel across frames."""

    rho: float
    current: TapVector | None = None

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"evolution rate rho = {self.rho} outside [0, 1]")


def evolve_interference(state: EvolutionState, fresh: TapVector) -> TapVector:
    """Advance the AR(1) recursion v_i = rho * v_{i-1} + (1 - rho) * fresh.

    The first call seeds the state with the snapshot unchanged. Returns the
    interference to use for the current frame and updates ``state``.
    """
    if state.current is None:
        state.current = fresh.copy()
        return state.current.copy()
    if fresh.n_taps != state.current.n_taps:
        raise ValueError(
            f"snapshot has {fresh.n_taps} taps, state carries {state.current.n_taps}"
        )
    state.current = TapVector(state.rho * state.current.taps + (1.0 - state.rho) * fresh.taps)
    return state.current.copy()


def compose(u: TapVector, v: TapVector) -> TapVector:
    """Tap-wise sum of the body and interference channels."""
    if u.n_taps != v.n_taps:
        raise ValueError(f"tap count mismatch: {u.n_taps} vs {v.n_taps}")
    return TapVector(u.taps + v.taps)


def apply_channel(
    waveform: SampledWaveform,
    h: TapVector,
    noise_power_dbm: float | None,
    rng: np.random.Generator,
) -> np.ndarray:
    """Convolve one sweep with the channel and add receiver noise.

    Returns the first ``len(waveform)`` samples of h * s plus circularly
    symmetric complex Gaussian noise of the given total power per sample.
    """
    s = waveform.samples
    if h.n_taps > s.size:
        raise ValueError("channel longer than the frame")
    r = np.convolve(h.taps, s)[: s.size]
    if noise_power_dbm is not None:
        power_w = 10.0 ** ((noise_power_dbm - 30.0) / 10.0)
        sigma = np.sqrt(power_w / 2.0)
        r = r + sigma * (rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size))
    return r


def dump_tap_history(tap_vectors, params: RadarParams, path, scenario_id="", seed=0) -> Path:
    """Persist per-frame tap vectors using the raw IQ container."""
    frames = [tv.taps for tv in tap_vectors]
    matrix = sample_frames(frames, meta_from_params(params, scenario_id, seed))
    from .waveform import save_iq

    return save_iq(matrix, path)

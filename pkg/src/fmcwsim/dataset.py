"""Scenario configuration, end-to-end sample synthesis and dataset generation.

A :class:`Scenario` bundles everything one simulation needs: room and radar
geometry, the subject, interference statistics, the evolution rate, the DSP
settings and a seed. ``simulate_sample`` runs the full chain (gait model ->
channel -> receiver -> spectrogram -> gray image) fully determined by the
scenario. ``generate_dataset`` writes labelled batches of gray images for
the five motion classes with per-sample seeds derived so the output is
independent of worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import channel as ch
from . import dsp
from .errors import ConfigError, FormatError, SimulationError
from .kinematics import GaitConfig, SubjectSpec, Trajectory, build_walker
from .waveform import IQMatrix, RadarParams, fmcw_chirp, meta_from_params, sample_frames

GENERATOR_VERSION = "fmcwsim-0.1.0"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class DspConfig:
    """Spectrogram pipeline settings."""

    svd_cut: int = 2               # remove svd_cut - 1 leading components
    window: int = 128
    hop: int = 1
    kaiser_beta: float = 0.5
    dynamic_range_db: float = 60.0
    gray_bins: int = 256

    def __post_init__(self):
        if self.svd_cut < 1 or self.window < 1 or self.hop < 1:
            raise ConfigError("svd_cut, window and hop must be positive")
        if self.gray_bins < 1 or 256 % self.gray_bins != 0:
            raise ConfigError("gray_bins must divide 256")


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation run."""

    room: tuple[float, float, float]
    radar: RadarParams
    radar_position: tuple[float, float, float]
    subject: SubjectSpec
    qd: ch.QdConfig
    rho: float
    sensing_uncertainty: bool = True
    dsp: DspConfig = field(default_factory=DspConfig)
    seed: int = 0
    scenario_id: str = ""
    gait: GaitConfig = field(default_factory=GaitConfig)

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho = {self.rho} outside [0, 1]")
        if self.dsp.window > self.radar.n_frames:
            raise ConfigError(
                f"spectrogram window {self.dsp.window} exceeds frame count "
                f"{self.radar.n_frames}"
            )
        if tuple(self.qd.room) != tuple(float(v) for v in self.room):
            raise ConfigError("qd.room disagrees with scenario room")
        if tuple(self.qd.radar_position) != tuple(float(v) for v in self.radar_position):
            raise ConfigError("qd.radar_position disagrees with scenario radar position")
        span = (self.radar.n_frames - 1) * self.radar.frame_period
        if self.subject.trajectory.duration + 1e-9 < span:
            raise ConfigError(
                f"trajectory covers {self.subject.trajectory.duration} s but the "
                f"collection spans {span} s"
            )

    @property
    def resolved_id(self) -> str:
        return self.scenario_id or "scenario-" + config_digest(self)[:12]


def _default_qd(room, radar_position, **kwargs) -> ch.QdConfig:
    return ch.QdConfig(room=tuple(room), radar_position=tuple(radar_position), **kwargs)


def baseline_scenario(seed: int = 1, n_frames: int = 3000) -> Scenario:
    """Conference-room reference setup: 1.75 m adult walking the y-axis at
    1 m/s in a (4.5, 3, 3) m room, radar at (1, 1.5, 1)."""
    room = (4.5, 3.0, 3.0)
    radar_pos = (1.0, 1.5, 1.0)
    radar = RadarParams(n_frames=n_frames)
    duration = max(3.0, n_frames * radar.frame_period)
    subject = SubjectSpec(
        height=1.75,
        class_label=4,
        speed=1.0,
        trajectory=Trajectory(start=(4.2, 0.0, 0.0), direction=(0.0, 1.0, 0.0), duration=duration),
    )
    return Scenario(
        room=room,
        radar=radar,
        radar_position=radar_pos,
        subject=subject,
        qd=_default_qd(room, radar_pos),
        rho=0.9998,
        sensing_uncertainty=True,
        seed=seed,
        scenario_id="walk-adult-baseline",
    )


def dataset_scenario(seed: int = 1, n_frames: int = 1000) -> Scenario:
    """Template for dataset batches: shorter collection, jitter-safe start."""
    base = baseline_scenario(seed=seed, n_frames=n_frames)
    duration = n_frames * base.radar.frame_period
    subject = replace(
        base.subject,
        trajectory=Trajectory(start=(3.6, 0.5, 0.0), direction=(0.0, 1.0, 0.0), duration=duration),
    )
    return replace(base, subject=subject, scenario_id="")


def calibration_scenario(seed: int = 1, n_frames: int = 1000) -> Scenario:
    """Recommended setup for evolution-rate fitting.

    A static subject keeps the interference statistics in charge of the
    gray-level distribution; skipping the SVD cut leaves the frozen wall
    return in place as a stable normalisation anchor; the heavier window
    keeps ridge sidelobes out of the blur band and the coarser histogram
    stabilises the KL estimate against per-image speckle.
    """
    base = dataset_scenario(seed=seed, n_frames=n_frames)
    subject = replace(base.subject, speed=0.0, class_label=1)
    dsp_cfg = replace(base.dsp, svd_cut=1, kaiser_beta=6.0, gray_bins=64)
    return replace(base, subject=subject, dsp=dsp_cfg, scenario_id="calibration-standing")


# --------------------------------------------------------------------------
# JSON serialisation (versioned; unknown keys rejected)

_SCHEMA = {
    "": {"version", "scenario_id", "room", "radar", "subject", "qd", "rho",
         "sensing_uncertainty", "dsp", "seed", "gait"},
    "radar": {"position", "carrier_freq", "bandwidth", "sweep_time", "frame_period",
              "sample_rate", "n_frames", "tx_power_w", "antenna_gain_db",
              "noise_power_dbm"},
    "subject": {"height", "class_label", "speed", "start", "direction", "duration"},
    "qd": {"wall_loss_db", "ray_rate", "ray_decay", "max_rays", "ray_window", "d0",
           "redraw_ray_delays"},
    "dsp": {"svd_cut", "window", "hop", "kaiser_beta", "dynamic_range_db", "gray_bins"},
    "gait": {"stride_scale", "speed_clip", "thigh_swing_rad", "knee_flex_rad",
             "arm_swing_rad", "elbow_flex_rad", "bob_frac", "sway_enabled",
             "sway_amp_m", "sway_freq_hz", "body_scale"},
}


def _check_keys(section: str, payload: dict):
    allowed = _SCHEMA[section]
    unknown = set(payload) - allowed
    if unknown:
        where = section or "top level"
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where} of scenario config")


def scenario_to_dict(sc: Scenario) -> dict:
    r = sc.radar
    s = sc.subject
    q = sc.qd
    d = sc.dsp
    g = sc.gait
    return {
        "version": SCHEMA_VERSION,
        "scenario_id": sc.scenario_id,
        "room": list(sc.room),
        "radar": {
            "position": list(sc.radar_position),
            "carrier_freq": r.carrier_freq,
            "bandwidth": r.bandwidth,
            "sweep_time": r.sweep_time,
            "frame_period": r.frame_period,
            "sample_rate": r.sample_rate,
            "n_frames": r.n_frames,
            "tx_power_w": r.tx_power_w,
            "antenna_gain_db": r.antenna_gain_db,
            "noise_power_dbm": r.noise_power_dbm,
        },
        "subject": {
            "height": s.height,
            "class_label": s.class_label,
            "speed": s.speed,
            "start": list(s.trajectory.start),
            "direction": list(s.trajectory.direction),
            "duration": s.trajectory.duration,
        },
        "qd": {
            "wall_loss_db": [10.0 * np.log10(h) for h in q.wall_loss],
            "ray_rate": q.ray_rate,
            "ray_decay": q.ray_decay,
            "max_rays": q.max_rays,
            "ray_window": q.ray_window,
            "d0": q.d0,
            "redraw_ray_delays": q.redraw_ray_delays,
        },
        "rho": sc.rho,
        "sensing_uncertainty": sc.sensing_uncertainty,
        "dsp": {
            "svd_cut": d.svd_cut,
            "window": d.window,
            "hop": d.hop,
            "kaiser_beta": d.kaiser_beta,
            "dynamic_range_db": d.dynamic_range_db,
            "gray_bins": d.gray_bins,
        },
        "seed": sc.seed,
        "gait": {
            "stride_scale": g.stride_scale,
            "speed_clip": list(g.speed_clip),
            "thigh_swing_rad": g.thigh_swing_rad,
            "knee_flex_rad": g.knee_flex_rad,
            "arm_swing_rad": g.arm_swing_rad,
            "elbow_flex_rad": g.elbow_flex_rad,
            "bob_frac": g.bob_frac,
            "sway_enabled": g.sway_enabled,
            "sway_amp_m": g.sway_amp_m,
            "sway_freq_hz": g.sway_freq_hz,
            "body_scale": g.body_scale,
        },
    }


def scenario_from_dict(payload: dict) -> Scenario:
    if not isinstance(payload, dict):
        raise ConfigError("scenario config must be a JSON object")
    version = payload.get("version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported scenario schema version {version!r}")
    _check_keys("", payload)
    for section in ("radar", "subject"):
        if section not in payload:
            raise ConfigError(f"scenario config missing '{section}' section")

    room = tuple(float(v) for v in payload["room"])

    rd = dict(payload["radar"])
    _check_keys("radar", rd)
    position = tuple(float(v) for v in rd.pop("position"))
    noise = rd.get("noise_power_dbm")
    radar = RadarParams(
        carrier_freq=float(rd["carrier_freq"]),
        bandwidth=float(rd["bandwidth"]),
        sweep_time=float(rd["sweep_time"]),
        frame_period=float(rd["frame_period"]),
        sample_rate=float(rd["sample_rate"]),
        n_frames=int(rd["n_frames"]),
        tx_power_w=float(rd.get("tx_power_w", 1.0)),
        antenna_gain_db=float(rd.get("antenna_gain_db", 25.0)),
        noise_power_dbm=None if noise is None else float(noise),
    )

    sj = payload["subject"]
    _check_keys("subject", sj)
    subject = SubjectSpec(
        height=float(sj["height"]),
        class_label=int(sj["class_label"]),
        speed=float(sj["speed"]),
        trajectory=Trajectory(
            start=tuple(float(v) for v in sj["start"]),
            direction=tuple(float(v) for v in sj["direction"]),
            duration=float(sj["duration"]),
        ),
    )

    qd_payload = dict(payload.get("qd", {}))
    _check_keys("qd", qd_payload)
    loss_db = qd_payload.pop("wall_loss_db", -10.0)
    if np.isscalar(loss_db):
        loss_db = [float(loss_db)] * 6
    qd = _default_qd(
        room,
        position,
        wall_loss=tuple(10.0 ** (float(v) / 10.0) for v in loss_db),
        **{k: (int(v) if k == "max_rays" else (bool(v) if k == "redraw_ray_delays" else float(v)))
           for k, v in qd_payload.items()},
    )

    dsp_payload = dict(payload.get("dsp", {}))
    _check_keys("dsp", dsp_payload)
    for int_key in ("svd_cut", "window", "hop", "gray_bins"):
        if int_key in dsp_payload:
            dsp_payload[int_key] = int(dsp_payload[int_key])
    dsp_cfg = DspConfig(**dsp_payload)

    gait_payload = dict(payload.get("gait", {}))
    _check_keys("gait", gait_payload)
    if "speed_clip" in gait_payload:
        gait_payload["speed_clip"] = tuple(float(v) for v in gait_payload["speed_clip"])
    gait = GaitConfig(**gait_payload)

    return Scenario(
        room=room,
        radar=radar,
        radar_position=position,
        subject=subject,
        qd=qd,
        rho=float(payload.get("rho", 0.9998)),
        sensing_uncertainty=bool(payload.get("sensing_uncertainty", True)),
        dsp=dsp_cfg,
        seed=int(payload.get("seed", 0)),
        scenario_id=str(payload.get("scenario_id", "")),
        gait=gait,
    )


def save_scenario(sc: Scenario, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True))
    return path


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(payload)


def config_digest(sc: Scenario) -> str:
    blob = json.dumps(scenario_to_dict(sc), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# --------------------------------------------------------------------------
# End-to-end synthesis

def simulate_iq(scenario: Scenario) -> IQMatrix:
    """Generate the raw received frames for one scenario.

    The scenario seed drives a single generator consumed in a fixed order
    (primitive phases, then per frame: interference rays, receiver noise),
    so the output is bit-reproducible.
    """
    params = scenario.radar
    rng = np.random.default_rng(np.random.SeedSequence(scenario.seed))
    track = build_walker(
        scenario.subject,
        scenario.radar_position,
        params.frame_times(),
        room=scenario.room,
        gait=scenario.gait,
    )
    phases = rng.uniform(-np.pi, np.pi, track.n_primitives)

    clusters = ch.image_clusters(scenario.qd)
    n_taps = ch.required_taps(scenario.qd, params, clusters)
    chirp = fmcw_chirp(params)

    rho_eff = scenario.rho if scenario.sensing_uncertainty else 1.0
    state = ch.EvolutionState(rho_eff)
    frozen_rays = None

    frames = []
    for i in range(params.n_frames):
        u = ch.primitive_channel(track, i, params, phases, n_taps)
        if state.current is None or rho_eff < 1.0:
            if scenario.qd.redraw_ray_delays or frozen_rays is None:
                offsets, amps, phis, live = ch.draw_cluster_rays(
                    scenario.qd, len(clusters), rng
                )
                if not scenario.qd.redraw_ray_delays:
                    frozen_rays = (offsets, live)
            else:
                offsets, live = frozen_rays
                scales = np.exp(-offsets / (2.0 * scenario.qd.ray_decay))
                amps = rng.rayleigh(scale=scales)
                phis = rng.uniform(-np.pi, np.pi, offsets.shape)
            fresh = ch.accumulate_rays(
                clusters, offsets, amps, phis, live, scenario.qd, params, n_taps
            )
            v = ch.evolve_interference(state, fresh)
        else:
            v = state.current
        h = ch.compose(u, v)
        frames.append(ch.apply_channel(chirp, h, params.noise_power_dbm, rng))

    meta = meta_from_params(params, scenario.resolved_id, scenario.seed)
    return sample_frames(frames, meta)


def process_iq(matrix: IQMatrix, dsp_cfg: DspConfig, reference) -> tuple[dsp.Spectrogram, dsp.GrayImage]:
    """Run the DSP chain on raw frames: dechirp, SVD cut, collapse, STFT, gray."""
    mixed = dsp.dechirp_conj(matrix, reference)
    cleaned = dsp.svd_denoise(mixed, dsp_cfg.svd_cut)
    y = dsp.slow_time(cleaned)
    spec = dsp.stft_spectrogram(
        y,
        window_length=dsp_cfg.window,
        hop=dsp_cfg.hop,
        kaiser_beta=dsp_cfg.kaiser_beta,
        frame_period=matrix.meta.frame_period,
    )
    return spec, dsp.to_grayscale(spec, dsp_cfg.dynamic_range_db)


def simulate_sample(scenario: Scenario) -> tuple[IQMatrix, dsp.GrayImage]:
    """Raw IQ plus the processed gray spectrogram for one scenario."""
    matrix = simulate_iq(scenario)
    _, image = process_iq(matrix, scenario.dsp, fmcw_chirp(scenario.radar))
    return matrix, image


def simulate_gray_pmf(scenario: Scenario) -> dsp.Pmf:
    _, image = simulate_sample(scenario)
    return dsp.gray_pmf(image, scenario.dsp.gray_bins)


# --------------------------------------------------------------------------
# Dataset generation

@dataclass(frozen=True)
class ClassSpec:
    """One motion class: label, name and the subject variants it draws from."""

    label: int
    name: str
    subjects: tuple[SubjectSpec, ...]


def default_classes(base_subject: SubjectSpec) -> tuple[ClassSpec, ...]:
    """The five benchmark motions. Standing mixes child and adult bodies;
    standing, walking and pacing move at 0, 1 and 0.5 m/s."""

    def variant(label, height, speed):
        return replace(base_subject, height=height, class_label=label, speed=speed)

    return (
        ClassSpec(1, "standing", (variant(1, 1.0, 0.0), variant(1, 1.75, 0.0))),
        ClassSpec(2, "child_walking", (variant(2, 1.0, 1.0),)),
        ClassSpec(3, "child_pacing", (variant(3, 1.0, 0.5),)),
        ClassSpec(4, "adult_walking", (variant(4, 1.75, 1.0),)),
        ClassSpec(5, "adult_pacing", (variant(5, 1.75, 0.5),)),
    )


@dataclass(frozen=True)
class JitterConfig:
    """Per-sample trajectory randomisation ranges."""

    start_box: tuple[tuple[float, float], ...] = ((-0.4, 0.4), (-0.3, 0.3), (0.0, 0.0))
    heading_deg: float = 15.0


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    label: int
    class_name: str
    scenario_hash: str
    seed: int


@dataclass(eq=True)
class DatasetManifest:
    entries: list[ManifestEntry]
    class_names: tuple[str, ...]
    generator_version: str = GENERATOR_VERSION


def _entry_scenario(
    base: Scenario,
    cls: ClassSpec,
    sample_index: int,
    base_seed: int,
    jitter: JitterConfig,
) -> Scenario:
    """Deterministic per-entry scenario; a pure function of its arguments."""
    entry_index = (cls.label - 1) * 1_000_000 + sample_index
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(entry_index,))
    words = ss.generate_state(4)
    jitter_rng = np.random.default_rng(int(words[0]) << 32 | int(words[1]))
    sample_seed = int(words[2]) << 32 | int(words[3])

    subject = cls.subjects[int(jitter_rng.integers(len(cls.subjects)))]
    traj = subject.trajectory
    lo = np.array([b[0] for b in jitter.start_box])
    hi = np.array([b[1] for b in jitter.start_box])
    start = np.asarray(traj.start) + jitter_rng.uniform(lo, hi)
    angle = np.deg2rad(jitter_rng.uniform(-jitter.heading_deg, jitter.heading_deg))
    c, s = np.cos(angle), np.sin(angle)
    d = np.asarray(traj.direction)
    direction = (c * d[0] - s * d[1], s * d[0] + c * d[1], d[2])
    duration = base.radar.n_frames * base.radar.frame_period
    subject = replace(
        subject,
        trajectory=Trajectory(start=tuple(start), direction=direction, duration=duration),
    )
    return replace(
        base,
        subject=subject,
        seed=sample_seed,
        scenario_id=f"{cls.name}-{sample_index:04d}",
    )


def _render_entry(args):
    scenario, image_path, class_name = args
    path = Path(image_path)
    try:
        _, image = simulate_sample(scenario)
        dsp.save_pgm(image, path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
    except Exception as exc:  # surfaced per entry by the caller
        return ("error", path.name, f"{type(exc).__name__}: {exc}")
    return ("ok", ManifestEntry(path.name, scenario.subject.class_label,
                                class_name, digest, scenario.seed))


def generate_dataset(
    base_scenario: Scenario,
    classes=None,
    n_per_class: int = 10,
    base_seed: int = 0,
    out_dir: str | Path = "dataset",
    workers: int = 1,
    jitter: JitterConfig | None = None,
) -> DatasetManifest:
    """Write n_per_class gray images per motion class plus a manifest CSV.

    Per-sample seeds and jitter derive from (base_seed, class, index) alone,
    so reruns and different worker counts reproduce identical files.
    Existing images whose hash matches the manifest are skipped.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    classes = tuple(classes) if classes is not None else default_classes(base_scenario.subject)
    jitter = jitter or JitterConfig()

    manifest_path = out_dir / "manifest.csv"
    previous = {}
    if manifest_path.exists():
        for entry in read_manifest(manifest_path).entries:
            previous[entry.image_path] = entry

    jobs = []
    rows: dict[str, ManifestEntry] = {}
    for cls in classes:
        for j in range(n_per_class):
            name = f"{cls.name}_{j:04d}.pgm"
            path = out_dir / name
            old = previous.get(name)
            if old is not None and path.exists():
                digest = hashlib.sha256(path.read_bytes()).hexdigest()
                if digest == old.scenario_hash:
                    rows[name] = old
                    continue
            scenario = _entry_scenario(base_scenario, cls, j, base_seed, jitter)
            jobs.append((scenario, str(path), cls.name))

    if jobs:
        if workers <= 1:
            results = [_render_entry(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_render_entry, jobs))
        failures = []
        for result in results:
            if result[0] == "ok":
                rows[result[1].image_path] = result[1]
            else:
                failures.append((result[1], result[2]))
    else:
        failures = []

    ordered = []
    for cls in classes:
        for j in range(n_per_class):
            entry = rows.get(f"{cls.name}_{j:04d}.pgm")
            if entry is not None:
                ordered.append(entry)
    manifest = DatasetManifest(ordered, tuple(c.name for c in classes))
    # completed entries always land in the manifest, even on partial failure
    write_manifest(manifest, manifest_path)
    if failures:
        name, reason = failures[0]
        raise SimulationError(
            f"{len(failures)} dataset entries failed, first {name}: {reason}"
        )
    return manifest


def write_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_path", "label", "class_name", "scenario_hash", "seed"])
        for e in manifest.entries:
            writer.writerow([e.image_path, e.label, e.class_name, e.scenario_hash, e.seed])
    meta = {
        "class_names": list(manifest.class_names),
        "generator_version": manifest.generator_version,
    }
    Path(str(path).removesuffix(".csv") + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True)
    )
    return path


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    entries = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["image_path", "label", "class_name", "scenario_hash", "seed"]
        if header != expected:
            raise FormatError(f"{path}:1: expected manifest header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                entries.append(
                    ManifestEntry(row[0], int(row[1]), row[2], row[3], int(row[4]))
                )
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad manifest row {row!r}") from exc
    meta_path = Path(str(path).removesuffix(".csv") + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        class_names = tuple(meta.get("class_names", ()))
        version = meta.get("generator_version", GENERATOR_VERSION)
    else:
        seen = dict.fromkeys(e.class_name for e in entries)
        class_names = tuple(seen)
        version = GENERATOR_VERSION
    return DatasetManifest(entries, class_names, version)

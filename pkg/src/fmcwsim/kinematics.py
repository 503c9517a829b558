"""Articulated human model: per-frame primitive ranges and scattering gains.

A subject is a skeleton of 16 ellipsoidal primitives (head, neck, torso,
pelvis and left/right upper arm, forearm, hand, thigh, shin, foot). Limbs
swing sinusoidally at the gait cadence with a half-cycle offset between
contralateral limbs, which is what puts the periodic micro-Doppler
fingerprint into the radar return. The model is deliberately simple: it is
deterministic, cheap to evaluate for thousands of frames, and every gait
parameter can be overridden through :class:`GaitConfig`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BoundsError, ConfigError

_UP = np.array([0.0, 0.0, 1.0])

# (name, half_length_frac, radius_frac): ellipsoid semi-axes as fractions of
# subject height. The long axis follows the segment direction.
_PRIMITIVE_SHAPES = (
    ("head", 0.060, 0.046),
    ("neck", 0.028, 0.022),
    ("torso", 0.085, 0.080),
    ("pelvis", 0.052, 0.072),
    ("upper_arm_r", 0.093, 0.026),
    ("forearm_r", 0.073, 0.021),
    ("hand_r", 0.052, 0.016),
    ("thigh_r", 0.122, 0.038),
    ("shin_r", 0.123, 0.026),
    ("foot_r", 0.074, 0.018),
    ("upper_arm_l", 0.093, 0.026),
    ("forearm_l", 0.073, 0.021),
    ("hand_l", 0.052, 0.016),
    ("thigh_l", 0.122, 0.038),
    ("shin_l", 0.123, 0.026),
    ("foot_l", 0.074, 0.018),
)

PRIMITIVE_NAMES = tuple(name for name, _, _ in _PRIMITIVE_SHAPES)
HUMAN_PRIMITIVE_COUNT = len(PRIMITIVE_NAMES)

# Landmark heights as fractions of total height (standing pose).
_ANKLE, _KNEE, _HIP, _SHOULDER = 0.039, 0.285, 0.530, 0.818
_NECK_C, _HEAD_C, _TORSO_C, _PELVIS_C = 0.862, 0.936, 0.700, 0.555
_HIP_LAT, _SHOULDER_LAT = 0.060, 0.112


@dataclass(frozen=True)
class Trajectory:
    """Straight-line ground track: start point, heading, and duration."""

    start: tuple[float, float, float]
    direction: tuple[float, float, float]
    duration: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if n == 0:
            raise ConfigError("trajectory direction must be nonzero")
        object.__setattr__(self, "direction", tuple(d / n))
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        if self.duration <= 0:
            raise ConfigError("trajectory duration must be positive")

    def position(self, speed: float, t: np.ndarray) -> np.ndarray:
        d = np.asarray(self.direction)
        return np.asarray(self.start) + speed * np.outer(t, d)


@dataclass(frozen=True)
class SubjectSpec:
    """One human subject: body scale, motion class, speed and path."""

    height: float
    class_label: int
    speed: float
    trajectory: Trajectory

    def __post_init__(self):
        if self.height <= 0:
            raise ConfigError("subject height must be positive")
        if self.speed < 0:
            raise ConfigError("subject speed must be non-negative")
        if self.class_label < 1:
            raise ConfigError("class_label is 1-based")

    @property
    def standing(self) -> bool:
        return self.speed == 0.0


@dataclass(frozen=True)
class GaitConfig:
    """Tunable parameters of the sinusoidal gait and standing micro-motion.

    ``shapes`` overrides the primitive ellipsoid table, (name,
    half_length_frac, radius_frac) per primitive; ``body_scale`` uniformly
    rescales all semi-axes instead.
    """

    stride_scale: float = 0.6          # stride = scale * height * clipped speed
    speed_clip: tuple[float, float] = (0.5, 1.5)
    thigh_swing_rad: float = 0.42
    knee_flex_rad: float = 0.50
    arm_swing_rad: float = 0.35
    elbow_flex_rad: float = 0.35
    bob_frac: float = 0.012            # vertical torso bob amplitude / height
    sway_enabled: bool = False         # standing-only torso sway
    sway_amp_m: float = 0.01
    sway_freq_hz: float = 0.3
    body_scale: float = 1.0
    shapes: tuple = _PRIMITIVE_SHAPES

    def stride_m(self, height: float, speed: float) -> float:
        lo, hi = self.speed_clip
        return self.stride_scale * height * float(np.clip(speed, lo, hi))

    def peak_limb_speed(self, height: float, speed: float) -> float:
        """Upper bound on any primitive's radial speed beyond the walk speed."""
        if speed == 0.0:
            sway = 2 * np.pi * self.sway_freq_hz * self.sway_amp_m
            return sway if self.sway_enabled else 0.0
        omega = 2 * np.pi * speed / self.stride_m(height, speed)
        leg_reach = (_HIP - _ANKLE + 0.45 * 0.148) * height
        arm_reach = (0.186 + 0.146 + 2 * 0.052) * height
        leg = (self.thigh_swing_rad + 0.5 * self.knee_flex_rad) * leg_reach
        arm = self.arm_swing_rad * arm_reach
        bob = 2 * self.bob_frac * height
        return omega * (max(leg, arm) + bob) * 1.25


@dataclass(frozen=True, eq=False)
class PrimitiveTrack:
    """Per-frame range, scattering gain and radial speed of each primitive.

    ``distances`` and ``gains`` are (B, C) arrays over primitives x frames;
    ``radial_velocities`` is the central-difference rate of approach
    (positive toward the radar), provided for diagnostics.
    """

    frame_times: np.ndarray
    distances: np.ndarray
    gains: np.ndarray
    radial_velocities: np.ndarray
    names: tuple[str, ...] = PRIMITIVE_NAMES

    def __post_init__(self):
        if self.distances.shape != self.gains.shape:
            raise ValueError("distances and gains must have matching shapes")
        if self.distances.shape[1] != self.frame_times.size:
            raise ValueError("track arrays must have one column per frame time")

    @property
    def n_primitives(self) -> int:
        return self.distances.shape[0]

    @property
    def n_frames(self) -> int:
        return self.frame_times.size


def ellipsoid_rcs(semi_axes, aspect) -> float:
    """Geometric-optics RCS of a triaxial ellipsoid seen from ``aspect``.

    sigma = pi a^2 b^2 c^2 / (a^2 u_x^2 + b^2 u_y^2 + c^2 u_z^2)^2 with the
    unit aspect vector expressed in the ellipsoid's principal frame. For a
    sphere this collapses to pi r^2 independent of aspect.
    """
    a, b, c = (float(v) for v in semi_axes)
    if min(a, b, c) <= 0:
        raise ValueError("ellipsoid semi-axes must be positive")
    u = np.asarray(aspect, dtype=float)
    denom = a * a * u[0] ** 2 + b * b * u[1] ** 2 + c * c * u[2] ** 2
    return float(np.pi * (a * b * c) ** 2 / denom**2)


def primitive_gain(semi_axes, aspect) -> float:
    """Scattering gain of one primitive for a given viewing direction."""
    u = np.asarray(aspect, dtype=float)
    n = np.linalg.norm(u)
    if n == 0:
        raise ValueError("aspect vector must be nonzero")
    return float(ellipsoid_rcs(np.asarray(semi_axes, dtype=float), u / n))


def _prolate_rcs(half_len: np.ndarray, radius: np.ndarray, cos_axis: np.ndarray) -> np.ndarray:
    # Specialisation of ellipsoid_rcs for b == c bodies; cos_axis is the
    # cosine between the aspect and the long axis.
    a2 = half_len * half_len
    b2 = radius * radius
    denom = a2 * cos_axis**2 + b2 * (1.0 - cos_axis**2)
    return np.pi * a2 * b2 * b2 / denom**2


def _limb_segments(base, lat, fwd, h, phi, gait: GaitConfig):
    """Centers and axes of the 12 limb primitives for both body sides."""
    out = {}
    l_thigh = (_HIP - _KNEE) * h
    l_shin = (_KNEE - _ANKLE) * h
    l_upper = 0.186 * h
    l_fore = 0.146 * h
    a_hand = 0.052 * h
    l_foot = 0.148 * h

    for side, tag in ((1.0, "r"), (-1.0, "l")):
        leg_off = 0.0 if side > 0 else np.pi
        hip = base + np.outer(np.ones_like(phi), side * _HIP_LAT * h * lat)
        hip[:, 2] += _HIP * h

        theta = gait.thigh_swing_rad * np.sin(phi + leg_off)
        knee = hip + l_thigh * (np.outer(np.sin(theta), fwd) - np.outer(np.cos(theta), _UP))
        psi = theta - gait.knee_flex_rad * 0.5 * (1.0 - np.cos(phi + leg_off))
        ankle = knee + l_shin * (np.outer(np.sin(psi), fwd) - np.outer(np.cos(psi), _UP))
        foot = ankle + 0.45 * l_foot * fwd

        out[f"thigh_{tag}"] = (0.5 * (hip + knee), knee - hip)
        out[f"shin_{tag}"] = (0.5 * (knee + ankle), ankle - knee)
        out[f"foot_{tag}"] = (foot, np.broadcast_to(fwd, foot.shape))

        arm_off = leg_off + np.pi  # arms counter-swing their own-side leg
        shoulder = base + np.outer(np.ones_like(phi), side * _SHOULDER_LAT * h * lat)
        shoulder[:, 2] += _SHOULDER * h
        alpha = gait.arm_swing_rad * np.sin(phi + arm_off)
        elbow = shoulder + l_upper * (np.outer(np.sin(alpha), fwd) - np.outer(np.cos(alpha), _UP))
        alpha_f = alpha + gait.elbow_flex_rad
        wrist = elbow + l_fore * (np.outer(np.sin(alpha_f), fwd) - np.outer(np.cos(alpha_f), _UP))
        hand = wrist + a_hand * (np.outer(np.sin(alpha_f), fwd) - np.outer(np.cos(alpha_f), _UP))

        out[f"upper_arm_{tag}"] = (0.5 * (shoulder + elbow), elbow - shoulder)
        out[f"forearm_{tag}"] = (0.5 * (elbow + wrist), wrist - elbow)
        out[f"hand_{tag}"] = (hand, wrist - elbow)
    return out


def build_walker(
    subject: SubjectSpec,
    radar_position,
    frame_times,
    room=None,
    gait: GaitConfig | None = None,
) -> PrimitiveTrack:
    """Evaluate the articulated model at the given frame times.

    ``room`` (length, width, height box with one corner at the origin), when
    given, rejects trajectories whose ground track leaves the box at any time
    within the trajectory duration. Pure and deterministic: identical inputs
    produce bit-identical tracks.
    """
    gait = gait or GaitConfig()
    t = np.asarray(frame_times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("frame_times must be a non-empty 1-D sequence")
    if np.any(np.diff(t) <= 0):
        raise ValueError("frame_times must be strictly increasing")
    if t[0] < 0 or t[-1] > subject.trajectory.duration + 1e-9:
        raise ConfigError(
            f"frame times span [{t[0]}, {t[-1]}] s outside the trajectory "
            f"duration {subject.trajectory.duration} s"
        )
    radar = np.asarray(radar_position, dtype=float)

    traj = subject.trajectory
    if room is not None:
        dims = np.asarray(room, dtype=float)
        for tau in (0.0, traj.duration):
            p = traj.position(subject.speed, np.array([tau]))[0]
            if np.any(p < -1e-9) or np.any(p > dims + 1e-9):
                raise BoundsError(
                    f"trajectory point {tuple(p)} at t={tau:g}s leaves the room {tuple(dims)}"
                )

    h = subject.height
    dir3 = np.asarray(traj.direction)
    fwd = dir3.copy()
    fwd[2] = 0.0
    n = np.linalg.norm(fwd)
    if n == 0:
        raise ConfigError("trajectory direction must have a horizontal component")
    fwd /= n
    lat = np.cross(fwd, _UP)

    base = traj.position(subject.speed, t)
    if subject.standing and gait.sway_enabled:
        sway = gait.sway_amp_m * np.sin(2 * np.pi * gait.sway_freq_hz * t)
        base = base + np.outer(sway, fwd)

    if subject.standing:
        phi = np.zeros_like(t)
        bob = np.zeros_like(t)
    else:
        phi = 2 * np.pi * subject.speed * t / gait.stride_m(h, subject.speed)
        bob = gait.bob_frac * h * np.cos(2 * phi)

    def trunk(frac):
        p = base.copy()
        p[:, 2] += frac * h + bob
        return p

    centers_axes = {
        "head": (trunk(_HEAD_C), np.broadcast_to(_UP, base.shape)),
        "neck": (trunk(_NECK_C), np.broadcast_to(_UP, base.shape)),
        "torso": (trunk(_TORSO_C), np.broadcast_to(_UP, base.shape)),
        "pelvis": (trunk(_PELVIS_C), np.broadcast_to(lat, base.shape)),
    }
    limb_base = base.copy()
    limb_base[:, 2] += bob
    centers_axes.update(_limb_segments(limb_base, lat, fwd, h, phi, gait))

    n_frames = t.size
    shapes = tuple(gait.shapes)
    dist = np.empty((len(shapes), n_frames))
    gains = np.empty_like(dist)
    for b, (name, a_frac, r_frac) in enumerate(shapes):
        center, axis = centers_axes[name]
        delta = radar[None, :] - center
        d = np.linalg.norm(delta, axis=1)
        if np.any(d < 0.05):
            raise BoundsError(f"primitive '{name}' passes within 5 cm of the radar")
        axis_n = axis / np.linalg.norm(axis, axis=1, keepdims=True)
        cos_axis = np.abs(np.sum(delta * axis_n, axis=1)) / d
        dist[b] = d
        scale = gait.body_scale * h
        gains[b] = _prolate_rcs(np.float64(a_frac * scale), np.float64(r_frac * scale), cos_axis)

    if n_frames >= 2:
        v_r = -np.gradient(dist, t, axis=1)
    else:
        v_r = np.zeros_like(dist)
    return PrimitiveTrack(t, dist, gains, v_r, names=tuple(s[0] for s in shapes))


def track_to_csv(track: PrimitiveTrack, path: str | Path) -> Path:
    """Debug dump: one row per (frame, primitive)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_index", "primitive_index", "D", "G", "radial_velocity"])
        for i in range(track.n_frames):
            for b in range(track.n_primitives):
                writer.writerow(
                    [i, b, repr(track.distances[b, i]), repr(track.gains[b, i]),
                     repr(track.radial_velocities[b, i])]
                )
    return path

"""Fitting the channel evolution rate by gray-level distribution matching.

The evolution rate controls how much the interference channel wanders from
frame to frame, which shows up as blur around the motion pattern in the
spectrogram and therefore in its gray-level pmf. ``fit_rho`` brute-forces a
candidate grid, simulating the scenario end to end at every point and
scoring it by KL divergence against a reference pmf; results persist in a
CSV look-up table keyed by scenario id.
"""

from __future__ import annotations

import csv
import hashlib
import math
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dataset import Scenario, simulate_gray_pmf
from .dsp import Pmf
from .errors import ConfigError, FormatError


@dataclass(frozen=True)
class RhoGrid:
    """Sorted candidate evolution rates in [0, 1]."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise ConfigError("rho grid must not be empty")
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ConfigError("rho grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("rho grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @staticmethod
    def parse(text: str) -> "RhoGrid":
        return RhoGrid(tuple(float(tok) for tok in text.split(",") if tok.strip()))

    def spec_string(self) -> str:
        return ";".join(repr(v) for v in self.values)


def default_rho_grid() -> RhoGrid:
    """1-2-5 spaced residuals (1 - rho) from 0.1 down to 1e-5."""
    residuals = []
    for exp in range(1, 6):
        for mant in (1.0, 0.5, 0.2):
            residuals.append(mant * 10.0**-exp)
    values = sorted(1.0 - r for r in residuals)
    return RhoGrid(tuple(values))


@dataclass
class CalibrationRecord:
    """Result of one evolution-rate fit. The KL-vs-rho curve tags along for
    plotting but is excluded from equality and not persisted in the table."""

    scenario_id: str
    rho_star: float
    kl_at_optimum: float
    grid: RhoGrid
    seed: int
    timestamp: str
    curve: tuple[tuple[float, float], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.rho_star not in self.grid.values:
            raise ConfigError("rho_star must be one of the grid values")
        if self.kl_at_optimum < 0:
            raise ConfigError("KL divergence cannot be negative")


def kl_divergence(reference: Pmf, candidate: Pmf, smoothing_eps: float = 1e-9) -> float:
    """KL(reference || candidate) in nats.

    The candidate is floor-smoothed to (q + eps) / (1 + n*eps) before the
    ratio so empty simulated bins cannot blow up the sum; terms where the
    reference bin is empty contribute zero. With eps = 0 an empty candidate
    bin under reference mass yields +inf.
    """
    if reference.n_bins != candidate.n_bins:
        raise ValueError(
            f"pmf size mismatch: {reference.n_bins} vs {candidate.n_bins}"
        )
    if smoothing_eps < 0:
        raise ValueError("smoothing_eps must be non-negative")
    p = reference.probabilities
    q = candidate.probabilities
    if smoothing_eps > 0:
        q = (q + smoothing_eps) / (1.0 + candidate.n_bins * smoothing_eps)
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def average_pmf(pmfs) -> Pmf:
    """Mean of several pmfs (used to pool reference spectrograms)."""
    pmfs = list(pmfs)
    if not pmfs:
        raise ValueError("need at least one pmf to average")
    stack = np.stack([p.probabilities for p in pmfs])
    return Pmf(stack.mean(axis=0))


def rho_point_seed(base_seed: int, rho: float) -> int:
    """Per-grid-point seed, a pure function of the base seed and the rho
    value itself, so grid refinement and parallel evaluation reproduce the
    sequential results exactly."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(base_seed).to_bytes(16, "little", signed=True))
    h.update(struct.pack("<d", float(rho)))
    return int.from_bytes(h.digest(), "little")


def fit_rho(reference: Pmf, scenario: Scenario, grid: RhoGrid, seed: int) -> CalibrationRecord:
    """Brute-force the evolution rate over the grid.

    Every grid point re-simulates the scenario (uncertainty on, rho swapped
    in, derived seed) and is scored by KL(reference || simulated). Ties break
    toward the larger rho.
    """
    from dataclasses import replace

    curve = []
    best_rho = None
    best_kl = math.inf
    for rho in grid.values:
        candidate_scenario = replace(
            scenario,
            rho=rho,
            sensing_uncertainty=True,
            seed=rho_point_seed(seed, rho),
        )
        try:
            pmf = simulate_gray_pmf(candidate_scenario)
        except Exception as exc:
            raise RuntimeError(f"simulation failed at rho = {rho}: {exc}") from exc
        kl = kl_divergence(reference, pmf)
        curve.append((rho, kl))
        if kl <= best_kl:
            best_kl = kl
            best_rho = rho
    return CalibrationRecord(
        scenario_id=scenario.resolved_id,
        rho_star=best_rho,
        kl_at_optimum=best_kl,
        grid=grid,
        seed=seed,
        timestamp=datetime.now(timezone.utc).isoformat(),
        curve=tuple(curve),
    )


_LUT_HEADER = ["scenario_id", "rho_star", "kl", "seed", "grid_spec", "timestamp"]


def lut_store(path: str | Path, record: CalibrationRecord) -> Path:
    """Append or replace the row keyed by the record's scenario id."""
    path = Path(path)
    records = _read_lut(path) if path.exists() else []
    records = [r for r in records if r.scenario_id != record.scenario_id]
    records.append(record)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_LUT_HEADER)
        for r in records:
            writer.writerow(
                [r.scenario_id, repr(r.rho_star), repr(r.kl_at_optimum), r.seed,
                 r.grid.spec_string(), r.timestamp]
            )
    return path


def lut_lookup(path: str | Path, scenario_id: str) -> CalibrationRecord | None:
    """Fetch the stored record, or None when the id is absent."""
    path = Path(path)
    if not path.exists():
        return None
    for record in _read_lut(path):
        if record.scenario_id == scenario_id:
            return record
    return None


def _read_lut(path: Path) -> list[CalibrationRecord]:
    records = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _LUT_HEADER:
            raise FormatError(f"{path}:1: expected header {','.join(_LUT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                grid = RhoGrid(tuple(float(tok) for tok in row[4].split(";")))
                records.append(
                    CalibrationRecord(
                        scenario_id=row[0],
                        rho_star=float(row[1]),
                        kl_at_optimum=float(row[2]),
                        seed=int(row[3]),
                        grid=grid,
                        timestamp=row[5],
                    )
                )
            except (IndexError, ValueError, ConfigError) as exc:
                raise FormatError(f"{path}:{lineno}: bad look-up row {row!r}") from exc
    return records


def save_curve_csv(record: CalibrationRecord, path: str | Path) -> Path:
    """KL-vs-rho curve export for plotting."""
    if record.curve is None:
        raise ValueError("record carries no curve (was it loaded from the table?)")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "kl"])
        for rho, kl in record.curve:
            writer.writerow([repr(rho), repr(kl)])
    return path

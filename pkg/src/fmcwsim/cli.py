"""Command-line front end.

Subcommands cover the full workflow: ``simulate`` a scenario to raw IQ and a
gray spectrogram, re-``spectrogram`` stored IQ, extract a ``pmf``,
``calibrate`` the evolution rate against a reference pmf, generate a labelled
``dataset`` and ``compare-pmf`` two histograms. Failures print a single
``error:<category>:<message>`` line and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmcwsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario: writes .iq, .iq.json and .pgm")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("spectrogram", help="process stored IQ into a gray PGM")
    p.add_argument("iq", help="input .iq file (with .iq.json sidecar)")
    p.add_argument("--out", default=None, help="output PGM path")
    p.add_argument("--bandwidth", type=float, default=50e6,
                   help="sweep bandwidth in Hz (the IQ sidecar does not carry it)")
    p.add_argument("--svd-cut", type=int, default=2)
    p.add_argument("--window", type=int, default=128)
    p.add_argument("--hop", type=int, default=1)
    p.add_argument("--kaiser-beta", type=float, default=0.5)
    p.add_argument("--dynamic-range", type=float, default=60.0)

    p = sub.add_parser("pmf", help="gray-level pmf of a PGM image as CSV")
    p.add_argument("image", help="input PGM")
    p.add_argument("--out", default=None, help="output CSV path")
    p.add_argument("--bins", type=int, default=256)

    p = sub.add_parser("calibrate", help="fit the channel evolution rate")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--reference", required=True, help="reference pmf CSV")
    p.add_argument("--grid", default=None, help="comma-separated rho candidates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lut", default=None, help="look-up table CSV to update")
    p.add_argument("--curve", default=None, help="KL-vs-rho curve CSV to write")

    p = sub.add_parser("dataset", help="generate a labelled image dataset")
    p.add_argument("--config", default=None, help="base scenario JSON (default built-in)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-class", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--frames", type=int, default=None,
                   help="frames per sample (only with the built-in scenario)")

    p = sub.add_parser("compare-pmf", help="KL divergence between two pmf CSVs")
    p.add_argument("reference")
    p.add_argument("candidate")
    p.add_argument("--smoothing", type=float, default=0.0)

    return parser


def cmd_simulate(args) -> int:
    from . import dataset as ds
    from . import dsp
    from .waveform import save_iq

    scenario = ds.load_scenario(args.config)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix, image = ds.simulate_sample(scenario)
    stem = scenario.resolved_id
    iq_path = save_iq(matrix, out_dir / f"{stem}.iq")
    pgm_path = dsp.save_pgm(image, out_dir / f"{stem}.pgm")
    print(iq_path)
    print(pgm_path)
    return 0


def cmd_spectrogram(args) -> int:
    from . import dsp
    from .dataset import DspConfig, process_iq
    from .waveform import RadarParams, fmcw_chirp, load_iq

    matrix = load_iq(args.iq)
    params = RadarParams(
        carrier_freq=matrix.meta.carrier_freq,
        bandwidth=args.bandwidth,
        sweep_time=matrix.meta.sweep_time,
        frame_period=matrix.meta.frame_period,
        sample_rate=matrix.meta.sample_rate,
        n_frames=matrix.n_frames,
    )
    cfg = DspConfig(
        svd_cut=args.svd_cut,
        window=args.window,
        hop=args.hop,
        kaiser_beta=args.kaiser_beta,
        dynamic_range_db=args.dynamic_range,
    )
    _, image = process_iq(matrix, cfg, fmcw_chirp(params))
    out = Path(args.out) if args.out else Path(args.iq).with_suffix(".pgm")
    dsp.save_pgm(image, out)
    print(out)
    return 0


def cmd_pmf(args) -> int:
    from . import dsp

    pixels = dsp.load_pgm(args.image)
    pmf = dsp.gray_pmf(dsp.GrayImage(pixels, dynamic_range_db=60.0), args.bins)
    out = Path(args.out) if args.out else Path(args.image).with_suffix(".csv")
    dsp.save_pmf_csv(pmf, out)
    print(out)
    return 0


def cmd_calibrate(args) -> int:
    from . import calibration as cal
    from . import dataset as ds
    from . import dsp

    scenario = ds.load_scenario(args.config)
    reference = dsp.load_pmf_csv(args.reference)
    grid = cal.RhoGrid.parse(args.grid) if args.grid else cal.default_rho_grid()
    record = cal.fit_rho(reference, scenario, grid, args.seed)
    if args.lut:
        cal.lut_store(args.lut, record)
    if args.curve:
        cal.save_curve_csv(record, args.curve)
    print(f"rho_star={record.rho_star!r} kl={record.kl_at_optimum!r}")
    return 0


def cmd_dataset(args) -> int:
    from . import dataset as ds

    if args.config:
        base = ds.load_scenario(args.config)
    else:
        base = ds.dataset_scenario(n_frames=args.frames or 1000)
    manifest = ds.generate_dataset(
        base,
        n_per_class=args.per_class,
        base_seed=args.seed,
        out_dir=args.out,
        workers=args.workers,
    )
    print(Path(args.out) / "manifest.csv")
    print(f"entries={len(manifest.entries)}")
    return 0


def cmd_compare_pmf(args) -> int:
    from . import calibration as cal
    from . import dsp

    a = dsp.load_pmf_csv(args.reference)
    b = dsp.load_pmf_csv(args.candidate)
    print(cal.kl_divergence(a, b, smoothing_eps=args.smoothing))
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "spectrogram": cmd_spectrogram,
    "pmf": cmd_pmf,
    "calibrate": cmd_calibrate,
    "dataset": cmd_dataset,
    "compare-pmf": cmd_compare_pmf,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .errors import error_category

    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # single-line machine-parsable diagnostics
        print(f"error:{error_category(exc)}:{exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

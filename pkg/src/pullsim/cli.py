"""Subcommand CLI: simulate, analyze, fit, responsivity, compare, plot.

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numerical
non-convergence.  Error messages go to stderr.  The sweep seed resolves
as CLI flag over the PULLSIM_SEED environment variable over the config
file value.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import datasets, plotting
from .analysis import AdlerFit, fit_adler_model, responsivity_numeric, track_peaks
from .config import read_config
from .errors import ConvergenceError, DataError, PullsimError
from .experiment import run_detuning_comparison, run_power_sweep
from .signal import Spectrogram

__all__ = ["cli_main", "main"]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pullsim",
        description="Injection-pulling simulator and analysis toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a power sweep from a config file")
    sim.add_argument("config")
    sim.add_argument("--out-dir", default=".")
    sim.add_argument("--seed", type=int, default=None)

    ana = sub.add_parser("analyze", help="track, fit, and differentiate a dataset")
    ana.add_argument("matrix")
    ana.add_argument("freq_axis")
    ana.add_argument("power_axis")
    ana.add_argument("--band", default="10e3:250e3", help="lo:hi in Hz")
    ana.add_argument("--out-dir", default=".")

    fit = sub.add_parser("fit", help="fit the pulling law to a track CSV")
    fit.add_argument("track")
    fit.add_argument("--weighted", action="store_true",
                     help="weight residuals by 1/linewidth^2")

    resp = sub.add_parser("responsivity", help="numeric responsivity of a track CSV")
    resp.add_argument("track")
    resp.add_argument("--out", default=None)

    cmp_ = sub.add_parser("compare", help="two-scenario ordering comparison")
    cmp_.add_argument("config_small")
    cmp_.add_argument("config_large")
    cmp_.add_argument("--seed", type=int, default=None)

    plot = sub.add_parser("plot", help="SVG for curves, PGM for matrices")
    plot.add_argument("input")
    plot.add_argument("--out", required=True)
    return p


def _resolve_seed(flag_seed, cfg_seed: int) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    env = os.environ.get("PULLSIM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise DataError(f"PULLSIM_SEED must be an integer, got {env!r}") from None
    return cfg_seed


def _fit_report(name: str, fit: AdlerFit) -> str:
    flag = lambda b: "yes" if b else "no"
    return (
        f"{name}: delta_f0_hat = {fit.delta_f0_hat:.6e} Hz, "
        f"beta_hat = {fit.beta_hat:.6e} 1/mW\n"
        f"{name}: residual_rms = {fit.residual_rms:.6e} Hz, "
        f"iterations = {fit.n_iterations}, converged = {flag(fit.converged)}, "
        f"beta_at_bound = {flag(fit.beta_at_bound)}\n"
    )


def _cmd_simulate(args) -> int:
    cfg = read_config(args.config)
    cfg = dataclasses.replace(cfg, seed=_resolve_seed(args.seed, cfg.seed))
    result = run_power_sweep(cfg)
    out = args.out_dir
    os.makedirs(out, exist_ok=True)

    files = {}
    n_written = 1
    for tag in ("rf", "if"):
        spg = getattr(result, f"{tag}_spectrogram")
        ds = datasets.power_averaged_dataset(spg, result.schedule)
        names = {
            "matrix": f"{tag}_matrix.csv",
            "freq_axis": f"{tag}_freq_axis.csv",
            "power_axis": f"{tag}_power_axis.csv",
            "track": f"{tag}_track.csv",
        }
        datasets.write_spectrogram_csv(
            ds,
            os.path.join(out, names["matrix"]),
            os.path.join(out, names["freq_axis"]),
            os.path.join(out, names["power_axis"]),
        )
        datasets.write_track_csv(getattr(result, f"{tag}_track"), os.path.join(out, names["track"]))
        fit = getattr(result, f"{tag}_fit")
        if fit is not None:
            names["fit"] = f"{tag}_fit.csv"
            datasets.write_fit_csv(fit, os.path.join(out, names["fit"]))
        curve = getattr(result, f"{tag}_responsivity")
        if curve is not None:
            names["responsivity"] = f"{tag}_responsivity.csv"
            datasets.write_responsivity_csv(curve, os.path.join(out, names["responsivity"]))
        files[tag] = names
        n_written += len(names)

    manifest = {
        "scenario": {
            "delta_f0_hz": cfg.oscillator.delta_f0,
            "f_inj_hz": cfg.oscillator.f_inj,
            "kappa0_hz_per_sqrt_mw": cfg.oscillator.kappa0,
            "soft_model": cfg.soft_model is not None,
            "start_dbm": cfg.start_dbm,
            "stop_dbm": cfg.stop_dbm,
            "step_db": cfg.step_db,
            "dwell_s": cfg.dwell_s,
            "fs_hz": cfg.fs,
            "band_hz": list(cfg.band),
            "n_steps": int(result.power_dbm.size),
        },
        "seed": cfg.seed,
        "files": files,
    }
    datasets.atomic_write(
        os.path.join(out, "manifest.json"),
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
    )
    for tag in ("rf", "if"):
        fit = getattr(result, f"{tag}_fit")
        if fit is not None:
            sys.stdout.write(_fit_report(tag, fit))
        else:
            sys.stdout.write(f"{tag}: too few valid steps to fit\n")
    sys.stdout.write(f"wrote {n_written} files to {out}\n")
    return 0


def _parse_band(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise DataError(f"band must be 'lo:hi' in Hz, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise DataError(f"band must be numeric 'lo:hi' in Hz, got {text!r}") from None


def _cmd_analyze(args) -> int:
    ds = datasets.read_spectrogram_csv(args.matrix, args.freq_axis, args.power_axis)
    if ds.col_kind != "power_dbm":
        raise DataError("analyze requires a power-axis dataset, not a time-axis one")
    band = _parse_band(args.band)
    order = np.argsort(ds.power_axis_dbm)
    spg = Spectrogram(
        time_axis=np.arange(ds.power_axis_dbm.size, dtype=float),
        freq_axis=ds.freq_axis_hz,
        power_db=ds.power_db[:, order],
    )
    track = track_peaks(spg, ds.power_axis_dbm[order], band)
    fit = fit_adler_model(track.valid_subset())
    curve = responsivity_numeric(track.valid_subset())
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    datasets.write_track_csv(track, os.path.join(out, "track.csv"))
    datasets.write_fit_csv(fit, os.path.join(out, "fit.csv"))
    datasets.write_responsivity_csv(curve, os.path.join(out, "responsivity.csv"))
    sys.stdout.write(_fit_report("fit", fit))
    sys.stdout.write(f"wrote track.csv, fit.csv, responsivity.csv to {out}\n")
    return 0


def _cmd_fit(args) -> int:
    track = datasets.read_track_csv(args.track)
    fit = fit_adler_model(track.valid_subset(), linewidth_weighted=args.weighted)
    sys.stdout.write(_fit_report("fit", fit))
    return 0


def _cmd_responsivity(args) -> int:
    track = datasets.read_track_csv(args.track)
    curve = responsivity_numeric(track.valid_subset())
    if args.out:
        datasets.write_responsivity_csv(curve, args.out)
        sys.stdout.write(f"wrote {curve.p_inj_dbm.size} points to {args.out}\n")
    else:
        sys.stdout.write("power_dbm,responsivity_hz_per_db\n")
        for p, r in zip(curve.p_inj_dbm, curve.responsivity_hz_per_db):
            sys.stdout.write(f"{p:.9e},{r:.9e}\n")
    return 0


def _cmd_compare(args) -> int:
    cfg_a = read_config(args.config_small)
    cfg_b = read_config(args.config_large)
    if args.seed is not None or os.environ.get("PULLSIM_SEED") is not None:
        cfg_a = dataclasses.replace(cfg_a, seed=_resolve_seed(args.seed, cfg_a.seed))
        cfg_b = dataclasses.replace(cfg_b, seed=_resolve_seed(args.seed, cfg_b.seed))
    _, _, report = run_detuning_comparison(cfg_a, cfg_b)
    sys.stdout.write(report.to_text())
    return 0


def _cmd_plot(args) -> int:
    with open(args.input, "r") as fh:
        first = fh.readline().strip()
    if first in ("# rows=frequency_hz columns=power_dbm", "# rows=frequency_hz columns=time_s"):
        if not args.out.endswith(".pgm"):
            raise DataError("spectrogram matrices render as PGM; --out must end in .pgm")
        rows = []
        with open(args.input, "r") as fh:
            next(fh)
            for i, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                cells = line.split(",")
                if rows and len(cells) != len(rows[0]):
                    raise DataError(
                        f"{args.input}: ragged row at row {i}: {len(cells)} cells, "
                        f"expected {len(rows[0])}"
                    )
                rows.append(
                    [
                        datasets._parse_float(c.strip(), args.input, i, j + 1)
                        for j, c in enumerate(cells)
                    ]
                )
        if not rows:
            raise DataError(f"{args.input}: matrix has no data rows")
        datasets.atomic_write(args.out, plotting.pgm_heatmap(np.asarray(rows)))
    elif first == "power_dbm,f_peak_hz,linewidth_3db_hz,valid,clamped":
        if not args.out.endswith(".svg"):
            raise DataError("curves render as SVG; --out must end in .svg")
        track = datasets.read_track_csv(args.input).valid_subset()
        if len(track) == 0:
            raise DataError("track has no valid points to plot")
        svg = plotting.svg_line_plot(
            [(track.p_inj_dbm, track.f_peak / 1e3, "peak track")],
            xlabel="injected power (dBm)",
            ylabel="beat frequency (kHz)",
            title="peak track",
        )
        datasets.atomic_write(args.out, svg)
    elif first == "power_dbm,responsivity_hz_per_db":
        if not args.out.endswith(".svg"):
            raise DataError("curves render as SVG; --out must end in .svg")
        curve = datasets.read_responsivity_csv(args.input)
        svg = plotting.svg_line_plot(
            [(curve.p_inj_dbm, curve.responsivity_hz_per_db / 1e3, "responsivity")],
            xlabel="injected power (dBm)",
            ylabel="responsivity (kHz/dB)",
            title="frequency responsivity",
        )
        datasets.atomic_write(args.out, svg)
    else:
        raise DataError(
            f"{args.input}: unrecognized input header {first!r}; expected a "
            "spectrogram matrix, track, or responsivity CSV"
        )
    sys.stdout.write(f"wrote {args.out}\n")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "fit": _cmd_fit,
    "responsivity": _cmd_responsivity,
    "compare": _cmd_compare,
    "plot": _cmd_plot,
}


def cli_main(argv=None) -> int:
    """Run the CLI and return an exit code instead of raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        code = err.code if err.code is not None else 0
        return 0 if code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except ConvergenceError as err:
        print(f"pullsim: convergence error: {err}", file=sys.stderr)
        return 3
    except DataError as err:
        print(f"pullsim: data error: {err}", file=sys.stderr)
        return 2
    except PullsimError as err:
        print(f"pullsim: error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"pullsim: i/o error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())

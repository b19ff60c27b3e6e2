"""Command-line entry point: ``superarrivals {simulate,pair,sweep,trajectories,analyze}``.

Exit status: 0 success, 1 invalid configuration or arguments, 2 numerical
divergence, 3 file I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig, parse_config, serialize_config
from .errors import ConfigurationError, NumericalError, SuperarrivalError
from .experiments import run_pair, simulate, sweep

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3

logger = logging.getLogger("superarrivals")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superarrivals", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="key-value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one key, e.g. schedule.epsilon=0.4 (repeatable)")
        sp.add_argument("--out", type=Path, help="output directory (overrides output.directory)")

    common(sub.add_parser("simulate", help="one propagation: T(t) and transmitted expectations"))
    sim = sub.choices["simulate"]
    sim.add_argument("--snapshots", action="store_true", help="dump psi every output.snapshot_stride steps")
    common(sub.add_parser("pair", help="reference and perturbed runs with window and eta"))
    sw = sub.add_parser("sweep", help="eta across one parameter axis")
    common(sw)
    sw.add_argument("--axis", help="epsilon, w_f, x_d, V0, b, d, alpha or width")
    sw.add_argument("--values", help="comma-separated axis values in paper units")
    sw.add_argument("--threads", type=int, help="concurrent sweep points")
    tr = sub.add_parser("trajectories", help="quantile Bohmian ensemble over one run")
    common(tr)
    tr.add_argument("--select", type=int, default=9, help="number of paths written out")
    an = sub.add_parser("analyze", help="recompute window and eta from emitted series")
    an.add_argument("directory", type=Path, help="directory holding ts_*.csv files")
    an.add_argument("--delta-dev", type=float, default=None)
    an.add_argument("--out", type=Path, help="where report.json goes (default: the input directory)")
    return p


def _load(args) -> RunConfig:
    text = ""
    if args.config is not None:
        text = args.config.read_text()
    overrides = list(args.set)
    if args.out is not None:
        overrides.append(f"output.directory={args.out}")
    for name, key in (("axis", "analysis.axis"), ("values", "analysis.values"),
                      ("threads", "output.threads")):
        value = getattr(args, name, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    if getattr(args, "snapshots", False):
        overrides.append("output.snapshots=true")
    return parse_config(text, overrides)


def _cmd_simulate(config, out, h):
    run = simulate(config, snapshots=config.output.snapshots)
    files = [io.write_series(out / f"ts_{run.label}.csv", run.transmission[0], h)]
    if run.expectation_series is not None:
        files.append(io.write_expectations(out / "expectations.csv", run.expectation_series, h))
    if run.snapshots:
        path = out / "snapshots.npz"
        np.savez(path, t=np.array([s[0] for s in run.snapshots]),
                 psi=np.array([s[1] for s in run.snapshots]))
        files.append(path)
    summary = {"T_final": run.transmission[0].final, "norm_drift": run.norm_drift,
               "transmitted_final": dict(zip(("H", "p", "x"), run.expectations_final or ()))}
    files.append(io.write_json(out / "summary.json", summary))
    return files


def _cmd_pair(config, out, h):
    pair = run_pair(config)
    ref, pert = pair.reference_series, pair.perturbed_series
    files = [io.write_series(out / f"ts_{ref.label}.csv", ref, h),
             io.write_series(out / "ts_perturbed.csv", pert, h),
             io.write_json(out / "report.json", io.pair_report(ref, pert, config.analysis.delta_dev))]
    return files


def _cmd_sweep(config, out, h):
    a = config.analysis
    if not a.axis or len(a.values) < 2:
        raise ConfigurationError("sweep needs analysis.axis and at least two analysis.values")
    result = sweep(config, a.axis, a.values, threads=config.output.threads)
    return [io.write_sweep(out / f"sweep_{a.axis}.csv", result, h)]


def _cmd_trajectories(config, out, h, select):
    run = simulate(config, trajectories=True)
    tr = run.trajectories
    if tr is None:
        raise ConfigurationError("analysis.n_trajectories must be positive")
    b = tr.bundle
    n = len(b.initial_positions)
    ids = set(np.linspace(0, n - 1, max(select, 2)).round().astype(int).tolist())
    if tr.x_c is not None:
        # the two paths bracketing the critical starting point
        k = int(np.searchsorted(b.initial_positions, tr.x_c))
        ids.update(i for i in (k - 1, k) if 0 <= i < n)
    ids = sorted(ids)
    grid_dx = config.spatial_grid().dx / config.unit_system().sigma1
    summary = {"T_final": tr.T_final, "fraction_beyond_x_d": b.fraction_beyond(config.analysis.x_d),
               "x_c": tr.x_c, "crossing_violation": b.crossing_violation(),
               "classification_mismatches": tr.classification_mismatches(grid_dx),
               "degenerate": int(b.degenerate.sum()), "selected": ids}
    return [io.write_series(out / f"ts_{run.label}.csv", run.transmission[0], h),
            io.write_trajectories(out / "trajectories.csv", b, ids, h),
            io.write_json(out / "trajectories.json", summary)]


def _cmd_analyze(args):
    ref_path, pert_path = io.find_pair(args.directory)
    reference, perturbed = io.read_series(ref_path), io.read_series(pert_path)
    delta = args.delta_dev
    if delta is None:
        delta = RunConfig().analysis.delta_dev
        old = args.directory / "report.json"
        if old.exists():
            delta = json.loads(old.read_text()).get("delta_dev", delta)
    out = args.out or args.directory
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    report = io.write_json(out / "report.json", io.pair_report(reference, perturbed, delta))
    io.write_manifest(out, "analyze", "", "", time.perf_counter() - start, [report],
                      {"inputs": [ref_path.name, pert_path.name]}, name="manifest_analyze.json")
    return report


def run_cli(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            _cmd_analyze(args)
            return EXIT_OK
        config = _load(args)
        out = Path(config.output.directory)
        out.mkdir(parents=True, exist_ok=True)
        h = config.digest()
        start = time.perf_counter()
        if args.command == "simulate":
            files = _cmd_simulate(config, out, h)
        elif args.command == "pair":
            files = _cmd_pair(config, out, h)
        elif args.command == "sweep":
            files = _cmd_sweep(config, out, h)
        else:
            files = _cmd_trajectories(config, out, h, args.select)
        (out / "config.toml").write_text(serialize_config(config))
        io.write_manifest(out, args.command, serialize_config(config), h,
                          time.perf_counter() - start, [*files, out / "config.toml"])
    except NumericalError as exc:
        logger.error("%s", exc)
        return EXIT_DIVERGED
    except (ConfigurationError, SuperarrivalError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())

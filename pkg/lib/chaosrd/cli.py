# -*- encoding: utf-8; py-indent-offset: 4 -*-
#
# chaosrd computes mean and variance of random reaction-diffusion
# equations with intrusive and non-intrusive polynomial chaos.
#
# Copyright (C) 2024 chaosrd contributors

# This program is free software; you can redistribute it and/or
# modify it under the terms of the GNU General Public License
# as published by the Free Software Foundation; either version 2
# of the License, or (at your option) any later version.

# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.

# You should have received a copy of the GNU General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 51 Franklin Street, Fifth Floor, Boston, MA  02110-1301, USA.
"""
Command line front end.

Every subcommand resolves to one or more RunConfigs, runs the experiment
and writes its tables as comma separated files with a JSON sidecar
holding the configuration and a content hash.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import List, Optional, Sequence

from chaosrd import __version__
from chaosrd.analysis import ResultTable, run_experiment
from chaosrd.config import (
    COMMANDS,
    CUBIC_ROUTES,
    DEALIAS_RULES,
    DESK_FACTORS,
    PRESETS,
    SCHEMES,
    STATISTICS,
    RunConfig,
    expand_preset,
    resolve,
)
from chaosrd.errors import ChaosError, InvalidArgumentError, NumericalFailure, UsageError
from chaosrd.legendre_chaos import LegendreBasis, build_tensors, write_tensor_csv
from chaosrd.models import MODEL_KINDS

LOGGER = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"

EXIT_OK = 0
EXIT_NUMERICAL_FAILURE = 1
EXIT_USAGE = 2

_handler: Optional[logging.Handler] = None


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    parent.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors")
    parent.add_argument("--preset", choices=sorted(PRESETS), help="Start from the settings of a reference experiment")
    parent.add_argument("--desk", action="store_true", default=None, help="Scale p, M and q down for a quick run")
    parent.add_argument("--output", help="Output directory, defaults to $CHAOSRD_OUTPUT_DIR or .")
    parent.add_argument("--workers", type=int, help="Threads solving non-intrusive samples")
    parent.add_argument("--gnuplot", action="store_true", default=None, help="Write a gnuplot script next to each file")
    return parent


def _run_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--model", choices=MODEL_KINDS)
    parent.add_argument("--scheme", choices=SCHEMES)
    parent.add_argument("--D", type=float, help="Diffusion coefficient of the scalar models")
    parent.add_argument("--dim", type=int, choices=(1, 2))
    parent.add_argument("--p", type=int, help="Grid points per dimension")
    parent.add_argument("--T", type=float, help="Final time")
    parent.add_argument("--M", type=int, help="Number of time steps")
    parent.add_argument("--M-list", dest="M_list", type=int, nargs="+", help="Step counts of a sweep")
    parent.add_argument("--N", type=int, nargs="+", help="Polynomial degrees, the last one is used by sweeps")
    parent.add_argument("--samplers", nargs="+", help="Sampler kinds: MC, QMC-Sobol, QMC-Halton, GQ")
    parent.add_argument("--q", type=int, help="Number of samples")
    parent.add_argument("--degree", type=int, help="Degree of the non-intrusive projection")
    parent.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), help="Support of the random parameter")
    parent.add_argument("--seed", type=int)
    parent.add_argument("--mc-runs", dest="mc_runs", type=int, help="Monte Carlo runs averaged per curve")
    parent.add_argument("--xi", type=float, help="Parameter value of a deterministic run")
    parent.add_argument("--statistic", choices=STATISTICS)
    parent.add_argument("--contour-points", dest="contour_points", type=int)
    parent.add_argument("--dealias", choices=DEALIAS_RULES)
    parent.add_argument("--cubic-route", dest="cubic_route", choices=CUBIC_ROUTES)
    parent.add_argument("--reference-M", dest="reference_M", type=int)
    parent.add_argument("--reference-q", dest="reference_q", type=int)
    parent.add_argument("--repetitions", type=int, help="Timed runs per degree")
    parent.add_argument("--dump-tensors", dest="dump_tensors", action="store_true", default=None)
    return parent


def build_parser() -> argparse.ArgumentParser:  # pylint: disable=missing-function-docstring
    parser = argparse.ArgumentParser(
        prog="chaosrd",
        description="Polynomial chaos for random reaction-diffusion equations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_options()
    run = _run_options()
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    helps = {
        "det": "Solve for a single parameter value",
        "ipce": "Error curves of intrusive runs",
        "nipce": "Error curves of non-intrusive runs",
        "sweep": "Final-time errors over a range of step counts",
        "runtimes": "Runtime ratios of intrusive runs",
        "grayscott": "Gray-Scott error curves and steady state analysis",
    }
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common, run], help=helps[command])

    reproduce = subparsers.add_parser("reproduce", parents=[common], help="Run all presets")
    reproduce.add_argument("--only", nargs="+", choices=sorted(PRESETS), help="Restrict to these presets")
    return parser


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    "Parse argv, printing the usage and exiting with status 2 if it is empty"
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return args


def _raw_options(args: argparse.Namespace) -> dict:
    raw = {key: value for key, value in vars(args).items() if key not in ("verbose", "quiet", "only")}
    degrees = raw.pop("N", None)
    if degrees is not None:
        raw["N_list"] = degrees
        raw["N"] = degrees[-1]
    if raw["command"] == "grayscott" and raw.get("model") is None:
        raw["model"] = "grayscott"
    return raw


def config_from_arguments(args: argparse.Namespace) -> RunConfig:
    "RunConfig of a single experiment subcommand"
    if args.command == "reproduce":
        raise UsageError("reproduce runs several experiments, use plan_runs")
    return resolve(_raw_options(args))


def parse_and_validate(argv: Optional[Sequence[str]] = None) -> RunConfig:
    "Validated RunConfig for the given command line"
    return config_from_arguments(parse_arguments(argv))


def plan_runs(args: argparse.Namespace) -> List[RunConfig]:
    "All configs a command line asks for"
    if args.command != "reproduce":
        return [config_from_arguments(args)]

    overrides = {
        key: value
        for key, value in vars(args).items()
        if key in ("output", "workers", "gnuplot") and value is not None
    }
    configs = []
    for name in args.only or PRESETS:
        configs.extend(expand_preset(name, desk=bool(args.desk), **overrides))
    LOGGER.info("Reproducing %i runs", len(configs))
    return configs


def _format(value) -> str:
    return "%.17g" % value


def _render(table: ResultTable) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.columns:
        writer.writerow([_format(value) for value in row])
    return buffer.getvalue().encode("utf-8")


def _gnuplot_script(table: ResultTable) -> bytes:
    lines = [
        "set datafile separator ','",
        "set logscale y",
        "set key autotitle columnhead",
        f"set xlabel '{table.header[0]}'",
        f"plot for [i=2:{len(table.header)}] '{table.name}' using 1:i with linespoints",
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")


def _write_atomic(path: Path, content: bytes) -> None:
    with tempfile.NamedTemporaryFile(dir=path.parent, prefix=f".{path.name}.", delete=False) as stream:
        stream.write(content)
        temporary = stream.name
    os.replace(temporary, path)


def emit_csv(
    tables: Sequence[ResultTable],
    directory,
    config: Optional[RunConfig] = None,
    gnuplot: bool = False,
) -> List[Path]:
    """
    Write one file per table plus a ``.meta.json`` sidecar.

    Values are written with 17 significant digits, so they read back
    bitwise identical. Files are replaced atomically.
    """
    if not tables:
        LOGGER.error("No result tables to write")
        raise InvalidArgumentError("No result tables to write")

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for table in tables:
        if table.columns.ndim != 2 or table.columns.shape[1] != len(table.header):
            raise InvalidArgumentError(f"Table {table.name!r} does not match its header {table.header!r}")

        path = directory / table.name
        content = _render(table)
        metadata = {
            "file": table.name,
            "sha256": hashlib.sha256(content).hexdigest(),
            "version": __version__,
            "config": config.as_dict() if config is not None else None,
            "details": table.metadata,
        }
        if config is not None and config.desk:
            metadata["desk_factors"] = DESK_FACTORS

        _write_atomic(path, content)
        sidecar = json.dumps(metadata, indent=2, sort_keys=True, default=str) + "\n"
        _write_atomic(path.with_name(path.name + ".meta.json"), sidecar.encode("utf-8"))
        if gnuplot:
            _write_atomic(path.with_suffix(".gp"), _gnuplot_script(table))

        LOGGER.info("Wrote %s", path)
        paths.append(path)

    return paths


def dump_tensors(config: RunConfig) -> List[Path]:
    "Write the Galerkin tensors for every degree of the config"
    directory = Path(config.output)
    directory.mkdir(parents=True, exist_ok=True)
    a, b = config.model_interval
    paths = []
    for N in config.N_list:
        buffer = io.StringIO()
        rows = write_tensor_csv(build_tensors(LegendreBasis(a, b, N)), buffer)
        path = directory / f"tensors_N={N}_a={a:.5f}_b={b:.5f}.csv"
        _write_atomic(path, buffer.getvalue().encode("utf-8"))
        LOGGER.info("Wrote %i tensor entries to %s", rows, path)
        paths.append(path)

    return paths


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    "Log to stderr, replacing the handler of an earlier call"
    global _handler  # pylint: disable=global-statement
    logger = logging.getLogger("chaosrd")
    if _handler is not None:
        logger.removeHandler(_handler)

    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(_handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO)


def main(argv: Optional[Sequence[str]] = None) -> int:
    "Entry point, returns the exit status"
    try:
        args = parse_arguments(argv)
    except SystemExit as exit_:
        return EXIT_USAGE if exit_.code is None else int(exit_.code)

    configure_logging(args.verbose, args.quiet)
    try:
        for config in plan_runs(args):
            LOGGER.info("Run config: %s", config.as_dict())
            if config.dump_tensors:
                dump_tensors(config)
            result = run_experiment(config)
            emit_csv(result.tables, config.output, config, config.gnuplot)
    except UsageError as uerr:
        LOGGER.error("%s", uerr)
        return EXIT_USAGE
    except NumericalFailure as nerr:
        LOGGER.error("Numerical failure: %s", nerr)
        return EXIT_NUMERICAL_FAILURE
    except ChaosError as cerr:
        LOGGER.error("%s", cerr)
        return EXIT_USAGE

    return EXIT_OK

"""Command-line front end: ``ionsim run | fit | figure | validate``.

Exit codes: 0 success, 1 usage, 2 parse or validation error, 3 runtime
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .config import ConfigError, RunConfig, SimConfig, load_config
from .engine import run_scan
from .figures import FIGURES, run_figure
from .seqlang import SeqLangError, parse, validate
from .tables import (parse_table, read_table, sha256_text, sim_config_hash, table_to_text,
                     write_manifest)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3

AXIS_UNITS = {"detuning": "Hz", "duration": "us", "wait": "ms", "delay": "ms", "phase": "rad",
              "cutoff": "us", "repeat": "index"}

FIT_MODELS = ("line", "line-broadened", "fringe", "contrast-decay", "exponential", "linear", "sine")


class UsageError(Exception):
    pass


class InputError(Exception):
    """Bad input content: reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _uint64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ionsim", description="Trapped-ion qubit Monte Carlo simulator.")
    parser.add_argument("--version", action="version", version=f"ionsim {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, seeded=True):
        p.add_argument("--config", help="TOML configuration file")
        if seeded:
            p.add_argument("--seed", type=_uint64, help="master seed (overrides the config)")
            p.add_argument("--shots", type=_positive, help="shots per point (override)")
            p.add_argument("--workers", type=_positive,
                           help="worker processes (default: $IONSIM_WORKERS or 1)")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("run", help="run a .ionseq sequence file")
    p.add_argument("sequence")
    p.add_argument("--experiment", help="run only the named experiment block")
    common(p)

    p = sub.add_parser("fit", help="fit a data table")
    p.add_argument("data")
    p.add_argument("--model", required=True, choices=FIT_MODELS)
    p.add_argument("--duration-us", type=float, help="pulse length for line models")
    p.add_argument("--susceptibility", type=float, default=2.80,
                   help="kHz per mGauss for the sine model")
    p.add_argument("--out", help="output path")

    p = sub.add_parser("figure", help="run a figure preset")
    p.add_argument("name", help="one of: " + ", ".join(FIGURES))
    common(p)

    p = sub.add_parser("validate", help="parse and validate .ionseq files")
    p.add_argument("sequence", nargs="+")
    p.add_argument("--config", help="TOML configuration file")
    return parser


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("IONSIM_WORKERS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"IONSIM_WORKERS must be an integer, got {env!r}") from None
        if value <= 0:
            raise UsageError("IONSIM_WORKERS must be positive")
        return value
    return 1


def _load(args) -> RunConfig:
    if getattr(args, "config", None):
        if not Path(args.config).is_file():
            raise UsageError(f"config file not found: {args.config}")
        return load_config(args.config)
    return RunConfig(sim=SimConfig(), master_seed=0)


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not valid UTF-8") from None


def _manifest(command, seed, shots, run_cfg: RunConfig, files: dict, **extra) -> dict:
    return {"tool": "ionsim", "version": __version__, "command": command, "seed": seed,
            "shots": shots, "config_hash": sim_config_hash(run_cfg.sim),
            "config": run_cfg.source or None, "files": files, **extra}


# -- run -------------------------------------------------------------------------

def cmd_run(args, out, err) -> int:
    run_cfg = _load(args)
    seed = run_cfg.master_seed if args.seed is None else args.seed
    workers = _workers(args)
    text = _read_text(args.sequence)
    compiled = validate(parse(text), run_cfg.sim)
    if args.experiment:
        compiled = [c for c in compiled if c.name == args.experiment]
        if not compiled:
            raise UsageError(f"no experiment named {args.experiment!r} in {args.sequence}")
    for c in compiled:
        for w in c.warnings:
            print(f"{args.sequence}: warning: {w}", file=err)
    files, texts = {}, []
    offset = 0
    for c in compiled:
        shots = args.shots or run_cfg.shots or c.shots
        scan = run_scan(c.sequence, c.scan, shots, run_cfg.sim, seed, workers, shot_offset=offset)
        offset += len(scan) * shots
        header = {"tool": f"ionsim {__version__}", "experiment": c.name, "kind": c.kind or "",
                  "scan_axis": c.scan.axis, "scan_unit": AXIS_UNITS[c.scan.axis], "seed": seed,
                  "shots_per_point": shots, "config_hash": sim_config_hash(run_cfg.sim),
                  "sequence_sha256": sha256_text(text)}
        table = {"scan_value": scan.values, "p_D": scan.p_d, "std_err": scan.std_err,
                 "shots": scan.shots}
        body = table_to_text(table, header)
        texts.append((c.name, body))
    if args.out is None:
        out.write("\n".join(body for _, body in texts))
        return EXIT_OK
    base = Path(args.out)
    paths = [base] if len(texts) == 1 else [base.with_name(f"{base.stem}_{n}{base.suffix or '.csv'}")
                                            for n, _ in texts]
    for path, (_, body) in zip(paths, texts):
        path.write_text(body, encoding="utf-8")
        files[path.name] = sha256_text(body)
    manifest = _manifest(["run", Path(args.sequence).name], seed, args.shots, run_cfg, files,
                         sequence=text, sequence_sha256=sha256_text(text))
    write_manifest(base.with_name(base.stem + ".manifest.json"), manifest)
    for path in paths:
        print(f"wrote {path}", file=out)
    return EXIT_OK


# -- fit -------------------------------------------------------------------------

def _need(table, *names):
    try:
        return table.column(*names)
    except KeyError as exc:
        raise InputError(f"model/data mismatch: {exc.args[0]}") from None


def _xy(table):
    names = list(table.columns)
    if len(names) < 2:
        raise InputError("model/data mismatch: need at least two columns")
    return table.columns[names[0]], table.columns[names[1]]


def _shots(table):
    return table.columns.get("shots")


def _errors(table):
    for name in table.columns:
        if name.endswith("_err") or name == "std_err":
            return table.columns[name]
    return None


def fit_table(table, model: str, duration_us: float | None = None,
              susceptibility: float = 2.80) -> list:
    """Fit ``model`` to a parsed table; returns (label, FitReport) pairs and
    optionally a ("preferred", name) entry."""
    x, y = _xy(table)
    minimum = {"linear": 3, "exponential": 2, "contrast-decay": 2, "sine": 4, "fringe": 4}.get(model, 5)
    if x.size < minimum:
        raise InputError(f"model/data mismatch: {model} needs at least {minimum} rows")
    if model in ("line", "line-broadened"):
        if duration_us is None:
            hdr = table.header.get("pulse_duration_us")
            duration_us = float(hdr) if hdr else 1000.0
        rep = analysis.fit_line_center(x, y, _shots(table), duration_us,
                                       broadened=model == "line-broadened")
        return [("line", rep)]
    if model == "fringe":
        return [("fringe", analysis.fit_fringe(x, y, _shots(table)))]
    if model == "contrast-decay":
        errs = _errors(table)
        rep = analysis.fit_contrast_decay(x, y, errs)
        return [("gaussian", rep.gaussian), ("exponential", rep.exponential),
                ("preferred", rep.preferred)]
    if model == "exponential":
        shots = _shots(table)
        if shots is None:
            raise InputError("model/data mismatch: exponential fit needs a 'shots' column")
        return [("exponential", analysis.fit_exponential_decay(x, y, shots))]
    if model == "linear":
        return [("linear", analysis.fit_linear(x, y, _errors(table)))]
    return [("sine", analysis.fit_sine_drift(x, y, _errors(table), susceptibility=susceptibility))]


def render_fits(results) -> str:
    text, machine = [], {}
    for label, rep in results:
        if label == "preferred":
            text.append(f"preferred model: {rep}")
            machine["preferred"] = rep
            continue
        text.append(f"[{label}]")
        text.append(rep.to_text())
        text.append("")
        machine[label] = rep.to_dict()
    body = "\n".join(text).rstrip() + "\n"
    return body + "\n# machine-readable\n" + json.dumps(machine, indent=2, sort_keys=True) + "\n"


def cmd_fit(args, out, err) -> int:
    try:
        table = parse_table(_read_text(args.data))
    except ValueError as exc:
        raise InputError(f"{args.data}: {exc}") from None
    try:
        results = fit_table(table, args.model, args.duration_us, args.susceptibility)
    except ValueError as exc:
        raise InputError(f"model/data mismatch: {exc}") from None
    text = render_fits(results)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}", file=out)
    else:
        out.write(text)
    return EXIT_OK


# -- figure ----------------------------------------------------------------------

def cmd_figure(args, out, err) -> int:
    if args.name not in FIGURES:
        raise UsageError(f"unknown figure {args.name!r}; available presets: {', '.join(FIGURES)}")
    run_cfg = _load(args)
    seed = args.seed if args.seed is not None else (run_cfg.master_seed if args.config else 1)
    result = run_figure(args.name, run_cfg.sim, seed, args.shots, _workers(args))
    fits = render_fits(list(result.fits.items()))
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        files = {}
        header = {"tool": f"ionsim {__version__}", "figure": result.name, "seed": seed,
                  "config_hash": sim_config_hash(run_cfg.sim)}
        for name, columns in result.tables.items():
            body = table_to_text(columns, {**header, "table": name})
            path = outdir / f"{result.name}_{name}.csv"
            path.write_text(body, encoding="utf-8")
            files[path.name] = sha256_text(body)
        path = outdir / f"{result.name}_fits.txt"
        path.write_text(result.comparison + "\n\n" + fits, encoding="utf-8")
        files[path.name] = sha256_text(result.comparison + "\n\n" + fits)
        write_manifest(outdir / f"{result.name}_manifest.json",
                       _manifest(["figure", result.name], seed, args.shots, run_cfg, files,
                                 flags=list(result.flags)))
    print(result.comparison, file=out)
    return EXIT_OK


# -- validate --------------------------------------------------------------------

def cmd_validate(args, out, err) -> int:
    cfg = _load(args).sim
    status = EXIT_OK
    for path in args.sequence:
        try:
            compiled = validate(parse(_read_text(path)), cfg)
        except SeqLangError as exc:
            print(f"{path}:{exc.line}:{exc.column}: {exc.message}", file=err)
            status = EXIT_PARSE
            continue
        for c in compiled:
            for w in c.warnings:
                print(f"{path}: warning: {w}", file=err)
        names = ", ".join(c.name for c in compiled)
        print(f"{path}: ok ({len(compiled)} experiment{'s' if len(compiled) != 1 else ''}: {names})",
              file=out)
    return status


COMMANDS = {"run": cmd_run, "fit": cmd_fit, "figure": cmd_figure, "validate": cmd_validate}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        return COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        print(f"ionsim: error: {exc}", file=err)
        return EXIT_USAGE
    except SeqLangError as exc:
        print(f"ionsim: {exc.line}:{exc.column}: {exc.message}", file=err)
        return EXIT_PARSE
    except (ConfigError, InputError) as exc:
        print(f"ionsim: error: {exc}", file=err)
        return EXIT_PARSE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"ionsim: runtime error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

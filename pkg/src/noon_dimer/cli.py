"""Command-line driver.

    noon-dimer <subcommand> [--config PATH] [--out DIR] [--seed U64] [--threads K]

The subcommand may be omitted when the config names one.  Each run writes
CSV tables plus ``manifest.json`` (resolved config, version, seed and file
hashes) into the output directory.  Exit status: 0 on success, 1 when a
computation fails, 2 for configuration or usage errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import traceback
from typing import Optional, Sequence

from . import __version__
from .config import SUBCOMMANDS, JobConfig, build_config, parse_config
from .errors import ConfigError, DimerError
from .jobs import JOBS, JobOutput, Table

SCHEMA_VERSION = "1.0.0"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(float(v))
    if hasattr(v, "item"):  # numpy scalar
        return _fmt(v.item())
    return str(v)


def format_table(table: Table, subcommand: str) -> str:
    """CSV text with ``#`` metadata lines and round-trip float formatting."""
    lines = [f"# noon-dimer {subcommand} {table.name}", f"# version={__version__}"]
    for k in sorted(table.meta):
        lines.append(f"# {k}={_fmt(table.meta[k])}")
    lines.append(",".join(table.columns))
    for row in table.rows:
        if len(row) != len(table.columns):
            raise ValueError(f"{table.name}: row width {len(row)} != {len(table.columns)}")
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, float) and obj != obj:
        return None
    return obj


def write_outputs(cfg: JobConfig, out: JobOutput, directory: str) -> dict:
    """Write tables and manifest; return the manifest dictionary."""
    os.makedirs(directory, exist_ok=True)
    files = {}
    for t in out.tables:
        files[t.name] = format_table(t, cfg.subcommand)
    files.update(out.extra_files)
    if cfg.subcommand == "feasibility":
        files["feasibility.json"] = json.dumps(_jsonable(out.summary["report"]), indent=2,
                                               sort_keys=True) + "\n"
    hashes = {}
    for name in sorted(files):
        data = files[name].encode()
        with open(os.path.join(directory, name), "wb") as fh:
            fh.write(data)
        hashes[name] = hashlib.sha256(data).hexdigest()
    summary = {k: v for k, v in out.summary.items() if k != "report"}
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "subcommand": cfg.subcommand,
        "seed": cfg.ensemble["seed"],
        "config": cfg.to_dict(),
        "files": hashes,
        "summary": _jsonable(summary),
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="noon-dimer",
        description="Two-mode dimer simulations: spectra, sweeps, protocol runs and reports.",
    )
    p.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS,
                   help="experiment to run (may come from the config instead)")
    p.add_argument("--config", metavar="PATH", help="TOML config or a manifest.json from an earlier run")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides output.directory)")
    p.add_argument("--seed", metavar="U64", type=_u64, help="master seed (overrides ensemble.seed)")
    p.add_argument("--threads", metavar="K", type=_positive_int, default=1,
                   help="worker processes for independent scan points")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return v


def resolve_job(args) -> JobConfig:
    """Merge the config file and command-line overrides into one JobConfig."""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc.strerror}") from exc
        cfg = parse_config(text)
    else:
        cfg = build_config({})
    sub = args.subcommand or cfg.subcommand
    if sub is None:
        raise ConfigError("no subcommand given on the command line or in the config")
    if args.subcommand and cfg.subcommand and args.subcommand != cfg.subcommand:
        raise ConfigError(f"config is for {cfg.subcommand!r} but {args.subcommand!r} was requested")
    d = cfg.to_dict()
    d["subcommand"] = sub
    if args.seed is not None:
        d["ensemble"]["seed"] = args.seed
    if args.out:
        d["output"]["directory"] = args.out
    return build_config(d)


def _qualified(exc: BaseException) -> str:
    """``module: message`` using the innermost package frame of the traceback."""
    module = type(exc).__module__
    for frame in traceback.extract_tb(exc.__traceback__):
        path = frame.filename.replace(os.sep, "/")
        if "/noon_dimer/" in path:
            module = "noon_dimer." + os.path.splitext(os.path.basename(path))[0]
    return f"{module}: {type(exc).__name__}: {exc}"


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_job(args)
    except ConfigError as exc:
        print(f"noon-dimer: config error: {exc}", file=sys.stderr)
        return 2
    try:
        out = JOBS[cfg.subcommand](cfg, threads=args.threads)
        manifest = write_outputs(cfg, out, cfg.output["directory"])
    except ConfigError as exc:
        print(f"noon-dimer: config error: {exc}", file=sys.stderr)
        return 2
    except (DimerError, ArithmeticError, ValueError) as exc:
        print(f"noon-dimer: {_qualified(exc)}", file=sys.stderr)
        return 1
    names = ", ".join(sorted(manifest["files"]))
    print(f"wrote {names}, manifest.json to {cfg.output['directory']}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

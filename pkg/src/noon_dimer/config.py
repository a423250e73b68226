"""Job configuration: TOML text (or a previously written manifest) to a
validated :class:`JobConfig`.

Grammar: a TOML document with an optional top-level ``subcommand`` key and the
tables listed in :data:`SCHEMA`.  Unknown tables or keys are rejected with a
suggestion.  A JSON manifest written by the CLI is accepted as well; its
``config`` object is read back verbatim.
"""
from __future__ import annotations

import copy
import difflib
import json
import math
import re
from dataclasses import dataclass
from typing import Any, Optional

try:
    import tomllib as tomli
except ImportError:  # Python < 3.11
    import tomli

from .errors import ConfigError

SUBCOMMANDS = ("spectrum", "wkb", "quench", "protocol", "nex-scan", "fscan",
               "bias-scan", "husimi", "feasibility")

OPT_FLOAT = "float?"
FLOAT_LIST = "float[]"

# block -> key -> (type, default)
SCHEMA: dict = {
    "model": {
        "N": (int, 10),
        "U": (OPT_FLOAT, None),
        "NU": (float, 1.0),
        "J": (OPT_FLOAT, None),
        "J_max": (float, 1.1),
        "Delta": (float, 0.0),
        "Delta_max": (OPT_FLOAT, None),
    },
    "schedule": {
        "mode": (str, "constant"),
        "dotJ": (float, 1e-3),
        "dotDelta": (float, 1e-3),
        "lambda": (float, 0.1),
        "dt": (float, 0.1),
        "phi": (float, 0.0),
        "duration": (OPT_FLOAT, None),
        "J_start": (OPT_FLOAT, None),
        "initial": (str, "auto"),
        "record_stride": (int, 100),
        "levels": (int, 6),
        "J_floor": (float, 1e-4),
    },
    "scan": {
        "variable": (str, "auto"),
        "start": (OPT_FLOAT, None),
        "stop": (OPT_FLOAT, None),
        "steps": (int, 11),
        "log": (bool, False),
        "values": (FLOAT_LIST, None),
    },
    "ensemble": {
        "points": (int, 2000),
        "M": (int, 0),
        "seed": (int, 0),
        "mode": (str, "gaussian"),
        "dt": (float, 0.02),
    },
    "state": {
        "kind": (str, "X"),
        "theta": (float, 0.0),
        "phi": (float, 0.0),
        "rotate_y": (float, 0.0),
        "resolution": (FLOAT_LIST, [64.0, 128.0]),
    },
    "trap": {
        "V0": (float, 1.28e-27),
        "sigma": (float, 10e-6),
        "lambda0": (float, 1064e-9),
        "m": (OPT_FLOAT, None),
        "rho": (float, 1e20),
        "a": (OPT_FLOAT, None),
        "P0": (float, 0.1),
        "tau": (float, 1e-3),
        "lambda_rate": (float, 0.1),
        "C_split": (float, 0.07),
        "C_branch": (float, 0.02),
    },
    "output": {
        "directory": (str, "out"),
        "formats": (list, ["csv", "json"]),
    },
}

CHOICES = {
    ("schedule", "mode"): ("constant", "adaptive"),
    ("schedule", "initial"): ("auto", "ground", "X"),
    ("scan", "variable"): ("auto", "J", "phi", "dotJ", "lambda", "Delta_over_U", "N"),
    ("ensemble", "mode"): ("gaussian", "circle"),
    ("state", "kind"): ("X", "Z", "coherent", "even_cat", "odd_cat", "ground"),
}


@dataclass
class JobConfig:
    subcommand: Optional[str]
    model: dict
    schedule: dict
    scan: dict
    ensemble: dict
    state: dict
    trap: dict
    output: dict

    def to_dict(self) -> dict:
        d = {"subcommand": self.subcommand}
        for block in SCHEMA:
            d[block] = copy.deepcopy(getattr(self, block))
        return d

    @property
    def U(self) -> float:
        m = self.model
        return m["U"] if m["U"] is not None else m["NU"] / m["N"]


def _suggest(name: str, options) -> str:
    lower = {o.lower(): o for o in options}
    hit = difflib.get_close_matches(name.lower(), list(lower), n=1, cutoff=0.5)
    return f"; did you mean {lower[hit[0]]!r}?" if hit else ""


def _line_of(text: Optional[str], key: str) -> str:
    if not text:
        return ""
    pat = re.compile(r"^\s*(\[\s*)?" + re.escape(key) + r"\s*[=\]]")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return f"line {i}: "
    return ""


def _coerce(block, key, kind, value, text):
    where = _line_of(text, key)
    label = f"{where}{block}.{key}"
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{label} must be an integer, got {value!r}")
        return value
    if kind in (float, OPT_FLOAT):
        if value is None and kind == OPT_FLOAT:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{label} must be a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{label} must be finite")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{label} must be true or false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{label} must be a string, got {value!r}")
        choices = CHOICES.get((block, key))
        if choices and value not in choices:
            raise ConfigError(f"{label} must be one of {choices}, got {value!r}{_suggest(value, choices)}")
        return value
    if kind == FLOAT_LIST:
        if value is None:
            return None
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{label} must be a list of numbers")
        return [float(v) for v in value]
    if kind is list:
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{label} must be a list of strings")
        return list(value)
    raise AssertionError(kind)  # pragma: no cover


def build_config(data: dict, text: Optional[str] = None) -> JobConfig:
    """Validate a nested dictionary and fill in defaults."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table of blocks")
    data = dict(data)
    sub = data.pop("subcommand", None)
    if sub is not None and sub not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {sub!r}{_suggest(sub, SUBCOMMANDS)}")
    resolved = {}
    for block, body in data.items():
        if block not in SCHEMA:
            raise ConfigError(f"{_line_of(text, block)}unknown block [{block}]{_suggest(block, SCHEMA)}")
        if not isinstance(body, dict):
            raise ConfigError(f"[{block}] must be a table")
        for key in body:
            if key not in SCHEMA[block]:
                raise ConfigError(
                    f"{_line_of(text, key)}unknown key {key!r} in [{block}]"
                    f"{_suggest(key, SCHEMA[block])}"
                )
    for block, fields in SCHEMA.items():
        body = data.get(block, {})
        out = {}
        for key, (kind, default) in fields.items():
            value = body.get(key, copy.deepcopy(default))
            out[key] = _coerce(block, key, kind, value, text) if value is not None else None
        resolved[block] = out
    cfg = JobConfig(sub, **resolved)
    _validate(cfg, text)
    return cfg


def _validate(cfg: JobConfig, text):
    m = cfg.model
    if m["N"] < 1:
        raise ConfigError(f"{_line_of(text, 'N')}model.N must be >= 1")
    if m["NU"] <= 0 or (m["U"] is not None and m["U"] <= 0):
        raise ConfigError("the interaction must be attractive: U > 0 (and N U > 0)")
    U = cfg.U
    if m["Delta_max"] is not None and not 0 < m["Delta_max"] < U:
        raise ConfigError(
            f"{_line_of(text, 'Delta_max')}model.Delta_max = {m['Delta_max']} violates the bias "
            f"constraint 0 < Delta_max < U = {U}"
        )
    if m["J_max"] <= 0:
        raise ConfigError("model.J_max must be positive")
    s = cfg.schedule
    for key in ("dotJ", "dotDelta", "lambda", "dt"):
        if s[key] <= 0:
            raise ConfigError(f"{_line_of(text, key)}schedule.{key} must be positive")
    if s["levels"] < 1 or s["record_stride"] < 0:
        raise ConfigError("schedule.levels >= 1 and schedule.record_stride >= 0 required")
    if cfg.scan["steps"] < 1:
        raise ConfigError("scan.steps must be >= 1")
    e = cfg.ensemble
    if e["points"] < 1 or e["M"] < 0 or e["seed"] < 0 or e["dt"] <= 0:
        raise ConfigError("ensemble: points >= 1, M >= 0, seed >= 0, dt > 0 required")
    if e["seed"] >= 2**64:
        raise ConfigError("ensemble.seed must fit in 64 bits")
    res = cfg.state["resolution"]
    if len(res) != 2 or min(res) < 8:
        raise ConfigError("state.resolution must be two numbers, each >= 8")


def parse_config(text: str) -> JobConfig:
    """Parse TOML config text, or the JSON of a manifest/config object."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from exc
        if isinstance(data, dict) and "config" in data and "schema_version" in data:
            data = data["config"]
        return build_config(data)
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config syntax: {exc}") from exc
    return build_config(data, text)


def default_config(subcommand: Optional[str] = None) -> JobConfig:
    return build_config({"subcommand": subcommand} if subcommand else {})

"""Flat ``section.key = value`` configuration files.

One assignment per line; ``#`` starts a comment. Keys without a section
prefix belong to the default section of the command that reads the file.
Strings are unquoted, booleans are ``true``/``false``, lists are
comma-separated. Every value is type- and range-checked, and errors carry
the line number. Written configs (run manifests) use the same format with
17 significant digits, so a manifest can be fed straight back in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import __version__

REQUIRED = object()


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    kind: str  # int | float | bool | str | floats
    default: Any = REQUIRED
    check: Callable[[Any], str | None] | None = None
    doc: str = ""


def _positive(owner: str, name: str):
    return lambda v: None if v > 0 else f"{owner}: {name} must be > 0"


def _nonneg(owner: str, name: str):
    return lambda v: None if v >= 0 else f"{owner}: {name} must be >= 0"


def _choice(owner: str, name: str, options):
    return lambda v: None if v in options else f"{owner}: {name} must be one of {', '.join(options)}"


def _all_positive(owner: str, name: str):
    return lambda v: None if v and all(x > 0 for x in v) else f"{owner}: every {name} entry must be > 0"


EXPERIMENT_KINDS = ("equilibrium", "order-parameter", "particle-vs-macro",
                    "hyperbolicity-scan", "positivity-scan", "reversal-phase")
PRESETS = ("uniform", "riemann", "sine", "bands")

SCHEMA: dict[str, dict[str, Key]] = {
    "experiment": {
        "kind": Key("str", REQUIRED, _choice("ExperimentConfig", "kind", EXPERIMENT_KINDS)),
        "seed": Key("int", 12345, _nonneg("ExperimentConfig", "seed")),
        "kappa_grid": Key("floats", [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
                          _all_positive("GvmParams", "kappa")),
        "n_c": Key("int", 201, _positive("HyperbolicityReport", "n_c")),
        "n_X": Key("int", 201, _positive("HyperbolicityReport", "n_X")),
        "n_random": Key("int", 1000, _positive("ExperimentConfig", "n_random")),
        "hist_bins": Key("int", 48, _positive("ExperimentConfig", "hist_bins")),
        "n_bins": Key("int", 20, _positive("ExperimentConfig", "n_bins")),
        "scenario": Key("str", "step-front", _choice("ExperimentConfig", "scenario",
                                                     ("uniform-delta", "step-front", "uniform-equal"))),
        "density_ratio": Key("float", 0.25, _positive("ExperimentConfig", "density_ratio")),
        "n_cells": Key("int", 200, _positive("MacroState", "n_cells")),
        "n_initial": Key("int", 10, _positive("ExperimentConfig", "n_initial")),
    },
    "particles": {
        "n": Key("int", REQUIRED, _positive("SimParams", "n")),
        "box_length": Key("float", REQUIRED, _positive("SimParams", "box_length")),
        "radius": Key("float", REQUIRED, _positive("SimParams", "radius")),
        "v0": Key("float", 1.0, _nonneg("SimParams", "v0")),
        "nu": Key("float", 1.0, _nonneg("SimParams", "nu")),
        "d_noise": Key("float", 0.5, _nonneg("SimParams", "d_noise")),
        "dt": Key("float", 0.01, _positive("SimParams", "dt")),
        "reversals": Key("bool", False),
        "lambda0": Key("float", 0.0, _nonneg("SimParams", "lambda0")),
        "lambda1": Key("float", 0.0, _nonneg("SimParams", "lambda1")),
        "seed": Key("int", 0, lambda v: None if 0 <= v < 2**64 else "SimParams: seed must fit in 64 bits"),
        "t_end": Key("float", 1.0, _nonneg("SimParams", "t_end")),
        "stride": Key("int", 0, _nonneg("SimParams", "stride")),
        "n_bins": Key("int", 20, _positive("SimParams", "n_bins")),
        "init": Key("str", "gvm", _choice("SimParams", "init", ("gvm", "spread", "aligned"))),
        "fraction_plus": Key("float", 0.5, lambda v: None if 0 <= v <= 1
                             else "SimParams: fraction_plus must be in [0, 1]"),
        "theta_bar": Key("float", 0.0),
    },
    "macro": {
        "kappa": Key("float", 2.0, _positive("GvmParams", "kappa")),
        "r": Key("float", 0.0, _nonneg("NonlocalConstant", "r")),  # 0 switches the diffusion term off
        "lambda0": Key("float", 0.0, _nonneg("SolverParams", "lambda0")),
        "lambda1": Key("float", 0.0, _nonneg("SolverParams", "lambda1")),
        "cfl": Key("float", 0.9, lambda v: None if 0 < v < 1 else "SolverParams: cfl must be in (0, 1)"),
        "t_end": Key("float", 1.0, _nonneg("SolverParams", "t_end")),
        "boundary": Key("str", "periodic", _choice("SolverParams", "boundary", ("periodic",))),
        "n_cells": Key("int", 200, lambda v: None if v >= 3 else "MacroState: n_cells must be >= 3"),
        "length": Key("float", 10.0, _positive("MacroState", "length")),
        "stride": Key("int", 0, _nonneg("SolverParams", "stride")),
        "max_steps": Key("int", 0, _nonneg("SolverParams", "max_steps")),
        "preset": Key("str", "uniform", _choice("MacroState", "preset", PRESETS)),
        "rho_plus": Key("float", 1.0, _nonneg("MacroState", "rho_plus")),
        "rho_minus": Key("float", 1.0, _nonneg("MacroState", "rho_minus")),
        "theta": Key("float", 0.0),
        "right_rho_plus": Key("float", 0.25, _nonneg("MacroState", "right_rho_plus")),
        "right_rho_minus": Key("float", 0.0, _nonneg("MacroState", "right_rho_minus")),
        "right_theta": Key("float", 0.0),
        "x0": Key("float", -1.0),
        "amplitude": Key("float", 0.01),
        "mode": Key("int", 1, _positive("MacroState", "mode")),
        "field": Key("str", "theta", _choice("MacroState", "field", ("theta", "rho_plus", "rho_minus"))),
        "background": Key("float", 0.5, _nonneg("MacroState", "background")),
        "peak": Key("float", 1.0, _nonneg("MacroState", "peak")),
        "width": Key("float", 0.5, _positive("MacroState", "width")),
    },
}


@dataclass
class Config:
    """Parsed values per section (defaults filled in) and source line numbers."""

    values: dict[str, dict[str, Any]]
    lines: dict[tuple[str, str], int] = field(default_factory=dict)
    path: str | None = None

    def section(self, name: str) -> dict[str, Any]:
        return self.values[name]

    def line_of(self, section: str, key: str) -> int | None:
        return self.lines.get((section, key))

    def get(self, dotted: str):
        s, k = dotted.split(".", 1)
        return self.values[s][k]

    def set(self, dotted: str, value) -> None:
        s, k = dotted.split(".", 1)
        if s not in SCHEMA or k not in SCHEMA[s]:
            raise ConfigError(f"unknown key {dotted!r}")
        self.values[s][k] = _convert(SCHEMA[s][k], value if isinstance(value, str) else format_value(value),
                                     dotted, None)


def _convert(spec: Key, raw: str, name: str, lineno: int | None):
    where = f"line {lineno}: " if lineno else ""
    try:
        if spec.kind == "int":
            value = int(raw, 10)
        elif spec.kind == "float":
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
        elif spec.kind == "bool":
            if raw not in ("true", "false"):
                raise ValueError
            value = raw == "true"
        elif spec.kind == "floats":
            value = [float(x) for x in raw.split(",") if x.strip()]
            if not all(math.isfinite(v) for v in value):
                raise ValueError
        else:
            value = raw
    except ValueError:
        raise ConfigError(f"{where}{name}: cannot parse {raw!r} as {spec.kind}") from None
    if spec.check is not None:
        msg = spec.check(value)
        if msg:
            raise ConfigError(f"{where}{name} = {raw}: {msg}")
    return value


def defaults() -> dict[str, dict[str, Any]]:
    return {s: {k: (list(v.default) if isinstance(v.default, list) else v.default)
                for k, v in keys.items()} for s, keys in SCHEMA.items()}


def parse_config_text(text: str, default_section: str | None = None,
                      required_sections: tuple[str, ...] = (), path: str | None = None) -> Config:
    values = defaults()
    lines: dict[tuple[str, str], int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line.strip()!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if "." in key:
            section, name = key.split(".", 1)
        elif default_section is not None:
            section, name = default_section, key
        else:
            raise ConfigError(f"line {lineno}: key {key!r} needs a section prefix")
        if section == "meta":
            continue  # provenance written into manifests; not an input
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {section}.{name}")
        if (section, name) in lines:
            raise ConfigError(f"line {lineno}: duplicate key {section}.{name} "
                              f"(first set on line {lines[(section, name)]})")
        lines[(section, name)] = lineno
        values[section][name] = _convert(SCHEMA[section][name], raw, f"{section}.{name}", lineno)
    for section in required_sections:
        for name, spec in SCHEMA[section].items():
            if values[section][name] is REQUIRED:
                raise ConfigError(f"missing required key {section}.{name}")
    return Config(values, lines, path)


def parse_config(path: str | Path, default_section: str | None = None,
                 required_sections: tuple[str, ...] = ()) -> Config:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(encoding="utf-8"), default_section, required_sections, str(p))


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(float(x)) for x in v)
    return str(v)


def format_config(config: Config, sections: tuple[str, ...], extra: dict[str, Any] | None = None) -> str:
    """Echo the given sections (every key, defaults included) plus ``meta`` lines."""
    out = [f"meta.version = {__version__}"]
    for k, v in sorted((extra or {}).items()):
        out.append(f"meta.{k} = {format_value(v)}")
    for s in sections:
        for k in SCHEMA[s]:
            v = config.values[s][k]
            if v is REQUIRED:
                continue
            out.append(f"{s}.{k} = {format_value(v)}")
    return "\n".join(out) + "\n"


def build_object(config: Config, section: str, factory: Callable[..., Any], **kwargs):
    """Call ``factory(**kwargs)``; map a ``ValueError`` to the offending key's line."""
    try:
        return factory(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        for name in kwargs:
            if f" {name} " in f" {msg} ".replace(":", " ").replace(",", " "):
                line = config.line_of(section, name)
                if line is not None:
                    raise ConfigError(f"line {line}: {section}.{name}: {msg}") from None
        raise ConfigError(msg) from None

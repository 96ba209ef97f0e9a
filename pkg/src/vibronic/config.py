"""INI-style run configuration.

A molecule file holds a ``[molecule]`` section::

    [molecule]
    nu_pre = 3830.91, 1649.27
    nu_post = 2619.09, 1602.85
    shift = 5.05, 49.47
    theta = -0.16598          ; radians, two modes only
    # rotation = 1,0; 0,1     ; alternatively a full matrix, rows separated by ';'

The long field names ``shift_K``, ``duschinsky_theta`` and
``duschinsky_matrix`` are accepted as well.

A run file may add ``[run]``, ``[detector]``, ``[noise]`` and ``[circuit]``
sections whose keys mirror the command-line flags.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .hardware import CircuitParams
from .measurement import DetectorModel
from .molparams import PRESETS, MolecularTransition, ParameterError, preset
from .noise import CONTEXTS, ModeContext, NoiseParams


class ConfigError(ValueError):
    pass


def _floats(text: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def parse_ints(text: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from None


def read_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{path}: no such file")
    try:
        cp.read_string(p.read_text(), source=str(p))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


# short key -> accepted spellings (configparser lower-cases keys)
MOLECULE_KEYS = {
    "nu_pre": ("nu_pre",),
    "nu_post": ("nu_post",),
    "shift": ("shift", "shift_k"),
    "theta": ("theta", "duschinsky_theta"),
    "rotation": ("rotation", "duschinsky_matrix"),
    "label": ("label",),
    "preset": ("preset",),
}


def molecule_from_section(sec, source: str = "molecule") -> MolecularTransition:
    vals = {}
    alias = {name: short for short, names in MOLECULE_KEYS.items() for name in names}
    for key in sec:
        if key not in alias:
            raise ConfigError(f"[{source}] {key}: unknown field")
        if alias[key] in vals:
            raise ConfigError(f"[{source}] {key}: given twice")
        vals[alias[key]] = sec[key]
    if "preset" in vals:
        return preset(vals["preset"])
    kwargs = {"label": vals.get("label", source)}
    for key, dest in (("nu_pre", "nu_pre"), ("nu_post", "nu_post"), ("shift", "shift_K")):
        if key in vals:
            kwargs[dest] = _floats(vals[key], f"[{source}] {key}")
    for key, dest in (("nu_pre", "nu_pre"), ("nu_post", "nu_post"), ("shift", "shift_K")):
        if dest not in kwargs:
            raise ConfigError(f"[{source}] {key}: missing field")
    if "theta" in vals:
        th = _floats(vals["theta"], f"[{source}] theta")
        if len(th) != 1:
            raise ConfigError(f"[{source}] theta: expected a single angle")
        kwargs["duschinsky_theta"] = th[0]
    if "rotation" in vals:
        rows = [_floats(r, f"[{source}] rotation") for r in vals["rotation"].split(";") if r.strip()]
        if len({len(r) for r in rows}) != 1:
            raise ConfigError(f"[{source}] rotation: rows have unequal length")
        kwargs["duschinsky_matrix"] = np.array(rows, dtype=float)
    try:
        return MolecularTransition(**kwargs)
    except ParameterError as exc:
        raise ConfigError(f"[{source}] {exc}") from None


def load_molecule(spec: str) -> MolecularTransition:
    """Preset name or path to an INI file with a [molecule] section."""
    if spec.lower() in PRESETS:
        return preset(spec)
    p = Path(spec)
    if not p.exists():
        raise ConfigError(f"molecule {spec!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a file")
    cp = read_ini(p)
    if not cp.has_section("molecule"):
        raise ConfigError(f"{spec}: missing [molecule] section")
    return molecule_from_section(cp["molecule"], f"{p.name}:molecule")


def detector_from_section(sec) -> DetectorModel:
    vals = {}
    for key in ("t_A", "t_B", "f_A", "f_B"):
        if key.lower() in sec:
            try:
                vals[key] = float(sec[key.lower()])
            except ValueError:
                raise ConfigError(f"[detector] {key}: not a number") from None
    return DetectorModel(**vals)


def noise_from_section(sec) -> NoiseParams:
    base = NoiseParams()
    scalar = {"cross_kerr_khz", "g_sq", "g_bs", "displacement_ns", "verify_us"}
    kwargs: dict = {}
    ctx = {c: [list((m.kerr_khz, m.t1_us)) for m in base.context(c)] for c in CONTEXTS}
    for key, raw in sec.items():
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"[noise] {key}: not a number") from None
        if key in scalar:
            kwargs[key] = val
            continue
        parts = key.split("_")
        if len(parts) >= 3 and parts[0] in CONTEXTS and parts[1] in ("a", "b"):
            field = "_".join(parts[2:])
            if field in ("kerr_khz", "t1_us"):
                ctx[parts[0]][0 if parts[1] == "a" else 1][0 if field == "kerr_khz" else 1] = val
                continue
        raise ConfigError(f"[noise] {key}: unknown field")
    for c in CONTEXTS:
        kwargs[c] = tuple(ModeContext(k, t) for k, t in ctx[c])
    try:
        return NoiseParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[noise] {exc}") from None


def circuit_from_section(sec) -> CircuitParams:
    fields = ("g_A", "g_B", "delta_A", "delta_B", "K_C", "Omega_1", "Omega_2", "delta_1", "delta_2", "Delta")
    lower = {f.lower(): f for f in fields}
    vals = {}
    for key, raw in sec.items():
        if key not in lower:
            raise ConfigError(f"[circuit] {key}: unknown field")
        try:
            vals[lower[key]] = float(raw)
        except ValueError:
            raise ConfigError(f"[circuit] {key}: not a number") from None
    for f in ("g_A", "g_B", "delta_A", "delta_B", "K_C"):
        if f not in vals:
            raise ConfigError(f"[circuit] {f}: missing field")
    return CircuitParams(**vals)

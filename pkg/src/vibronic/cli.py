"""Command-line front end.

Exit codes: 0 success, 1 computation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import fcf as fcf_mod
from . import hardware, measurement, noise
from .config import (ConfigError, circuit_from_section, detector_from_section, load_molecule,
                     noise_from_section, parse_ints, read_ini)
from .fockspace import FockSpaceError, StateVector, doktorov_apply, fock_state
from .hardware import CircuitParams, SingularityError
from .molparams import ParameterError, doktorov_params

EXIT_COMPUTE = 1
EXIT_CONFIG = 2

# [run] keys and the argparse destination they feed
RUN_KEYS = {
    "molecule": "molecule", "initial": "initial", "nmax": "nmax", "cutoff": "cutoff",
    "shots": "shots", "runs_per_cell": "runs_per_cell", "seed": "seed", "scheme": "scheme",
    "state": "state", "fwhm": "fwhm", "output": "output", "bit_flip": "bit_flip",
    "method": "method", "eta": "eta", "detector": "detector",
}
INT_KEYS = {"nmax", "cutoff", "shots", "runs_per_cell", "seed"}
FLOAT_KEYS = {"fwhm", "bit_flip", "eta"}


def _merge_config(args: argparse.Namespace) -> dict:
    """Fold a --config file into ``args``; a key set in both places is an error."""
    sections: dict = {}
    if getattr(args, "config", None) is None:
        return sections
    cp = read_ini(args.config)
    for name in cp.sections():
        sections[name] = cp[name]
    if cp.has_section("run"):
        for key, raw in cp["run"].items():
            if key not in RUN_KEYS or not hasattr(args, RUN_KEYS[key]):
                raise ConfigError(f"[run] {key}: not accepted by '{args.command}'")
            dest = RUN_KEYS[key]
            if getattr(args, dest) is not None:
                raise ConfigError(f"[run] {key}: also given on the command line (conflict)")
            try:
                val = int(raw) if key in INT_KEYS else float(raw) if key in FLOAT_KEYS else raw
            except ValueError:
                raise ConfigError(f"[run] {key}: invalid value {raw!r}") from None
            setattr(args, dest, val)
    if cp.has_section("molecule"):
        if getattr(args, "molecule", None) is not None:
            raise ConfigError("[molecule] conflicts with --molecule")
        args.molecule = str(args.config)
    if cp.has_section("detector") and getattr(args, "detector", None) is not None:
        raise ConfigError("[detector] conflicts with --detector")
    return sections


def _default(args, dest, value):
    if getattr(args, dest, None) is None:
        setattr(args, dest, value)


def _initial(args) -> tuple[int, ...]:
    return parse_ints(args.initial, "initial") if args.initial is not None else (0, 0)


def _require_molecule(args):
    if args.molecule is None:
        raise ConfigError("molecule: required (preset name or file)")
    return load_molecule(args.molecule)


def _params(args):
    t = _require_molecule(args)
    return doktorov_params(t, args.eta) if getattr(args, "eta", None) is not None else doktorov_params(t)


def _check_box(nmax: int, cutoff: int):
    if nmax < 0:
        raise ConfigError("nmax: must be nonnegative")
    if nmax >= cutoff:
        raise ConfigError(f"nmax={nmax} must be below cutoff={cutoff}")


def _emit(text: str, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _detector(args, sections) -> measurement.DetectorModel:
    if args.detector is not None:
        try:
            vals = [float(v) for v in str(args.detector).split(",")]
        except ValueError:
            raise ConfigError(f"detector: expected numbers, got {args.detector!r}") from None
        if len(vals) != 4:
            raise ConfigError("detector: expected t_A,t_B,f_A,f_B")
        return measurement.DetectorModel(*vals)
    if "detector" in sections:
        return detector_from_section(sections["detector"])
    return measurement.DetectorModel.perfect()


def cmd_derive(args, sections) -> int:
    t = _require_molecule(args)
    p = doktorov_params(t, args.eta) if args.eta is not None else doktorov_params(t)
    out = {"molecule": t.label, **p.as_dict()}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return 0


def cmd_fcf(args, sections) -> int:
    _default(args, "nmax", 15)
    _default(args, "cutoff", fcf_mod.DEFAULT_CUTOFF)
    _default(args, "method", "operator")
    _check_box(args.nmax, args.cutoff)
    dist = fcf_mod.fcf_distribution(_params(args), _initial(args), args.nmax, args.cutoff, args.method)
    _emit(dist.to_csv(), args.output)
    return 0


def cmd_spectrum(args, sections) -> int:
    _default(args, "nmax", 15)
    _default(args, "cutoff", fcf_mod.DEFAULT_CUTOFF)
    _default(args, "fwhm", 10.0)
    _check_box(args.nmax, args.cutoff)
    t = _require_molecule(args)
    if t.n_modes != 2:
        raise ConfigError("spectrum: two-mode molecules only")
    dist = fcf_mod.fcf_distribution(_params(args), _initial(args), args.nmax, args.cutoff)
    spec = fcf_mod.spectrum(dist, t.nu_post[0], t.nu_post[1], args.fwhm)
    _emit(spec.to_csv(), args.output)
    return 0


def _sample_state(args) -> StateVector:
    if args.state is not None:
        if args.molecule is not None:
            raise ConfigError("state: give either --state or --molecule, not both")
        occ = parse_ints(args.state, "state")
        return fock_state(occ, measurement.BOX)
    _default(args, "cutoff", fcf_mod.DEFAULT_CUTOFF)
    p = _params(args)
    t = np.zeros((args.cutoff,) * p.n_modes, dtype=complex)
    t[_initial(args)] = 1.0
    t = doktorov_apply(p, t, args.cutoff)
    return StateVector(t.ravel(), (args.cutoff,) * p.n_modes)


def cmd_sample(args, sections) -> int:
    if args.seed is None:
        raise ConfigError("seed: required for stochastic commands")
    _default(args, "scheme", "binary")
    if args.scheme not in ("ideal", "single-bit", "binary"):
        raise ConfigError(f"scheme: unknown value {args.scheme!r}")
    state = _sample_state(args)
    if args.scheme == "binary":
        _default(args, "shots", 10000)
        c = measurement.sample_binary_decomposition(state, args.shots, args.seed, args.bit_flip or 0.0)
        _emit(c.to_csv(), args.output)
        return 0
    _default(args, "nmax", measurement.BOX - 1)
    if any(args.nmax >= c for c in state.cutoffs):
        raise ConfigError("nmax must be below the state cutoff")
    probs = state.probabilities()[(slice(0, args.nmax + 1),) * len(state.cutoffs)]
    dist = fcf_mod.JointDistribution(probs, max(0.0, 1.0 - probs.sum()))
    if args.scheme == "ideal":
        _default(args, "shots", 10000)
        c = measurement.sample_ideal(dist, args.shots, args.seed)
        _emit(c.to_csv(), args.output)
        return 0
    _default(args, "runs_per_cell", 10000)
    det = _detector(args, sections)
    c = measurement.simulate_single_bit(dist, det, args.runs_per_cell, args.seed)
    q, sig = measurement.estimate(c)
    corrected = measurement.correct_readout(q, det)
    _emit(c.to_csv(probabilities=corrected, sigmas=sig), args.output)
    return 0


def cmd_noise(args, sections) -> int:
    _default(args, "nmax", 15)
    _default(args, "cutoff", noise.DEFAULT_CUTOFF)
    _check_box(args.nmax, args.cutoff)
    params = noise_from_section(sections["noise"]) if "noise" in sections else noise.NoiseParams()
    dist, D = noise.noisy_fcf(_params(args), _initial(args), params, args.nmax, args.cutoff)
    text = dist.to_csv().replace("\n", f"\n# distance: {D:.8f}\n", 1)
    _emit(text, args.output)
    print(f"D = {D:.6f}", file=sys.stderr)
    return 0


def cmd_distance(args, sections) -> int:
    try:
        a = fcf_mod.read_distribution(args.file_a)
        b = fcf_mod.read_distribution(args.file_b)
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    except fcf_mod.DistributionError as exc:
        raise ConfigError(str(exc)) from None
    print(f"{fcf_mod.distance(a, b):.12f}")
    return 0


CIRCUIT_FIELDS = ("g_A", "g_B", "delta_A", "delta_B", "K_C", "Omega_1", "Omega_2", "delta_1", "delta_2", "Delta")


def cmd_hardware(args, sections) -> int:
    flags = {f: getattr(args, f) for f in CIRCUIT_FIELDS if getattr(args, f) is not None}
    if "circuit" in sections:
        clash = sorted(set(flags) & {k for k in CIRCUIT_FIELDS if k.lower() in sections["circuit"]})
        if clash:
            raise ConfigError(f"[circuit] {', '.join(clash)}: also given on the command line (conflict)")
        base = circuit_from_section(sections["circuit"])
        p = CircuitParams(**{**base.__dict__, **flags})
    else:
        missing = [f for f in ("g_A", "g_B", "delta_A", "delta_B", "K_C") if f not in flags]
        if missing:
            raise ConfigError(f"{missing[0]}: required")
        p = CircuitParams(**flags)
    rows = hardware.derived_table(p)
    text = "quantity,value\n" + "".join(f"{k},{v:.12e}\n" for k, v in rows.items())
    _emit(text, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vibronic", description="Franck-Condon simulation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, molecule=True, box=True):
        p.add_argument("--config", help="INI file with [run]/[molecule]/... sections")
        p.add_argument("--output", "-o", help="output path (default stdout)")
        if molecule:
            p.add_argument("--molecule", help="preset (h2o, o3, no2, so2) or INI file")
            p.add_argument("--eta", type=float, help="common squeezing scale (default: optimal)")
        if box:
            p.add_argument("--initial", help="initial occupations, e.g. 1,2")
            p.add_argument("--nmax", type=int)
            p.add_argument("--cutoff", type=int)

    p = sub.add_parser("derive", help="Doktorov parameters for a molecule")
    common(p, box=False)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("fcf", help="Franck-Condon factors as CSV")
    common(p)
    p.add_argument("--method", choices=("operator", "exact"))
    p.set_defaults(func=cmd_fcf)

    p = sub.add_parser("spectrum", help="Lorentzian-broadened stick spectrum as CSV")
    common(p)
    p.add_argument("--fwhm", type=float)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sample", help="simulate a readout protocol")
    common(p)
    p.add_argument("--scheme", choices=("ideal", "single-bit", "binary"))
    p.add_argument("--state", help="sample a Fock state n,m instead of a molecule")
    p.add_argument("--shots", type=int)
    p.add_argument("--runs-per-cell", dest="runs_per_cell", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--detector", help="t_A,t_B,f_A,f_B")
    p.add_argument("--bit-flip", dest="bit_flip", type=float)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("noise", help="master-equation simulation of the circuit")
    common(p)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("distance", help="distance between two distribution CSV files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("hardware", help="circuit-QED derived quantities")
    common(p, molecule=False, box=False)
    for f in CIRCUIT_FIELDS:
        p.add_argument(f"--{f.replace('_', '-')}", dest=f, type=float)
    p.set_defaults(func=cmd_hardware)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        sections = _merge_config(args)
        return args.func(args, sections)
    except (ConfigError, ParameterError, measurement.MeasurementError) as exc:
        # invalid detector models and similar input problems count as configuration errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return 0
    except (FockSpaceError, fcf_mod.DistributionError, noise.IntegrationError,
            SingularityError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())

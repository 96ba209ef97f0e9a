"""Closed-form circuit-QED relations for a pumped coupler transmon.

All frequencies are angular and share whatever unit the caller uses.
Detunings are cavity minus coupler; ``K_C`` is the coupler anharmonicity
(taken positive). Relations with two algebraic forms, one in terms of the
raw couplings and one in terms of the dispersive shifts, return both.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

SINGULAR_TOL = 1e-12
DISPERSIVE_LIMIT = 0.1


class SingularityError(ArithmeticError):
    pass


class DispersiveWarning(UserWarning):
    pass


class DualForm(NamedTuple):
    raw: float
    substituted: float

    @property
    def value(self) -> float:
        return self.raw

    def rel_diff(self) -> float:
        scale = max(abs(self.raw), abs(self.substituted))
        return 0.0 if scale == 0 else abs(self.raw - self.substituted) / scale


def _div(num: float, den: float, what: str, scale: float | None = None) -> float:
    ref = abs(num) if scale is None else abs(scale)
    if den == 0 or abs(den) < SINGULAR_TOL * max(ref, 1e-300):
        raise SingularityError(f"{what}: denominator vanishes (resonant parameters)")
    return num / den


@dataclass(frozen=True)
class CircuitParams:
    g_A: float
    g_B: float
    delta_A: float
    delta_B: float
    K_C: float
    Omega_1: float = 0.0
    Omega_2: float = 0.0
    delta_1: float = 1.0
    delta_2: float = 1.0
    Delta: float | None = None

    def __post_init__(self):
        for g, d, name in ((self.g_A, self.delta_A, "A"), (self.g_B, self.delta_B, "B")):
            if d == 0:
                raise SingularityError(f"cavity {name} is resonant with the coupler")
            if abs(g / d) > DISPERSIVE_LIMIT:
                warnings.warn(f"|g/delta| = {abs(g / d):.3g} for cavity {name} is outside the "
                              "dispersive regime", DispersiveWarning, stacklevel=3)

    def mode(self, i: str) -> tuple[float, float]:
        if i == "A":
            return self.g_A, self.delta_A
        if i == "B":
            return self.g_B, self.delta_B
        raise ValueError(f"mode must be 'A' or 'B', got {i!r}")


def chi(g: float, delta: float, K_C: float) -> float:
    """Dispersive shift 2 K_C |g/delta|^2 delta / (delta + K_C)."""
    ratio = _div(g, delta, "chi", g)
    return 2 * K_C * abs(ratio) ** 2 * _div(delta, delta + K_C, "chi", delta)


def chi_from_participation(participation: float, delta: float, K_C: float) -> float:
    """Same shift written with the participation |g/delta|^2."""
    return 2 * K_C * participation * _div(delta, delta + K_C, "chi", delta)


def detuning_for_chi(chi_target: float, participation: float, K_C: float) -> float:
    """Detuning that produces ``chi_target`` at a given participation and anharmonicity."""
    return _div(chi_target * K_C, 2 * K_C * participation - chi_target, "detuning", chi_target * K_C)


def _pump_factor(p: CircuitParams) -> float:
    return _div(p.Omega_1, p.delta_1, "pump 1", p.Omega_1) * _div(p.Omega_2, p.delta_2, "pump 2", p.Omega_2)


def g_beamsplitter(p: CircuitParams) -> DualForm:
    pump = _pump_factor(p)
    res = _div(p.delta_A + p.delta_2, p.delta_A + p.delta_2 + p.K_C, "beamsplitter", p.delta_A + p.delta_2)
    raw = 2 * p.K_C * abs(p.g_A / p.delta_A * p.g_B / p.delta_B * pump * res)
    chi_a = chi(p.g_A, p.delta_A, p.K_C)
    chi_b = chi(p.g_B, p.delta_B, p.K_C)
    stretch = abs((p.delta_A + p.K_C) * (p.delta_B + p.K_C) / (p.delta_A * p.delta_B))
    sub = math.sqrt(abs(chi_a * chi_b)) * math.sqrt(stretch) * abs(pump * res)
    return DualForm(raw, sub)


def g_squeeze(p: CircuitParams, mode: str) -> DualForm:
    g, d = p.mode(mode)
    pump = _pump_factor(p)
    raw = 2 * p.K_C * abs((g / d) ** 2 * pump * _div(d, 2 * d + p.K_C, "squeezing", d))
    c = chi(g, d, p.K_C)
    sub = abs(c) * abs(pump * _div(d + p.K_C, 2 * d + p.K_C, "squeezing", d + p.K_C))
    return DualForm(raw, sub)


def self_kerr(p: CircuitParams, mode: str) -> DualForm:
    g, d = p.mode(mode)
    den = 2 * d + p.K_C
    raw = 2 * p.K_C * abs(g / d) ** 4 * _div(d, den, "self-Kerr", d)
    c = chi(g, d, p.K_C)
    sub = c**2 / (2 * p.K_C) * _div((d + p.K_C) ** 2, d * den, "self-Kerr", (d + p.K_C) ** 2)
    return DualForm(raw, sub)


def cross_kerr(p: CircuitParams) -> DualForm:
    dA, dB, K = p.delta_A, p.delta_B, p.K_C
    tail = _div(dA + dB, dA + dB + K, "cross-Kerr", dA + dB)
    raw = 2 * abs(p.g_A / dA * p.g_B / dB) ** 2 * K * tail
    ca = chi(p.g_A, dA, K)
    cb = chi(p.g_B, dB, K)
    sub = ca * cb / (2 * K) * (dA + K) * (dB + K) / (dA * dB) * tail
    return DualForm(raw, sub)


def f_poly(x: float) -> float:
    """Rational factor of the second-order dispersive shift, normalized so f(1) = 76/60."""
    num = 18 * x**3 + 30 * x**2 + 22 * x + 6
    den = 2 * (x + 1) * (4 * x**2 + 8 * x + 3)
    return _div(num, den, "f(x)", num)


def chi_prime(p: CircuitParams, mode: str) -> float:
    g, d = p.mode(mode)
    c = chi(g, d, p.K_C)
    return c**2 / d * f_poly(d / p.K_C)


def driven_kerr_shift(p: CircuitParams) -> float:
    """Pump-induced change of the cavity-A self-Kerr near the two-photon resonance."""
    if p.Delta is None:
        raise ValueError("Delta (two-photon detuning) is required")
    ca = chi(p.g_A, p.delta_A, p.K_C)
    d2, K = p.delta_2, p.K_C
    pump = abs(_div(p.Omega_2, d2, "pump 2", p.Omega_2)) ** 2
    detune = _div(ca**2, p.Delta**2, "Kerr shift", ca**2)
    shape = _div((2 * d2 + K) * d2, (d2 + K) * (d2 - K), "Kerr shift", (2 * d2 + K) * d2)
    return 2 * K * pump * detune * shape


def ancilla_frequency(l: int, omega0: float, chi_: float, chi_prime_: float) -> float:
    """Ancilla transition frequency with ``l`` photons in its cavity."""
    if l < 0:
        raise ValueError("photon number must be nonnegative")
    return omega0 - l * chi_ + (l * l - l) * chi_prime_ / 2


def derived_table(p: CircuitParams) -> dict[str, float]:
    """All derived quantities, keyed by name; dual forms report the raw value."""
    out: dict[str, float] = {}
    for m in ("A", "B"):
        g, d = p.mode(m)
        out[f"chi_{m}"] = chi(g, d, p.K_C)
        out[f"K_{m}"] = self_kerr(p, m).value
        out[f"chi_prime_{m}"] = chi_prime(p, m)
    out["K_AB"] = cross_kerr(p).value
    if p.Omega_1 and p.Omega_2:
        out["g_BS"] = g_beamsplitter(p).value
        out["g_sq_A"] = g_squeeze(p, "A").value
        out["g_sq_B"] = g_squeeze(p, "B").value
    if p.Delta is not None:
        out["dK_A"] = driven_kerr_shift(p)
    return out

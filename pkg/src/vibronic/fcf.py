"""Franck-Condon distributions, the distance metric and broadened spectra."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from . import gaussian
from .fockspace import FockSpaceError, doktorov_apply
from .molparams import DoktorovParams

DEFAULT_CUTOFF = 40
FCF_SCHEMA = "vibronic-fcf/1"
SPECTRUM_SCHEMA = "vibronic-spectrum/1"


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class JointDistribution:
    """Joint photon-number probabilities on the box [0, n_max]^N."""

    probs: np.ndarray
    leakage: float = 0.0
    initial: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim < 1 or len(set(p.shape)) != 1:
            raise DistributionError(f"probabilities must fill a square box, got shape {p.shape}")
        if np.any(p < -1e-15):
            raise DistributionError("probabilities must be nonnegative")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "leakage", float(self.leakage))

    @property
    def n_max(self) -> int:
        return self.probs.shape[0] - 1

    @property
    def n_modes(self) -> int:
        return self.probs.ndim

    def __getitem__(self, idx) -> float:
        return float(self.probs[tuple(idx)])

    def total(self) -> float:
        return float(self.probs.sum())

    def items(self):
        """(index tuple, probability) pairs in mode-A-major order."""
        for idx in np.ndindex(self.probs.shape):
            yield idx, float(self.probs[idx])

    @classmethod
    def point_mass(cls, index, n_max: int) -> "JointDistribution":
        index = tuple(index)
        p = np.zeros((n_max + 1,) * len(index))
        p[index] = 1.0
        return cls(p)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {FCF_SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n_prime", "m_prime", "probability"] if self.n_modes == 2
                   else [f"n{k}" for k in range(self.n_modes)] + ["probability"])
        for idx, val in self.items():
            w.writerow([*idx, f"{val:.12e}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _read_rows(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    meta = {}
    while lines and lines[0].startswith("#"):
        key, _, val = lines.pop(0).lstrip("# ").partition(":")
        meta[key.strip()] = val.strip()
    return meta, list(csv.DictReader(lines))


def read_distribution(path) -> JointDistribution:
    """Load any CSV with index columns and a ``probability`` column."""
    meta, rows = _read_rows(path)
    if not rows or "probability" not in rows[0]:
        raise DistributionError(f"{path}: no probability column")
    keys = [k for k in rows[0] if k not in ("probability", "count", "sigma")]
    try:
        idx = np.array([[int(r[k]) for k in keys] for r in rows])
        n_max = int(meta["n_max"]) if "n_max" in meta else int(idx.max())
    except (ValueError, TypeError) as exc:
        raise DistributionError(f"{path}: malformed row ({exc})") from None
    p = np.zeros((n_max + 1,) * len(keys))
    for i, r in zip(idx, rows):
        p[tuple(i)] = float(r["probability"])
    return JointDistribution(p)


def fcf_distribution(p: DoktorovParams, initial, n_max: int, cutoff: int = DEFAULT_CUTOFF,
                     method: str = "operator") -> JointDistribution:
    """FCF_{n -> n'} = |<n'|U_Dok|n>|^2 for every n' in the [0, n_max]^N box.

    ``method="operator"`` multiplies truncated factor matrices at ``cutoff``;
    ``method="exact"`` evaluates the Gaussian matrix elements directly.
    """
    initial = tuple(int(v) for v in initial)
    n = p.n_modes
    if len(initial) != n:
        raise DistributionError(f"initial state needs {n} occupations, got {initial}")
    if any(v < 0 for v in initial):
        raise DistributionError("occupations must be nonnegative")
    if n_max >= cutoff:
        raise DistributionError(f"n_max={n_max} must be below cutoff={cutoff}")
    if any(v >= cutoff for v in initial):
        raise FockSpaceError(f"initial state {initial} lies outside cutoff {cutoff}")
    if method == "exact":
        probs = gaussian.fcf_exact(p, initial, n_max)
    elif method == "operator":
        t = np.zeros((cutoff,) * n, dtype=complex)
        t[initial] = 1.0
        t = doktorov_apply(p, t, cutoff)
        probs = np.abs(t[(slice(0, n_max + 1),) * n]) ** 2
    else:
        raise DistributionError(f"unknown method {method!r}")
    return JointDistribution(probs, max(0.0, 1.0 - probs.sum()), initial)


def distance(P: JointDistribution, Q: JointDistribution) -> float:
    """Half the l1 distance over the shared box."""
    if P.probs.shape != Q.probs.shape:
        raise DistributionError(f"box mismatch: {P.probs.shape} vs {Q.probs.shape}")
    return 0.5 * float(np.abs(P.probs - Q.probs).sum())


@dataclass(frozen=True)
class SpectrumSeries:
    grid: np.ndarray
    intensity: np.ndarray
    sticks: tuple[tuple[float, float], ...]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {SPECTRUM_SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["wavenumber", "intensity"])
        for x, y in zip(self.grid, self.intensity):
            w.writerow([f"{x:.6f}", f"{y:.12e}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def lorentzian(x, center, fwhm: float):
    """Unit-area Lorentzian."""
    g = 0.5 * fwhm
    return (g / math.pi) / ((np.asarray(x) - center) ** 2 + g * g)


def spectrum(dist: JointDistribution, nu_stretch_post: float, nu_bend_post: float,
             fwhm: float = 10.0, grid=None) -> SpectrumSeries:
    if nu_stretch_post <= 0 or nu_bend_post <= 0:
        raise DistributionError("vibrational frequencies must be positive")
    if fwhm <= 0:
        raise DistributionError("fwhm must be positive")
    if dist.n_modes != 2:
        raise DistributionError("spectra are defined for two-mode distributions")
    if grid is None:
        grid = np.arange(0.0, (dist.n_max + 1) * nu_stretch_post + 1.0, 1.0)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DistributionError("empty wavenumber grid")
    sticks = tuple((n * nu_stretch_post + m * nu_bend_post, w)
                   for (n, m), w in dist.items() if w > 0)
    intensity = np.zeros_like(grid)
    for pos, w in sticks:
        intensity += w * lorentzian(grid, pos, fwhm)
    return SpectrumSeries(grid, intensity, sticks)


def displaced_vacuum_pmf(alpha, l: int) -> float:
    """Poisson law of a coherent state."""
    if l < 0:
        raise DistributionError("photon number must be nonnegative")
    x = abs(alpha) ** 2
    if x == 0:
        return 1.0 if l == 0 else 0.0
    return math.exp(l * math.log(x) - x - math.lgamma(l + 1))


def squeezed_vacuum_pmf(r: float, l: int) -> float:
    """Even-photon law of squeezed vacuum with squeezing parameter r."""
    if l < 0:
        raise DistributionError("photon number must be nonnegative")
    if l % 2:
        return 0.0
    k = l // 2
    t = math.tanh(abs(r))
    if t == 0:
        return 1.0 if k == 0 else 0.0
    return math.comb(2 * k, k) / 4**k * t ** (2 * k) / math.cosh(r)


def bs_single_photon(theta: float) -> float:
    """Probability that a single photon stays in its input mode."""
    return 0.5 * (1.0 + math.cos(2.0 * theta))


def displaced_fock_pmf(alpha, n: int, m: int) -> float:
    """|<m|D(alpha)|n>|^2 from the associated-Laguerre closed form."""
    if n < 0 or m < 0:
        raise DistributionError("photon numbers must be nonnegative")
    x = abs(alpha) ** 2
    lo, hi = min(n, m), max(n, m)
    if x == 0:
        return 1.0 if n == m else 0.0
    lag = eval_genlaguerre(lo, hi - lo, x)
    if lag == 0:
        return 0.0
    logp = -x + (hi - lo) * math.log(x) + gammaln(lo + 1) - gammaln(hi + 1) + 2 * math.log(abs(lag))
    return float(math.exp(logp))

"""Readout protocols: single-bit extraction with correlated detector errors,
sequential binary-decomposition sampling, and the binomial estimators.

Draw order (for bit-for-bit reproducibility with a given seed):

* ``sample_ideal``: one multinomial draw over the box cells in mode-A-major
  order followed by one overflow category for mass outside the box.
* ``simulate_single_bit``: one vectorized binomial draw over all cells in
  mode-A-major order.
* ``sample_binary_decomposition``: shots are processed in chunks; within a
  chunk, for bit k = 0..3 and then mode A, B, ...: one uniform per shot for
  the outcome, then (if ``bit_flip_prob > 0``) one uniform per shot for the
  recorded-bit flip.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fcf import JointDistribution
from .fockspace import StateVector, truncation_leakage

N_BITS = 4
BOX = 2**N_BITS
COUNTS_SCHEMA = "vibronic-counts/1"


class MeasurementError(ValueError):
    pass


class LeakageError(RuntimeError):
    """State has too much weight outside the 4-bit readout range."""


@dataclass(frozen=True)
class DetectorModel:
    t_A: float = 1.0
    t_B: float = 1.0
    f_A: float = 0.0
    f_B: float = 0.0

    def __post_init__(self):
        for t, f, name in ((self.t_A, self.f_A, "A"), (self.t_B, self.f_B, "B")):
            if not (0.0 <= f < t <= 1.0):
                raise MeasurementError(f"detector {name}: need 0 <= f < t <= 1, got t={t}, f={f}")

    @classmethod
    def perfect(cls) -> "DetectorModel":
        return cls()


@dataclass(frozen=True)
class CountMatrix:
    """Counts on the [0, n_max]^N box.

    ``runs`` is the number of runs per cell for single-bit extraction and the
    total number of shots for sampling schemes.
    """

    counts: np.ndarray
    runs: int
    scheme: str = "sampling"
    measurements_per_shot: int | None = None

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if len(set(c.shape)) != 1:
            raise MeasurementError("counts must fill a square box")
        if np.any(c < 0):
            raise MeasurementError("counts must be nonnegative")
        if self.scheme == "single-bit" and np.any(c > self.runs):
            raise MeasurementError("counts exceed runs per cell")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n_max(self) -> int:
        return self.counts.shape[0] - 1

    def __getitem__(self, idx) -> int:
        return int(self.counts[tuple(idx)])

    def to_csv(self, path=None, probabilities=None, sigmas=None) -> str:
        q, s = estimate(self)
        q = q if probabilities is None else probabilities
        s = s if sigmas is None else sigmas
        buf = io.StringIO()
        buf.write(f"# schema: {COUNTS_SCHEMA}\n# n_max: {self.n_max}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n_prime", "m_prime", "count", "probability", "sigma"] if self.counts.ndim == 2
                   else [f"n{k}" for k in range(self.counts.ndim)] + ["count", "probability", "sigma"])
        # cells with neither counts nor probability are omitted
        for idx in np.ndindex(self.counts.shape):
            if self.counts[idx] == 0 and q[idx] == 0:
                continue
            w.writerow([*idx, int(self.counts[idx]), f"{q[idx]:.12e}", f"{s[idx]:.12e}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True)
class BitProjector:
    k: int
    cutoff: int
    diagonal: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)


def bit_projector(k: int, cutoff: int = BOX) -> BitProjector:
    """Diagonal operator 1 - 2 (floor(i / 2^k) mod 2)."""
    if not 0 <= k < N_BITS:
        raise MeasurementError(f"bit index must be in 0..{N_BITS - 1}, got {k}")
    if cutoff < BOX:
        raise MeasurementError(f"cutoff must be at least {BOX}")
    i = np.arange(cutoff)
    diag = (1 - 2 * ((i >> k) & 1)).astype(float)
    diag.setflags(write=False)
    return BitProjector(k, cutoff, diag)


def sample_ideal(dist: JointDistribution, shots: int, seed) -> CountMatrix:
    if shots < 1:
        raise MeasurementError("shots must be at least 1")
    p = dist.probs.ravel()
    total = p.sum()
    if total <= 0:
        raise MeasurementError("distribution carries no probability")
    overflow = max(0.0, 1.0 - total)
    pv = np.append(p, overflow)
    pv = pv / pv.sum()
    rng = np.random.default_rng(seed)
    draw = rng.multinomial(shots, pv)
    return CountMatrix(draw[:-1].reshape(dist.probs.shape), shots, "sampling")


def estimate(c: CountMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Binomial estimates q = n / N and sigma = sqrt(q (1 - q) / N)."""
    if c.runs <= 0:
        raise MeasurementError("no runs recorded")
    q = c.counts / c.runs
    return q, np.sqrt(q * (1.0 - q) / c.runs)


def _as_matrix(P) -> np.ndarray:
    arr = P.probs if isinstance(P, JointDistribution) else np.asarray(P, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MeasurementError(f"readout correction needs a square matrix, got shape {arr.shape}")
    return arr


def detector_forward(P, m: DetectorModel) -> np.ndarray:
    """Joint click probabilities Q_nm for a probed cell (n, m).

    The complement terms assume the box holds all probability, so ``P`` is
    renormalized over the box first.
    """
    P = _as_matrix(P)
    total = P.sum()
    if total <= 0:
        raise MeasurementError("distribution carries no probability")
    P = P / total
    R = P.sum(axis=1)[:, None]
    C = P.sum(axis=0)[None, :]
    p_nb = R - P        # A condition true, B false
    p_bn = C - P        # A false, B true
    p_bb = 1.0 - R - C + P
    return (m.t_A * m.t_B * P + m.t_A * m.f_B * p_nb
            + m.f_A * m.t_B * p_bn + m.f_A * m.f_B * p_bb)


def correct_readout(Q, m: DetectorModel, clamp: bool = True) -> np.ndarray:
    """Invert ``detector_forward`` in closed form."""
    Q = _as_matrix(Q)
    a = m.t_A - m.f_A
    b = m.t_B - m.f_B
    if a <= 0 or b <= 0:
        raise MeasurementError("detector model is not invertible (t <= f)")
    M = Q.shape[0]
    R = (Q.sum(axis=1) / (b + M * m.f_B) - m.f_A) / a
    C = (Q.sum(axis=0) / (a + M * m.f_A) - m.f_B) / b
    P = (Q - a * m.f_B * R[:, None] - b * m.f_A * C[None, :] - m.f_A * m.f_B) / (a * b)
    if clamp:
        P = np.clip(P, 0.0, None)
    return P


def simulate_single_bit(dist: JointDistribution, m: DetectorModel, runs_per_cell: int, seed) -> CountMatrix:
    """One joint-click bit per run; every cell of the box is probed ``runs_per_cell`` times."""
    if runs_per_cell < 1:
        raise MeasurementError("runs_per_cell must be at least 1")
    Q = np.clip(detector_forward(dist, m), 0.0, 1.0)
    rng = np.random.default_rng(seed)
    counts = rng.binomial(runs_per_cell, Q.ravel()).reshape(Q.shape)
    return CountMatrix(counts, runs_per_cell, "single-bit")


def _bit_masks(n_modes: int) -> list[list[np.ndarray]]:
    """masks[k][j]: broadcastable boolean array, True where bit k of mode j is set."""
    i = np.arange(BOX)
    out = []
    for k in range(N_BITS):
        row = []
        for j in range(n_modes):
            shape = [1] * (n_modes + 1)
            shape[j + 1] = BOX
            row.append((((i >> k) & 1) == 1).reshape(shape))
        out.append(row)
    return out


def _measure_chunk(amps: np.ndarray, rng: np.random.Generator, bit_flip_prob: float):
    """Sequentially measure every bit of every mode for a batch of shots.

    Returns the recorded photon numbers (shots, N) and the collapsed states.
    """
    n_modes = amps.ndim - 1
    shots = amps.shape[0]
    recorded = np.zeros((shots, n_modes), dtype=np.int64)
    reduce_axes = tuple(range(1, n_modes + 1))
    for k, row in enumerate(_bit_masks(n_modes)):
        for j, mask in enumerate(row):
            prob = np.abs(amps) ** 2
            p1 = np.where(mask, prob, 0.0).sum(axis=reduce_axes) / prob.sum(axis=reduce_axes)
            bit = rng.random(shots) < p1
            keep = np.where(bit.reshape((shots,) + (1,) * n_modes), mask, ~mask)
            amps = np.where(keep, amps, 0.0)
            norms = np.sqrt((np.abs(amps) ** 2).sum(axis=reduce_axes))
            amps = amps / norms.reshape((shots,) + (1,) * n_modes)
            rec = bit
            if bit_flip_prob > 0:
                rec = rec ^ (rng.random(shots) < bit_flip_prob)
            recorded[:, j] |= rec.astype(np.int64) << k
    return recorded, amps


def _cropped_amplitudes(state: StateVector, leakage_threshold: float) -> np.ndarray:
    if any(c < BOX for c in state.cutoffs):
        raise MeasurementError(f"state cutoffs must be at least {BOX}")
    if any(c > BOX for c in state.cutoffs):
        leak = truncation_leakage(state, BOX - 1)
    else:
        leak = max(0.0, 1.0 - state.norm**2)
    if leak > leakage_threshold:
        raise LeakageError(f"state leaks {leak:.3g} outside [0, {BOX - 1}] per mode "
                               f"(threshold {leakage_threshold})")
    t = state.tensor()[(slice(0, BOX),) * len(state.cutoffs)]
    return t / np.linalg.norm(t)


def measure_shot(state: StateVector, rng: np.random.Generator, bit_flip_prob: float = 0.0,
                 leakage_threshold: float = 0.01) -> tuple[tuple[int, ...], StateVector]:
    """Single shot of the sequential readout; returns the outcome and collapsed state."""
    t = _cropped_amplitudes(state, leakage_threshold)
    rec, amps = _measure_chunk(t[None, ...], rng, bit_flip_prob)
    n = len(state.cutoffs)
    return tuple(int(v) for v in rec[0]), StateVector(amps[0].ravel(), (BOX,) * n)


def sample_binary_decomposition(state: StateVector, shots: int, seed, bit_flip_prob: float = 0.0,
                                leakage_threshold: float = 0.01, chunk: int = 4096) -> CountMatrix:
    """Photon-number sampling by sequential QND readout of the 4 bits per mode."""
    if shots < 1:
        raise MeasurementError("shots must be at least 1")
    if not 0.0 <= bit_flip_prob <= 1.0:
        raise MeasurementError("bit_flip_prob must lie in [0, 1]")
    t = _cropped_amplitudes(state, leakage_threshold)
    n = t.ndim
    rng = np.random.default_rng(seed)
    counts = np.zeros((BOX,) * n, dtype=np.int64)
    done = 0
    while done < shots:
        size = min(chunk, shots - done)
        amps = np.broadcast_to(t, (size,) + t.shape)
        rec, _ = _measure_chunk(amps, rng, bit_flip_prob)
        np.add.at(counts, tuple(rec.T), 1)
        done += size
    return CountMatrix(counts, shots, "binary", measurements_per_shot=n * N_BITS)

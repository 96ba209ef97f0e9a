"""Truncated Fock-space operators for displacement, squeezing and beamsplitters.

Multi-mode vectors are flattened mode-A major: index = n_A * cutoff_B + n_B.
Factors of the Doktorov unitary are exponentiated at a working cutoff larger
than the one reported, since truncated exponentials are only accurate away
from the truncation edge.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .molparams import DoktorovParams, GivensSequence, ParameterError, givens_decompose


class FockSpaceError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FockOperator:
    matrix: np.ndarray
    cutoffs: tuple[int, ...]

    def __post_init__(self):
        dim = math.prod(self.cutoffs)
        if self.matrix.shape != (dim, dim):
            raise FockSpaceError(f"matrix shape {self.matrix.shape} does not match cutoffs {self.cutoffs}")

    @property
    def mode_arity(self) -> int:
        return len(self.cutoffs)

    def dagger(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.cutoffs)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        if self.cutoffs != other.cutoffs:
            raise FockSpaceError("cannot compose operators on different spaces")
        return FockOperator(self.matrix @ other.matrix, self.cutoffs)

    def kron(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(np.kron(self.matrix, other.matrix), self.cutoffs + other.cutoffs)

    def crop(self, cutoff: int) -> "FockOperator":
        """Restrict every mode to its lowest ``cutoff`` levels."""
        n = self.mode_arity
        t = self.matrix.reshape(self.cutoffs * 2)
        t = t[(slice(0, cutoff),) * (2 * n)]
        dim = cutoff**n
        return FockOperator(np.ascontiguousarray(t).reshape(dim, dim), (cutoff,) * n)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    cutoffs: tuple[int, ...]
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != math.prod(self.cutoffs):
            raise FockSpaceError(f"{amps.size} amplitudes do not match cutoffs {self.cutoffs}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.cutoffs)

    def probabilities(self) -> np.ndarray:
        """Photon-number probabilities shaped like the mode cutoffs."""
        return np.abs(self.tensor()) ** 2


def fock_state(occupations, cutoffs) -> StateVector:
    occupations = tuple(int(n) for n in np.atleast_1d(occupations))
    cutoffs = tuple(int(c) for c in np.atleast_1d(cutoffs))
    if len(cutoffs) == 1 and len(occupations) > 1:
        cutoffs = cutoffs * len(occupations)
    if len(occupations) != len(cutoffs):
        raise FockSpaceError("one occupation per mode is required")
    if any(n < 0 or n >= c for n, c in zip(occupations, cutoffs)):
        raise FockSpaceError(f"Fock state {occupations} lies outside cutoffs {cutoffs}")
    amps = np.zeros(cutoffs, dtype=complex)
    amps[occupations] = 1.0
    return StateVector(amps.ravel(), cutoffs)


def working_cutoff(n_max: int) -> int:
    return max(2 * n_max, n_max + 16)


def _check_cutoff(cutoff: int) -> int:
    cutoff = int(cutoff)
    if cutoff < 2:
        raise FockSpaceError(f"cutoff must be at least 2, got {cutoff}")
    return cutoff


@lru_cache(maxsize=64)
def _ladder(cutoff: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1)
    a.setflags(write=False)
    return a


def annihilation(cutoff: int) -> FockOperator:
    cutoff = _check_cutoff(cutoff)
    return FockOperator(_ladder(cutoff).astype(complex), (cutoff,))


def number(cutoff: int) -> FockOperator:
    return FockOperator(np.diag(np.arange(_check_cutoff(cutoff))).astype(complex), (cutoff,))


def _displacement_matrix(alpha: complex, cutoff: int) -> np.ndarray:
    if alpha == 0:
        return np.eye(cutoff, dtype=complex)
    a = _ladder(cutoff)
    return expm(alpha * a.T - np.conj(alpha) * a)


def _squeezing_matrix(zeta: complex, cutoff: int) -> np.ndarray:
    if zeta == 0:
        return np.eye(cutoff, dtype=complex)
    a = _ladder(cutoff)
    a2 = a @ a
    return expm(0.5 * (np.conj(zeta) * a2 - zeta * a2.T))


def displacement(alpha: complex, cutoff: int) -> FockOperator:
    """D(alpha) = exp(alpha a^dag - alpha^* a) on a truncated space."""
    cutoff = _check_cutoff(cutoff)
    if abs(alpha) ** 2 > cutoff / 4:
        warnings.warn(f"|alpha|^2={abs(alpha) ** 2:.3g} is large for cutoff {cutoff}; "
                      "expect truncation leakage", TruncationWarning, stacklevel=2)
    return FockOperator(_displacement_matrix(complex(alpha), cutoff), (cutoff,))


def squeezing(zeta: complex, cutoff: int) -> FockOperator:
    """S(zeta) = exp((zeta^* a^2 - zeta a^dag^2) / 2) on a truncated space."""
    cutoff = _check_cutoff(cutoff)
    return FockOperator(_squeezing_matrix(complex(zeta), cutoff), (cutoff,))


def _beamsplitter_sparse(theta: float, cutoff_a: int, cutoff_b: int) -> sp.csr_matrix:
    # The generator conserves n_A + n_B, so exponentiate each excitation block.
    rows, cols, vals = [], [], []
    for total in range(cutoff_a + cutoff_b - 1):
        lo = max(0, total - cutoff_b + 1)
        hi = min(total, cutoff_a - 1)
        n_a = np.arange(lo, hi + 1)
        idx = n_a * cutoff_b + (total - n_a)
        size = n_a.size
        if size == 1 or theta == 0:
            block = np.eye(size)
        else:
            gen = np.zeros((size, size))
            # <n_A-1, n_B+1| a_A a_B^dag |n_A, n_B> = sqrt(n_A (n_B+1))
            k = np.arange(1, size)
            na = n_a[k]
            gen[k - 1, k] = np.sqrt(na * (total - na + 1))
            if size == 2:
                # a plane rotation; closed form keeps cos/sin exact
                c, s = math.cos(theta * gen[0, 1]), math.sin(theta * gen[0, 1])
                block = np.array([[c, s], [-s, c]])
            else:
                block = expm(theta * (gen - gen.T))
        r, c = np.meshgrid(idx, idx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(block.ravel())
    dim = cutoff_a * cutoff_b
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dim, dim))
    return m.tocsr()


def beamsplitter(theta: float, cutoff_a: int, cutoff_b: int | None = None) -> FockOperator:
    """Two-mode rotation exp(theta (a_A a_B^dag - a_A^dag a_B)).

    On the single-excitation block (|1,0>, |0,1>) this acts as the matrix
    [[cos, -sin], [sin, cos]], the same convention as the Duschinsky rotation.
    """
    cutoff_a = _check_cutoff(cutoff_a)
    cutoff_b = cutoff_a if cutoff_b is None else _check_cutoff(cutoff_b)
    if not math.isfinite(theta):
        raise FockSpaceError("beamsplitter angle must be finite")
    m = _beamsplitter_sparse(float(theta), cutoff_a, cutoff_b)
    return FockOperator(m.toarray().astype(complex), (cutoff_a, cutoff_b))


def _apply_single(tensor: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(mat, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def _apply_pair(tensor: np.ndarray, mat, axis: int) -> np.ndarray:
    """Apply a two-mode operator to adjacent axes ``axis`` and ``axis + 1``."""
    t = np.moveaxis(tensor, (axis, axis + 1), (0, 1))
    shape = t.shape
    flat = t.reshape(shape[0] * shape[1], -1)
    flat = mat @ flat
    t = np.asarray(flat).reshape(shape)
    return np.moveaxis(t, (0, 1), (axis, axis + 1))


def rotation_sequence(params: DoktorovParams) -> GivensSequence:
    if params.n_modes == 1:
        return GivensSequence(1, ())
    return givens_decompose(params.rotation)


def doktorov_apply(params: DoktorovParams, tensor: np.ndarray, cutoff: int) -> np.ndarray:
    """Apply D(alpha) S^dag(zeta') R(U) S(zeta) to a batch of mode tensors.

    ``tensor`` has one axis of length ``cutoff`` per mode followed by an
    optional batch axis.
    """
    n = params.n_modes
    t = np.asarray(tensor, dtype=complex)
    if t.shape[:n] != (cutoff,) * n:
        raise FockSpaceError(f"tensor shape {t.shape} does not match {n} modes at cutoff {cutoff}")
    for k in range(n):
        t = _apply_single(t, _squeezing_matrix(complex(params.zeta[k]), cutoff), k)
    # U = R_1 R_2 ... R_m, so the last plane rotation acts first
    for i, j, theta in reversed(rotation_sequence(params).rotations):
        if j != i + 1:
            raise FockSpaceError("only nearest-neighbour rotations are supported")
        t = _apply_pair(t, _beamsplitter_sparse(theta, cutoff, cutoff), i)
    for k in range(n):
        t = _apply_single(t, _squeezing_matrix(-complex(params.zeta_prime[k]), cutoff), k)
    for k in range(n):
        t = _apply_single(t, _displacement_matrix(complex(params.alpha[k]), cutoff), k)
    return t


def doktorov_unitary(params: DoktorovParams, cutoff: int, work_cutoff: int | None = None,
                     chunk: int = 256) -> FockOperator:
    """Doktorov unitary on ``cutoff`` levels per mode.

    Factors are built at ``work_cutoff`` (default ``working_cutoff(cutoff)``)
    and the product is cropped to the requested cutoff.
    """
    cutoff = _check_cutoff(cutoff)
    work = working_cutoff(cutoff) if work_cutoff is None else int(work_cutoff)
    if work < cutoff:
        raise FockSpaceError("work_cutoff must not be below cutoff")
    n = params.n_modes
    dim = cutoff**n
    out = np.empty((dim, dim), dtype=complex)
    inputs = np.array(np.unravel_index(np.arange(dim), (cutoff,) * n))
    for start in range(0, dim, chunk):
        cols = np.arange(start, min(start + chunk, dim))
        t = np.zeros((work,) * n + (cols.size,), dtype=complex)
        t[tuple(inputs[:, cols]) + (np.arange(cols.size),)] = 1.0
        t = doktorov_apply(params, t, work)
        t = t[(slice(0, cutoff),) * n]
        out[:, cols] = t.reshape(dim, cols.size)
    return FockOperator(out, (cutoff,) * n)


def rotation_operator(U, cutoff: int) -> FockOperator:
    """Multi-mode passive rotation built from nearest-neighbour beamsplitters."""
    seq = givens_decompose(U)
    n = seq.n_modes
    dim = cutoff**n
    t = np.eye(dim, dtype=complex).reshape((cutoff,) * n + (dim,))
    for i, j, theta in reversed(seq.rotations):
        t = _apply_pair(t, _beamsplitter_sparse(theta, cutoff, cutoff), i)
    return FockOperator(t.reshape(dim, dim), (cutoff,) * n)


def apply(op: FockOperator, state: StateVector) -> StateVector:
    if op.cutoffs != state.cutoffs:
        raise FockSpaceError(f"operator cutoffs {op.cutoffs} do not match state cutoffs {state.cutoffs}")
    amps = op.matrix @ state.amplitudes
    leak = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
    return StateVector(amps, state.cutoffs, leak)


def truncation_leakage(state: StateVector, n_max: int) -> float:
    """Probability outside the [0, n_max]^N box, counting mass lost to truncation."""
    if any(n_max >= c for c in state.cutoffs):
        raise FockSpaceError("n_max must be below every cutoff")
    probs = state.probabilities()
    inside = probs[(slice(0, n_max + 1),) * probs.ndim].sum()
    return float(max(0.0, 1.0 - inside))


__all__ = [
    "FockOperator", "StateVector", "FockSpaceError", "TruncationWarning", "ParameterError",
    "fock_state", "working_cutoff", "annihilation", "number", "displacement", "squeezing",
    "beamsplitter", "doktorov_apply", "doktorov_unitary", "rotation_operator", "apply",
    "truncation_leakage",
]

"""Lindblad simulation of the Doktorov circuit with Kerr distortion and photon loss.

The density operator of the two cavities is kept as a tensor rho[a, b, a', b'].
Kerr terms are diagonal in the Fock basis, so their phases are integrated
exactly (integrating-factor RK4); the drive Hamiltonian and the dissipator
are handled by the Runge-Kutta stages. The diagonal of the integrating factor
is one, so the trace is conserved up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fcf import JointDistribution, distance, fcf_distribution
from .fockspace import StateVector
from .molparams import DoktorovParams, MolecularTransition, doktorov_params

TWO_PI = 2.0 * math.pi
TRACE_TOL = 1e-6
DEFAULT_CUTOFF = 30
CONTEXTS = ("native", "squeezing", "beamsplitter")


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModeContext:
    kerr_khz: float
    t1_us: float

    def __post_init__(self):
        if not self.t1_us > 0:
            raise ValueError("T1 must be positive")

    @property
    def kerr(self) -> float:
        """Self-Kerr in rad/s."""
        return TWO_PI * self.kerr_khz * 1e3

    @property
    def kappa(self) -> float:
        """Energy-decay rate in 1/s (zero for infinite T1)."""
        return 1.0 / (self.t1_us * 1e-6)


@dataclass(frozen=True)
class NoiseParams:
    """Per-cavity Kerr and T1 for each operation context, and the gate rates."""

    native: tuple[ModeContext, ModeContext] = (ModeContext(1.8, 280.0), ModeContext(3.2, 320.0))
    squeezing: tuple[ModeContext, ModeContext] = (ModeContext(2.0, 200.0), ModeContext(1.9, 280.0))
    beamsplitter: tuple[ModeContext, ModeContext] = (ModeContext(30.0, 170.0), ModeContext(5.0, 170.0))
    cross_kerr_khz: float = 0.0
    g_sq: float = TWO_PI * 60e3
    g_bs: float = TWO_PI * 44e3
    displacement_ns: float = 72.0
    verify_us: float = 2.5

    def __post_init__(self):
        for name in ("g_sq", "g_bs", "displacement_ns"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.verify_us < 0:
            raise ValueError("verify_us must be nonnegative")

    def context(self, name: str) -> tuple[ModeContext, ModeContext]:
        if name not in CONTEXTS:
            raise ValueError(f"unknown operation context {name!r}")
        return getattr(self, name)

    def with_loss_scale(self, s: float) -> "NoiseParams":
        """Multiply every decay rate by ``s`` (s = 0 removes loss)."""
        def scale(c: ModeContext) -> ModeContext:
            return ModeContext(c.kerr_khz, math.inf if s == 0 else c.t1_us / s)
        return replace(self, **{k: tuple(scale(c) for c in self.context(k)) for k in CONTEXTS})

    def with_kerr_scale(self, s: float) -> "NoiseParams":
        def scale(c: ModeContext) -> ModeContext:
            return ModeContext(c.kerr_khz * s, c.t1_us)
        return replace(self, cross_kerr_khz=self.cross_kerr_khz * s,
                       **{k: tuple(scale(c) for c in self.context(k)) for k in CONTEXTS})

    def noiseless(self) -> "NoiseParams":
        return self.with_loss_scale(0.0).with_kerr_scale(0.0)


@dataclass(frozen=True)
class Segment:
    """Rectangular drive pulse.

    ``kind`` is one of squeeze_A, squeeze_B, beamsplit, displace, idle.
    ``strength`` holds the drive amplitude in rad/s (for ``displace`` a pair
    of complex amplitudes, one per cavity); ``phase`` is exp(i phi).
    ``context`` names the Kerr/T1 context of cavity A and cavity B.
    """

    kind: str
    duration_us: float
    strength: object = 0.0
    phase: complex = 1.0
    context: tuple[str, str] = ("native", "native")

    def __post_init__(self):
        if self.duration_us < 0:
            raise ValueError("segment duration must be nonnegative")


@dataclass(frozen=True)
class GateSchedule:
    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    @property
    def duration_us(self) -> float:
        return sum(s.duration_us for s in self.segments)


def _sgn(x: float) -> float:
    return 1.0 if x >= 0 else -1.0


def build_schedule(p: DoktorovParams, n: NoiseParams) -> GateSchedule:
    """Segments in circuit order: S(zeta), R(theta), S^dag(zeta'), D(alpha), idle."""
    if p.n_modes != 2:
        raise ValueError("the circuit schedule is defined for two modes")
    segs = []

    def squeeze(mode: int, r: float):
        ctx = ("squeezing", "native") if mode == 0 else ("native", "squeezing")
        # exp(-i g t (e c^2 + e^* c^dag^2)) with e = i sgn(r) equals S(r) for t = |r| / (2 g)
        segs.append(Segment("squeeze_A" if mode == 0 else "squeeze_B",
                            abs(r) / (2 * n.g_sq) * 1e6, n.g_sq, 1j * _sgn(r), ctx))

    squeeze(0, p.zeta[0])
    squeeze(1, p.zeta[1])
    th = p.theta
    segs.append(Segment("beamsplit", abs(th) / n.g_bs * 1e6, n.g_bs, 1j * _sgn(th),
                        ("beamsplitter", "beamsplitter")))
    squeeze(0, -p.zeta_prime[0])
    squeeze(1, -p.zeta_prime[1])
    # concurrent local displacements, each at the calibrated rate of one alpha unit per tau
    tau = n.displacement_ns * 1e-3
    durations = [abs(a) * tau for a in p.alpha]
    eps = [1j * a / (abs(a) * tau * 1e-6) if a != 0 else 0.0 for a in p.alpha]
    short, long_ = sorted(range(2), key=lambda k: durations[k])
    segs.append(Segment("displace", durations[short], (eps[0], eps[1])))
    rest = [0.0, 0.0]
    rest[long_] = eps[long_]
    segs.append(Segment("displace", durations[long_] - durations[short], tuple(rest)))
    segs.append(Segment("idle", n.verify_us))
    return GateSchedule(tuple(segs))


@dataclass
class DensityOperator:
    """Two-mode density operator, mode-A-major flattening."""

    tensor: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=complex)
        if t.ndim == 2:
            d = math.isqrt(t.shape[0])
            t = t.reshape(d, d, d, d)
        if t.ndim != 4 or len(set(t.shape)) != 1:
            raise ValueError("density operator must be square over a two-mode box")
        self.tensor = t

    @property
    def cutoff(self) -> int:
        return self.tensor.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        d = self.cutoff
        return self.tensor.reshape(d * d, d * d)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityOperator":
        t = state.tensor()
        return cls(np.einsum("ab,cd->abcd", t, t.conj()))

    @classmethod
    def fock(cls, occupations, cutoff: int) -> "DensityOperator":
        t = np.zeros((cutoff,) * 4, dtype=complex)
        n, m = occupations
        t[n, m, n, m] = 1.0
        return cls(t)

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def populations(self) -> np.ndarray:
        d = self.cutoff
        return np.real(np.diagonal(self.matrix)).reshape(d, d).copy()

    def hermiticity_error(self) -> float:
        m = self.matrix
        return float(np.abs(m - m.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T)).min())


# The superoperator is assembled from shifted slices of the rho tensor
# rho[a, b, a', b']: a ladder operator on the ket side shifts a ket axis, and
# the same operator multiplied from the right shifts the matching bra axis.

def _ladder(kind: str, k: int, d: int, side: str):
    """(dst, src, weight) for c^k or c^dag^k acting on one axis.

    ``side="ket"`` is left multiplication; ``side="bra"`` is right
    multiplication, where c^k raises the bra index.
    """
    lowers = (kind == "lower") == (side == "ket")
    if lowers:
        i = np.arange(d - k)
        w = np.prod([np.sqrt(i + j) for j in range(1, k + 1)], axis=0)
        return slice(0, d - k), slice(k, d), w
    i = np.arange(k, d)
    w = np.prod([np.sqrt(i - j) for j in range(k)], axis=0)
    return slice(k, d), slice(0, d - k), w


def _slice_term(coef: complex, ops, d: int, side: str):
    """Fold ladder operators on distinct axes into one weighted slice copy."""
    dst = [slice(None)] * 4
    src = [slice(None)] * 4
    weight = np.full((1, 1, 1, 1), complex(coef))
    for kind, ax, k in ops:
        axis = ax if side == "ket" else ax + 2
        if dst[axis] != slice(None):
            raise ValueError("ladder operators in one term must act on distinct modes")
        dst[axis], src[axis], w = _ladder(kind, k, d, side)
        shape = [1] * 4
        shape[axis] = w.size
        weight = weight * w.reshape(shape)
    return tuple(dst), tuple(src), weight


def _drive_terms(seg: Segment) -> list[tuple[complex, list[tuple[str, int, int]]]]:
    """Drive Hamiltonian as a sum of coef * (ladder products on distinct modes)."""
    kind = seg.kind
    if kind in ("squeeze_A", "squeeze_B"):
        ax = 0 if kind == "squeeze_A" else 1
        e = seg.phase
        g = float(seg.strength)
        return [(g * e, [("lower", ax, 2)]), (g * np.conj(e), [("raise", ax, 2)])]
    if kind == "beamsplit":
        e = seg.phase
        g = float(seg.strength)
        # g (e a b^dag + e^* a^dag b)
        return [(g * e, [("lower", 0, 1), ("raise", 1, 1)]),
                (g * np.conj(e), [("lower", 1, 1), ("raise", 0, 1)])]
    if kind == "displace":
        terms = []
        for ax, eps in enumerate(seg.strength):
            if eps != 0:
                terms += [(np.conj(eps), [("lower", ax, 1)]), (eps, [("raise", ax, 1)])]
        return terms
    if kind == "idle":
        return []
    raise ValueError(f"unknown segment kind {kind!r}")


def _drive_norm_bound(terms, d: int) -> float:
    bound = 0.0
    for coef, ops in terms:
        norm = 1.0
        for _, _, k in ops:
            norm *= math.sqrt(math.prod(range(d - k, d)))
        bound += abs(coef) * norm
    return bound


class _Generator:
    """Lindbladian of one segment, split into exact diagonal phases and the rest."""

    def __init__(self, seg: Segment, n: NoiseParams, d: int):
        ctx_a = n.context(seg.context[0])[0]
        ctx_b = n.context(seg.context[1])[1]
        num = np.arange(d, dtype=float)
        na = num[:, None]
        nb = num[None, :]
        kab = TWO_PI * n.cross_kerr_khz * 1e3
        # -K/2 c^dag^2 c^2 per cavity, -K_AB n_A n_B between them
        h = -0.5 * ctx_a.kerr * na * (na - 1) - 0.5 * ctx_b.kerr * nb * (nb - 1) - kab * na * nb
        self.phase = -1j * (h[:, :, None, None] - h[None, None, :, :])
        self.kappa = (ctx_a.kappa, ctx_b.kappa)
        damp = (ctx_a.kappa * (na[:, :, None, None] + na[None, None, :, :])
                + ctx_b.kappa * (nb[:, :, None, None] + nb[None, None, :, :]))
        self.damp = -0.5 * damp
        self.terms = _drive_terms(seg)
        self.rate = 2 * _drive_norm_bound(self.terms, d) + sum(k * (d - 1) for k in self.kappa)
        # -i [V, rho] = -i V rho + i rho V, then kappa c rho c^dag per cavity
        self.slices = []
        for coef, ops in self.terms:
            self.slices.append(_slice_term(-1j * coef, ops, d, "ket"))
            self.slices.append(_slice_term(1j * coef, ops, d, "bra"))
        for ax, kap in enumerate(self.kappa):
            if kap > 0:
                self.slices.append(_slice_term(kap, [("lower", ax, 1), ("lower", ax + 2, 1)], d, "ket"))

    def nonphase(self, rho: np.ndarray) -> np.ndarray:
        out = self.damp * rho
        for dst, src, w in self.slices:
            out[dst] += w * rho[src]
        return out


def lindblad_evolve(rho0: DensityOperator, schedule: GateSchedule, n: NoiseParams,
                    step_factor: float = 0.25, check_trace: bool = True) -> DensityOperator:
    """Integrate every schedule segment with an integrating-factor RK4.

    The step is ``step_factor`` divided by a bound on the generator norm
    (drive plus decay); Kerr phases are exact and do not limit the step.
    """
    rho = rho0.tensor.copy()
    d = rho0.cutoff
    tr0 = np.real(np.einsum("abab->", rho))
    for seg in schedule:
        T = seg.duration_us * 1e-6
        if T <= 0:
            continue
        gen = _Generator(seg, n, d)
        steps = max(1, math.ceil(T * gen.rate / step_factor))
        h = T / steps
        e_half = np.exp(gen.phase * (h / 2))
        f = gen.nonphase
        for _ in range(steps):
            k1 = f(rho)
            half_rho = e_half * rho
            k2 = f(half_rho + (h / 2) * (e_half * k1))
            k3 = f(half_rho + (h / 2) * k2)
            k4 = f(e_half * (half_rho + h * k3))
            # rho <- e_full rho + h/6 (e_full k1 + 2 e_half (k2 + k3) + k4)
            k1 *= h / 6
            k1 += rho
            k1 *= e_half
            k2 += k3
            k2 *= h / 3
            k1 += k2
            k1 *= e_half
            k4 *= h / 6
            k1 += k4
            rho = k1
        if check_trace:
            tr = np.real(np.einsum("abab->", rho))
            if not abs(tr - tr0) <= TRACE_TOL or not np.isfinite(rho).all():
                raise IntegrationError(f"trace drifted by {abs(tr - tr0):.3g} during {seg.kind}")
    rho = 0.5 * (rho + np.conj(rho.transpose(2, 3, 0, 1)))
    return DensityOperator(rho)


def noisy_fcf(transition, initial, n: NoiseParams | None = None, n_max: int = 15,
              cutoff: int = DEFAULT_CUTOFF, ideal_cutoff: int = 40,
              step_factor: float = 0.25) -> tuple[JointDistribution, float]:
    """Simulated output distribution of the noisy circuit and its distance to the exact FCF."""
    n = NoiseParams() if n is None else n
    p = doktorov_params(transition) if isinstance(transition, MolecularTransition) else transition
    if n_max >= cutoff:
        raise ValueError("n_max must be below the simulation cutoff")
    rho0 = DensityOperator.fock(tuple(initial), cutoff)
    rho = lindblad_evolve(rho0, build_schedule(p, n), n, step_factor)
    pops = rho.populations()
    box = np.clip(pops[: n_max + 1, : n_max + 1], 0.0, None)
    noisy = JointDistribution(box, max(0.0, 1.0 - box.sum()), tuple(initial))
    ideal = fcf_distribution(p, initial, n_max, max(ideal_cutoff, n_max + 1))
    return noisy, distance(noisy, ideal)

"""Molecular transition data and the dimensionless Doktorov parameters.

Wavenumbers are in cm^-1, shift vectors in a0*sqrt(m_e), angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# 1 cm^-1 expressed in Hartree
WAVENUMBER_TO_HARTREE = 4.556335e-6

ORTHO_TOL = 1e-10


class ParameterError(ValueError):
    """Invalid molecular or Doktorov parameters."""


def _is_orthogonal(m: np.ndarray, tol: float = ORTHO_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) <= tol)


@dataclass(frozen=True)
class MolecularTransition:
    """Normal-mode data for one electronic transition.

    Either ``duschinsky_theta`` (two modes) or ``duschinsky_matrix`` must be
    given. Following Gaussian's convention the matrix is J in
    Q' = J Q'' + K; the rotation used downstream is U = J^T.
    """

    nu_pre: tuple[float, ...]
    nu_post: tuple[float, ...]
    shift_K: tuple[float, ...]
    duschinsky_theta: float | None = None
    duschinsky_matrix: np.ndarray | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        nu_pre = tuple(float(x) for x in self.nu_pre)
        nu_post = tuple(float(x) for x in self.nu_post)
        shift = tuple(float(x) for x in self.shift_K)
        object.__setattr__(self, "nu_pre", nu_pre)
        object.__setattr__(self, "nu_post", nu_post)
        object.__setattr__(self, "shift_K", shift)
        n = len(nu_pre)
        if n < 1:
            raise ParameterError("nu_pre: at least one mode is required")
        if len(nu_post) != n:
            raise ParameterError(f"nu_post: expected {n} values, got {len(nu_post)}")
        if len(shift) != n:
            raise ParameterError(f"shift_K: expected {n} values, got {len(shift)}")
        for name, vals in (("nu_pre", nu_pre), ("nu_post", nu_post)):
            if not all(math.isfinite(v) and v > 0 for v in vals):
                raise ParameterError(f"{name}: wavenumbers must be strictly positive")
        if self.duschinsky_matrix is None and self.duschinsky_theta is None:
            if n == 1:
                object.__setattr__(self, "duschinsky_matrix", np.eye(1))
            else:
                raise ParameterError("duschinsky_theta or duschinsky_matrix is required")
        if self.duschinsky_matrix is not None:
            J = np.array(self.duschinsky_matrix, dtype=float)
            if J.shape != (n, n):
                raise ParameterError(f"duschinsky_matrix: expected shape {(n, n)}, got {J.shape}")
            if not _is_orthogonal(J):
                raise ParameterError("duschinsky_matrix: matrix is not orthogonal")
            J.setflags(write=False)
            object.__setattr__(self, "duschinsky_matrix", J)
        elif n != 2:
            raise ParameterError("duschinsky_theta only describes two-mode transitions")
        elif not math.isfinite(self.duschinsky_theta):
            raise ParameterError("duschinsky_theta: must be finite")

    @property
    def n_modes(self) -> int:
        return len(self.nu_pre)

    def rotation(self) -> np.ndarray:
        """The rotation U = J^T."""
        if self.duschinsky_matrix is not None:
            return np.array(self.duschinsky_matrix).T
        return duschinsky_matrix(self.duschinsky_theta)


@dataclass(frozen=True)
class DoktorovParams:
    zeta: np.ndarray
    zeta_prime: np.ndarray
    rotation: np.ndarray
    alpha: np.ndarray
    eta: float = 1.0

    def __post_init__(self):
        for name in ("zeta", "zeta_prime", "alpha"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        rot = np.atleast_2d(np.array(self.rotation, dtype=float))
        n = self.zeta.size
        if rot.shape != (n, n):
            raise ParameterError(f"rotation: expected shape {(n, n)}, got {rot.shape}")
        if not _is_orthogonal(rot):
            raise ParameterError("rotation: matrix is not orthogonal")
        if self.zeta_prime.size != n or self.alpha.size != n:
            raise ParameterError("zeta, zeta_prime and alpha must have equal length")
        rot.setflags(write=False)
        object.__setattr__(self, "rotation", rot)

    @property
    def n_modes(self) -> int:
        return self.zeta.size

    @property
    def theta(self) -> float:
        """Rotation angle for the two-mode case."""
        if self.n_modes != 2:
            raise ParameterError("theta is only defined for two modes")
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    @classmethod
    def two_mode(cls, zeta, zeta_prime, theta, alpha, eta=1.0) -> "DoktorovParams":
        return cls(zeta, zeta_prime, duschinsky_matrix(theta), alpha, eta)

    @classmethod
    def identity(cls, n_modes: int = 2) -> "DoktorovParams":
        z = np.zeros(n_modes)
        return cls(z, z, np.eye(n_modes), z, 1.0)

    def rescaled(self, eta: float) -> "DoktorovParams":
        """Same unitary with a different common squeezing scale."""
        shift = math.log(self.eta) - math.log(eta)
        return DoktorovParams(self.zeta + shift, self.zeta_prime + shift,
                              self.rotation, self.alpha, eta)

    def as_dict(self) -> dict:
        out = {
            "zeta": self.zeta.tolist(),
            "zeta_prime": self.zeta_prime.tolist(),
            "alpha": self.alpha.tolist(),
            "eta": self.eta,
        }
        if self.n_modes == 2:
            out["theta"] = self.theta
        else:
            out["rotation"] = self.rotation.tolist()
        return out


@dataclass(frozen=True)
class GivensSequence:
    """Ordered nearest-neighbour plane rotations (i, i+1, theta)."""

    n_modes: int
    rotations: tuple[tuple[int, int, float], ...]

    def __iter__(self):
        return iter(self.rotations)

    def __len__(self):
        return len(self.rotations)

    def matrix(self) -> np.ndarray:
        """Left-to-right product of the plane rotations."""
        out = np.eye(self.n_modes)
        for i, j, theta in self.rotations:
            out = out @ plane_rotation(self.n_modes, i, j, theta)
        return out


def duschinsky_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def plane_rotation(n: int, i: int, j: int, theta: float) -> np.ndarray:
    r = np.eye(n)
    c, s = math.cos(theta), math.sin(theta)
    r[i, i] = c
    r[i, j] = -s
    r[j, i] = s
    r[j, j] = c
    return r


def shift_vector(U, K) -> np.ndarray:
    """Displacement d = -U K in mass-weighted coordinates."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    K = np.asarray(K, dtype=float)
    if U.shape[1] != K.size:
        raise ParameterError(f"shift_vector: U is {U.shape} but K has {K.size} entries")
    return -U @ K


def optimize_eta(nu_pre, nu_post) -> float:
    """Common scale minimising sum(zeta**2) + sum(zeta_prime**2).

    The objective is a 1-D quadratic in ln(eta), so the minimiser is the
    geometric mean of the square-rooted wavenumbers.
    """
    freqs = np.concatenate([np.ravel(nu_pre), np.ravel(nu_post)]).astype(float)
    if freqs.size == 0 or np.any(~np.isfinite(freqs)) or np.any(freqs <= 0):
        raise ParameterError("optimize_eta: frequencies must be strictly positive")
    return float(np.exp(np.mean(0.5 * np.log(freqs))))


def squeezing_cost(nu_pre, nu_post, eta: float) -> float:
    z = 0.5 * np.log(np.asarray(nu_pre, float)) - math.log(eta)
    zp = 0.5 * np.log(np.asarray(nu_post, float)) - math.log(eta)
    return float(np.sum(z**2) + np.sum(zp**2))


def doktorov_params(t: MolecularTransition, eta: float | None = None) -> DoktorovParams:
    """Convert a molecular transition into dimensionless Doktorov parameters.

    ``eta`` defaults to the squeezing-minimising scale. Displacements use the
    physical post-transition frequencies in atomic units.
    """
    nu_pre = np.asarray(t.nu_pre)
    nu_post = np.asarray(t.nu_post)
    if eta is None:
        eta = optimize_eta(nu_pre, nu_post)
    U = t.rotation()
    d = shift_vector(U, t.shift_K)
    omega_post = nu_post * WAVENUMBER_TO_HARTREE
    alpha = np.sqrt(omega_post / 2.0) * d
    zeta = np.log(np.sqrt(nu_pre) / eta)
    zeta_prime = np.log(np.sqrt(nu_post) / eta)
    return DoktorovParams(zeta, zeta_prime, U, alpha, float(eta))


def _wrap_angle(theta: float) -> float:
    # into (-pi, pi]
    wrapped = math.remainder(theta, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def givens_decompose(U, tol: float = ORTHO_TOL) -> GivensSequence:
    """Factor a special-orthogonal matrix into nearest-neighbour rotations.

    Subdiagonal entries are eliminated column by column, bottom row first,
    with rotations in adjacent planes. The returned sequence multiplies
    left to right back to ``U``.
    """
    U = np.array(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ParameterError("givens_decompose: matrix must be square")
    if not _is_orthogonal(U, tol):
        raise ParameterError("givens_decompose: matrix is not orthogonal")
    if np.linalg.det(U) < 0:
        raise ParameterError("givens_decompose: reflections (det = -1) are not rotations")
    n = U.shape[0]
    work = U.copy()
    applied = []
    for col in range(n - 1):
        for row in range(n - 1, col, -1):
            x, y = work[row - 1, col], work[row, col]
            if y == 0.0 and x >= 0.0:
                continue
            phi = math.atan2(-y, x)
            work = plane_rotation(n, row - 1, row, phi) @ work
            applied.append((row - 1, row, phi))
    # work is now the identity; invert the accumulated left rotations
    rotations = tuple((i, j, _wrap_angle(-phi)) for i, j, phi in applied)
    return GivensSequence(n, rotations)


def circuit_size(n_modes: int) -> tuple[int, int, int]:
    """Squeezers, displacers and beamsplitters needed for ``n_modes`` modes."""
    if n_modes < 1:
        raise ParameterError("circuit_size: need at least one mode")
    return 2 * n_modes, n_modes, n_modes * (n_modes - 1) // 2


def resource_estimate(n_modes: int, n_max: int, epsilon: float) -> tuple[int, float]:
    """Qubit count and order-of-magnitude gate count for a qubit encoding.

    The gate figure is N^2 n_max^2 ln(1/eps)^3 with no constant prefactor,
    so only its order of magnitude is meaningful.
    """
    if n_max < 1 or n_max & (n_max - 1):
        raise ParameterError(f"resource_estimate: n_max={n_max} is not a power of 2")
    if not 0 < epsilon < 1:
        raise ParameterError("resource_estimate: epsilon must lie in (0, 1)")
    n_q = n_modes * (n_max.bit_length() - 1)
    gate_scale = n_modes**2 * n_max**2 * math.log(1 / epsilon) ** 3
    return n_q, gate_scale


# Rows of the molecular-parameter table (theta in radians).
PRESETS: dict[str, MolecularTransition] = {
    "h2o": MolecularTransition(
        nu_pre=(3830.91, 1649.27), nu_post=(2619.09, 1602.85),
        duschinsky_theta=-0.16598, shift_K=(5.05, 49.47),
        label="H2O -> H2O+ (B 2B2) + e-",
    ),
    "o3": MolecularTransition(
        nu_pre=(1031.10, 582.58), nu_post=(1147.04, 713.39),
        duschinsky_theta=-0.0417, shift_K=(27.36, 14.33),
        label="O3- -> O3 + e-",
    ),
    "no2": MolecularTransition(
        nu_pre=(1297.27, 783.55), nu_post=(2633.34, 796.94),
        duschinsky_theta=2.40146, shift_K=(35.67, -38.01),
        label="NO2- -> NO2 + e-",
    ),
    "so2": MolecularTransition(
        nu_pre=(1136.38, 506.27), nu_post=(1056.79, 396.11),
        duschinsky_theta=0.19012, shift_K=(-8.86, -58.34),
        label="SO2 -> SO2+ + e-",
    ),
}


def preset(name: str) -> MolecularTransition:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown molecule preset {name!r}; "
                             f"choose from {', '.join(sorted(PRESETS))}") from None

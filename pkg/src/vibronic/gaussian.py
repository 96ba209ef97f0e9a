"""Closed-form Fock matrix elements of the Doktorov unitary.

The unitary is Gaussian, so the generating function of its matrix elements
is the exponential of a quadratic form and every element follows from a
linear recursion. No truncated exponential is involved, which makes this
route usable at large squeezing (e.g. the unscaled eta = 1 decomposition)
and as an independent check of the truncated-operator products.
"""

from __future__ import annotations

import numpy as np

from .molparams import DoktorovParams


def _squeeze_block(r: np.ndarray) -> np.ndarray:
    n = r.size
    m = np.zeros((2 * n, 2 * n))
    m[:n, :n] = m[n:, n:] = np.diag(np.cosh(r))
    m[:n, n:] = m[n:, :n] = np.diag(np.sinh(r))
    return m


def bogoliubov(params: DoktorovParams) -> tuple[np.ndarray, np.ndarray]:
    """(P, Q) with G a G^dag = P a + Q a^dag for G = S^dag(zeta') R S(zeta)."""
    n = params.n_modes
    rot = np.zeros((2 * n, 2 * n))
    rot[:n, :n] = rot[n:, n:] = params.rotation.T
    # for a product G1 G2 the matrices compose as M2 @ M1
    m = _squeeze_block(params.zeta) @ rot @ _squeeze_block(-params.zeta_prime)
    return m[:n, :n].astype(complex), m[:n, n:].astype(complex)


def _generating_form(params: DoktorovParams):
    """(c0, b, M) with sum <m|U|n> x^m y^n / sqrt(m! n!) = c0 exp(b.u + u.M.u / 2), u = (x, y)."""
    n = params.n_modes
    P, Q = bogoliubov(params)
    alpha = params.alpha.astype(complex)
    # U|0> = c0 exp(z.a^dag + a^dag.W.a^dag / 2)|0>
    r = -(P @ alpha + Q @ alpha.conj())
    Pinv = np.linalg.inv(P)
    W = -Pinv @ Q
    z = -Pinv @ r
    det = np.linalg.det(np.eye(n) - W @ W.conj())
    c0 = det**0.25 * np.exp(-0.5 * np.vdot(alpha, alpha).real + 0.5 * alpha.conj() @ W @ alpha.conj())
    # input photons enter through U a^dag U^dag = conj(P) a^dag + conj(Q) a + conj(r)
    Pc, Qc = P.conj(), Q.conj()
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    M[:n, :n] = W
    M[:n, n:] = Pc.T + W @ Qc.T
    M[n:, :n] = M[:n, n:].T
    M[n:, n:] = 0.5 * (Pc @ Qc.T + Qc @ Pc.T) + Qc @ W @ Qc.T
    b = np.concatenate([z, r.conj() + Qc @ z])
    return c0, b, M


def doktorov_elements(params: DoktorovParams, n_out: int, n_in: int | None = None) -> np.ndarray:
    """Amplitudes <m| D(alpha) S^dag(zeta') R(U) S(zeta) |n>.

    Returns an array indexed ``[m_1, ..., m_N, n_1, ..., n_N]`` with every
    output index below ``n_out`` and every input index below ``n_in``.

    The normalized Hermite recursion
    G[k + e_i] sqrt(k_i + 1) = b_i G[k] + sum_j M_ij sqrt(k_j) G[k - e_j]
    is run one axis at a time, vectorized over the trailing axes, in extended
    precision where the platform has it.
    """
    n_in = n_out if n_in is None else n_in
    if n_out < 1 or n_in < 1:
        raise ValueError("box sizes must be positive")
    n = params.n_modes
    c0, b, M = _generating_form(params)
    dtype = np.clongdouble
    b = b.astype(dtype)
    M = M.astype(dtype)
    sizes = [n_out] * n + [n_in] * n
    roots = np.sqrt(np.arange(max(sizes) + 1, dtype=np.longdouble))
    block = np.array(c0, dtype=dtype)
    # after step i, block holds G with indices 0..i-1 fixed at zero
    for i in range(2 * n - 1, -1, -1):
        out = np.zeros((sizes[i],) + block.shape, dtype=dtype)
        out[0] = block
        for t in range(sizes[i] - 1):
            cur = out[t]
            nxt = b[i] * cur
            if t > 0:
                nxt += M[i, i] * roots[t] * out[t - 1]
            for j in range(i + 1, 2 * n):
                ax = j - i - 1
                size = cur.shape[ax]
                if size < 2 or M[i, j] == 0:
                    continue
                src = [slice(None)] * cur.ndim
                dst = [slice(None)] * cur.ndim
                src[ax] = slice(0, size - 1)
                dst[ax] = slice(1, size)
                shape = [1] * cur.ndim
                shape[ax] = size - 1
                nxt[tuple(dst)] += M[i, j] * roots[1:size].reshape(shape) * cur[tuple(src)]
            out[t + 1] = nxt / roots[t + 1]
        block = out
    return block.astype(complex)


def doktorov_matrix(params: DoktorovParams, n_out: int, n_in: int | None = None) -> np.ndarray:
    """Same elements flattened to a (n_out^N, n_in^N) matrix, mode-A major."""
    n_in = n_out if n_in is None else n_in
    n = params.n_modes
    return doktorov_elements(params, n_out, n_in).reshape(n_out**n, n_in**n)


def fcf_exact(params: DoktorovParams, initial, n_max: int) -> np.ndarray:
    """|<m|U|n>|^2 for a single input Fock state, output box [0, n_max]^N."""
    initial = tuple(int(v) for v in initial)
    n_in = max(initial) + 1
    el = doktorov_elements(params, n_max + 1, n_in)
    return np.abs(el[(Ellipsis,) + initial]) ** 2

"""Exact block spectra from the orthogonal-polynomial recurrence.

The characteristic minors P_f(lambda) of the block matrix obey

    P_{f+1} = (lambda - delta*(l0 + f)) P_f - |g|^2 psi(l0 + f; l1) P_{f-1},

with P_0 = 1, P_{-1} = 0.  The eigenvalues are the roots of P_{s+1}; they
are isolated by Sturm-count bisection.  Eigenvector amplitudes follow from
the same sequence, Q_f = N(f) P_f Q_0 / |g|^f.  Plain floating point would
overflow for large s, so P_f is carried as a mantissa and a binary exponent.

``method="oracle"`` instead calls LAPACK's symmetric tridiagonal solver and
is kept as an independent cross-check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.special import gammaln

from . import _kernels
from .errors import ArgumentError, ConvergenceError
from .model import Block, ModelParams, TridiagonalOperator, hamiltonian_matrix

METHODS = ("sturm", "oracle")

RTOL = 1e-13
ATOL = 1e-13
MAXIT = 400
# forward-recurrence vectors are kept only while their residual stays at
# this fraction of |T|; looser vectors would spoil orthogonality
RECURRENCE_RESIDUAL = 1e-12
INVERSE_ITERATIONS = 3


class SturmSequence(NamedTuple):
    """P_0..P_{s+1} as mantissa * 2**exponent, plus the Sturm count."""

    mantissa: np.ndarray
    exponent: np.ndarray
    count: np.ndarray | int

    def values(self) -> np.ndarray:
        """Unscaled P_f; overflows to inf for large blocks."""
        return np.ldexp(self.mantissa, self.exponent)


@dataclass(frozen=True)
class SpectralSolution:
    """Ascending eigenvalues and amplitudes Q[f, v] of one block (real gauge).

    ``refined[v]`` marks eigenvectors that were polished by inverse
    iteration because the forward recurrence had lost accuracy.
    """

    block: Block
    lambdas: np.ndarray
    Q: np.ndarray | None
    method: str
    refined: np.ndarray | None = None

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.lambdas)))

    def amplitudes_fock(self, params: ModelParams) -> np.ndarray:
        """Amplitudes in the original Fock basis: (g/|g|)^f Q_f^v."""
        if self.Q is None:
            raise ArgumentError("solution was computed without eigenvectors")
        return np.exp(1j * params.g_phase * np.arange(self.block.dim))[:, None] * self.Q


def _recurrence_terms(T: TridiagonalOperator):
    b2 = T.offdiag**2
    return T.diag, b2


def sturm_polynomials(block: Block, params: ModelParams, lam) -> SturmSequence:
    """Scaled characteristic minors P_0(lam)..P_{s+1}(lam).

    ``lam`` may be a scalar or a 1-D array; for arrays each column of the
    returned mantissa/exponent arrays belongs to one trial value.  The count
    is the number of eigenvalues strictly below ``lam`` (sign agreements of
    consecutive minors, a zero minor taking the sign opposite to its
    predecessor).
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    if not np.all(np.isfinite(lam_arr)):
        raise ArgumentError("lambda must be finite")
    scalar = lam_arr.ndim == 0
    x = np.atleast_1d(lam_arr)
    d, b2 = _recurrence_terms(hamiltonian_matrix(block, params))
    n = block.dim

    mant = np.zeros((n + 1, x.size))
    expo = np.zeros((n + 1, x.size), dtype=np.int64)
    mant[0] = 0.5
    expo[0] = 1
    prev_m = np.zeros(x.size)
    prev_e = np.zeros(x.size, dtype=np.int64)
    for f in range(n):
        cur_m, cur_e = mant[f], expo[f]
        top = np.maximum(cur_e, prev_e)
        t = (x - d[f]) * np.ldexp(cur_m, cur_e - top)
        if f > 0:
            t = t - b2[f - 1] * np.ldexp(prev_m, prev_e - top)
        m, e = np.frexp(t)
        zero = t == 0.0
        mant[f + 1] = m
        expo[f + 1] = np.where(zero, cur_e, top + e)
        prev_m, prev_e = cur_m, cur_e

    sign = np.sign(mant)
    eff = sign.copy()
    for f in range(1, n + 1):
        eff[f] = np.where(sign[f] == 0, -eff[f - 1], sign[f])
    count = np.sum(eff[1:] == eff[:-1], axis=0)

    if scalar:
        return SturmSequence(mant[:, 0], expo[:, 0], int(count[0]))
    return SturmSequence(mant, expo, count)


def _bisect(T: TridiagonalOperator, rtol, atol, workers) -> np.ndarray:
    d, b2 = _recurrence_terms(T)
    n = d.size
    glo, ghi = T.gershgorin()
    spread = ghi - glo
    pad = 1e-12 * max(spread, 1.0)
    glo, ghi = glo - pad, ghi + pad
    pivmin = _kernels.pivot_floor(b2)
    if _kernels.sturm_count(d, b2, glo, pivmin) != 0 or _kernels.sturm_count(d, b2, ghi, pivmin) != n:
        raise ConvergenceError(f"Gershgorin bracket does not enclose the spectrum of {T.block!r}")

    blo = np.empty(n)
    bhi = np.empty(n)
    ctol = rtol * spread
    _kernels.isolate(d, b2, glo, ghi, ctol, pivmin, blo, bhi)

    out = np.empty(n)
    ok = np.zeros(n, dtype=np.bool_)
    args = (d, b2, blo, bhi)
    tail = (rtol, atol, ctol, MAXIT, pivmin, out, ok)
    workers = max(1, int(workers))
    if workers == 1 or n < 64:
        _kernels.refine_range(*args, 0, n, *tail)
    else:
        edges = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            jobs = [pool.submit(_kernels.refine_range, *args, int(lo), int(hi), *tail)
                    for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
            for job in jobs:
                job.result()
    if not np.all(ok):
        bad = np.flatnonzero(~ok)
        raise ConvergenceError(f"root refinement did not converge for levels {bad[:10].tolist()} of {T.block!r}")
    return out


def eigenvalues_sturm(block: Block, params: ModelParams, rtol=RTOL, atol=ATOL, workers=1) -> np.ndarray:
    """All s+1 roots of P_{s+1}, ascending."""
    T = hamiltonian_matrix(block, params)
    if block.s == 0:
        return T.diag.copy()
    return _bisect(T, rtol, atol, workers)


def log_norm_factor(block: Block) -> np.ndarray:
    """log N(f; k, s), f = 0..s, with |k,s;f> = N(f) V+^f |k,s>.

    N(f)^2 = k! (s - f)! / ((k + 2f)! s!), the inverse of prod psi(l0 + i), i = 1..f.
    """
    f = np.arange(block.dim)
    k, s = block.k, block.s
    return 0.5 * (gammaln(k + 1) + gammaln(s - f + 1) - gammaln(k + 2 * f + 1) - gammaln(s + 1))


def _recurrence_logs(block, params, lambdas):
    """log|Q_f| (unnormalized) and sign(Q_f) from the forward recurrence."""
    seq = sturm_polynomials(block, params, lambdas)
    mant = seq.mantissa[:-1]
    expo = seq.exponent[:-1]
    f = np.arange(block.dim)[:, None]
    with np.errstate(divide="ignore"):
        logmag = (
            np.log(np.abs(mant))
            + expo * math.log(2.0)
            + log_norm_factor(block)[:, None]
            - f * math.log(params.g_abs)
        )
    return logmag, np.sign(mant)


def _amplitudes_recurrence(block, params, lambdas):
    logmag, sign = _recurrence_logs(block, params, lambdas)
    logmag = logmag - np.max(logmag, axis=0, keepdims=True)
    Q = sign * np.exp(logmag)
    return Q / np.linalg.norm(Q, axis=0)


def _residuals(T, Q, lambdas):
    return np.max(np.abs(T.matvec(Q) - Q * lambdas), axis=0)


def _inverse_iteration(T, lam, start):
    n = T.diag.size
    shift = lam + 4.0 * np.finfo(float).eps * max(T.norm_inf(), 1.0)
    ab = np.zeros((3, n))
    ab[0, 1:] = T.offdiag
    ab[1] = T.diag - shift
    ab[2, :-1] = T.offdiag
    x = start / np.linalg.norm(start)
    for _ in range(INVERSE_ITERATIONS):
        x = solve_banded((1, 1), ab, x)
        x /= np.linalg.norm(x)
    return x


def _orient(x, logmag, sign):
    """Flip x so that it agrees with the recurrence solution, i.e. Q_0 > 0.

    Q_0 itself can underflow for large blocks, so the comparison uses the
    recurrence prefix up to the peak of x, where forward growth is stable.
    """
    peak = int(np.argmax(np.abs(x)))
    head = logmag[: peak + 1]
    w = sign[: peak + 1] * np.exp(head - np.max(head))
    return -x if np.dot(w, x[: peak + 1]) < 0 else x


def amplitudes_from_lambda(block: Block, params: ModelParams, lambda_v) -> np.ndarray:
    """Unit amplitude vector Q_f, f = 0..s, for a converged eigenvalue.

    Q_0 > 0.  Raises ArgumentError if ``lambda_v`` is not an eigenvalue of
    the block to working accuracy.
    """
    lam = np.atleast_1d(np.asarray(lambda_v, dtype=np.float64))
    Q, _ = _amplitudes(block, params, lam)
    T = hamiltonian_matrix(block, params)
    res = _residuals(T, Q, lam)
    if res[0] > 1e-9 * max(1.0, T.norm_inf()):
        raise ArgumentError(f"lambda={float(lam[0])!r} is not an eigenvalue of {block!r} (residual {res[0]:.3g})")
    return Q[:, 0]


def _amplitudes(block, params, lambdas):
    T = hamiltonian_matrix(block, params)
    n = block.dim
    if n == 1:
        return np.ones((1, lambdas.size)), np.zeros(lambdas.size, dtype=bool)
    if params.g_abs == 0.0:
        return _decoupled_vectors(T, lambdas), np.zeros(lambdas.size, dtype=bool)
    logmag, sign = _recurrence_logs(block, params, lambdas)
    Q = sign * np.exp(logmag - np.max(logmag, axis=0, keepdims=True))
    Q /= np.linalg.norm(Q, axis=0)
    res = _residuals(T, Q, lambdas)
    bad = ~np.isfinite(res) | (res > RECURRENCE_RESIDUAL * max(1.0, T.norm_inf()))
    if np.any(bad):
        # fixed seed: output must not depend on global RNG state
        start = np.random.default_rng(20011).standard_normal(n)
        for v in np.flatnonzero(bad):
            x = _inverse_iteration(T, lambdas[v], start)
            Q[:, v] = _orient(x, logmag[:, v], sign[:, v])
    return Q, bad


def _decoupled_vectors(T, lambdas):
    # g = 0: the block is already diagonal
    if lambdas.size == T.diag.size:
        rows = np.argsort(T.diag, kind="stable")
    else:
        rows = np.argmin(np.abs(T.diag[:, None] - lambdas[None, :]), axis=0)
    Q = np.zeros((T.diag.size, lambdas.size))
    Q[rows, np.arange(lambdas.size)] = 1.0
    return Q


def _solve_oracle(block, params, vectors):
    T = hamiltonian_matrix(block, params)
    if block.s == 0:
        return T.diag.copy(), (np.ones((1, 1)) if vectors else None)
    if vectors:
        w, Q = eigh_tridiagonal(T.diag, T.offdiag)
        if params.g_abs > 0.0:
            logmag, sign = _recurrence_logs(block, params, w)
            Q = np.column_stack([_orient(Q[:, v], logmag[:, v], sign[:, v]) for v in range(w.size)])
        return w, Q
    return eigh_tridiagonal(T.diag, T.offdiag, eigvals_only=True), None


def solve(block: Block, params: ModelParams, method: str = "sturm", vectors: bool = True,
          workers: int = 1, rtol: float = RTOL) -> SpectralSolution:
    """Eigenvalues (ascending) and optionally amplitudes Q[f, v] of one block."""
    if method not in METHODS:
        raise ArgumentError(f"method must be one of {METHODS}, got {method!r}")
    if method == "oracle":
        lambdas, Q = _solve_oracle(block, params, vectors)
        return SpectralSolution(block, lambdas, Q, method)
    lambdas = eigenvalues_sturm(block, params, rtol=rtol, workers=workers)
    Q = refined = None
    if vectors:
        Q, refined = _amplitudes(block, params, lambdas)
    return SpectralSolution(block, lambdas, Q, method, refined)

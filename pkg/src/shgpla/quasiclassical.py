"""SU(2)-quasiclassical approximation of the block spectra.

Approximate eigenvectors are columns of the Wigner matrix d^j(2r), j = s/2,
acting on the block basis (f <-> m = f - j).  Two eigenvalue estimates are
provided: the full expectation value ``lambda_qc`` and the closed-form
cluster mean-field value ``lambda_cmf``.  The fitting angle comes from one
of the fixed strategies below; cos 2r is what matters, sin 2r >= 0 always.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ArgumentError
from .model import Block, ModelParams, hamiltonian_matrix

STRATEGY_TAGS = ("R1", "MP_R1", "R2", "R3", "EXPLICIT")


@dataclass(frozen=True)
class AngleStrategy:
    """Rule assigning cos 2r to every level v of a block.

    R1       cos 2r = +1/3
    MP_R1    cos 2r = -1/3 on the lower half (v < ceil((s+1)/2)), +1/3 above
    R2       cos 2r = -1/sqrt(s)
    R3       cos 2r = 0
    EXPLICIT cos 2r = explicit_cos2r
    """

    tag: str
    explicit_cos2r: float | None = None

    def __post_init__(self):
        if self.tag not in STRATEGY_TAGS:
            raise ArgumentError(f"unknown angle strategy {self.tag!r}")
        if self.tag == "EXPLICIT":
            c = self.explicit_cos2r
            if c is None or not -1.0 <= c <= 1.0:
                raise ArgumentError(f"explicit cos2r must lie in [-1, 1], got {c!r}")

    @classmethod
    def parse(cls, text: str) -> "AngleStrategy":
        """'r1', 'mp_r1', 'r2', 'r3' or 'explicit:<cos2r>' (case-insensitive)."""
        name, _, arg = text.strip().partition(":")
        tag = name.upper()
        if tag == "EXPLICIT":
            try:
                return cls(tag, float(arg))
            except ValueError:
                raise ArgumentError(f"bad explicit angle {text!r}") from None
        return cls(tag)

    @property
    def name(self) -> str:
        if self.tag == "EXPLICIT":
            return f"explicit:{self.explicit_cos2r!r}"
        return self.tag.lower()

    @property
    def single_angle(self) -> bool:
        return self.tag != "MP_R1"

    def cos2r(self, block: Block) -> np.ndarray:
        s = block.s
        n = block.dim
        if self.tag == "R1":
            return np.full(n, 1.0 / 3.0)
        if self.tag == "MP_R1":
            lower = np.arange(n) < -(-(s + 1) // 2)
            return np.where(lower, -1.0 / 3.0, 1.0 / 3.0)
        if self.tag == "R2":
            if s == 0:
                raise ArgumentError("strategy R2 needs s >= 1")
            return np.full(n, -1.0 / math.sqrt(s))
        if self.tag == "R3":
            return np.zeros(n)
        return np.full(n, float(self.explicit_cos2r))


R1 = AngleStrategy("R1")
MP_R1 = AngleStrategy("MP_R1")
R2 = AngleStrategy("R2")
R3 = AngleStrategy("R3")
TABLE_STRATEGIES = (R1, MP_R1, R2, R3)


def _two_j(j) -> int:
    try:
        tj = 2 * Fraction(j)
    except (TypeError, ValueError):
        raise ArgumentError(f"j must be a non-negative half-integer, got {j!r}") from None
    if tj.denominator != 1 or tj < 0:
        raise ArgumentError(f"j must be a non-negative half-integer, got {j!r}")
    return int(tj)


def wigner_d_matrix(j, beta: float) -> np.ndarray:
    """Wigner small-d matrix d^j_{m,n}(beta), rows m = -j..j, columns n = -j..j.

    Column n is the eigenvector of cos(beta) J_z + sin(beta) J_x with
    eigenvalue n.  Phases follow the usual convention, in which
    d^j_{j,n} has sign (-1)^(j-n) for 0 < beta < pi.
    """
    two_j = _two_j(j)
    n = two_j + 1
    beta = float(beta)
    if beta == 0.0:
        return np.eye(n)
    jj = two_j / 2.0
    m = np.arange(n) - jj
    # (J+)_{i+1,i} in the ascending-m basis
    lift = np.sqrt(jj * (jj + 1.0) - m[:-1] * (m[:-1] + 1.0))
    c, s = math.cos(beta), math.sin(beta)
    if n == 1:
        return np.ones((1, 1))
    _, D = eigh_tridiagonal(c * m, 0.5 * s * lift)

    # column n = -j in closed form: (-1)^f C(2j,f)^(1/2) cos(b/2)^(2j-f) sin(b/2)^f
    peak = int(np.argmax(np.abs(D[:, 0])))
    want = (-1) ** peak
    want *= math.copysign(1.0, math.cos(beta / 2)) ** (two_j - peak)
    want *= math.copysign(1.0, math.sin(beta / 2)) ** peak
    if np.sign(D[peak, 0]) != want:
        D[:, 0] = -D[:, 0]

    # carry the phase convention along with the rotated raising operator
    # R J+ R^T = cos(b) J_x - sin(b) J_z + (J+ - J-)/2
    up = 0.5 * (c + 1.0) * lift   # coefficient on the sub-diagonal (raises m)
    down = 0.5 * (c - 1.0) * lift  # coefficient on the super-diagonal
    for col in range(n - 1):
        x = D[:, col]
        y = -s * m * x
        y[1:] += up * x[:-1]
        y[:-1] += down * x[1:]
        if np.dot(y, D[:, col + 1]) < 0:
            D[:, col + 1] = -D[:, col + 1]
    return D


def _single_cos2r(block, strategy):
    if not strategy.single_angle:
        raise ArgumentError(
            "MP_R1 mixes two angles; its eigenvector set is not orthogonal and is not provided"
        )
    return float(strategy.cos2r(block)[0])


def qc_eigvectors(block: Block, params: ModelParams, strategy: AngleStrategy) -> np.ndarray:
    """S[f, v] = d^j_{-j+f, -j+v}(2r) in the real gauge."""
    c = _single_cos2r(block, strategy)
    return wigner_d_matrix(Fraction(block.s, 2), math.acos(c))


def qc_eigvectors_fock(block, params, strategy) -> np.ndarray:
    """Quasiclassical eigenvectors with the coupling phase restored: (g/|g|)^(f-v) S[f, v]."""
    S = qc_eigvectors(block, params, strategy)
    f = np.arange(block.dim)
    return np.exp(1j * params.g_phase * (f[:, None] - f[None, :])) * S


def _diagonal_part(block, params, cos2r):
    v = np.arange(block.dim)
    j = block.s / 2.0
    return params.delta * (j + float(block.l0) - (j - v) * cos2r)


def lambda_cmf(block: Block, params: ModelParams, strategy: AngleStrategy) -> np.ndarray:
    """Closed-form cluster mean-field eigenvalues, one per level v."""
    c = strategy.cos2r(block)
    sn = np.sqrt(1.0 - c * c)
    s, k = block.s, block.k
    v = np.arange(block.dim)
    j = s / 2.0
    radicand = 2.0 * (s + 2 * k + 1 + (2 * v - s) * c)
    if np.any(radicand < 0):
        warnings.warn(f"negative mean-field radicand clamped to 0 for {block!r}, strategy {strategy.name}",
                      RuntimeWarning, stacklevel=2)
        radicand = np.maximum(radicand, 0.0)
    return _diagonal_part(block, params, c) - 2.0 * params.g_abs * (j - v) * sn * np.sqrt(radicand)


def lambda_qc(block: Block, params: ModelParams, strategy: AngleStrategy, S: np.ndarray | None = None) -> np.ndarray:
    """Expectation values <v|H - C|v> in the rotated states."""
    c = _single_cos2r(block, strategy)
    if S is None:
        S = qc_eigvectors(block, params, strategy)
    s, k = block.s, block.k
    f = np.arange(s, dtype=np.float64)
    # (s-f)(f+1)*2(2k+1+2f) equals (s-f)(k+2f+1)(k+2f+2) for k in {0, 1}
    weight = params.g_abs * np.sqrt((s - f) * (f + 1) * 2.0 * (2 * k + 1 + 2 * f))
    hop = 2.0 * np.einsum("f,fv,fv->v", weight, S[:-1], S[1:]) if s > 0 else np.zeros(1)
    return _diagonal_part(block, params, c) + hop


@dataclass(frozen=True)
class QCApproximation:
    block: Block
    strategy: AngleStrategy
    cos2r: np.ndarray
    lambdas_cmf: np.ndarray
    lambdas_qc: np.ndarray | None = None
    S: np.ndarray | None = None


def approximate(block: Block, params: ModelParams, strategy: AngleStrategy, vectors: bool = True) -> QCApproximation:
    """Bundle the cmf eigenvalues with, for single-angle strategies, S and lambda_qc."""
    cmf = lambda_cmf(block, params, strategy)
    S = qc = None
    if vectors and strategy.single_angle:
        S = qc_eigvectors(block, params, strategy)
        qc = lambda_qc(block, params, strategy, S)
    return QCApproximation(block, strategy, strategy.cos2r(block), cmf, qc, S)


def congruence_diagonal(block: Block, params: ModelParams, S: np.ndarray) -> np.ndarray:
    """diag(S^T T S), the matrix route to lambda_qc."""
    T = hamiltonian_matrix(block, params)
    return np.einsum("fv,fv->v", S, T.matvec(S))

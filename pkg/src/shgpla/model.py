"""Model parameters, invariant blocks and the per-block tridiagonal Hamiltonian.

The two-mode Hamiltonian

    H = w0 a0+ a0 + w1 a1+ a1 + g a1+^2 a0 + g* a1^2 a0+      (hbar = 1)

conserves n1 + 2 n0 and the parity of n1, so the Fock space splits into
finite blocks L(k, s) spanned by |n1 = k + 2f, n0 = s - f>, f = 0..s.
Inside a block H - C(l1) is a real symmetric tridiagonal matrix once the
phase of g is absorbed into the basis vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model, hbar = 1.

    Only the detuning ``delta = 2*omega1 - omega0`` and the coupling enter
    the block spectra; ``omega0 + omega1`` only sets the block offset C(l1).
    """

    omega0: float
    omega1: float
    g_abs: float = 1.0
    g_phase: float = 0.0

    def __post_init__(self):
        if not self.g_abs >= 0.0 or not math.isfinite(self.g_abs):
            raise ArgumentError(f"g_abs must be finite and >= 0, got {self.g_abs!r}")
        for name in ("omega0", "omega1", "g_phase"):
            if not math.isfinite(getattr(self, name)):
                raise ArgumentError(f"{name} must be finite")

    @property
    def delta(self) -> float:
        return 2.0 * self.omega1 - self.omega0

    @property
    def g(self) -> complex:
        return self.g_abs * complex(math.cos(self.g_phase), math.sin(self.g_phase))

    @classmethod
    def resonant(cls, g_abs=1.0, g_phase=0.0, omega1=1.0):
        """omega0 = 2*omega1, so delta is exactly zero."""
        return cls(omega0=2.0 * omega1, omega1=omega1, g_abs=g_abs, g_phase=g_phase)

    @classmethod
    def from_detuning(cls, delta, g_abs=1.0, g_phase=0.0):
        # omega1 = 0 keeps 2*omega1 - omega0 == delta bit-exact.
        return cls(omega0=-float(delta), omega1=0.0, g_abs=g_abs, g_phase=g_phase)

    def offset(self, block: "Block") -> float:
        """C(l1) = (omega1 + omega0) * l1, the energy shared by a whole block."""
        return (self.omega1 + self.omega0) * float(block.l1)


@dataclass(frozen=True)
class Block:
    """Invariant subspace L(k, s), dimension s + 1."""

    k: int
    s: int

    def __post_init__(self):
        if self.k not in (0, 1):
            raise ArgumentError(f"k must be 0 or 1, got {self.k!r}")
        if not isinstance(self.s, (int, np.integer)) or self.s < 0:
            raise ArgumentError(f"s must be a non-negative integer, got {self.s!r}")
        object.__setattr__(self, "s", int(self.s))

    @property
    def sort_key(self) -> tuple[int, int]:
        """Ascending s, then k: the fixed order used when blocks are combined."""
        return (self.s, self.k)

    @property
    def dim(self) -> int:
        return self.s + 1

    @property
    def l0(self) -> Fraction:
        return Fraction(self.k - self.s, 3)

    @property
    def l1(self) -> Fraction:
        return Fraction(self.k + 2 * self.s, 3)

    @property
    def j(self) -> Fraction:
        return Fraction(self.s, 2)

    def occupations(self, f: int) -> tuple[int, int]:
        """Fock numbers (n1, n0) of basis vector f."""
        _check_index(self, f, 0, self.s)
        return self.k + 2 * f, self.s - f

    def __repr__(self):
        return f"Block(k={self.k}, s={self.s})"


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix of H - C(l1) on one block."""

    diag: np.ndarray
    offdiag: np.ndarray
    block: Block = field(compare=False)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """T @ x for a vector or a matrix of column vectors."""
        x = np.asarray(x)
        d = self.diag if x.ndim == 1 else self.diag[:, None]
        b = self.offdiag if x.ndim == 1 else self.offdiag[:, None]
        y = d * x
        y[:-1] += b * x[1:]
        y[1:] += b * x[:-1]
        return y

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros_like(self.diag)
        r[:-1] += self.offdiag
        r[1:] += self.offdiag
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    def norm_inf(self) -> float:
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi))


def _check_index(block, f, lo, hi):
    if not isinstance(f, (int, np.integer)) or not lo <= f <= hi:
        raise ArgumentError(f"index f={f!r} outside [{lo}, {hi}] for {block!r}")


def structure_poly(block: Block, f: int) -> int:
    """psi(l0 + f; l1) = (k + 2f)(k + 2f - 1)(s - f + 1), exact integer.

    Valid for 0 <= f <= s + 1; vanishes at both ends of that range.
    """
    _check_index(block, f, 0, block.s + 1)
    k, s = block.k, block.s
    return (k + 2 * f) * (k + 2 * f - 1) * (s - f + 1)


def coupling(block: Block, params: ModelParams, f: int) -> float:
    """Off-diagonal element |g| <f+1|V+|f> = |g| sqrt(psi(l0 + f + 1; l1))."""
    _check_index(block, f, 0, block.s - 1)
    return params.g_abs * math.sqrt(structure_poly(block, f + 1))


def hamiltonian_matrix(block: Block, params: ModelParams) -> TridiagonalOperator:
    """Tridiagonal H - C(l1) on L(k, s) in the real gauge."""
    s = block.s
    f = np.arange(s + 1)
    # delta * (l0 + f) with l0 = (k - s)/3 kept exact until this point
    diag = (params.delta * (block.k - s + 3 * f)) / 3.0
    ff = np.arange(s, dtype=np.float64)
    psi = (block.k + 2 * ff + 2) * (block.k + 2 * ff + 1) * (s - ff)
    offdiag = params.g_abs * np.sqrt(psi)
    return TridiagonalOperator(diag=diag, offdiag=offdiag, block=block)


def fock_to_block(n1: int, n0: int) -> tuple[Block, int]:
    """Locate Fock state |n1, n0> as basis vector f of its block."""
    if n1 < 0 or n0 < 0:
        raise ArgumentError(f"occupations must be non-negative, got ({n1}, {n0})")
    k = n1 % 2
    f = (n1 - k) // 2
    return Block(k, n0 + f), f


def gauge_phases(block: Block, params: ModelParams) -> np.ndarray:
    """(g/|g|)^f, f = 0..s: maps real-gauge amplitudes to the Fock basis."""
    return np.exp(1j * params.g_phase * np.arange(block.dim))

"""Time evolution of the mode populations through the block spectra.

Y0, N0 and N1 are diagonal in every block basis, so a state that is a
mixture (or superposition) over blocks evolves block by block and only the
block weights couple the results:

    <N0(t)> = s_bar/2 - <Y0(t)>,    <N1(t)> = s_bar + k_bar + 2 <Y0(t)>.

Inside a block the state is expanded in the eigenbasis, a = Q^T c, and
rotated with exp(-i lambda_v t); the block offset C(l1) is a global phase
and drops out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ArgumentError, CapacityError
from .exact import solve
from .model import Block, ModelParams, fock_to_block, gauge_phases
from .quasiclassical import AngleStrategy, lambda_cmf, qc_eigvectors

DEFAULT_EPS = 1e-10
DEFAULT_S_CAP = 2000
# Cumulative weights are float sums; tighter truncation targets are not resolvable.
MIN_EPS = 1e-14


@dataclass(frozen=True)
class BlockState:
    """Normalized amplitude vector c_f (Fock-basis phases) and probability weight of one block."""

    block: Block
    c: np.ndarray
    weight: float


@dataclass(frozen=True)
class InitialState:
    """Pure initial state, stored as its decomposition over blocks.

    Build with :meth:`cluster`, :meth:`fock` or :meth:`coherent`.
    """

    kind: str
    label: tuple
    components: tuple[BlockState, ...]

    @classmethod
    def fock(cls, n1: int, n0: int) -> "InitialState":
        block, f = fock_to_block(n1, n0)
        c = np.zeros(block.dim, dtype=complex)
        c[f] = 1.0
        return cls("fock", (n1, n0), (BlockState(block, c, 1.0),))

    @classmethod
    def cluster(cls, k: int, s: int) -> "InitialState":
        """Lowest-weight state of L(k, s): all pump quanta in mode 0, n1 = k."""
        block = Block(k, s)
        c = np.zeros(block.dim, dtype=complex)
        c[0] = 1.0
        return cls("cluster", (k, s), (BlockState(block, c, 1.0),))

    @classmethod
    def coherent(cls, alpha1: complex, alpha0: complex, eps: float = DEFAULT_EPS,
                 s_cap: int = DEFAULT_S_CAP) -> "InitialState":
        parts = coherent_weights(alpha1, alpha0, eps, s_cap)
        return cls("coherent", (complex(alpha1), complex(alpha0), eps), tuple(parts))

    @classmethod
    def parse(cls, text: str, eps: float = DEFAULT_EPS, s_cap: int = DEFAULT_S_CAP,
              k: int | None = None, s: int | None = None) -> "InitialState":
        """'cluster', 'fock:n1,n0' or 'coherent:a1,a0' (a1, a0 Python complex literals)."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.lower()
        try:
            if kind == "cluster":
                if k is None or s is None:
                    raise ArgumentError("cluster initial state needs k and s")
                return cls.cluster(k, s)
            if kind == "fock":
                n1, n0 = (int(x) for x in arg.split(","))
                return cls.fock(n1, n0)
            if kind == "coherent":
                a1, a0 = (complex(x.replace(" ", "")) for x in arg.split(","))
                return cls.coherent(a1, a0, eps, s_cap)
        except ValueError as exc:
            if isinstance(exc, ArgumentError):
                raise
            raise ArgumentError(f"malformed initial state {text!r}") from None
        raise ArgumentError(f"unknown initial state kind {kind!r}")

    @property
    def total_weight(self) -> float:
        return math.fsum(p.weight for p in self.components)

    @property
    def s_bar(self) -> float:
        return math.fsum(p.weight * p.block.s for p in self.components) / self.total_weight

    @property
    def k_bar(self) -> float:
        return math.fsum(p.weight * p.block.k for p in self.components) / self.total_weight


def _log_abs(alpha):
    return math.log(abs(alpha)) if alpha != 0 else -math.inf


def _block_log_amplitudes(k, s, la1, la0):
    # log |<n1, n0|alpha1, alpha0>| up to the common exp(-(|a1|^2+|a0|^2)/2)
    f = np.arange(s + 1)
    n1 = k + 2 * f
    n0 = s - f
    with np.errstate(invalid="ignore"):
        t1 = np.where(n1 == 0, 0.0, n1 * la1)
        t0 = np.where(n0 == 0, 0.0, n0 * la0)
    return t1 + t0 - 0.5 * (gammaln(n1 + 1) + gammaln(n0 + 1))


def coherent_weights(alpha1: complex, alpha0: complex, eps: float = DEFAULT_EPS,
                     s_cap: int = DEFAULT_S_CAP) -> list[BlockState]:
    """Decompose |alpha1>|alpha0> over blocks, largest blocks last.

    Blocks s = 0, 1, 2, ... (both parities) are added until their total
    probability reaches 1 - eps.  Zero-weight blocks are omitted.  Raises
    CapacityError, with the s that would have sufficed, when that needs
    s > s_cap.
    """
    if not 0.0 < eps < 1.0:
        raise ArgumentError(f"eps must lie in (0, 1), got {eps!r}")
    if eps < MIN_EPS:
        raise ArgumentError(f"eps below {MIN_EPS:g} is not resolvable in double precision")
    alpha1, alpha0 = complex(alpha1), complex(alpha0)
    la1, la0 = _log_abs(alpha1), _log_abs(alpha0)
    ph1, ph0 = np.angle(alpha1), np.angle(alpha0)
    log_norm = -0.5 * (abs(alpha1) ** 2 + abs(alpha0) ** 2)

    parts: list[BlockState] = []
    captured = []
    s = 0
    while True:
        for k in (0, 1):
            logs = _block_log_amplitudes(k, s, la1, la0) + log_norm
            top = np.max(logs)
            if top == -math.inf:
                continue
            mags = np.exp(logs - top)
            weight = float(np.exp(2 * top) * np.dot(mags, mags))
            if weight == 0.0:
                continue
            captured.append(weight)
            if s <= s_cap:
                f = np.arange(s + 1)
                phase = np.exp(1j * ((k + 2 * f) * ph1 + (s - f) * ph0))
                c = mags * phase
                parts.append(BlockState(Block(k, s), c / np.linalg.norm(c), weight))
        if math.fsum(captured) >= 1.0 - eps:
            break
        s += 1
    if s > s_cap:
        raise CapacityError(
            f"coherent state needs blocks up to s={s} to capture 1-{eps:g} of its weight; cap is s={s_cap}",
            required_s_max=s,
        )
    return parts


@dataclass(frozen=True)
class BlockTrace:
    """Occupation expectations inside one block, each read off |c_f(t)|^2."""

    Y0: np.ndarray
    N0: np.ndarray
    N1: np.ndarray
    unitarity_error: float


def evolve_block(solution, c, times) -> BlockTrace:
    """<Y0(t)>, <N0(t)> and <N1(t)> inside one block.

    ``solution`` is any object with ``block``, ``lambdas`` and real
    orthogonal ``Q`` (exact or approximate); ``c`` is the initial amplitude vector in the
    real gauge of that solution.
    """
    lambdas = np.asarray(solution.lambdas, dtype=np.float64)
    Q = solution.Q
    if Q is None:
        raise ArgumentError("evolution needs eigenvectors")
    c = np.asarray(c, dtype=complex)
    if c.ndim != 1 or c.size != lambdas.size or Q.shape != (c.size, c.size):
        raise ArgumentError(f"amplitude vector of length {c.size} does not match block dimension {lambdas.size}")
    if abs(np.linalg.norm(c) - 1.0) > 1e-12:
        raise ArgumentError("initial amplitude vector must be unit-normalized")
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    a = Q.T @ c
    ct = Q @ (a[:, None] * np.exp(-1j * np.outer(lambdas, t)))
    prob = ct.real**2 + ct.imag**2
    s = lambdas.size - 1
    f = np.arange(s + 1)
    y = (f - 0.5 * s) @ prob
    n0 = (s - f) @ prob
    n1 = (solution.block.k + 2 * f) @ prob
    unit = float(np.max(np.abs(prob.sum(axis=0) - 1.0))) if t.size else 0.0
    return BlockTrace(y, n0, n1, unit)


class SolutionCache:
    """Spectral solutions keyed by block, detuning, |g| and method."""

    def __init__(self):
        self._store = {}

    def get(self, block: Block, params: ModelParams, method: str = "sturm", workers: int = 1):
        key = (block.k, block.s, params.delta, params.g_abs, method)
        sol = self._store.get(key)
        if sol is None:
            sol = solve(block, params, method=method, vectors=True, workers=workers)
            self._store[key] = sol
        return sol

    def __len__(self):
        return len(self._store)


@dataclass(frozen=True)
class _ApproxSolution:
    block: Block
    lambdas: np.ndarray
    Q: np.ndarray


def approximate_solution(block: Block, params: ModelParams, strategy: AngleStrategy) -> _ApproxSolution:
    """Quasiclassical spectral pair (lambda_cmf, d-matrix columns) usable by :func:`evolve_block`."""
    return _ApproxSolution(block, lambda_cmf(block, params, strategy), qc_eigvectors(block, params, strategy))


@dataclass(frozen=True)
class DynamicsTrace:
    times: np.ndarray
    taus: np.ndarray
    Y0: np.ndarray
    N0: np.ndarray
    N1: np.ndarray
    s_bar: float
    k_bar: float
    unitarity_error: float
    Y0_qc: np.ndarray | None = None
    approx: dict = field(default_factory=dict)

    def populations(self, y0):
        """(N0, N1) implied by a <Y0> series."""
        y0 = np.asarray(y0)
        return 0.5 * self.s_bar - y0, self.s_bar + self.k_bar + 2.0 * y0

    @property
    def N0_qc(self):
        return None if self.Y0_qc is None else self.populations(self.Y0_qc)[0]


def tau_scale(params: ModelParams, s_bar: float) -> float:
    """Factor converting t to tau = |g| t sqrt(2 s_bar)."""
    return params.g_abs * math.sqrt(2.0 * s_bar)


def evolve(initial: InitialState, params: ModelParams, times, qc: bool = False,
           approx: tuple[AngleStrategy, ...] = (), method: str = "sturm", workers: int = 1,
           cache: SolutionCache | None = None) -> DynamicsTrace:
    """Exact population dynamics, optionally with approximate companions.

    ``qc`` adds the closed-form envelope approximation (single-block states
    only); each strategy in ``approx`` adds a trace propagated with the
    quasiclassical spectrum of that strategy, keyed by its name.
    """
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    cache = SolutionCache() if cache is None else cache
    comps = sorted(initial.components, key=lambda p: p.block.sort_key)
    total = initial.total_weight
    multi = len(comps) > 1
    if (qc or approx) and multi:
        raise ArgumentError("approximate traces are defined for single-block initial states only")

    y = np.zeros(t.size)
    n0 = np.zeros(t.size)
    n1 = np.zeros(t.size)
    unit = 0.0
    for part in comps:
        sol = cache.get(part.block, params, method, workers)
        c = part.c * np.conj(gauge_phases(part.block, params))
        tr = evolve_block(sol, c, t)
        w = part.weight / total
        y += w * tr.Y0
        n0 += w * tr.N0
        n1 += w * tr.N1
        unit = max(unit, tr.unitarity_error)

    s_bar, k_bar = initial.s_bar, initial.k_bar
    y_qc = None
    extra = {}
    if comps:
        part = comps[0]
        c = part.c * np.conj(gauge_phases(part.block, params))
        if qc:
            if not (initial.kind == "cluster" or np.count_nonzero(part.c) == 1 and part.c[0] != 0):
                raise ArgumentError("the closed-form approximation needs a lowest-weight (cluster) initial state")
            y_qc = qc_closed_form(part.block, params, t)
        for strat in approx:
            extra[strat.name] = evolve_block(approximate_solution(part.block, params, strat), c, t).Y0

    trace = DynamicsTrace(
        times=t, taus=tau_scale(params, s_bar) * t, Y0=y,
        N0=n0, N1=n1,
        s_bar=s_bar, k_bar=k_bar, unitarity_error=unit, Y0_qc=y_qc, approx=extra,
    )
    return trace


def omega_L(block: Block, params: ModelParams) -> float:
    """Fast carrier frequency of the closed-form approximation."""
    s, k = block.s, block.k
    return 4.0 * params.g_abs * math.sqrt((1.0 - 1.0 / s) * (s / 2.0 + k + 0.5))


def omega_l(block: Block, params: ModelParams) -> float:
    """Slow modulation frequency of the closed-form approximation."""
    s, k = block.s, block.k
    return 4.0 * params.g_abs * math.sqrt(s - 1) / (s * math.sqrt(2 * s + 4 * k + 2))


def unwrapped_phase(theta, s: int) -> np.ndarray:
    """Continuous branch of Phi with tan(Phi) = tan(theta)/sqrt(s) and Phi(0) = 0.

    atan2 gives the branch in (-pi, pi]; Phi - theta stays within pi/2 of
    zero, which picks the multiple of 2 pi for every theta independently.
    """
    theta = np.asarray(theta, dtype=np.float64)
    base = np.arctan2(np.sin(theta), math.sqrt(s) * np.cos(theta))
    return base + 2.0 * np.pi * np.round((theta - base) / (2.0 * np.pi))


def qc_closed_form(block: Block, params: ModelParams, times) -> np.ndarray:
    """Closed-form <Y0(t)> for the lowest-weight initial state of a block.

    Requires s >= 2, and a time grid fine enough that the slow phase moves
    less than pi/4 per step.
    """
    s = block.s
    if s < 2:
        raise ArgumentError(f"closed-form approximation needs s >= 2, got s={s}")
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    wl = omega_l(block, params)
    if t.size > 1:
        step = float(np.max(np.abs(np.diff(t))))
        if wl * step >= np.pi / 4:
            raise ArgumentError(
                f"time step {step:g} too coarse for the slow phase (needs < {np.pi / 4 / wl:g})"
            )
    theta = wl * t
    env = (np.cos(theta) ** 2 + np.sin(theta) ** 2 / s) ** (0.5 * (s - 1))
    phi = unwrapped_phase(theta, s)
    return -0.5 * (1.0 + (s - 1) * env * np.cos(omega_L(block, params) * t - (s - 1) * phi))

"""Accuracy measures comparing exact and approximate block spectra.

All functions pair levels by rank v and return plain ratios; pass
``percent=True`` (or use :func:`MeasureReport.as_percent`) for values
multiplied by 100.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, UndefinedMeasureError

NORM_TOL = 1e-8


def _pair(exact, approx):
    exact = np.asarray(exact, dtype=np.float64)
    approx = np.asarray(approx, dtype=np.float64)
    if exact.shape != approx.shape or exact.ndim != 1:
        raise ArgumentError(f"spectra must be 1-D and of equal length, got {exact.shape} and {approx.shape}")
    return exact, approx


def _denominator(exact):
    den = float(np.sum(exact**2))
    if den == 0.0:
        raise UndefinedMeasureError("reference spectrum is identically zero")
    return den


def delta2_H(lambdas_exact, lambdas_approx, percent: bool = False) -> float:
    """Hamiltonian proximity: (sum lambda^2 - sum approx^2) / sum lambda^2.

    With the full expectation values lambda_qc this is >= 0 (the diagonal of
    S^T T S is majorized by the spectrum); with lambda_cmf it can go negative.
    """
    exact, approx = _pair(lambdas_exact, lambdas_approx)
    den = _denominator(exact)
    value = (den - float(np.sum(approx**2))) / den
    return 100.0 * value if percent else value


def upper_half(n_levels: int) -> slice:
    """Levels v >= ceil(s/2), s = n_levels - 1."""
    s = n_levels - 1
    return slice(-(-s // 2), n_levels)


def delta2_E(lambdas_exact, lambdas_approx, upper_only: bool = False, percent: bool = False) -> float:
    """Relative squared level error, over all levels or the upper half only."""
    exact, approx = _pair(lambdas_exact, lambdas_approx)
    if upper_only:
        sel = upper_half(exact.size)
        exact, approx = exact[sel], approx[sel]
    value = float(np.sum((exact - approx) ** 2)) / _denominator(exact)
    return 100.0 * value if percent else value


ZERO_LEVEL = 1e-12


def energy_errors(lambdas_exact, lambdas_approx):
    """Absolute errors lambda_v - approx_v and relative errors.

    The relative error is NaN for levels that vanish to working accuracy,
    |lambda_v| <= 1e-12 max|lambda|, such as the centre level at resonance.
    """
    exact, approx = _pair(lambdas_exact, lambdas_approx)
    err = exact - approx
    rel = np.full(err.shape, np.nan)
    scale = float(np.max(np.abs(exact))) if exact.size else 0.0
    nz = np.abs(exact) > ZERO_LEVEL * scale
    rel[nz] = err[nz] / exact[nz]
    return err, rel


def overlap_deficit(s_column, q_column) -> tuple[float, float]:
    """Cosine between two unit vectors and the deficit 1 - cos^2."""
    s_col = np.asarray(s_column)
    q_col = np.asarray(q_column)
    if s_col.shape != q_col.shape or s_col.ndim != 1:
        raise ArgumentError("columns must be 1-D and of equal length")
    for name, col in (("S", s_col), ("Q", q_col)):
        if abs(np.linalg.norm(col) - 1.0) > NORM_TOL:
            raise ArgumentError(f"{name} column is not unit-normalized")
    cosine = np.vdot(s_col, q_col)
    if np.iscomplexobj(cosine):
        deficit = 1.0 - abs(cosine) ** 2
    else:
        cosine = float(cosine)
        deficit = 1.0 - cosine**2
    return cosine, float(min(1.0, max(0.0, deficit)))


@dataclass(frozen=True)
class MeasureReport:
    block: object
    strategy: str
    delta2_H: float
    delta2_E: float
    delta2_E_up: float
    energy_errors: np.ndarray
    relative_errors: np.ndarray
    overlap_cos: np.ndarray | None = field(default=None)
    delta2_ef: np.ndarray | None = field(default=None)

    def as_percent(self) -> dict:
        return {
            "delta2_H": 100.0 * self.delta2_H,
            "delta2_E": 100.0 * self.delta2_E,
            "delta2_E_up": 100.0 * self.delta2_E_up,
        }


def measure_report(solution, approximation, use_qc: bool = False) -> MeasureReport:
    """All measures for one exact solution against one quasiclassical approximation.

    ``use_qc`` selects lambda_qc instead of lambda_cmf as the approximate
    spectrum; overlaps are filled in whenever both eigenvector sets exist.
    """
    approx = approximation.lambdas_qc if use_qc else approximation.lambdas_cmf
    if approx is None:
        raise ArgumentError("approximation carries no lambda_qc")
    exact = solution.lambdas
    err, rel = energy_errors(exact, approx)
    cos = ef = None
    if solution.Q is not None and approximation.S is not None:
        pairs = [overlap_deficit(approximation.S[:, v], solution.Q[:, v]) for v in range(exact.size)]
        cos = np.array([p[0] for p in pairs])
        ef = np.array([p[1] for p in pairs])
    return MeasureReport(
        block=solution.block,
        strategy=approximation.strategy.name,
        delta2_H=delta2_H(exact, approx),
        delta2_E=delta2_E(exact, approx),
        delta2_E_up=delta2_E(exact, approx, upper_only=True),
        energy_errors=err,
        relative_errors=rel,
        overlap_cos=cos,
        delta2_ef=ef,
    )

"""Spectra and dynamics of the quantum second-harmonic-generation model.

The Hamiltonian splits into tridiagonal blocks L(k, s).  This package
solves them exactly (Sturm-sequence bisection), approximates them with
SU(2) rotations, measures the approximation quality and propagates the
mode populations in time.
"""

from .dynamics import DynamicsTrace, InitialState, coherent_weights, evolve, evolve_block, qc_closed_form
from .errors import ArgumentError, CapacityError, ConvergenceError, UndefinedMeasureError
from .exact import SpectralSolution, amplitudes_from_lambda, solve, sturm_polynomials
from .measures import delta2_E, delta2_H, energy_errors, measure_report, overlap_deficit
from .model import Block, ModelParams, TridiagonalOperator, coupling, fock_to_block, hamiltonian_matrix, structure_poly
from .quasiclassical import MP_R1, R1, R2, R3, AngleStrategy, approximate, lambda_cmf, lambda_qc, wigner_d_matrix

__version__ = "0.1.0"

__all__ = [
    "AngleStrategy", "ArgumentError", "Block", "CapacityError", "ConvergenceError", "DynamicsTrace",
    "InitialState", "ModelParams", "MP_R1", "R1", "R2", "R3", "SpectralSolution", "TridiagonalOperator",
    "UndefinedMeasureError", "amplitudes_from_lambda", "approximate", "coherent_weights", "coupling",
    "delta2_E", "delta2_H", "energy_errors", "evolve", "evolve_block", "fock_to_block",
    "hamiltonian_matrix", "lambda_cmf", "lambda_qc", "measure_report", "overlap_deficit",
    "qc_closed_form", "solve", "structure_poly", "sturm_polynomials", "wigner_d_matrix",
]

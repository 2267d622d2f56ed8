"""Critical metrology toolkit for the biased nonlinear quantum Rabi model."""

__version__ = "0.1.0"

from .criticality import CriticalScales, PeakResult, critical_eps, critical_g1, critical_scales, locate_qfi_peak
from .metrology import PrepTimeResult, QfiEstimate, gap, prep_time, qfi_overlap, qfi_sum_rule
from .model import ModelParams, SymmetricOperator, build_generator, build_hamiltonian, validate_params
from .spectra import ConvergedGround, EigenSet, TruncationSpec, converge_ground, eigs_full, eigs_lowest
from .wavefunction import PositionWave, hermite_basis, position_wave

__all__ = [
    "ConvergedGround", "CriticalScales", "EigenSet", "ModelParams", "PeakResult", "PositionWave",
    "PrepTimeResult", "QfiEstimate", "SymmetricOperator", "TruncationSpec", "build_generator",
    "build_hamiltonian", "converge_ground", "critical_eps", "critical_g1", "critical_scales",
    "eigs_full", "eigs_lowest", "gap", "hermite_basis", "locate_qfi_peak", "position_wave",
    "prep_time", "qfi_overlap", "qfi_sum_rule", "validate_params",
]

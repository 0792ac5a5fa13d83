"""Two-qubit gates on trapped-ion chains mediated by transverse phonon modes."""

__version__ = "0.1.0"

from .crystal import IonChain, TrapConfig, length_scale, linearity_check, solve_equilibrium
from .dynamics import GateResult, PulseSequence, gate_result, phi_segmented
from .errors import (
    DegenerateChainError,
    InfeasibleError,
    InstabilityError,
    SolverFailure,
    TpGateError,
    ValidationError,
)
from .modes import Axis, ModeTable, build_matrix, chain_modes, normal_modes
from .optimizer import OptimizationProblem, OptimizationReport, optimize_amplitudes_at_mu, optimize_gate

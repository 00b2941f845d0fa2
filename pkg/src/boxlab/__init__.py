"""Cabello and Hardy nonlocality for generalized GHZ states, in quantum theory and in no-signaling boxes."""
from .boxes import JointDistribution, TwoQubitDistribution, paper_distribution, validate
from .closed_form import GAMMA0, CabelloPoint, success_C
from .lp import LinearProgram, LpSolution, simplex_solve

__version__ = "0.1.0"

__all__ = [
    "GAMMA0",
    "CabelloPoint",
    "JointDistribution",
    "LinearProgram",
    "LpSolution",
    "TwoQubitDistribution",
    "paper_distribution",
    "simplex_solve",
    "success_C",
    "validate",
]

from .feasibility import FeasibilityReport, Regime, classify_regime, select_params
from .operators import CertReport, GridSpec, certify_subsolution
from .problem import ProblemSetup, RadialState, accumulate, make_setup, reconstruct_u_v
from .profile import ConstraintViolation, PhiProfile
from .solver import RunReport, SolverConfig, init_from_threshold, run
from .subsolution import SubsolutionParams, coeffs

__all__ = [
    'ProblemSetup', 'RadialState', 'make_setup', 'accumulate', 'reconstruct_u_v',
    'PhiProfile', 'ConstraintViolation', 'SubsolutionParams', 'coeffs',
    'FeasibilityReport', 'Regime', 'select_params', 'classify_regime',
    'CertReport', 'GridSpec', 'certify_subsolution',
    'RunReport', 'SolverConfig', 'init_from_threshold', 'run',
]

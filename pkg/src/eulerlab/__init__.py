"""Numerical laboratory for dissipative solutions of the barotropic Euler system."""

from .eos import GasLaw, defect_constant, energy, pressure, pressure_potential, sound_speed
from .fields import (DataTriple, FluidState, Grid, integrate_energy,
                     validate_initial_data)
from .riemann import RiemannData, exact_riemann, solve_riemann
from .solver import SchemeSpec, max_wave_speed, run, stable_dt, step
from .stress import ReynoldsField
from .trajectory import (OrderResult, Trajectory, compare_admissible, compare_local,
                         concatenate, convex_combine, defect_reset, improve,
                         load_bundle, min_energy_merge, save_bundle, shift,
                         stopping_time, weighted_norm)
from .dissipative import (CertificateTolerances, DissipativeCertificate, TestFunction,
                          certify, check_compatibility, continuity_residual,
                          default_dictionary, energy_defect, estimate_reynolds,
                          momentum_residual)
from .selection import (CandidateSet, F1, F2, MinimizerVerdict, SelectionReport,
                        check_concatenation_inequality, check_order_coherence,
                        check_shift_identity, default_lambda_grid,
                        is_absolute_minimizer, laplace_energy, lerch_equal, select)

__version__ = "0.1.0"

"""Collective emission of a thermal atom beam crossing an optical cavity.

Simulation of the coupled atom-field stochastic dynamics, stationary
mean-field theory, linear stability analysis and emission observables.
"""

from .model import (AtomState, BallisticityReport, ModelParams, TRANSIT_TIME,
                    check_ballistic_validity, mode_eta, sample_arrival,
                    sample_arrivals, sample_initial_spin, sample_initial_spins)
from .meanfield import (DEFAULT_QUAD, LinewidthPrediction, MeanFieldSolution,
                        NotSuperradiantError, QuadSpec,
                        QuadratureConvergenceError, c_perp,
                        dipole_selfconsistency_rhs, k_field, linewidth_ssr,
                        solve_dipole, stationary_densities, t_char)
from .dispersion import (DEFAULT_SCAN_BOX, DispersionRoot, PhasePoint,
                         RootNotFoundError, classify_phase, d_goldstone,
                         d_higgs, d_nsr_closed, find_higgs_root,
                         find_nsr_root, scan_roots, threshold_nsr)
from .beamsim import (Atoms, DipoleRecord, SimConfig, collective_dipole,
                      run_ensemble, run_trajectory, step)
from .observables import (CorrelationSeries, SpectrumResult, complex_dipole,
                          dipole_correlation, effective_rabi_sq, fit_exponent,
                          g1, g2, spectrum)

__version__ = "0.1.0"

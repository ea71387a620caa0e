"""Stability and bifurcation analysis of constant on-time DC-DC converters.

Three independent routes to the same physics: exact sampled-data analysis
of the switching cycle, harmonic balance in the frequency domain, and
brute-force time-domain simulation.  The package computes stability
boundaries (period doubling and saddle-node), pole placement ramps, and
the closed-form design rules that approximate them, and cross-checks the
routes against each other.
"""

from .bifurcation import (FORMULA_IDS, BoundaryResult, closed_form_pole,
                          critical_ramp_eig, ct_pole_formula,
                          equivalent_ct_pole, exact_max_on_time,
                          exact_min_ri, family_point, max_on_time,
                          min_ramp_formula, min_ramp_normalized,
                          min_sense_resistance, pdb_boundary_approx,
                          pdb_boundary_exact, pdb_onset_duty,
                          range_max_pdb_ramp, s_approx, s_exact,
                          snb_boundary_approx, snb_boundary_exact, sweep)
from .errors import (BracketError, ConfigError, CotstabError,
                     DegenerateSwitchingError, DimensionError, DomainError,
                     FormulaDomainError, InfiniteLoopGainError,
                     MissedSwitchingError, NumericError, PoleEvaluationError,
                     SingularMatrixError, UsageError)
from .harmonic import (convergence_points, gi, gv, h_plot, hb_pdb_splot,
                       hb_pdb_first_harmonic, hb_snb_condition, l1_plot,
                       l2_plot, loop_gain, loop_gain_pdb, period2_coeff,
                       scheme_gain, scheme_gain_derivative,
                       series_identities_check, square_wave_coeff, y0_series)
from .linalg import (eigenvalues, expm, expm_integral, find_root,
                     regularize_poles, solve_linear)
from .models import (BuckParams, ConverterModel, OperatingPoint, RampSpec,
                     Scheme, build_model, slope_normalizer)
from .sampled import (LinearizedMap, SteadyState, audio_susceptibility,
                      consistent_vc, control_to_output, linearize,
                      orbit_sample, period_residual, poles, solve_period,
                      steady_state_at)
from .simulate import (CycleStep, Trace, classify_orbit, estimate_multiplier,
                       make_duty_family, make_ramp_family,
                       nominal_probe_state, onset_search, simulate,
                       step_cycle)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

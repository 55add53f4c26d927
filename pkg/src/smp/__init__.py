"""Stochastic multiplicative processes with resets: exact results and simulation."""

from .analytics import (DiscreteRandomSpec, DiscreteUniformSpec, DomainError, MomentResult, RootFindingError,
                        convergence_interval, critical_exponent, cumulative_average_mean, general_moment,
                        moment, moment_series, occupation_probability, passage_statistics,
                        stationary_density, stationary_log_density_grid, stationary_moment_exact)
from .bursts import (BurstTable, burst_count_pmf, burst_duration_count, enumerate_realizations,
                     time_average_occupation, visit_count)
from .continuum import (ContinuousUniformSpec, StateDependentSpec, StationaryGeneral, check_no_leak,
                        stationary_density_general, stationary_density_uniform, transient_density)
from .distributions import (EmpiricalAtoms, LawError, LogNormal, LogUniform, PointMass, TwoDelta,
                            law_from_dict, log_char, log_char_quad, sample)
from .histogram import LogHistogram, tv_distance
from .montecarlo import (EnsembleSummary, run_continuous, run_discrete, run_first_passage,
                         run_iid_draws)
from .rng import RandomStream

__version__ = "0.1.0"

"""Evolutionary discovery of partial differential equations.

Given a scalar field u(t, x) on a uniform grid, the package searches for
the governing PDE by evolving small sets of candidate terms (products of
the field and its derivatives), scoring each candidate equation by sparse
regression on frame-normalized features, and recovering physical-scale
coefficients by plain least squares on the raw data.
"""

from .baseline_sparse import TermLibrary, discover_baseline, enumerate_library
from .differentiation import DEFAULT_POOL, DerivativeStack, fd_derivatives, \
    poly_derivatives
from .errors import DegenerateTermError, DiscoveryError, PoolExhaustedError, \
    RankDeficientError, SingularSystemError, SolverDivergedError
from .evolution import Chromosome, EvolutionConfig, crossover, \
    evaluate_fitness, init_population, mutate, run_epde, tournament_select
from .grid_field import Grid, NoiseSpec, SolutionField, add_noise, \
    coeff_error, make_grid, noise_level, read_field_csv, write_field_csv
from .pde_solvers import BurgersParams, KdvParams, WaveParams, \
    burgers_validation_params, kdv_validation_params, solve_burgers, \
    solve_kdv, solve_validation, solve_wave, soliton, wave_validation_params
from .regression import DiscoveredEquation, RegressionConfig, SparseSolution, \
    fit_coefficients, lasso, lasso_objective, ridge
from .term_algebra import FeatureMatrix, Term, build_feature_matrix, \
    evaluate_term_raw, normalize_frames, random_term, render_term, term

__version__ = "0.1.0"

"""Low-rank phase retrieval by variational Bayesian EM, with an
alternating-minimization baseline and a Monte Carlo experiment harness."""

from .altmin import AmOptions, run_am
from .core import NotPositiveDefinite, make_rng, sample_cnormal
from .datagen import MeasurementSet, SignalMatrix, gen_lowrank, gen_measurements
from .initialization import random_init, spectral_init
from .metrics import is_success, phase_aligned_sqerror, relative_error
from .vem import Hyperparameters, PosteriorState, VemOptions, elbo, run_vem

__version__ = "0.1.0"

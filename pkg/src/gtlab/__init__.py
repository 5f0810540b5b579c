"""Group testing under noise: channel models, pooling strategies, exhaustive
ML decoding, information bounds on the number of tests, and a seeded Monte
Carlo harness that checks simulated error rates against the Fano floor."""

from .bounds import (BoundsReport, MISpec, binary_entropy, bounds_report, fano_floor,
                     fano_floor_terms, mutual_information, mutual_information_bruteforce,
                     t_lower, t_upper)
from .decoders import CapacityError, DecodeResult, log_likelihood, ml_decode
from .designs import DONE, Strategy, TestMatrix, gen_bernoulli_matrix
from .noise import NoiseModel, positive_prob, sample_outcome
from .sim import ExperimentConfig, RunSummary, run_experiment, sweep

__version__ = "0.1.0"

__all__ = [
    "BoundsReport", "CapacityError", "DONE", "DecodeResult", "ExperimentConfig", "MISpec",
    "NoiseModel", "RunSummary", "Strategy", "TestMatrix", "binary_entropy", "bounds_report",
    "fano_floor", "fano_floor_terms", "gen_bernoulli_matrix", "log_likelihood", "ml_decode",
    "mutual_information", "mutual_information_bruteforce", "positive_prob", "run_experiment",
    "sample_outcome", "sweep", "t_lower", "t_upper",
]

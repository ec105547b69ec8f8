"""Joint peak-power reduction and multi-user precoding for OFDM massive-MIMO
downlinks: a variational-EM message-passing solver with a truncated Gaussian
mixture prior, ZF/clipping/FITRA baselines, link metrics, and a Monte-Carlo
experiment harness."""

from .baselines import FitraConfig, clip, fitra, project_l1_ball, zf_precode
from .channel import draw_taps, freq_response
from .emtgm import Hyperparams, Posteriors, solve
from .gamp import GampState, gamp_pass
from .harness import ExperimentConfig, SolverSpec, emit_results, run_experiment
from .kernels import HAVE_COMPILED
from .linops import ConstraintOperator, MatrixOperator, build_operator
from .metrics import TrialRecord, ccdf, mui, obr, papr, ser_simulate
from .model import SystemConfig, generate_symbols

__version__ = "0.1.0"

__all__ = [
    "ConstraintOperator", "ExperimentConfig", "FitraConfig", "GampState",
    "HAVE_COMPILED", "Hyperparams", "MatrixOperator", "Posteriors",
    "SolverSpec", "SystemConfig", "TrialRecord", "build_operator", "ccdf",
    "clip", "draw_taps", "emit_results", "fitra", "freq_response",
    "gamp_pass", "generate_symbols", "mui", "obr", "papr",
    "project_l1_ball", "run_experiment", "ser_simulate", "solve",
    "zf_precode",
]

"""Online learning with directed feedback graphs: OMD solvers, estimators,
small-loss policies, loss generators and an experiment harness."""

from .environments import LossMatrix, gen_lower_bound_pair, gen_shifted_best, gen_stochastic_smallloss, load_losses
from .estimators import FeedbackEvent, importance_weighted, reveal
from .graph import FeedbackGraph, classify, load_graph, parse_graph
from .harness import ExperimentConfig, run_experiment, run_trial, scaling_suite
from .mirror import DecisionSet, RegularizerSpec, omd_step
from .policies import REGISTRY, make_policy

__version__ = "0.1.0"

__all__ = [
    "DecisionSet",
    "ExperimentConfig",
    "FeedbackEvent",
    "FeedbackGraph",
    "LossMatrix",
    "REGISTRY",
    "RegularizerSpec",
    "classify",
    "gen_lower_bound_pair",
    "gen_shifted_best",
    "gen_stochastic_smallloss",
    "importance_weighted",
    "load_graph",
    "load_losses",
    "make_policy",
    "omd_step",
    "parse_graph",
    "reveal",
    "run_experiment",
    "run_trial",
    "scaling_suite",
]

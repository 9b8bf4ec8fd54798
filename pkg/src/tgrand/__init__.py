"""Transversal GRAND for packet-level random linear codes over GF(2)."""

from ._accel import USING_NUMBA
from .channel import ChannelParams, generate_error_matrix, params_from_stats
from .gf2 import BitMatrix, rank, solve
from .guessers import GuessBudget, repair_and_redecode, sd_matrix, tgrand_matrix
from .harness import ExperimentConfig, ResultRecord, run_experiment
from .ordering import calc_prob_and_sort, trace_sorted_prob
from .rlc import CodeSpec, Undecodable, build_codebook, encode, rlc_decode

__all__ = [
    "USING_NUMBA",
    "BitMatrix",
    "ChannelParams",
    "CodeSpec",
    "ExperimentConfig",
    "GuessBudget",
    "ResultRecord",
    "Undecodable",
    "build_codebook",
    "calc_prob_and_sort",
    "encode",
    "generate_error_matrix",
    "params_from_stats",
    "rank",
    "repair_and_redecode",
    "rlc_decode",
    "run_experiment",
    "sd_matrix",
    "solve",
    "tgrand_matrix",
    "trace_sorted_prob",
]

"""Analytical SIR / spectral-efficiency distributions for interference-limited
networks with correlated Gamma-lognormal links and Bernoulli interferer
activity, plus a Monte Carlo harness to validate them.
"""
from .fading import XI, GammaFading, LognormalParams, composite_to_lognormal, lognormal_linear_moments
from .kernels import BACKEND
from .mgf import MatchingConfig, match_equivalent_lognormal, mgf_single, mgf_sum, mgf_sum_mc
from .pipeline import Analysis, analyze_scene
from .scenario import (
    CorrelatedSumModel, LinkModel, NetworkScene, PathLossModel, build_sum_model,
    hex_uma_scene, load_scene_file, path_loss,
)
from .sir_se import SeKpis, SirDistribution, se_kpis, sir_distribution

__version__ = "0.1.0"

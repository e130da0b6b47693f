"""Reverse sampler and reference likelihood-free posterior samplers.

The reverse sampler turns simulated minimum distance solutions, one per
shock draw, into importance-weighted posterior draws. Accept-reject,
MCMC and SMC versions of ABC are included for comparison.
"""
from .estimators import (
    MCMCABC,
    SMCABC,
    AuxStatsTransformer,
    RejectionABC,
    ReverseSampler,
    SMDEstimator,
)
from .models import get_model, make_shockpack, simulate_dataset
from .samplers import (
    PosteriorSample,
    SmdConfig,
    WeightedDraw,
    abc_ar,
    abc_mcmc,
    abc_smc,
    j_objective,
    rs_draw,
    rs_sample,
    smd_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "AuxStatsTransformer",
    "MCMCABC",
    "PosteriorSample",
    "RejectionABC",
    "ReverseSampler",
    "SMCABC",
    "SMDEstimator",
    "SmdConfig",
    "WeightedDraw",
    "abc_ar",
    "abc_mcmc",
    "abc_smc",
    "get_model",
    "j_objective",
    "make_shockpack",
    "rs_draw",
    "rs_sample",
    "simulate_dataset",
    "smd_estimate",
]

"""Polar coded modulation: CPCM, MLC and BICM over 2^m-PAM.

Submodules
----------
polar        encoder, SC and genie-aided SC decoders
channels     BEC / bi-AWGN models, PAM constellations, demappers, capacities
interleave   channel-type assignments and shortening
construction BEC recursion, Gaussian approximation, information sets, union bounds
cpcm         convolutional mapping and the bidirectional decoder
baselines    MLC and BICM reference schemes
sim          Monte Carlo campaigns and bound sweeps
cli          command-line entry point
"""

__version__ = "0.1.0"

from .channels import (
    ChannelSpec,
    Constellation,
    Labeling,
    Principle,
    bit_level_capacities,
    bit_level_capacity,
    constellation_capacity,
    demap,
    llr_conditional,
    llr_marginalized,
    make_constellation,
)
from .construction import (
    Metric,
    ReliabilityProfile,
    bec_evolve,
    code_from_profile,
    ga_evolve,
    select_info_set,
    union_bound,
)
from .cpcm import cpcm_decode, cpcm_layout, cpcm_map, cpcm_unmap, rate_cm
from .interleave import ChannelAssignment, interleaver1, interleaver2, random_interleaver, shorten
from .polar import PolarCode, polar_encode, polar_transform, sc_decode, sc_decode_genie
from .sim import SimConfig, run_bler, spectral_efficiency_sweep, union_bound_sweep

__all__ = [
    "ChannelAssignment", "ChannelSpec", "Constellation", "Labeling", "Metric", "PolarCode",
    "Principle", "ReliabilityProfile", "SimConfig", "bec_evolve", "bit_level_capacities",
    "bit_level_capacity", "code_from_profile", "constellation_capacity", "cpcm_decode",
    "cpcm_layout", "cpcm_map", "cpcm_unmap", "demap", "ga_evolve", "interleaver1",
    "interleaver2", "llr_conditional", "llr_marginalized", "make_constellation",
    "polar_encode", "polar_transform", "random_interleaver", "rate_cm", "run_bler",
    "sc_decode", "sc_decode_genie", "select_info_set", "shorten",
    "spectral_efficiency_sweep", "union_bound", "union_bound_sweep",
]

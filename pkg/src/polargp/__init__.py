"""Polar coding for channels with encoder state and broadcast side information."""

from .bcsi import BcsiCode, BcsiMessages, common_code
from .channels import PRESETS, StateChannel, channel_from_config, check_degraded
from .codec import SharedRandomness, decode_block, encode_block
from .construction import InfeasiblePlan, PolarSets, ZProfile, build_polar_sets, causal_capacity, estimate_z_profile
from .gp import GpCode, PointToPointCode
from .harness import ExperimentConfig, ResultRow, run_experiment
from .polar import brute_force_conditional, polar_transform, sc_conditional, successive_cancellation
from .prob import JointPmf
from .region import AuxStrategy, region_bcsi_common, region_bcsi_state, region_gp, search_strategies

__version__ = "0.1.0"

__all__ = [
    "AuxStrategy", "BcsiCode", "BcsiMessages", "ExperimentConfig", "GpCode", "InfeasiblePlan", "JointPmf",
    "PRESETS", "PointToPointCode", "PolarSets", "ResultRow", "SharedRandomness", "StateChannel", "ZProfile",
    "brute_force_conditional", "build_polar_sets", "causal_capacity", "channel_from_config", "check_degraded",
    "common_code", "decode_block", "encode_block", "estimate_z_profile", "polar_transform", "region_bcsi_common",
    "region_bcsi_state", "region_gp", "run_experiment", "sc_conditional", "search_strategies",
    "successive_cancellation",
]

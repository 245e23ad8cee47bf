"""Integer-forcing receiver simulation toolkit for K-pair MIMO interference channels."""

__version__ = "0.1.0"

from ifsim.channel import ChannelSet, ReceiverContext, generate, receiver_context
from ifsim.coeff_opt import SearchConfig
from ifsim.ifmr import IfmrResult, StageResult, run_receiver, run_stage
from ifsim.sim import SimConfig, run

__all__ = [
    "ChannelSet",
    "ReceiverContext",
    "SearchConfig",
    "IfmrResult",
    "StageResult",
    "SimConfig",
    "generate",
    "receiver_context",
    "run_receiver",
    "run_stage",
    "run",
    "__version__",
]

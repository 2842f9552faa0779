"""Constructive-interference precoding with region-based constellations."""

__version__ = "0.1.0"

from . import analysis, channel, cip, qp, rbc, sim, streams
from .channel import ChannelRealization, realize, sample_channel, widely_linear, zf_precode
from .cip import CipInstance, PrecodeOutcome, assemble, precode, precode_fsqp, precode_psqp
from .errors import (
    CiforgeError,
    ConfigurationError,
    InfeasibleError,
    NonConvergenceError,
    NumericalError,
    SingularChannelError,
    SingularSubblockError,
    SizeError,
)
from .qp import QpProblem, QpSolution, solve_qp
from .rbc import RbcConstellation, Scheme, build_constellation, detect

__all__ = [
    "__version__",
    "analysis",
    "channel",
    "cip",
    "qp",
    "rbc",
    "sim",
    "streams",
    "ChannelRealization",
    "realize",
    "sample_channel",
    "widely_linear",
    "zf_precode",
    "CipInstance",
    "PrecodeOutcome",
    "assemble",
    "precode",
    "precode_fsqp",
    "precode_psqp",
    "CiforgeError",
    "ConfigurationError",
    "InfeasibleError",
    "NonConvergenceError",
    "NumericalError",
    "SingularChannelError",
    "SingularSubblockError",
    "SizeError",
    "QpProblem",
    "QpSolution",
    "solve_qp",
    "RbcConstellation",
    "Scheme",
    "build_constellation",
    "detect",
]

"""Community detection for node-attributed networks.

Optimizes a map-equation objective extended with per-module metadata
codebooks, weighted by a user-controlled parameter eta: eta = 0 recovers the
traditional map equation, large eta forces label-pure modules.
"""

from ._kernels import USING_NUMBA
from .codelength import CodelengthReport, ModuleAggregates, evaluate, module_exit_rate
from .flow import FlowDistribution, stationary_distribution
from .metrics import ContingencyTable, ami, expected_mutual_information, mutual_information
from .netcore import (
    MetadataAnnotation,
    Network,
    NetworkFormatError,
    Partition,
    load_metadata,
    load_network,
    read_partition,
    write_partition,
)
from .optimizer import SearchConfig, aggregate, local_move_pass, search
from .synth import SbmInstance, SbmSpec, delta_star, generate

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "CodelengthReport",
    "ModuleAggregates",
    "evaluate",
    "module_exit_rate",
    "FlowDistribution",
    "stationary_distribution",
    "ContingencyTable",
    "ami",
    "expected_mutual_information",
    "mutual_information",
    "MetadataAnnotation",
    "Network",
    "NetworkFormatError",
    "Partition",
    "load_metadata",
    "load_network",
    "read_partition",
    "write_partition",
    "SearchConfig",
    "aggregate",
    "local_move_pass",
    "search",
    "SbmInstance",
    "SbmSpec",
    "delta_star",
    "generate",
]

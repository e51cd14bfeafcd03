"""percolab: a desk-scale laboratory for bond percolation on finite graph
windows — monotone-coupled sampling, cluster exploration, isoperimetric
profiles, and Monte Carlo checks of proved bounds."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    EnumerationGuardError,
    PercolabError,
    UnfittableError,
)
from .graph_core import GraphWindow, OrientedEdge, VertexSet, ball, build_window
from .percolation import (
    ClusterPartition,
    Configuration,
    EdgeLabels,
    assign_uniforms,
    clusters,
    hull,
    tau,
    threshold,
)
from .exploration import ExplorationTrace, azuma_bound, explore_cluster, explore_off_infinity
from .isoperimetry import IsoFunction, anchored_profile, bad_set_search, fit_dimension, psi
from .estimators import BoundVerdict, MCResult, wilson_interval
from .config import ExperimentConfig

__all__ = [
    "ConfigurationError",
    "DomainError",
    "EnumerationGuardError",
    "PercolabError",
    "UnfittableError",
    "GraphWindow",
    "OrientedEdge",
    "VertexSet",
    "ball",
    "build_window",
    "ClusterPartition",
    "Configuration",
    "EdgeLabels",
    "assign_uniforms",
    "clusters",
    "hull",
    "tau",
    "threshold",
    "ExplorationTrace",
    "azuma_bound",
    "explore_cluster",
    "explore_off_infinity",
    "IsoFunction",
    "anchored_profile",
    "bad_set_search",
    "fit_dimension",
    "psi",
    "BoundVerdict",
    "MCResult",
    "wilson_interval",
    "ExperimentConfig",
    "__version__",
]

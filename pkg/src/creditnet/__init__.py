"""Structure and statistics of bipartite bank-firm credit networks."""

__version__ = "0.1.0"

from .errors import ConfigError, CreditNetError, InvalidNodeError, LoadError, UndefinedMeasureError
from .graph import BipartiteGraph, EdgeWeight, Mode, NodeRef, Term
from .mst import SpanningForest, minimal_spanning_forest
from .projection import ProjectedGraph, project, project_subset, projection_stats
from .synth import GeneratorConfig, generate
from .tailfit import Explicit, FixedQuantile, TailFit, fit_tail, hill_fit

__all__ = [
    "BipartiteGraph",
    "ConfigError",
    "CreditNetError",
    "EdgeWeight",
    "Explicit",
    "FixedQuantile",
    "GeneratorConfig",
    "InvalidNodeError",
    "LoadError",
    "Mode",
    "NodeRef",
    "ProjectedGraph",
    "SpanningForest",
    "TailFit",
    "Term",
    "UndefinedMeasureError",
    "fit_tail",
    "generate",
    "hill_fit",
    "minimal_spanning_forest",
    "project",
    "project_subset",
    "projection_stats",
]

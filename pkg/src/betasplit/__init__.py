"""Random binary trees under the (alpha, beta) Beta-splitting model with
freezing: samplers, exact probabilities at four resolutions, and oracles."""

from .continuous import simulate_continuous
from .generate import ModelParams, organize, run_god
from .numerics import LogReal, stream
from .probability import log_prob, log_prob_planar, log_prob_ranked_planar, log_prob_ranked_shape, log_prob_shape
from .trees import PlanarShape, RankedPlanarTree, RankedShape, Resolution, TreeShape, from_newick, project, to_newick

__version__ = "0.1.0"

__all__ = [
    "LogReal",
    "ModelParams",
    "PlanarShape",
    "RankedPlanarTree",
    "RankedShape",
    "Resolution",
    "TreeShape",
    "from_newick",
    "log_prob",
    "log_prob_planar",
    "log_prob_ranked_planar",
    "log_prob_ranked_shape",
    "log_prob_shape",
    "organize",
    "project",
    "run_god",
    "simulate_continuous",
    "stream",
    "to_newick",
]

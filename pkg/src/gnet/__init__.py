"""Shallow kernel-network approximation of integral-form targets.

The pipeline splits a weighted point cloud standing in for a signed
measure into small-mass metric cells, compresses each cell to a few-point
moment-matched quadrature rule, and assembles the rule points into a
network sum(a_k * G(., y_k)) whose uniform error is searched over
randomized quadrature draws and checked against explicit bounds.
"""

from gnet.geometry import Space, ball, epsilon_net, raise_to_sphere, sphere
from gnet.measures import ProbabilityAtomMeasure, SignedAtomMeasure, make_surrogate
from gnet.kernels import KernelSpec, make_kernel, target_eval
from gnet.partition import Partition, build_partition
from gnet.quadrature import QuadratureRule, recombine
from gnet.builder import BuildConfig, GNetwork, search_best
from gnet.bounds import bound_kernel

__all__ = [
    "Space",
    "sphere",
    "ball",
    "epsilon_net",
    "raise_to_sphere",
    "SignedAtomMeasure",
    "ProbabilityAtomMeasure",
    "make_surrogate",
    "KernelSpec",
    "make_kernel",
    "target_eval",
    "Partition",
    "build_partition",
    "QuadratureRule",
    "recombine",
    "GNetwork",
    "BuildConfig",
    "search_best",
    "bound_kernel",
]

__version__ = "0.1.0"

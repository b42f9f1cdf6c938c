"""kFW toolkit: Frank-Wolfe with a k-best linear oracle and a direction
search over the returned atoms, plus Frank-Wolfe baselines, certificates and
benchmark generators."""
from .apg import ApgConfig, apg_solve, line_search
from .bench import BENCHMARKS, make_benchmark
from .certificates import Certificate, certify, delta_gap, fw_gap, sparsity_measure, t_bound
from .errors import (
    ConfigError,
    DimensionError,
    KfwError,
    NumericalError,
    ParameterError,
    UnsupportedError,
)
from .objective import CompositeObjective, QuadraticOuter, SmoothOuter
from .problem import Problem
from .sets import (
    GroupNormBall,
    Hypercube,
    L1Ball,
    NuclearBall,
    ProductSimplices,
    Simplex,
    Spectrahedron,
    VertexPolytope,
)
from .solvers import ALGORITHMS, SolveTrace, SolverConfig, solve

__all__ = [
    "ApgConfig", "apg_solve", "line_search",
    "BENCHMARKS", "make_benchmark",
    "Certificate", "certify", "delta_gap", "fw_gap", "sparsity_measure", "t_bound",
    "ConfigError", "DimensionError", "KfwError", "NumericalError", "ParameterError",
    "UnsupportedError",
    "CompositeObjective", "QuadraticOuter", "SmoothOuter",
    "Problem",
    "GroupNormBall", "Hypercube", "L1Ball", "NuclearBall", "ProductSimplices", "Simplex",
    "Spectrahedron", "VertexPolytope",
    "ALGORITHMS", "SolveTrace", "SolverConfig", "solve",
]

__version__ = "0.1.0"

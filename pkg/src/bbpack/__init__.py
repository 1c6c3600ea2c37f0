"""Branch-and-bound for random 0/1 packing programs, plus the exhaustive
census and geometric counting machinery used to verify its tree-size bounds."""

from .bb import BbConsistencyError, BbResult, solve
from .geometry import PartialSolution, dual_solution, enumerate_cells_1d
from .harness import ExperimentConfig, derive_seed, run
from .instance import PackingInstance, generate, load, save
from .lp import FixedSets, LpError, LpSolution, lp_value, solve_eq_lp, solve_lp
from .oracle import CensusReport, good_set, ip_opt, pareto_gap

__all__ = [
    "BbConsistencyError",
    "BbResult",
    "CensusReport",
    "ExperimentConfig",
    "FixedSets",
    "LpError",
    "LpSolution",
    "PackingInstance",
    "PartialSolution",
    "derive_seed",
    "dual_solution",
    "enumerate_cells_1d",
    "generate",
    "good_set",
    "ip_opt",
    "lp_value",
    "pareto_gap",
    "load",
    "run",
    "save",
    "solve",
    "solve_eq_lp",
    "solve_lp",
]

"""Random trees grown by Crump-Mode-Jagers branching processes and their independence numbers."""

from .analytic import (
    NuResult,
    PFunction,
    analytic_nu,
    closed_form_p,
    h_pa,
    largest_zero_q,
    nu_bst,
    nu_from_p,
    nu_pa,
    nu_xbst,
    p_bst,
    p_pa,
    p_rrt,
    p_xbst,
    psi_pa,
    solve_mary3,
    solve_nu,
)
from .experiments import (
    Estimate,
    TrialReport,
    convergence_table,
    estimate_nu_fringe,
    estimate_root_essential,
    run_trials,
)
from .generators import gen_discrete
from .independence import (
    IndependenceProfile,
    brute_force_independence,
    essential_set,
    independence_profile,
)
from .models import Model, ModelSpec, NoMalthusianRoot, SizeMode, malthusian_alpha
from .simulate import SizeGuardExceeded, sample_fringe_tree, simulate_cmj, simulate_to_time
from .tree import RootedTree, dumps_tree, loads_tree, read_tree, write_tree
from .volterra import solve_p_generic

__version__ = "0.1.0"

__all__ = [
    "Estimate",
    "IndependenceProfile",
    "Model",
    "ModelSpec",
    "NoMalthusianRoot",
    "NuResult",
    "PFunction",
    "RootedTree",
    "SizeGuardExceeded",
    "SizeMode",
    "TrialReport",
    "analytic_nu",
    "brute_force_independence",
    "closed_form_p",
    "convergence_table",
    "dumps_tree",
    "essential_set",
    "estimate_nu_fringe",
    "estimate_root_essential",
    "gen_discrete",
    "h_pa",
    "independence_profile",
    "largest_zero_q",
    "loads_tree",
    "malthusian_alpha",
    "nu_bst",
    "nu_from_p",
    "nu_pa",
    "nu_xbst",
    "p_bst",
    "p_pa",
    "p_rrt",
    "p_xbst",
    "psi_pa",
    "read_tree",
    "run_trials",
    "sample_fringe_tree",
    "simulate_cmj",
    "simulate_to_time",
    "solve_mary3",
    "solve_nu",
    "solve_p_generic",
    "write_tree",
]

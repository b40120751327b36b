"""Energy-efficient power control as a discounted stochastic game."""

from .channel import FiniteMarkovProcess, IidIntervalProcess, joint_state_distribution, stationary_distribution
from .equilibrium import deviation_cap, equilibrium_report, expected_utility, lambda_max, minmax_level
from .game import (
    GameConfig,
    best_response,
    efficiency,
    one_shot_nash,
    operating_point_powers,
    solve_gamma_tilde,
    stage_outcome,
)
from .region import enumerate_region, evaluate_markov_profile, pareto_frontier
from .sim import compare_mechanisms, run_episode
from .strategies import grim_trigger_wrap, smu_select

__version__ = "0.1.0"

"""Simulation and verification toolkit for critical rank-1 random graphs."""
from .weights import (
    Family, ModelParams, WeightSequence, aldous_parameters, criticality_report,
    make_constant, make_two_point, renormalize_to_critical,
)
from .exploration import (
    ClockRealization, ExplorationResult, coupled_explore, counting_process, explore,
    rank_components, sample_clocks, walk_path,
)
from .excursions import (
    CutoffLevels, Excursion, GridPath, JumpDriftPath, cutoff_excursions, eps_dense_check,
    excursions_above_inf, hitting_time, ordered_excursions, running_inf,
)
from .limit import LimitParams, limit_point_process, sample_gammas, sample_W
from .sbpp import PointProcess, generate, pi_n_from_exploration
from .streams import seed_streams

__version__ = "0.1.0"

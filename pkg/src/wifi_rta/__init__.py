"""Channel access for real-time Wi-Fi traffic: TXOP-limit tuning versus
preliminary channel access (PCA), with an analytical model, an optimizer
and a discrete-event simulator.
"""

from .legacy_model import solve, solve_fixed_point, slot_stats
from .model import AnalyticModel
from .optimizer import crossover_period, optimal_tb_pca, optimal_txop_simple
from .params import Approach, Config, Scenario, load_config

__all__ = ["AnalyticModel", "Approach", "Config", "Scenario", "crossover_period",
           "load_config", "optimal_tb_pca", "optimal_txop_simple", "slot_stats", "solve",
           "solve_fixed_point"]

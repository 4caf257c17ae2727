"""Calibration-based Gittins and Whittle indices, tables and exact oracles."""

from .calibration import (GITTINS, WHITTLE, IndexConfig, calibration_value, gittins_index,
                          indifference_gap, solve_cells, steps_left, whittle_index)
from .complexity import Complexity, brute_force_count, complexity_csv, complexity_estimates
from .oracle import OracleResult, finite_horizon_dp_oracle, index_policy_value
from .tables import IndexTable, build_table, cached_table, read_table, write_table

__all__ = [
    "GITTINS", "WHITTLE", "IndexConfig", "calibration_value", "gittins_index",
    "indifference_gap", "solve_cells", "steps_left", "whittle_index", "Complexity",
    "brute_force_count", "complexity_csv", "complexity_estimates", "OracleResult",
    "finite_horizon_dp_oracle", "index_policy_value", "IndexTable", "build_table",
    "cached_table", "read_table", "write_table",
]

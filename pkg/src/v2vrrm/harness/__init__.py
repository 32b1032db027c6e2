"""Scenario generation, Monte Carlo runner, metrics and CSV output."""

from .config import ALGORITHMS, SWEEP_VARS, ExperimentConfig
from .metrics import MetricsTable, TrialRecord, emit_all, emit_cdf_csv, emit_csv, emit_per_index_csv, read_csv
from .runner import (
    groups_in_scope,
    link_audit,
    middle_cluster,
    replay_allocation,
    replay_schedule,
    run_experiment,
    run_trial,
    schedule_cds,
    schedule_joint,
    schedule_random,
)
from .scenario import acir_mask, convoy_size, draw_positions, generate_scenario, nearest_receivers, pathloss_db, rng_for

__all__ = [
    "ALGORITHMS",
    "SWEEP_VARS",
    "ExperimentConfig",
    "MetricsTable",
    "TrialRecord",
    "acir_mask",
    "convoy_size",
    "draw_positions",
    "emit_all",
    "emit_cdf_csv",
    "emit_csv",
    "emit_per_index_csv",
    "generate_scenario",
    "groups_in_scope",
    "link_audit",
    "middle_cluster",
    "nearest_receivers",
    "pathloss_db",
    "read_csv",
    "replay_allocation",
    "replay_schedule",
    "rng_for",
    "run_experiment",
    "run_trial",
    "schedule_cds",
    "schedule_joint",
    "schedule_random",
]

"""Convoy drops and channel generation.

Random numbers come from numpy's Philox4x64 counter-based generator.  The
key is the experiment seed; the 256-bit counter starts at
``[0, 0, stream, trial]`` so each (trial, stream) pair owns a disjoint
block of 2**128 draws and can be regenerated independently of the others.
"""

from __future__ import annotations

import numpy as np

from ..clustering import groups_for
from ..model import Scenario, db_to_linear
from .config import ExperimentConfig

STREAM_DROP = 0
STREAM_RANDOM_SCHEDULE = 1


def rng_for(seed: int, trial: int, stream: int = STREAM_DROP) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(stream), int(trial)]))


def convoy_size(cfg: ExperimentConfig) -> int:
    return cfg.clusters * groups_for(cfg.n_tx, cfg.d_reuse_nominal) * cfg.n_tx


def pathloss_db(d, cfg: ExperimentConfig, shadow=0.0, blockers=0):
    d = np.asarray(d, dtype=float)
    return cfg.pl0_db + 10.0 * cfg.alpha * np.log10(d / cfg.d0_m) + shadow + cfg.penetration_db * np.asarray(blockers)


def acir_mask(cfg: ExperimentConfig) -> np.ndarray:
    lam = [db_to_linear(cfg.acir_db[min(r, len(cfg.acir_db) - 1)]) for r in range(cfg.F)]
    return np.asarray(lam, dtype=float)


def draw_positions(rng: np.random.Generator, n: int, cfg: ExperimentConfig) -> np.ndarray:
    """Positions along the road with shifted-exponential gaps, first VUE at 0."""
    gaps = cfg.d_min_m + rng.exponential(cfg.d_avg_m - cfg.d_min_m, size=n - 1)
    return np.concatenate([[0.0], np.cumsum(gaps)])


def nearest_receivers(positions: np.ndarray, n_rx: int) -> tuple:
    n = positions.size
    out = []
    for i in range(n):
        d = np.abs(positions - positions[i])
        d[i] = np.inf
        order = np.lexsort((np.arange(n), d))
        out.append({int(j) for j in order[: min(n_rx, n - 1)]})
    return tuple(out)


def generate_scenario(cfg: ExperimentConfig, seed: int, trial: int = 0, n: int = None) -> Scenario:
    """One convoy drop: position-ordered VUEs, each owning one message at t = 0."""
    rng = rng_for(seed, trial)
    n = convoy_size(cfg) if n is None else n
    pos = draw_positions(rng, n, cfg)
    d = np.abs(pos[:, None] - pos[None, :])
    shadow = rng.normal(0.0, cfg.shadow_db, size=(n, n))
    shadow = np.triu(shadow, 1)
    shadow = shadow + shadow.T
    idx = np.arange(n)
    blockers = np.maximum(np.abs(idx[:, None] - idx[None, :]) - 1, 0)
    np.fill_diagonal(d, cfg.d0_m)
    H = db_to_linear(-pathloss_db(d, cfg, shadow, blockers))
    np.fill_diagonal(H, 0.0)
    return Scenario.build(
        H,
        T=cfg.T,
        acir=acir_mask(cfg),
        noise=float(db_to_linear(cfg.noise_dbm)),
        p_max=float(db_to_linear(cfg.p_max_dbm)),
        gamma_t=float(db_to_linear(cfg.gamma_t_db)),
        receivers=nearest_receivers(pos, cfg.n_rx),
        t_p=cfg.t_p,
        positions=pos,
    )

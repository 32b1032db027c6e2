"""Experiment configuration with the simulation defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

ALGORITHMS = ("joint-connectivity", "joint-no-multihop", "cds", "random")
SWEEP_VARS = ("NTx", "T", "NRx")


@dataclass(frozen=True)
class ExperimentConfig:
    sweep_var: str = "T"
    sweep_values: tuple = (4, 6, 8)
    trials: int = 20
    seed: int = 1
    algorithms: tuple = ALGORITHMS

    # network and radio grid
    n_tx: int = 6
    n_rx: int = 6
    F: int = 2
    T: int = 6
    clusters: int = 5
    t_p: int = 1
    d_reuse_nominal: int = 12  # sizes the convoy before the reuse distance is measured

    # channel
    pl0_db: float = 63.3
    alpha: float = 1.77
    d0_m: float = 10.0
    shadow_db: float = 3.1
    penetration_db: float = 10.0
    acir_db: tuple = (0.0, -30.0, -30.0, -30.0, -30.0, -45.0)

    # radio
    gamma_t_db: float = 7.0
    p_max_dbm: float = 24.0
    noise_dbm: float = -95.2
    delta: float = 0.01
    beta: float = 0.1

    # drop
    d_min_m: float = 10.0
    d_avg_m: float = 48.6

    # solver
    backend: str = "highs"
    time_limit_s: float = 60.0
    mip_gap: float = 1e-6

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARS}")
        values = tuple(int(v) for v in self.sweep_values)
        if not values or min(values) < 1:
            raise ValueError("sweep values must be positive")
        object.__setattr__(self, "sweep_values", values)
        algs = tuple(self.algorithms)
        bad = set(algs) - set(ALGORITHMS)
        if bad or not algs:
            raise ValueError(f"unknown algorithms {sorted(bad)}; choose from {ALGORITHMS}")
        object.__setattr__(self, "algorithms", algs)
        object.__setattr__(self, "acir_db", tuple(float(a) for a in self.acir_db))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        for name in ("n_tx", "n_rx", "F", "T", "clusters", "t_p"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.d_avg_m > self.d_min_m >= 0:
            raise ValueError("need d_avg > d_min >= 0")
        if self.delta <= 0 or not 0 < self.beta < 1:
            raise ValueError("need delta > 0 and 0 < beta < 1")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def at(self, value: int) -> "ExperimentConfig":
        """Configuration with the sweep variable set to ``value``."""
        attr = {"NTx": "n_tx", "T": "T", "NRx": "n_rx"}[self.sweep_var]
        return self.replace(**{attr: int(value)})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        return cls.from_dict(data)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

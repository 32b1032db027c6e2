"""Per-trial records, their aggregation, and CSV output."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class TrialRecord:
    algorithm: str
    value: int
    trial: int
    d_reuse: int
    G: int
    connectivity: np.ndarray  # one entry per middle-cluster VUE
    indices: np.ndarray  # position of each of those VUEs inside the cluster
    latency: float
    aoi: float
    unreachable: int
    statuses: dict = field(default_factory=dict)
    objective: float = math.nan
    audit_violations: int = 0
    links: dict = field(default_factory=dict)

    @property
    def mean_connectivity(self) -> float:
        return float(self.connectivity.mean()) if self.connectivity.size else math.nan


class MetricsTable:
    """Records keyed by (algorithm, sweep value), kept in insertion order."""

    def __init__(self, sweep_var: str, values, algorithms):
        self.sweep_var = sweep_var
        self.values = tuple(values)
        self.algorithms = tuple(algorithms)
        self.records: dict = {(a, v): [] for a in self.algorithms for v in self.values}

    def add(self, rec: TrialRecord) -> None:
        self.records[(rec.algorithm, rec.value)].append(rec)

    def _recs(self, alg, value) -> list:
        return sorted(self.records[(alg, value)], key=lambda r: r.trial)

    def trial_means(self, alg: str, value: int) -> np.ndarray:
        return np.array([r.mean_connectivity for r in self._recs(alg, value)])

    def mean_connectivity(self, alg: str, value: int) -> float:
        samples = self.connectivity_samples(alg, value)
        return float(samples.mean()) if samples.size else math.nan

    def connectivity_samples(self, alg: str, value: int) -> np.ndarray:
        recs = self._recs(alg, value)
        return np.concatenate([r.connectivity for r in recs]) if recs else np.zeros(0)

    def cdf(self, alg: str, value: int) -> tuple:
        """(support, F) of the empirical connectivity distribution."""
        s = np.sort(self.connectivity_samples(alg, value))
        if s.size == 0:
            return np.zeros(0), np.zeros(0)
        support, counts = np.unique(s, return_counts=True)
        return support, np.cumsum(counts) / s.size

    def per_index(self, alg: str, value: int) -> np.ndarray:
        recs = self._recs(alg, value)
        if not recs:
            return np.zeros(0)
        size = max(int(r.indices.max()) + 1 for r in recs if r.indices.size)
        tot, cnt = np.zeros(size), np.zeros(size)
        for r in recs:
            np.add.at(tot, r.indices, r.connectivity)
            np.add.at(cnt, r.indices, 1)
        with np.errstate(invalid="ignore"):
            return tot / cnt

    def _mean_of(self, alg, value, attr) -> float:
        vals = np.array([getattr(r, attr) for r in self._recs(alg, value)], dtype=float)
        vals = vals[~np.isnan(vals)]
        return float(vals.mean()) if vals.size else math.nan

    def mean_latency(self, alg: str, value: int) -> float:
        return self._mean_of(alg, value, "latency")

    def mean_aoi(self, alg: str, value: int) -> float:
        return self._mean_of(alg, value, "aoi")

    def statuses(self, alg: str, value: int = None) -> Counter:
        out = Counter()
        for (a, v), recs in self.records.items():
            if a == alg and (value is None or v == value):
                for r in recs:
                    out.update(r.statuses)
        return out

    def link_stats(self, alg: str) -> dict:
        out = Counter()
        for (a, _), recs in self.records.items():
            if a == alg:
                for r in recs:
                    out.update(r.links)
        return dict(out)

    def summary(self) -> dict:
        rows = {}
        for a in self.algorithms:
            rows[a] = {
                str(v): {
                    "mean_connectivity": self.mean_connectivity(a, v),
                    "mean_latency": self.mean_latency(a, v),
                    "mean_aoi": self.mean_aoi(a, v),
                    "solver_status": dict(sorted(self.statuses(a, v).items())),
                }
                for v in self.values
            }
            links = self.link_stats(a)
            if links:
                rows[a]["links"] = dict(sorted(links.items()))
        return {"sweep": self.sweep_var, "values": list(self.values), "algorithms": rows}


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.6g" % x


def _write(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def emit_csv(table: MetricsTable, path, metric: str = "connectivity") -> None:
    """``xValues,<algorithm>...`` with one row per sweep value."""
    if not table.values or not table.algorithms:
        raise ValueError("empty metrics table")
    getter = {
        "connectivity": table.mean_connectivity,
        "latency": table.mean_latency,
        "aoi": table.mean_aoi,
    }[metric]
    rows = [[v] + [getter(a, v) for a in table.algorithms] for v in table.values]
    _write(Path(path), ["xValues", *table.algorithms], rows)


def emit_cdf_csv(table: MetricsTable, alg: str, value: int, path) -> None:
    support, F = table.cdf(alg, value)
    _write(Path(path), ["xValues", alg], [[s, f] for s, f in zip(support, F)])


def emit_per_index_csv(table: MetricsTable, value: int, path) -> None:
    cols = [table.per_index(a, value) for a in table.algorithms]
    n = max((c.size for c in cols), default=0)
    rows = [[k] + [c[k] if k < c.size else math.nan for c in cols] for k in range(n)]
    _write(Path(path), ["xValues", *table.algorithms], rows)


def emit_all(table: MetricsTable, out_dir) -> list:
    """Write every CSV plus a JSON summary; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in ("connectivity", "latency", "aoi"):
        p = out / f"{metric}.csv"
        emit_csv(table, p, metric)
        written.append(p)
    for v in table.values:
        for a in table.algorithms:
            p = out / f"cdf_{a}_{table.sweep_var}{v}.csv"
            emit_cdf_csv(table, a, v, p)
            written.append(p)
        p = out / f"per_index_{table.sweep_var}{v}.csv"
        emit_per_index_csv(table, v, p)
        written.append(p)
    p = out / "summary.json"
    p.write_text(json.dumps(table.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)
    return written


def read_csv(path) -> tuple:
    """(header, rows of floats) from a file written by ``emit_csv``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [[float(x) for x in line.split(",")] for line in lines[1:]]

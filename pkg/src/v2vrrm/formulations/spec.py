from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from ..model import Allocation


class Objective(str, enum.Enum):
    THROUGHPUT = "throughput"
    WORST_THROUGHPUT = "worst-throughput"
    CONNECTIVITY = "connectivity"
    CONNECTIVITY_AOI = "connectivity-aoi"
    CONNECTIVITY_LATENCY = "connectivity-latency"


class AoIMetric(str, enum.Enum):
    TIME_AVERAGE = "time-average"
    TIME_MAX = "time-max"


@dataclass(frozen=True)
class Joint:
    """Optimise scheduling and power together."""


@dataclass(frozen=True)
class SchedulingOnly:
    """Every scheduled RB uses a fixed power.

    ``p_bar`` is a scalar or an (N, T) array; None means Pmax.
    """

    p_bar: Optional[Union[float, np.ndarray]] = None


@dataclass(frozen=True, eq=False)
class PowerOnly:
    """Schedule X is given; only powers (and the derived variables) are free."""

    x: np.ndarray


Variant = Union[Joint, SchedulingOnly, PowerOnly]


@dataclass(frozen=True, eq=False)
class FormulationSpec:
    objective: Objective = Objective.CONNECTIVITY
    multihop: bool = True
    variant: Variant = Joint()
    window_start: int = 0
    history: Optional[Allocation] = None
    half_duplex: bool = True
    aoi_metric: AoIMetric = AoIMetric.TIME_MAX
    mu_t: Optional[float] = None
    tau_t: Optional[float] = None
    rho: int = 1
    fragmentation: Optional[Mapping[int, Sequence[int]]] = None
    prune_useless: bool = True
    link_cuts: bool = True

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        object.__setattr__(self, "aoi_metric", AoIMetric(self.aoi_metric))
        if int(self.rho) != self.rho or self.rho < 1:
            raise ValueError("repetition count rho must be an integer >= 1")
        if self.window_start < 0:
            raise ValueError("window start must be >= 0")
        if self.window_start > 0 and self.history is None:
            raise ValueError("a window start > 0 needs the history allocation")
        for name in ("mu_t", "tau_t"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.objective == Objective.CONNECTIVITY_AOI and self.mu_t is None:
            raise ValueError("the AoI objective needs mu_t")
        if self.objective == Objective.CONNECTIVITY_LATENCY and self.tau_t is None:
            raise ValueError("the latency objective needs tau_t")
        if isinstance(self.variant, PowerOnly) and self.variant.x is None:
            raise ValueError("power-only variant needs a fixed schedule")

    def replace(self, **changes) -> "FormulationSpec":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return FormulationSpec(**fields)

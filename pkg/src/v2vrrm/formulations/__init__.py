"""MBLP formulations of the V2V scheduling problem and reliability helpers."""

from .build import (
    FormulatedModel,
    apply_variant,
    build_aoi,
    build_core,
    build_fragmentation,
    build_latency,
    build_objective,
    build_repetitions,
    formulate,
    packet_map,
    reachability,
)
from .extract import (
    aoi_from_receptions,
    aoi_metric_value,
    connectivity_from_receptions,
    extract_allocation,
    latency_from_receptions,
)
from .reliability import (
    ErrorCurve,
    Unattainable,
    epsilon_req_aoi,
    epsilon_req_latency,
    gamma_from_epsilon,
    repetitions_required,
)
from .spec import AoIMetric, FormulationSpec, Joint, Objective, PowerOnly, SchedulingOnly

__all__ = [
    "AoIMetric",
    "ErrorCurve",
    "FormulatedModel",
    "FormulationSpec",
    "Joint",
    "Objective",
    "PowerOnly",
    "SchedulingOnly",
    "Unattainable",
    "aoi_from_receptions",
    "aoi_metric_value",
    "apply_variant",
    "build_aoi",
    "build_core",
    "build_fragmentation",
    "build_latency",
    "build_objective",
    "build_repetitions",
    "connectivity_from_receptions",
    "epsilon_req_aoi",
    "epsilon_req_latency",
    "extract_allocation",
    "formulate",
    "gamma_from_epsilon",
    "latency_from_receptions",
    "packet_map",
    "reachability",
    "repetitions_required",
]

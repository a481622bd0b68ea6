from .experiments import (
    exp_attack,
    exp_compression,
    exp_condition,
    exp_dp,
    exp_overhead,
    exp_scaling,
    load_workload,
    model_builder,
)
from .reports import ExperimentReport

__all__ = [
    "ExperimentReport",
    "exp_attack",
    "exp_compression",
    "exp_condition",
    "exp_dp",
    "exp_overhead",
    "exp_scaling",
    "load_workload",
    "model_builder",
]

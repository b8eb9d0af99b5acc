"""Euler-Maruyama particle simulation with data-dependent histogram density estimates."""

from ._core import (
    DensityEstimate,
    Error,
    Partition,
    build_partition,
    catalog,
    heat_solution,
    mc_l1_error,
    mc_linf_error,
    ou_solution,
    problem_errors,
    run_experiment,
    simulate,
    validate_config,
)

__all__ = [
    "DensityEstimate",
    "Error",
    "Partition",
    "build_partition",
    "catalog",
    "heat_solution",
    "mc_l1_error",
    "mc_linf_error",
    "ou_solution",
    "problem_errors",
    "run_experiment",
    "simulate",
    "validate_config",
]

"""Instability energies and collapse times of spatially superposed particles."""
from .collapse import (
    CollapseEstimate,
    MassConvention,
    NComponentReport,
    collapse_time,
    conservation_violation_curve,
    n_component_bound,
    size_scaling_tau,
)
from .distributions import (
    ComponentPlacement,
    DistributionModel,
    Shape,
    SuperpositionSpec,
    density_at,
    potential_at,
    sample_points,
)
from .energy import (
    Branch,
    DeltaE,
    Interaction,
    KernelIntegral,
    Method,
    Weighting,
    coulomb_form,
    coulomb_form_mc,
    delta_e,
    em_gravity_ratio,
    mutual_force,
)
from .scenario import EnergyReport, ScenarioConfig, emit_report, parse_scenario, run_scenario
from .units import CONSTANTS, Dimension, Quantity, convert_to_eV, quantity

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "CONSTANTS",
    "CollapseEstimate",
    "ComponentPlacement",
    "DeltaE",
    "Dimension",
    "DistributionModel",
    "EnergyReport",
    "Interaction",
    "KernelIntegral",
    "MassConvention",
    "Method",
    "NComponentReport",
    "Quantity",
    "ScenarioConfig",
    "Shape",
    "SuperpositionSpec",
    "Weighting",
    "collapse_time",
    "conservation_violation_curve",
    "convert_to_eV",
    "coulomb_form",
    "coulomb_form_mc",
    "delta_e",
    "density_at",
    "em_gravity_ratio",
    "emit_report",
    "mutual_force",
    "n_component_bound",
    "parse_scenario",
    "potential_at",
    "quantity",
    "run_scenario",
    "sample_points",
    "size_scaling_tau",
]

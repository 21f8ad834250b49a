"""boforge: grid-configured Bayesian optimization campaign generator/runner."""

from .acquisition import ObjectiveDirection, ParetoFront
from .campaign import Campaign, CampaignConfig, TaskSpec, Trial
from .cdl import CampaignScript, execute_script, parse_script, print_script
from .generator import GenerationResult, generate
from .grid import default_selection, enumerate_selections, is_compatible, list_rows
from .space import (
    Categorical,
    CompositionConstraint,
    Continuous,
    LinearConstraint,
    OrderConstraint,
    ParameterSpec,
    SearchSpace,
    SumConstraint,
)

__all__ = [
    "Campaign",
    "CampaignConfig",
    "CampaignScript",
    "Categorical",
    "CompositionConstraint",
    "Continuous",
    "GenerationResult",
    "LinearConstraint",
    "ObjectiveDirection",
    "OrderConstraint",
    "ParameterSpec",
    "ParetoFront",
    "SearchSpace",
    "SumConstraint",
    "TaskSpec",
    "Trial",
    "default_selection",
    "enumerate_selections",
    "execute_script",
    "generate",
    "is_compatible",
    "list_rows",
    "parse_script",
    "print_script",
]

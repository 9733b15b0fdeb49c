"""Portfolio weight solvers: risk parity, MRD and CVRD."""
from .constraints import ConstraintSet, project_simplex
from .entropy import DiversificationProfile, EntropyObjective, diversification_entropy
from .optimizer import (
    SolverOptions,
    SolverReport,
    maximize_entropy_on_simplex,
    weight_entropy,
)
from .oracle import grid_search_oracle, simplex_lattice
from .risk_parity import (
    RiskContribution,
    portfolio_variance,
    risk_contributions,
    solve_risk_parity,
)
from .solvers import solve_cvrd, solve_mrd
from .weights import WeightVector

__all__ = [
    "ConstraintSet",
    "DiversificationProfile",
    "EntropyObjective",
    "RiskContribution",
    "SolverOptions",
    "SolverReport",
    "WeightVector",
    "diversification_entropy",
    "grid_search_oracle",
    "maximize_entropy_on_simplex",
    "portfolio_variance",
    "project_simplex",
    "risk_contributions",
    "simplex_lattice",
    "solve_cvrd",
    "solve_mrd",
    "solve_risk_parity",
    "weight_entropy",
]

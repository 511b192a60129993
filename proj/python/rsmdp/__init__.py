"""Risk-sensitive finite MDP solver."""

from ._core import (
    Mdp,
    check_assumptions,
    entropic_utility,
    evaluate_discounted,
    example_model,
    lambda_argmax,
    load_mdp,
    regions,
    solve_average,
    solve_discounted,
    solve_mpe,
    switch_index,
)

__version__ = "0.1.0"

__all__ = [
    "Mdp",
    "check_assumptions",
    "entropic_utility",
    "evaluate_discounted",
    "example_model",
    "lambda_argmax",
    "load_mdp",
    "regions",
    "solve_average",
    "solve_discounted",
    "solve_mpe",
    "switch_index",
]

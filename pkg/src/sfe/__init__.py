"""Pairwise effect-space learning for causal effect estimation."""

from .dataset import (
    Column,
    Dataset,
    NormalizedData,
    denormalize_effect,
    read_csv_dataset,
    unity_normalize,
    write_csv_dataset,
)
from .effects import AteResult, DEFAULT_ATE_MODE, ate, column_cosine, ite, select_variables
from .optimizer import (
    DivergenceError,
    EffectSpace,
    FitConfig,
    fit,
    load_space,
    save_space,
)
from .pairwise import (
    PairDecomposition,
    decompose,
    grad_gamma,
    objective_gamma,
    outcome_diff,
    pair_coefficients,
    pair_dot,
    phi_bl,
    phi_cx,
    total_objective,
    treatment_likelihood,
)
from .simulation import (
    DgpConfig,
    SimulatedPopulation,
    bias_variance,
    oracle_ate,
    simulate,
    simulate_basic,
    simulate_endogenous,
    simulate_factorial,
    simulate_heterogeneous,
)

__version__ = "0.1.0"

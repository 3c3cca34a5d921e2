"""Mechanistic, black box, and hybrid ODE models with gradient fitting.

Double precision is mandatory for RK4 convergence checks and for the
bit-identity guarantees of staged fitting, so x64 mode is switched on at
import, before any array is created.
"""

import jax

jax.config.update("jax_enable_x64", True)

from .data import ODEDataset
from .fit import (
    FitFailure,
    FitPlan,
    FitStage,
    FittedODE,
    fit_ode,
    full_plan,
    make_loss,
    test_mae,
    two_stage_plan,
)
from .integrate import BLOWUP_LIMIT, Trajectory, build_rhs, init_model_state, integrate, make_grid
from .lv import (
    LV_PRESETS,
    BaselineResult,
    build_baselines,
    hybrid_multiplicative_spec,
    neural_ode_spec,
    simulate_lv_preset,
    simulate_perturbed_lv,
    standard_lv_spec,
    warm_start_spec,
)
from .nets import init_mlp, mlp_apply
from .oscillators import (
    OSCILLATORS,
    corrected_sho_spec,
    oscillator_suite,
    simulate_oscillator,
)
from .spec import ODESpec, ODESpecError, parse_ode_spec, print_ode_spec

__all__ = [
    "BLOWUP_LIMIT",
    "BaselineResult",
    "FitFailure",
    "FitPlan",
    "FitStage",
    "FittedODE",
    "LV_PRESETS",
    "ODEDataset",
    "ODESpec",
    "ODESpecError",
    "OSCILLATORS",
    "Trajectory",
    "build_baselines",
    "build_rhs",
    "corrected_sho_spec",
    "fit_ode",
    "full_plan",
    "hybrid_multiplicative_spec",
    "init_mlp",
    "init_model_state",
    "integrate",
    "make_grid",
    "make_loss",
    "mlp_apply",
    "neural_ode_spec",
    "oscillator_suite",
    "parse_ode_spec",
    "print_ode_spec",
    "simulate_lv_preset",
    "simulate_oscillator",
    "simulate_perturbed_lv",
    "standard_lv_spec",
    "test_mae",
    "two_stage_plan",
    "warm_start_spec",
]

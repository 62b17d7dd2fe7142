"""Constrained critical points of the regularized fracture energy in 1D.

Solvers for the coupled displacement/phase-field stationarity system with an
irreversibility obstacle, diagnostics for the sharp-interface asymptotics,
recovery-sequence constructions, and an eps-sweep experiment harness.
"""

from .critical import (
    CriticalPointReport,
    InitStrategy,
    SolveOptions,
    alternate_minimize,
    evolve_chain,
    solve_time0,
    solve_time1,
)
from .diagnostics import (
    Classification,
    ConcentrationReport,
    classify,
    concentration,
    discrepancy,
    equipartition_defect,
    mass_outside_rate,
    mu_explicit,
    shape_check,
    sup_norm_rates,
)
from .energy import (
    ATParams,
    EnergyBreakdown,
    JumpSpec,
    Segment,
    State,
    affine_target,
    at_energy,
    ms_energy,
    step_target,
)
from .flux import FluxSolution, solve_u
from .mesh import Grid1D, derivative, integrate, make_grid
from .obstacle import ActiveSet, MultiplierField, ObstacleSpec, SolverFailure, solve_v
from .recovery import (
    RecoveryIntermediates,
    assemble_recovery,
    build_cutoff,
    build_profiles,
    build_w2,
    gamma_limsup_table,
)
from .sweep import CheckCriteria, SweepConfig, SweepRecord, check, emit, run_sweep

__all__ = [
    "ATParams",
    "ActiveSet",
    "CheckCriteria",
    "Classification",
    "ConcentrationReport",
    "CriticalPointReport",
    "EnergyBreakdown",
    "FluxSolution",
    "Grid1D",
    "InitStrategy",
    "JumpSpec",
    "MultiplierField",
    "ObstacleSpec",
    "RecoveryIntermediates",
    "Segment",
    "SolveOptions",
    "SolverFailure",
    "State",
    "SweepConfig",
    "SweepRecord",
    "affine_target",
    "alternate_minimize",
    "assemble_recovery",
    "at_energy",
    "build_cutoff",
    "build_profiles",
    "build_w2",
    "check",
    "classify",
    "concentration",
    "derivative",
    "discrepancy",
    "emit",
    "equipartition_defect",
    "evolve_chain",
    "gamma_limsup_table",
    "integrate",
    "make_grid",
    "mass_outside_rate",
    "ms_energy",
    "mu_explicit",
    "run_sweep",
    "shape_check",
    "solve_time0",
    "solve_time1",
    "solve_u",
    "solve_v",
    "step_target",
    "sup_norm_rates",
]

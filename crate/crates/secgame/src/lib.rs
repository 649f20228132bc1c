//! Solver library for security games with multiple attacker resources and
//! non-additive set-valued utilities.
//!
//! The pipeline works on a compact representation of the game: utilities are
//! rewritten through their set-function transforms, both players' mixed
//! strategies are projected onto coordinates indexed by the support set, and
//! equilibria are computed by linear programming driven by a pluggable
//! defender oracle. A brute-force layer certifies results on desk-scale
//! instances.

pub mod compact;
pub mod lpengine;
pub mod model;
pub mod oracles;
pub mod solvers;
pub mod spec_io;
pub mod verify;

use thiserror::Error;

/// Crate-wide error umbrella.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Compact(#[from] compact::CompactError),
    #[error(transparent)]
    Oracle(#[from] oracles::OracleError),
    #[error(transparent)]
    LpEngine(#[from] lpengine::LpEngineError),
    #[error(transparent)]
    Lp(#[from] lpengine::simplex::LpError),
    #[error(transparent)]
    Solve(#[from] solvers::SolveError),
    #[error(transparent)]
    Verify(#[from] verify::VerifyError),
    #[error(transparent)]
    Spec(#[from] spec_io::SpecError),
}

pub use compact::{
    attacker_vertex, build_weights, compact_payoff, coverage_marginals, defender_vertex,
    direct_payoff, project_attacker, project_defender, vertex_to_strategy, CompactWeights,
    DefenderVertex, SupportSet,
};
pub use lpengine::{
    convex_decompose, membership, separation_compact_lp, solve_compact_lp, u0_bound, Backend,
    SolverConfig,
};
pub use model::{
    is_additive, mobius_transform, network_value_benefits, support_set, zeta_transform,
    zero_sum_complete, AttackerSpace, GameInstance, Player, SetFunction, SubsetMask, Utility,
    UtilityProfile,
};
pub use oracles::{
    dop_linear, enumerate_system, enumerate_system_for, oracle_solve, to_pseudo_boolean,
    DefenderOracleSpec, OptSense, PseudoBooleanObjective,
};
pub use solvers::{
    attacker_best_response, solve_ne_additive, solve_sse, solve_zero_sum, Concept,
    EquilibriumResult,
};
pub use verify::{brute_minimax, brute_sse, check_ne, check_sse, expand_normal_form, NormalForm};

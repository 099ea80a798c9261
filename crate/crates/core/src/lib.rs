//! Single-period risk-sharing principal-agent contracts under wage bounds.
//!
//! The principal pays a wage `W` with `m <= W (<= M)` for output
//! `X = x0 + a + B`; the agent bears effort cost `K a^2 / 2` and must be left
//! with at least the utility of a sure wage `y`.

pub mod cara;
pub mod error;
pub mod figures;
pub mod general;
pub mod model;
pub mod scalar;
pub mod shock;
pub mod utility;
pub mod verification;

pub use cara::{cara_ll_solve, perturbation_path, perturbed_solve, CaraSolution, PerturbationPath, PerturbedSolution};
pub use error::{Error, Result};
pub use general::{general_ll_solve, gradient, GeneralSolution, SolverConfig};
pub use model::{
    agent_value, is_feasible, principal_value, rs_solve, Contract, FeasibilityReport, Multipliers, ProblemFile,
    ProblemSpec, RsSolution,
};
pub use shock::{ShockGrid, ShockSpec};
pub use utility::UtilitySpec;
pub use verification::{borch_check, brute_force_oracle, kkt_verify, KktReport, OracleResult};

//! Action-reward query-commit matching with patience.
//!
//! The crate covers the whole pipeline at desk scale: instances and their
//! reductions, exact optimal-policy oracles, the edge LP and the
//! configuration LP (explicit and by column generation), contention
//! resolution rounding, the star-graph approximation scheme, and the
//! numerical checks behind the selection guarantee.

pub mod budget;
pub mod eptas;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod instance;
pub mod json;
pub mod lp;
pub mod numerics;
pub mod prcrs;
pub mod report;
pub mod rng;
pub mod rounding;

pub use budget::Budgets;
pub use error::{Error, Result};
pub use exact::{opt_dp, star_future_values, star_opt_bruteforce, OptResult, StarInstance, StarPolicy};
pub use instance::{Instance, Patience, Violation};
pub use lp::{
    check_marginal_feasibility, edge_marginals, enumerate_configs, solve_lp_c_colgen,
    solve_lp_c_explicit, solve_lp_m, Config, DualPrices, EdgeMarginals, LpSolution,
};
pub use prcrs::{attenuation_b, attenuation_b_inf, beta, PrcrsInput, PrcrsTrace, SchemeFamily};
pub use report::SimReport;
pub use rounding::{RunOutcome, Rounder};

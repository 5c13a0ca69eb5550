//! Joint content-cache placement and transmit-power optimization for
//! multi-hop wireless heterogeneous networks.
//!
//! The crate evaluates the exact, multilinear and relaxed delay costs of a
//! caching/power configuration, solves the relaxed problem with a projected
//! subgradient method or by alternating block minimization, rounds the
//! fractional placement to an integral one, and checks first-order
//! optimality. Brute-force oracles and cache-replacement baselines are
//! included for verification and comparison.
//!
//! ```
//! use hetcache::{topology::{generate_scenario, ScenarioParams}, Network};
//! use hetcache::solvers::{initial_point, solve_sub, SubSolverConfig};
//!
//! let params = ScenarioParams { n_users: 6, n_sc: 2, ..ScenarioParams::default() };
//! let net = Network::new(generate_scenario(7, &params).unwrap()).unwrap();
//! let init = initial_point(&net).unwrap();
//! let report = solve_sub(&net, &SubSolverConfig::default(), init).unwrap();
//! assert!(report.final_exact_cost <= report.initial_objective + 1e-9);
//! ```

// `!(x > 0.0)` checks deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cost;
mod error;
pub mod feasible;
pub mod oracle;
pub mod par;
pub mod radio;
pub mod solvers;
pub mod sweep;
pub mod topology;

pub use error::{Error, Result};
pub use par::Execution;
pub use topology::{Network, Scenario};

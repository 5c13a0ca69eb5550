//! Relaxed-problem solvers, rounding and first-order optimality checks.

mod alt;
mod kkt;
mod power;
mod rounding;
mod sub;

use serde::{Deserialize, Serialize};

pub use alt::{optimize_cache, solve_alt, AltSolverConfig};
pub use kkt::{check_kkt, KktResidual};
pub use power::{optimize_power, PowerOutcome};
pub use rounding::{round_cache, Rounding, RoundingStep};
pub use sub::solve_sub;

use crate::cost::{self, CachePlacement, HopWeight, RelaxedCache};
use crate::feasible::{project_cache, project_power};
use crate::radio::{PowerAllocation, DELAY_SENTINEL};
use crate::topology::Network;
use crate::{Error, Result};

/// Tolerance used for the KKT check attached to every report.
pub const REPORT_KKT_TOL: f64 = 1e-3;

/// Objective values at or above this level mean a loaded link has no signal.
pub(crate) const DEAD_LINK_LEVEL: f64 = DELAY_SENTINEL * 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubSolverConfig {
    /// Stop once the best objective improved by at most this much over the
    /// last `patience` iterations.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Offset of the optimum estimate as a fraction of the starting
    /// objective; shrinks as `delta0 / (1 + t)`.
    pub delta0: f64,
    pub w_s: f64,
    pub w_y: f64,
    pub seed: u64,
    pub patience: usize,
}

impl Default for SubSolverConfig {
    fn default() -> Self {
        SubSolverConfig {
            epsilon: 1e-6,
            max_iters: 5000,
            delta0: 1.0,
            w_s: 1.0,
            w_y: 1.0,
            seed: 0,
            patience: 500,
        }
    }
}

impl SubSolverConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.delta0 > 0.0) {
            return bad("delta0 must be positive");
        }
        if !(self.w_s > 0.0 && self.w_y > 0.0) {
            return bad("w_s and w_y must be positive");
        }
        if self.max_iters == 0 || self.patience == 0 {
            return bad("max_iters and patience must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub best: f64,
    pub xi_y: f64,
    pub xi_s: f64,
    pub elapsed_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
    pub initial_objective: f64,
    pub final_relaxed_cost: f64,
    pub final_y: RelaxedCache,
    pub final_s: PowerAllocation,
    pub rounded_x: CachePlacement,
    pub final_exact_cost: f64,
    pub kkt_residual: KktResidual,
    pub wall_time_secs: f64,
}

/// Shared starting point: equal power split and the projection of the
/// empty cache onto the relaxed feasible set.
pub fn initial_point(net: &Network) -> Result<(RelaxedCache, PowerAllocation)> {
    let y = project_cache(net, &RelaxedCache::zeros(net.n_nodes(), net.n_items()))?;
    Ok((y, PowerAllocation::equal_split(net)))
}

pub(crate) fn relaxed_objective(net: &Network, y: &RelaxedCache, s: &PowerAllocation) -> f64 {
    cost::cost_with_delays(net, y, &cost::link_delays(net, s), HopWeight::Relaxed)
}

/// False when the objective is not finite or some link that still carries
/// relaxed traffic has no signal.
pub(crate) fn usable(net: &Network, y: &RelaxedCache, s: &PowerAllocation, value: f64) -> bool {
    if !value.is_finite() || value >= DEAD_LINK_LEVEL {
        return false;
    }
    let weights = cost::edge_weights(net, y, HopWeight::Relaxed);
    let links = crate::radio::LinkState::evaluate(net, s);
    net.wireless_edges()
        .iter()
        .all(|&e| weights[e] == 0.0 || links.sinr[e] > 0.0)
}

/// Component of a subgradient that survives projection onto the feasible
/// set at `x`: `(x - P(x - τ d)) / τ` for a step `τ` small enough that the
/// projection only sees the active constraints. Polyak steps use its norm,
/// so blocked components do not shorten the move.
pub(crate) fn tangent_direction(
    x: &[f64],
    d: &[f64],
    project: impl Fn(Vec<f64>) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let scale = d.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if scale == 0.0 {
        return Ok(vec![0.0; d.len()]);
    }
    let tau = 1e-7 / scale;
    let moved = project(x.iter().zip(d).map(|(a, g)| a - tau * g).collect())?;
    Ok(x.iter().zip(&moved).map(|(a, b)| (a - b) / tau).collect())
}

pub(crate) fn tangent_cache(net: &Network, y: &RelaxedCache, d: &[f64]) -> Result<Vec<f64>> {
    tangent_direction(&y.y, d, |z| {
        project_cache(net, &RelaxedCache { y: z, ..y.clone() }).map(|p| p.y)
    })
}

pub(crate) fn tangent_power(net: &Network, s: &PowerAllocation, d: &[f64]) -> Vec<f64> {
    tangent_direction(&s.s, d, |z| {
        Ok(project_power(net, &PowerAllocation { s: z }).s)
    })
    .expect("power projection is infallible")
}

/// Averages the power of every node that has a loaded but silent out-link
/// with its equal split. Returns false when nothing needed reviving.
pub(crate) fn revive_power(net: &Network, weights: &[f64], s: &mut PowerAllocation) -> bool {
    let even = PowerAllocation::equal_split(net);
    let mut revived = false;
    for v in 0..net.n_nodes() {
        let out = net.out_edges(v);
        if out.iter().any(|&e| weights[e] > 0.0 && s.s[e] <= 0.0) {
            for &e in out {
                s.s[e] = 0.5 * (s.s[e] + even.s[e]);
            }
            revived = true;
        }
    }
    revived
}

/// Validates a starting point: feasible, and every link that can carry
/// traffic has positive power.
pub(crate) fn check_init(net: &Network, y: &RelaxedCache, s: &PowerAllocation) -> Result<()> {
    y.check(net, 1e-7)?;
    s.check(net, 1e-7)?;
    let loaded = cost::edge_weights(net, y, HopWeight::UpperBound);
    for &e in net.wireless_edges() {
        if loaded[e] > 0.0 && s.s[e] <= 0.0 {
            let edge = &net.edges()[e];
            return Err(Error::Infeasible {
                what: "initial power",
                detail: format!("link ({} -> {}) starts with zero power", edge.tx, edge.rx),
            });
        }
    }
    Ok(())
}

pub(crate) fn dump(y: &RelaxedCache, s: &PowerAllocation) -> String {
    serde_json::json!({ "y": y.y, "s": s.s }).to_string()
}

/// Rounds the relaxed point, prices the placement and attaches the KKT check.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    net: &Network,
    method: &str,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceRecord>,
    initial_objective: f64,
    y: RelaxedCache,
    s: PowerAllocation,
    started: std::time::Instant,
) -> Result<SolveReport> {
    let final_relaxed_cost = relaxed_objective(net, &y, &s);
    let rounding = round_cache(net, &y, &s)?;
    let final_exact_cost = cost::exact_cost(net, &rounding.placement, &s)?;
    let kkt_residual = check_kkt(net, &y, &s, REPORT_KKT_TOL);
    Ok(SolveReport {
        method: method.to_string(),
        iterations,
        converged,
        trace,
        initial_objective,
        final_relaxed_cost,
        final_y: y,
        final_s: s,
        rounded_x: rounding.placement,
        final_exact_cost,
        kkt_residual,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

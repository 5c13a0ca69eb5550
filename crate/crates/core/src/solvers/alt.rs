use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    check_init, finish, optimize_power, relaxed_objective, tangent_cache, SolveReport, TraceRecord,
};
use crate::cost::{self, HopWeight, RelaxedCache};
use crate::feasible::project_cache;
use crate::radio::PowerAllocation;
use crate::topology::Network;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AltSolverConfig {
    /// Stop when an outer round improves the objective by at most this.
    pub epsilon: f64,
    pub max_outer: usize,
    pub cache_iters: usize,
    pub cache_patience: usize,
    pub cache_tol: f64,
    pub delta0: f64,
    pub w_y: f64,
    pub power_tol: f64,
    pub power_iters: usize,
    /// Skip the power step (cache-only optimization).
    pub fixed_power: bool,
}

impl Default for AltSolverConfig {
    fn default() -> Self {
        AltSolverConfig {
            epsilon: 1e-6,
            max_outer: 100,
            cache_iters: 2000,
            cache_patience: 50,
            cache_tol: 1e-9,
            delta0: 1.0,
            w_y: 1.0,
            power_tol: 1e-6,
            power_iters: 500,
            fixed_power: false,
        }
    }
}

impl AltSolverConfig {
    pub fn check(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && self.delta0 > 0.0
            && self.w_y > 0.0
            && self.cache_tol > 0.0
            && self.power_tol > 0.0
            && self.max_outer > 0
            && self.cache_patience > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "alt solver tolerances, offsets and counts must be positive".into(),
            ))
        }
    }
}

/// Minimizes the relaxed cost over caches at fixed link delays with a
/// projected subgradient method and Polyak steps whose target offset is
/// halved after every step that gains less than half of it. Returns the best point
/// and the objective after every iteration.
pub fn optimize_cache(
    net: &Network,
    start: &RelaxedCache,
    delays: &[f64],
    config: &AltSolverConfig,
) -> Result<(RelaxedCache, Vec<f64>)> {
    let eval = |y: &RelaxedCache| cost::cost_with_delays(net, y, delays, HopWeight::Relaxed);
    let mut y = start.clone();
    let mut value = eval(&y);
    let mut best = (value, y.clone());
    let mut history = vec![value];
    let mut best_history = vec![value];
    let mut level = f64::INFINITY;
    for t in 0..config.cache_iters {
        if best.0 == 0.0 {
            break;
        }
        let d = tangent_cache(net, &y, &cost::cache_subgradient(net, &y, delays).y)?;
        let norm2: f64 = d.iter().map(|g| g * g).sum();
        if norm2 == 0.0 {
            break;
        }
        let delta = level.min(config.delta0 * history[0] / (1.0 + t as f64));
        let gap = value - (best.0 - delta);
        let step = config.w_y * gap / norm2;
        y = project_cache(
            net,
            &RelaxedCache {
                y: y.y.iter().zip(&d).map(|(a, g)| a - step * g).collect(),
                ..y.clone()
            },
        )?;
        value = eval(&y);
        let progressed = value <= best.0 - 0.5 * delta;
        if value < best.0 {
            best = (value, y.clone());
        }
        if progressed {
            level = f64::INFINITY;
        } else {
            level = 0.5 * delta;
        }
        history.push(value);
        best_history.push(best.0);
        let k = best_history.len() - 1;
        if k >= config.cache_patience
            && best_history[k - config.cache_patience] - best.0 <= config.cache_tol
        {
            break;
        }
    }
    Ok((best.1, history))
}

/// Alternating minimization: a cache step at fixed powers, then a power
/// step at fixed caches, until a round gains at most `epsilon`.
pub fn solve_alt(
    net: &Network,
    config: &AltSolverConfig,
    init: (RelaxedCache, PowerAllocation),
) -> Result<SolveReport> {
    config.check()?;
    let (mut y, mut s) = init;
    check_init(net, &y, &s)?;
    let started = Instant::now();
    let initial_objective = relaxed_objective(net, &y, &s);
    let mut value = initial_objective;
    let mut best = value;
    let mut trace = vec![TraceRecord {
        iteration: 0,
        objective: value,
        best,
        xi_y: 0.0,
        xi_s: 0.0,
        elapsed_secs: 0.0,
    }];
    let push = |trace: &mut Vec<TraceRecord>, objective: f64, best: &mut f64| {
        *best = best.min(objective);
        trace.push(TraceRecord {
            iteration: trace.len(),
            objective,
            best: *best,
            xi_y: 0.0,
            xi_s: 0.0,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
    };
    let mut converged = value == 0.0;
    let mut rounds = 0;
    while !converged && rounds < config.max_outer {
        rounds += 1;
        let before = value;

        let delays = cost::link_delays(net, &s);
        let (y_next, history) = optimize_cache(net, &y, &delays, config)?;
        for &h in &history[1..] {
            push(&mut trace, h, &mut best);
        }
        y = y_next;

        if !config.fixed_power {
            let weights = cost::edge_weights(net, &y, HopWeight::Relaxed);
            let outcome = optimize_power(net, &weights, &s, config.power_tol, config.power_iters)?;
            for &h in &outcome.history[1..] {
                push(&mut trace, h, &mut best);
            }
            s = outcome.s;
        }
        value = relaxed_objective(net, &y, &s);
        if !value.is_finite() {
            return Err(Error::NonFinite {
                iteration: rounds,
                dump: super::dump(&y, &s),
            });
        }
        converged = before - value <= config.epsilon;
    }
    finish(
        net,
        "alt",
        rounds,
        converged,
        trace,
        initial_objective,
        y,
        s,
        started,
    )
}

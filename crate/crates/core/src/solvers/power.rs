use serde::{Deserialize, Serialize};

use crate::feasible::project_power;
use crate::radio::{self, LinkState, PowerAllocation};
use crate::topology::Network;
use crate::Result;

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOutcome {
    pub s: PowerAllocation,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting point first.
    pub history: Vec<f64>,
}

fn objective(net: &Network, weights: &[f64], s: &PowerAllocation) -> (f64, LinkState) {
    let links = LinkState::evaluate(net, s);
    let value = radio::weighted_delay(weights, &links.delays(net));
    (value, links)
}

/// Minimizes `Σ_e w_e f(SINR_e)` over the power set by projected gradient
/// with Armijo backtracking.
///
/// Nodes with a loaded link that starts without power are averaged with
/// the equal split first. Stops when an accepted step improves the
/// objective by at most `tol` relative to its magnitude.
pub fn optimize_power(
    net: &Network,
    weights: &[f64],
    start: &PowerAllocation,
    tol: f64,
    max_iters: usize,
) -> Result<PowerOutcome> {
    let mut s = start.clone();
    super::revive_power(net, weights, &mut s);
    let (mut value, mut links) = objective(net, weights, &s);
    let mut history = vec![value];
    let max_budget = (0..net.n_nodes())
        .map(|v| net.budget(v))
        .fold(0.0, f64::max);
    let mut step = f64::NAN;
    let mut iterations = 0;
    while iterations < max_iters {
        let grad = radio::weighted_delay_gradient(net, weights, &links)?;
        let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gnorm == 0.0 || value == 0.0 {
            break;
        }
        if !step.is_finite() {
            step = 0.1 * max_budget / gnorm;
        } else {
            step *= 2.0;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = project_power(
                net,
                &PowerAllocation {
                    s: s.s.iter().zip(&grad).map(|(p, g)| p - step * g).collect(),
                },
            );
            let slope: f64 = trial
                .s
                .iter()
                .zip(&s.s)
                .zip(&grad)
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            let (trial_value, trial_links) = objective(net, weights, &trial);
            if trial_value.is_finite() && trial_value <= value + ARMIJO_C * slope {
                accepted = Some((trial, trial_value, trial_links));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, trial_value, trial_links)) = accepted else {
            break;
        };
        iterations += 1;
        let decrease = value - trial_value;
        s = trial;
        value = trial_value;
        links = trial_links;
        history.push(value);
        if decrease <= tol * value.abs().max(1e-12) {
            break;
        }
    }
    Ok(PowerOutcome {
        s,
        objective: value,
        iterations,
        history,
    })
}

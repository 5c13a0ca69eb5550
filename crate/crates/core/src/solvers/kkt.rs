use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{self, HopWeight, RelaxedCache};
use crate::radio::{self, LinkState, PowerAllocation};
use crate::topology::Network;

use super::DEAD_LINK_LEVEL;

const DIRECTION_SAMPLES: usize = 64;

/// Violations of the first-order conditions at a point; all nonnegative.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    pub cache_residual: f64,
    pub power_residual: f64,
    pub complementary_slackness: f64,
    pub directional_residual: f64,
    /// Per-node cache multiplier estimate.
    pub alpha: Vec<f64>,
    /// Per-node power multiplier estimate (0 for slack budgets).
    pub beta: Vec<f64>,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.cache_residual
            .max(self.power_residual)
            .max(self.complementary_slackness)
            .max(self.directional_residual)
    }
}

/// Smallest worst-case distance from a common value to a set of intervals,
/// and the value attaining it.
fn common_value(intervals: &[(f64, f64)]) -> (f64, f64) {
    let left = intervals
        .iter()
        .map(|i| i.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let right = intervals.iter().map(|i| i.1).fold(f64::INFINITY, f64::min);
    match (left.is_finite(), right.is_finite()) {
        (true, true) if left > right => ((left + right) / 2.0, (left - right) / 2.0),
        (true, true) => ((left + right) / 2.0, 0.0),
        (true, false) => (left, 0.0),
        (false, true) => (right, 0.0),
        (false, false) => (0.0, 0.0),
    }
}

/// Checks the first-order optimality conditions of the relaxed cost.
///
/// Cache side: per node, a single multiplier `α_v` must lie in the
/// subdifferential interval of every interior coordinate, below the upper
/// end for coordinates at 0 and above the lower end for coordinates at 1.
/// The multiplier minimizing the worst violation is used, so the residual
/// is the distance to satisfiability. Prefix sums within `tol` of 1 count
/// as kinks; entries within `tol` of a bound count as at the bound.
///
/// Power side: positive links of a tight node share gradient `-β_v` and
/// zero links have gradient at least `-β_v`; on a slack node the gradient vanishes on
/// positive links and is nonnegative on zero links.
///
/// Directional conditions are sampled on random feasible mass transfers.
pub fn check_kkt(
    net: &Network,
    y: &RelaxedCache,
    power: &PowerAllocation,
    tol: f64,
) -> KktResidual {
    let links = LinkState::evaluate(net, power);
    let delays = links.delays(net);
    let (mut lo, mut hi) = cost::cache_subdifferential(net, y, &delays, tol);
    // a silent link makes the one-sided slope unbounded
    for g in lo.y.iter_mut().chain(hi.y.iter_mut()) {
        if g.abs() >= DEAD_LINK_LEVEL {
            *g = g.signum() * f64::INFINITY;
        }
    }
    let m = net.n_items();
    let n = net.n_nodes();

    let mut out = KktResidual {
        alpha: vec![0.0; n],
        beta: vec![0.0; n],
        ..KktResidual::default()
    };

    for v in 0..n {
        let intervals: Vec<(f64, f64)> = (0..m)
            .filter(|&i| !net.is_pinned(v, i))
            .map(|i| {
                let k = v * m + i;
                let yv = y.y[k];
                if yv <= tol {
                    (f64::NEG_INFINITY, hi.y[k])
                } else if yv >= 1.0 - tol {
                    (lo.y[k], f64::INFINITY)
                } else {
                    (lo.y[k], hi.y[k])
                }
            })
            .collect();
        let (alpha, residual) = common_value(&intervals);
        out.alpha[v] = alpha;
        out.cache_residual = out.cache_residual.max(residual);
        for i in (0..m).filter(|&i| !net.is_pinned(v, i)) {
            let k = v * m + i;
            // multipliers of the box constraints, using the subgradient
            // closest to α
            let d = alpha.clamp(lo.y[k], hi.y[k]);
            let upper = (alpha - d).max(0.0);
            let lower = (d - alpha).max(0.0);
            out.complementary_slackness = out
                .complementary_slackness
                .max(upper * (1.0 - y.y[k]).max(0.0))
                .max(lower * y.y[k].max(0.0));
        }
    }

    let weights = cost::edge_weights(net, y, HopWeight::Relaxed);
    let grad = match radio::weighted_delay_gradient(net, &weights, &links) {
        Ok(g) => g,
        Err(_) => {
            out.power_residual = f64::INFINITY;
            return out;
        }
    };
    for v in 0..n {
        let out_edges = net.out_edges(v);
        if out_edges.is_empty() {
            continue;
        }
        let budget = net.budget(v);
        let used = power.node_total(net, v);
        let zero = |e: usize| power.s[e] <= tol * budget;
        let tight = budget - used <= tol * budget;
        if tight {
            let intervals: Vec<(f64, f64)> = out_edges
                .iter()
                .map(|&e| {
                    if zero(e) {
                        (-grad[e], f64::INFINITY)
                    } else {
                        (-grad[e], -grad[e])
                    }
                })
                .collect();
            let (beta, residual) = common_value(&intervals);
            let beta = beta.max(0.0);
            out.beta[v] = beta;
            let sign = out_edges
                .iter()
                .filter(|&&e| !zero(e))
                .map(|&e| grad[e].max(0.0))
                .fold(0.0, f64::max);
            out.power_residual = out.power_residual.max(residual).max(sign);
            for &e in out_edges {
                let gamma = (grad[e] + beta).max(0.0);
                out.complementary_slackness =
                    out.complementary_slackness.max(gamma * power.s[e] / budget);
            }
            out.complementary_slackness = out
                .complementary_slackness
                .max(beta * (budget - used).max(0.0) / budget);
        } else {
            for &e in out_edges {
                let r = if zero(e) {
                    (-grad[e]).max(0.0)
                } else {
                    grad[e].abs()
                };
                out.power_residual = out.power_residual.max(r);
            }
        }
    }

    out.directional_residual = directional(net, y, power, &delays, &grad, tol);
    out
}

/// Worst negative slope over sampled feasible directions, normalized to
/// unit direction length. Cache slopes are secants of length `tol`, which
/// matches the kink tolerance used above.
fn directional(
    net: &Network,
    y: &RelaxedCache,
    power: &PowerAllocation,
    delays: &[f64],
    grad: &[f64],
    tol: f64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b6b74);
    let m = net.n_items();
    let mut worst: f64 = 0.0;
    let base = cost::cost_with_delays(net, y, delays, HopWeight::Relaxed);

    let mut moves = Vec::new();
    for v in 0..net.n_nodes() {
        for i in (0..m).filter(|&i| !net.is_pinned(v, i)) {
            for j in (0..m).filter(|&j| j != i && !net.is_pinned(v, j)) {
                if y.get(v, i) <= 1.0 - tol && y.get(v, j) >= tol {
                    moves.push((v, i, j));
                }
            }
        }
    }
    moves.shuffle(&mut rng);
    for &(v, i, j) in moves.iter().take(DIRECTION_SAMPLES) {
        let h = tol.min(1.0 - y.get(v, i)).min(y.get(v, j));
        let mut moved = y.clone();
        moved.set(v, i, y.get(v, i) + h);
        moved.set(v, j, y.get(v, j) - h);
        let slope = (cost::cost_with_delays(net, &moved, delays, HopWeight::Relaxed) - base) / h;
        worst = worst.max(-slope / std::f64::consts::SQRT_2);
    }

    let mut power_moves = Vec::new();
    for v in 0..net.n_nodes() {
        let out = net.out_edges(v);
        let budget = net.budget(v);
        let slack = budget - power.node_total(net, v) > tol * budget;
        for &a in out {
            if slack {
                power_moves.push((a, None));
            }
            for &b in out {
                if a != b && power.s[b] > tol * budget {
                    power_moves.push((a, Some(b)));
                }
            }
        }
    }
    power_moves.shuffle(&mut rng);
    for &(a, b) in power_moves.iter().take(DIRECTION_SAMPLES) {
        let slope = match b {
            None => grad[a],
            Some(b) => (grad[a] - grad[b]) / std::f64::consts::SQRT_2,
        };
        worst = worst.max(-slope);
    }
    // random decreases on positive links are always feasible
    for _ in 0..DIRECTION_SAMPLES.min(net.wireless_edges().len()) {
        let e = net.wireless_edges()[rng.gen_range(0..net.wireless_edges().len())];
        let budget = net.budget(net.edges()[e].tx);
        if power.s[e] > tol * budget {
            worst = worst.max(grad[e]);
        }
    }
    worst
}

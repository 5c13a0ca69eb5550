//! Delay objectives over cache placements and power allocations.
//!
//! Every objective has the form `Σ_r λ_r Σ_k f(SINR_{e_k}) · w_k` where hop
//! `k` of request `r` uses edge `e_k = p_{k+1} -> p_k` and the hop weight
//! `w_k` depends on the caches in the prefix `p_1..=p_k`:
//!
//! * exact / multilinear: `Π_{l≤k} (1 - y_{p_l i})`
//! * relaxed: `1 - min(1, Σ_{l≤k} y_{p_l i})`
//! * upper bound: `1`
//!
//! Aggregating hop weights per edge turns each objective into a weighted sum
//! of link delays, which is what the power optimizers work with.

use serde::{Deserialize, Serialize};

use crate::radio::{self, LinkState, PowerAllocation};
use crate::topology::Network;
use crate::{Error, Result};

/// Feasibility slack used by the checked cost entry points.
pub const FEAS_TOL: f64 = 1e-9;

/// Binary node × item placement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachePlacement {
    pub n_nodes: usize,
    pub n_items: usize,
    pub x: Vec<bool>,
}

impl CachePlacement {
    pub fn empty(n_nodes: usize, n_items: usize) -> Self {
        CachePlacement {
            n_nodes,
            n_items,
            x: vec![false; n_nodes * n_items],
        }
    }

    /// Only designated sources hold items.
    pub fn sources_only(net: &Network) -> Self {
        let mut p = Self::empty(net.n_nodes(), net.n_items());
        for v in 0..net.n_nodes() {
            for i in 0..net.n_items() {
                p.x[v * net.n_items() + i] = net.is_pinned(v, i);
            }
        }
        p
    }

    pub fn get(&self, v: usize, i: usize) -> bool {
        self.x[v * self.n_items + i]
    }

    pub fn set(&mut self, v: usize, i: usize, value: bool) {
        self.x[v * self.n_items + i] = value;
    }

    pub fn count(&self, v: usize) -> usize {
        self.x[v * self.n_items..(v + 1) * self.n_items]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn to_relaxed(&self) -> RelaxedCache {
        RelaxedCache {
            n_nodes: self.n_nodes,
            n_items: self.n_items,
            y: self.x.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Capacity (`≤ c_v`) and source pins.
    pub fn check(&self, net: &Network) -> Result<()> {
        check_shape(net, self.n_nodes, self.n_items, "cache placement")?;
        for v in 0..net.n_nodes() {
            if self.count(v) > net.capacity(v) {
                return Err(Error::Infeasible {
                    what: "cache placement",
                    detail: format!(
                        "node {v} stores {} items with capacity {}",
                        self.count(v),
                        net.capacity(v)
                    ),
                });
            }
            for i in 0..net.n_items() {
                if net.is_pinned(v, i) && !self.get(v, i) {
                    return Err(Error::Infeasible {
                        what: "cache placement",
                        detail: format!("designated source {v} does not hold item {i}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Fractional caching marginals `y_vi ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedCache {
    pub n_nodes: usize,
    pub n_items: usize,
    pub y: Vec<f64>,
}

impl RelaxedCache {
    pub fn zeros(n_nodes: usize, n_items: usize) -> Self {
        RelaxedCache {
            n_nodes,
            n_items,
            y: vec![0.0; n_nodes * n_items],
        }
    }

    pub fn sources_only(net: &Network) -> Self {
        CachePlacement::sources_only(net).to_relaxed()
    }

    pub fn get(&self, v: usize, i: usize) -> f64 {
        self.y[v * self.n_items + i]
    }

    pub fn set(&mut self, v: usize, i: usize, value: f64) {
        self.y[v * self.n_items + i] = value;
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.y[v * self.n_items..(v + 1) * self.n_items]
    }

    pub fn row_mut(&mut self, v: usize) -> &mut [f64] {
        &mut self.y[v * self.n_items..(v + 1) * self.n_items]
    }

    /// Entries farther than `tol` from both 0 and 1.
    pub fn fractional_count(&self, tol: f64) -> usize {
        self.y.iter().filter(|&&y| y > tol && y < 1.0 - tol).count()
    }

    /// Converts to a placement; `None` if any entry is fractional beyond `tol`.
    pub fn to_placement(&self, tol: f64) -> Option<CachePlacement> {
        let mut x = Vec::with_capacity(self.y.len());
        for &y in &self.y {
            if y <= tol {
                x.push(false);
            } else if y >= 1.0 - tol {
                x.push(true);
            } else {
                return None;
            }
        }
        Some(CachePlacement {
            n_nodes: self.n_nodes,
            n_items: self.n_items,
            x,
        })
    }

    /// Box, source pins and `Σ_i y_vi = c_v`, each within `tol`.
    pub fn check(&self, net: &Network, tol: f64) -> Result<()> {
        check_shape(net, self.n_nodes, self.n_items, "relaxed cache")?;
        for v in 0..net.n_nodes() {
            let row = self.row(v);
            for (i, &y) in row.iter().enumerate() {
                if !(y >= -tol && y <= 1.0 + tol) {
                    return Err(Error::Infeasible {
                        what: "relaxed cache",
                        detail: format!("y[{v}][{i}] = {y} outside [0, 1]"),
                    });
                }
                if net.is_pinned(v, i) && (y - 1.0).abs() > tol {
                    return Err(Error::Infeasible {
                        what: "relaxed cache",
                        detail: format!("designated source {v} has y = {y} for item {i}"),
                    });
                }
            }
            let total: f64 = row.iter().sum();
            if (total - net.capacity(v) as f64).abs() > tol * (1.0 + row.len() as f64) {
                return Err(Error::Infeasible {
                    what: "relaxed cache",
                    detail: format!("node {v} holds mass {total}, capacity {}", net.capacity(v)),
                });
            }
        }
        Ok(())
    }
}

fn check_shape(net: &Network, n: usize, m: usize, what: &'static str) -> Result<()> {
    if n != net.n_nodes() || m != net.n_items() {
        return Err(Error::Infeasible {
            what,
            detail: format!(
                "shape {n}x{m} does not match {}x{}",
                net.n_nodes(),
                net.n_items()
            ),
        });
    }
    Ok(())
}

/// Per-edge delays for an allocation (wired fixed, dead links saturated).
pub fn link_delays(net: &Network, power: &PowerAllocation) -> Vec<f64> {
    LinkState::evaluate(net, power).delays(net)
}

/// Hop-weight rule applied to a request prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HopWeight {
    /// `Π (1 - y)`: exact on integral caches, multilinear otherwise.
    Multilinear,
    /// `1 - min(1, Σ y)`.
    Relaxed,
    /// Always 1: every request is served by its designated source.
    UpperBound,
}

impl HopWeight {
    fn start(self) -> f64 {
        match self {
            HopWeight::Multilinear | HopWeight::UpperBound => 1.0,
            HopWeight::Relaxed => 0.0,
        }
    }

    fn accumulate(self, acc: f64, y: f64) -> f64 {
        match self {
            HopWeight::Multilinear => acc * (1.0 - y),
            HopWeight::Relaxed => acc + y,
            HopWeight::UpperBound => 1.0,
        }
    }

    fn weight(self, acc: f64) -> f64 {
        match self {
            HopWeight::Multilinear | HopWeight::UpperBound => acc,
            HopWeight::Relaxed => 1.0 - acc.min(1.0),
        }
    }
}

/// Aggregated weight `Σ λ · w_k` on every edge.
pub fn edge_weights(net: &Network, cache: &RelaxedCache, rule: HopWeight) -> Vec<f64> {
    let mut weights = vec![0.0; net.n_edges()];
    for (r, req) in net.requests().iter().enumerate() {
        let mut acc = rule.start();
        for (hop, &v) in net.hops(r).iter().zip(&req.path) {
            acc = rule.accumulate(acc, cache.get(v, req.item));
            let w = rule.weight(acc);
            if w != 0.0 {
                weights[hop.edge] += req.rate * w;
            }
        }
    }
    weights
}

/// Per-request costs `D_(i,p)` (without the rate) for the given rule.
pub fn per_request_costs(
    net: &Network,
    cache: &RelaxedCache,
    delays: &[f64],
    rule: HopWeight,
) -> Vec<f64> {
    net.requests()
        .iter()
        .enumerate()
        .map(|(r, req)| {
            let mut acc = rule.start();
            let mut total = 0.0;
            for (hop, &v) in net.hops(r).iter().zip(&req.path) {
                acc = rule.accumulate(acc, cache.get(v, req.item));
                let w = rule.weight(acc);
                if w != 0.0 {
                    total += w * delays[hop.edge];
                }
            }
            total
        })
        .collect()
}

/// Objective value from precomputed link delays, no feasibility checks.
pub fn cost_with_delays(
    net: &Network,
    cache: &RelaxedCache,
    delays: &[f64],
    rule: HopWeight,
) -> f64 {
    net.requests()
        .iter()
        .zip(per_request_costs(net, cache, delays, rule))
        .map(|(req, c)| req.rate * c)
        .sum()
}

/// `D°(X, S)`: exact expected delay of an integral placement.
pub fn exact_cost(net: &Network, x: &CachePlacement, power: &PowerAllocation) -> Result<f64> {
    x.check(net)?;
    power.check(net, FEAS_TOL)?;
    Ok(cost_with_delays(
        net,
        &x.to_relaxed(),
        &link_delays(net, power),
        HopWeight::Multilinear,
    ))
}

/// `D°(Y, S)`: expectation of the exact cost under independent Bernoulli
/// caches with marginals `Y`.
pub fn multilinear_cost(net: &Network, y: &RelaxedCache, power: &PowerAllocation) -> Result<f64> {
    y.check(net, FEAS_TOL)?;
    power.check(net, FEAS_TOL)?;
    Ok(cost_with_delays(
        net,
        y,
        &link_delays(net, power),
        HopWeight::Multilinear,
    ))
}

/// `D(Y, S)`: the relaxed, piecewise-linear-in-`Y` cost.
pub fn relaxed_cost(net: &Network, y: &RelaxedCache, power: &PowerAllocation) -> Result<f64> {
    y.check(net, FEAS_TOL)?;
    power.check(net, FEAS_TOL)?;
    Ok(cost_with_delays(
        net,
        y,
        &link_delays(net, power),
        HopWeight::Relaxed,
    ))
}

/// `D^ub(S)`: every request served end to end by its source.
pub fn upper_bound_cost(net: &Network, power: &PowerAllocation) -> Result<f64> {
    power.check(net, FEAS_TOL)?;
    let y = RelaxedCache::zeros(net.n_nodes(), net.n_items());
    Ok(cost_with_delays(
        net,
        &y,
        &link_delays(net, power),
        HopWeight::UpperBound,
    ))
}

/// A member of `∂_Y D` together with `∇_S D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subgradient {
    pub d_y: RelaxedCache,
    pub d_s: Vec<f64>,
}

/// `∂_Y D` member with the kink rule `∂g = 0` at `Σ y = 1`, computed from
/// link delays.
pub fn cache_subgradient(net: &Network, cache: &RelaxedCache, delays: &[f64]) -> RelaxedCache {
    let mut d = RelaxedCache::zeros(net.n_nodes(), net.n_items());
    for (r, req) in net.requests().iter().enumerate() {
        let mut sum = 0.0;
        for (k, (hop, &v)) in net.hops(r).iter().zip(&req.path).enumerate() {
            sum += cache.get(v, req.item);
            if sum < 1.0 {
                let contrib = -req.rate * delays[hop.edge];
                for &u in &req.path[..=k] {
                    d.y[u * net.n_items() + req.item] += contrib;
                }
            }
        }
    }
    d
}

/// Bounds `[lo, hi]` of the whole subdifferential `∂_{y_vi} D`, treating
/// prefix sums within `kink_tol` of 1 as kinks.
pub fn cache_subdifferential(
    net: &Network,
    cache: &RelaxedCache,
    delays: &[f64],
    kink_tol: f64,
) -> (RelaxedCache, RelaxedCache) {
    let mut lo = RelaxedCache::zeros(net.n_nodes(), net.n_items());
    let mut hi = RelaxedCache::zeros(net.n_nodes(), net.n_items());
    for (r, req) in net.requests().iter().enumerate() {
        let mut sum = 0.0;
        for (k, (hop, &v)) in net.hops(r).iter().zip(&req.path).enumerate() {
            sum += cache.get(v, req.item);
            let full = -req.rate * delays[hop.edge];
            let (a, b) = if (sum - 1.0).abs() <= kink_tol {
                (full, 0.0)
            } else if sum < 1.0 {
                (full, full)
            } else {
                continue;
            };
            for &u in &req.path[..=k] {
                lo.y[u * net.n_items() + req.item] += a;
                hi.y[u * net.n_items() + req.item] += b;
            }
        }
    }
    (lo, hi)
}

/// Subgradient of the relaxed cost. Fails if a link carrying positive
/// relaxed weight has zero SINR.
pub fn subgradient(
    net: &Network,
    y: &RelaxedCache,
    power: &PowerAllocation,
) -> Result<Subgradient> {
    y.check(net, FEAS_TOL)?;
    power.check(net, FEAS_TOL)?;
    subgradient_unchecked(net, y, power)
}

pub(crate) fn subgradient_unchecked(
    net: &Network,
    y: &RelaxedCache,
    power: &PowerAllocation,
) -> Result<Subgradient> {
    let links = LinkState::evaluate(net, power);
    let delays = links.delays(net);
    let weights = edge_weights(net, y, HopWeight::Relaxed);
    Ok(Subgradient {
        d_y: cache_subgradient(net, y, &delays),
        d_s: radio::weighted_delay_gradient(net, &weights, &links)?,
    })
}

/// One grid point of the log-power convexity condition
/// `2 f'(x)^2 x / f(x) - f'(x) <= f''(x) x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPowerSample {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs - rhs) / rhs`; positive means violated.
    pub relative_margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPowerReport {
    pub rtol: f64,
    pub samples: Vec<LogPowerSample>,
    /// First grid point of each run where the verdict flips.
    pub crossovers: Vec<f64>,
}

/// Evaluates the log-power convexity condition on a grid of SINR values.
///
/// With the exact delay `1/log2(1+x)` the two sides differ by a relative
/// `ln(1+x) / (x (ln(1+x) + 2))`, which vanishes only as `x → ∞`; a point
/// is reported as holding when `lhs <= rhs (1 + rtol)`.
pub fn check_logpower_convexity(grid: &[f64], rtol: f64) -> LogPowerReport {
    let samples: Vec<LogPowerSample> = grid
        .iter()
        .map(|&x| {
            let f = radio::delay_of_sinr(x);
            let f1 = radio::delay_derivative(x);
            let f2 = radio::delay_second_derivative(x);
            let lhs = 2.0 * f1 * f1 * x / f - f1;
            let rhs = f2 * x;
            let relative_margin = (lhs - rhs) / rhs;
            LogPowerSample {
                x,
                lhs,
                rhs,
                relative_margin,
                holds: lhs <= rhs * (1.0 + rtol),
            }
        })
        .collect();
    let crossovers = samples
        .windows(2)
        .filter(|w| w[0].holds != w[1].holds)
        .map(|w| w[1].x)
        .collect();
    LogPowerReport {
        rtol,
        samples,
        crossovers,
    }
}

/// Link delay when the received power plus noise is pinned at `total` and
/// `s` of it is useful signal: `1 / log2(1 + s / (total - s))`.
pub fn fixed_total_delay(s: f64, total: f64) -> f64 {
    radio::delay_of_sinr(s / (total - s))
}

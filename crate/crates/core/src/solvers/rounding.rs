use serde::{Deserialize, Serialize};

use crate::cost::{self, CachePlacement, HopWeight, RelaxedCache};
use crate::radio::PowerAllocation;
use crate::topology::Network;
use crate::Result;

/// Entries this close to 0 or 1 count as integral.
pub const INTEGRAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingStep {
    pub node: usize,
    /// Mass moved from `items.1` to `items.0` (positive) or back (negative).
    pub items: (usize, usize),
    pub transfer: f64,
    pub fractional_before: usize,
    pub fractional_after: usize,
    pub cost_before: f64,
    pub cost_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    pub placement: CachePlacement,
    pub steps: Vec<RoundingStep>,
}

fn snap(y: &mut RelaxedCache) {
    for v in y.y.iter_mut() {
        if v.abs() <= INTEGRAL_TOL {
            *v = 0.0;
        } else if (*v - 1.0).abs() <= INTEGRAL_TOL {
            *v = 1.0;
        }
    }
}

fn is_fractional(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// Pairwise equal-mass rounding at fixed link delays.
///
/// Repeatedly takes the lowest node with two fractional entries (lowest
/// items first), evaluates the multilinear cost after pushing mass either
/// way until one entry becomes integral, and keeps the cheaper outcome.
/// Along such a transfer the cost is linear, so it never increases.
pub fn round_cache(net: &Network, y: &RelaxedCache, power: &PowerAllocation) -> Result<Rounding> {
    y.check(net, 1e-7)?;
    let delays = cost::link_delays(net, power);
    let eval = |y: &RelaxedCache| cost::cost_with_delays(net, y, &delays, HopWeight::Multilinear);
    let mut y = y.clone();
    for v in 0..net.n_nodes() {
        for i in 0..net.n_items() {
            if net.is_pinned(v, i) {
                y.set(v, i, 1.0);
            }
        }
    }
    snap(&mut y);
    let mut steps = Vec::new();
    let mut cost = eval(&y);
    loop {
        let before = y.y.iter().filter(|&&v| is_fractional(v)).count();
        if before == 0 {
            break;
        }
        let Some((v, i, j)) = (0..net.n_nodes()).find_map(|v| {
            let mut frac = (0..net.n_items()).filter(|&i| is_fractional(y.get(v, i)));
            match (frac.next(), frac.next()) {
                (Some(i), Some(j)) => Some((v, i, j)),
                _ => None,
            }
        }) else {
            // a lone fractional entry is feasibility drift; the row sum
            // is integral, so the entry rounds to its nearest integer
            for v in y.y.iter_mut().filter(|v| is_fractional(**v)) {
                *v = v.round();
            }
            cost = eval(&y);
            continue;
        };
        let (a, b) = (y.get(v, i), y.get(v, j));
        let up = (1.0 - a).min(b);
        let down = a.min(1.0 - b);
        let mut toward_i = y.clone();
        toward_i.set(v, i, a + up);
        toward_i.set(v, j, b - up);
        snap(&mut toward_i);
        let mut toward_j = y.clone();
        toward_j.set(v, i, a - down);
        toward_j.set(v, j, b + down);
        snap(&mut toward_j);
        let (ci, cj) = (eval(&toward_i), eval(&toward_j));
        let (next, next_cost, transfer) = if ci <= cj {
            (toward_i, ci, up)
        } else {
            (toward_j, cj, -down)
        };
        let after = next.y.iter().filter(|&&v| is_fractional(v)).count();
        steps.push(RoundingStep {
            node: v,
            items: (i, j),
            transfer,
            fractional_before: before,
            fractional_after: after,
            cost_before: cost,
            cost_after: next_cost,
        });
        y = next;
        cost = next_cost;
    }
    let placement = y
        .to_placement(0.0)
        .expect("rounding leaves only integral entries");
    Ok(Rounding { placement, steps })
}

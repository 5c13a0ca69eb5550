//! Euclidean projections onto the power and cache feasible sets.

use crate::cost::RelaxedCache;
use crate::radio::PowerAllocation;
use crate::topology::Network;
use crate::{Error, Result};

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITERS: usize = 200;

/// Projects `z` onto `{s >= 0, Σ s <= budget}`.
pub fn project_capped_sum(z: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    // simplex projection by sorted thresholds
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - budget) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    z.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Projects each node's outgoing wireless powers onto its budget simplex;
/// wired edges are forced to zero.
pub fn project_power(net: &Network, z: &PowerAllocation) -> PowerAllocation {
    let mut s = vec![0.0; net.n_edges()];
    for v in 0..net.n_nodes() {
        let out = net.out_edges(v);
        if out.is_empty() {
            continue;
        }
        let local: Vec<f64> = out.iter().map(|&e| z.s[e]).collect();
        for (&e, p) in out.iter().zip(project_capped_sum(&local, net.budget(v))) {
            s[e] = p;
        }
    }
    PowerAllocation { s }
}

/// Projects `z` onto `{0 <= y <= 1, Σ y = total}`. Requires
/// `0 <= total <= z.len()`.
pub fn project_capped_simplex(z: &[f64], total: f64) -> Vec<f64> {
    let mass = |mu: f64| -> f64 { z.iter().map(|&v| (v - mu).clamp(0.0, 1.0)).sum() };
    if z.is_empty() {
        return Vec::new();
    }
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    // mass(lo) = n, mass(hi) = 0, nonincreasing in between
    let (mut lo, mut hi) = (zmin - 1.0, zmax);
    for _ in 0..BISECTION_MAX_ITERS {
        if hi - lo <= BISECTION_TOL * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mass(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut mu = 0.5 * (lo + hi);
    // exact threshold from the identified active set
    let mut n_free = 0usize;
    let mut free_sum = 0.0;
    let mut n_upper = 0usize;
    for &v in z {
        let t = v - mu;
        if t >= 1.0 {
            n_upper += 1;
        } else if t > 0.0 {
            n_free += 1;
            free_sum += v;
        }
    }
    if n_free > 0 {
        let candidate = (free_sum + n_upper as f64 - total) / n_free as f64;
        if (candidate - mu).abs() <= 1e-9 * (1.0 + mu.abs()) {
            mu = candidate;
        }
    }
    z.iter().map(|&v| (v - mu).clamp(0.0, 1.0)).collect()
}

/// Projects onto the relaxed cache set: box, source pins at 1, and row sums
/// equal to capacity.
pub fn project_cache(net: &Network, z: &RelaxedCache) -> Result<RelaxedCache> {
    let m = net.n_items();
    let mut out = RelaxedCache::zeros(net.n_nodes(), m);
    for v in 0..net.n_nodes() {
        let pinned = net.pinned_count(v);
        let cap = net.capacity(v);
        if cap < pinned {
            return Err(Error::Infeasible {
                what: "cache projection",
                detail: format!("node {v} pins {pinned} items with capacity {cap}"),
            });
        }
        let free: Vec<usize> = (0..m).filter(|&i| !net.is_pinned(v, i)).collect();
        let remaining = cap - pinned;
        if remaining > free.len() {
            return Err(Error::Infeasible {
                what: "cache projection",
                detail: format!("node {v} has capacity {cap} above the catalog size {m}"),
            });
        }
        let local: Vec<f64> = free.iter().map(|&i| z.get(v, i)).collect();
        let projected = project_capped_simplex(&local, remaining as f64);
        for i in 0..m {
            if net.is_pinned(v, i) {
                out.set(v, i, 1.0);
            }
        }
        for (&i, y) in free.iter().zip(projected) {
            out.set(v, i, y);
        }
    }
    Ok(out)
}

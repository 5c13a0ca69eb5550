//! Brute-force ground truth for micro-instances: exhaustive placements on a
//! power grid, finite-difference gradients, Monte-Carlo multilinear
//! estimates and a sampled Pareto check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CachePlacement, HopWeight, RelaxedCache, Subgradient};
use crate::par::Execution;
use crate::radio::PowerAllocation;
use crate::topology::Network;
use crate::{Error, Result};

/// Evaluation budget for exhaustive search.
pub const MAX_EVALUATIONS: f64 = 1e7;

/// Budget fractions used for the power grid.
pub const POWER_LEVELS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub placement: CachePlacement,
    pub power: PowerAllocation,
    pub cost: f64,
    pub placements: usize,
    pub grid_points: usize,
}

/// Every feasible placement (capacity as an upper bound, sources pinned).
pub fn enumerate_placements(net: &Network) -> Vec<CachePlacement> {
    let m = net.n_items();
    let per_node: Vec<Vec<Vec<usize>>> = (0..net.n_nodes())
        .map(|v| {
            let free: Vec<usize> = (0..m).filter(|&i| !net.is_pinned(v, i)).collect();
            let room = net.capacity(v).saturating_sub(net.pinned_count(v));
            subsets_up_to(&free, room)
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; net.n_nodes()];
    loop {
        let mut x = CachePlacement::sources_only(net);
        for (v, &c) in choice.iter().enumerate() {
            for &i in &per_node[v][c] {
                x.set(v, i, true);
            }
        }
        out.push(x);
        // odometer increment, last node fastest
        let mut v = net.n_nodes();
        loop {
            if v == 0 {
                return out;
            }
            v -= 1;
            choice[v] += 1;
            if choice[v] < per_node[v].len() {
                break;
            }
            choice[v] = 0;
        }
    }
}

fn subsets_up_to(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &i in items {
        let extended: Vec<Vec<usize>> = out
            .iter()
            .filter(|s| s.len() < k)
            .map(|s| {
                let mut t = s.clone();
                t.push(i);
                t
            })
            .collect();
        out.extend(extended);
    }
    out.sort();
    out
}

/// Compositions of `n` into `k` nonnegative parts, in lexicographic order.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            let mut c = vec![first];
            c.append(&mut rest);
            out.push(c);
        }
    }
    out
}

fn node_grid(net: &Network, v: usize, resolution: usize) -> Vec<Vec<f64>> {
    let k = net.out_edges(v).len();
    if k == 0 {
        return vec![Vec::new()];
    }
    let budget = net.budget(v);
    let mut out = Vec::new();
    for level in POWER_LEVELS {
        for c in compositions(resolution, k) {
            out.push(
                c.iter()
                    .map(|&a| level * budget * a as f64 / resolution as f64)
                    .collect(),
            );
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Number of placements `enumerate_placements` would return.
pub fn placement_count(net: &Network) -> f64 {
    let m = net.n_items();
    (0..net.n_nodes())
        .map(|v| {
            let free = m - net.pinned_count(v);
            let room = net.capacity(v).saturating_sub(net.pinned_count(v));
            (0..=room.min(free)).map(|j| binomial(free, j)).sum::<f64>()
        })
        .product()
}

/// Number of power grid points at a resolution.
pub fn grid_size(net: &Network, resolution: usize) -> f64 {
    (0..net.n_nodes())
        .map(|v| {
            let k = net.out_edges(v).len();
            if k == 0 {
                1.0
            } else {
                POWER_LEVELS.len() as f64 * binomial(resolution + k - 1, k - 1)
            }
        })
        .product()
}

/// The power grid: per node, simplex lattice points at each budget level.
pub fn power_grid(net: &Network, resolution: usize) -> Vec<PowerAllocation> {
    let grids: Vec<Vec<Vec<f64>>> = (0..net.n_nodes())
        .map(|v| node_grid(net, v, resolution))
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; net.n_nodes()];
    loop {
        let mut s = PowerAllocation::zeros(net);
        for (v, &c) in choice.iter().enumerate() {
            for (&e, &p) in net.out_edges(v).iter().zip(&grids[v][c]) {
                s.s[e] = p;
            }
        }
        out.push(s);
        let mut v = net.n_nodes();
        loop {
            if v == 0 {
                return out;
            }
            v -= 1;
            choice[v] += 1;
            if choice[v] < grids[v].len() {
                break;
            }
            choice[v] = 0;
        }
    }
}

/// Best placement for fixed powers, with the lowest enumeration index
/// among ties.
pub fn best_placement(net: &Network, power: &PowerAllocation) -> (CachePlacement, f64) {
    let delays = cost::link_delays(net, power);
    let mut best: Option<(CachePlacement, f64)> = None;
    for x in enumerate_placements(net) {
        let c = cost::cost_with_delays(net, &x.to_relaxed(), &delays, HopWeight::Multilinear);
        if best.as_ref().is_none_or(|b| c < b.1) {
            best = Some((x, c));
        }
    }
    best.expect("sources-only placement always exists")
}

/// Global minimum of the exact cost over all placements and the power grid.
///
/// Ties resolve to the lowest grid index, then the lowest placement index,
/// so parallel and sequential runs agree.
pub fn brute_force_opt(
    net: &Network,
    resolution: usize,
    exec: Execution,
) -> Result<OracleSolution> {
    if resolution == 0 {
        return Err(Error::InvalidParams(
            "grid resolution must be positive".into(),
        ));
    }
    let estimate = placement_count(net) * grid_size(net, resolution);
    if estimate > MAX_EVALUATIONS {
        return Err(Error::TooLarge {
            estimate,
            limit: MAX_EVALUATIONS,
        });
    }
    let placements = enumerate_placements(net);
    let grid = power_grid(net, resolution);
    let relaxed: Vec<RelaxedCache> = placements.iter().map(|x| x.to_relaxed()).collect();
    let per_point = exec.map_slice(&grid, |s| {
        let delays = cost::link_delays(net, s);
        let mut best = (f64::INFINITY, 0usize);
        for (k, y) in relaxed.iter().enumerate() {
            let c = cost::cost_with_delays(net, y, &delays, HopWeight::Multilinear);
            if c < best.0 {
                best = (c, k);
            }
        }
        best
    });
    let (g, &(c, k)) = per_point
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .expect("grid is never empty");
    Ok(OracleSolution {
        placement: placements[k].clone(),
        power: grid[g].clone(),
        cost: c,
        placements: placements.len(),
        grid_points: grid.len(),
    })
}

/// Central finite differences of the relaxed cost in every coordinate.
///
/// Cache coordinates use step `h`; power coordinates use `h` times the
/// larger of the coordinate and a thousandth of the node budget. Fails when
/// a request prefix sum lies within `10 h` of the kink at 1.
pub fn fd_gradient(
    net: &Network,
    y: &RelaxedCache,
    power: &PowerAllocation,
    h: f64,
) -> Result<Subgradient> {
    for req in net.requests() {
        let mut sum = 0.0;
        for &v in &req.path[..req.path.len() - 1] {
            sum += y.get(v, req.item);
            let distance = (sum - 1.0).abs();
            if distance <= 10.0 * h {
                return Err(Error::KinkProximity {
                    node: v,
                    item: req.item,
                    distance,
                });
            }
        }
    }
    let delays = cost::link_delays(net, power);
    let relaxed =
        |y: &RelaxedCache, d: &[f64]| cost::cost_with_delays(net, y, d, HopWeight::Relaxed);

    let mut d_y = RelaxedCache::zeros(net.n_nodes(), net.n_items());
    let mut probe = y.clone();
    for k in 0..y.y.len() {
        let orig = probe.y[k];
        probe.y[k] = orig + h;
        let up = relaxed(&probe, &delays);
        probe.y[k] = orig - h;
        let down = relaxed(&probe, &delays);
        probe.y[k] = orig;
        d_y.y[k] = (up - down) / (2.0 * h);
    }

    let mut d_s = vec![0.0; net.n_edges()];
    let mut s = power.clone();
    for &e in net.wireless_edges() {
        let budget = net.budget(net.edges()[e].tx);
        let step = h * power.s[e].abs().max(1e-3 * budget);
        let orig = s.s[e];
        s.s[e] = orig + step;
        let up = relaxed(y, &cost::link_delays(net, &s));
        s.s[e] = orig - step;
        let down = relaxed(y, &cost::link_delays(net, &s));
        s.s[e] = orig;
        d_s[e] = (up - down) / (2.0 * step);
    }
    Ok(Subgradient { d_y, d_s })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Estimates the multilinear cost by sampling independent Bernoulli caches
/// with marginals `y`. Chunks use seeds `seed + chunk`, so the estimate
/// does not depend on the execution mode.
pub fn monte_carlo_multilinear(
    net: &Network,
    y: &RelaxedCache,
    power: &PowerAllocation,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> MonteCarloEstimate {
    const CHUNK: usize = 1024;
    let delays = cost::link_delays(net, power);
    let chunks = samples.div_ceil(CHUNK);
    let sums = exec.map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
        let n = CHUNK.min(samples - c * CHUNK);
        let mut x = RelaxedCache::zeros(y.n_nodes, y.n_items);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            for (xv, &p) in x.y.iter_mut().zip(&y.y) {
                *xv = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
            }
            let c = cost::cost_with_delays(net, &x, &delays, HopWeight::Multilinear);
            s1 += c;
            s2 += c * c;
        }
        (s1, s2)
    });
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub checked: usize,
    /// Grid points whose per-request delays are all no worse, one strictly
    /// better (beyond `tol`).
    pub dominating: usize,
}

/// Compares the per-request relaxed delays at `(y, power)` against every
/// placement on the power grid.
pub fn pareto_check(
    net: &Network,
    y: &RelaxedCache,
    power: &PowerAllocation,
    resolution: usize,
    tol: f64,
    exec: Execution,
) -> Result<ParetoReport> {
    let estimate = placement_count(net) * grid_size(net, resolution);
    if estimate > MAX_EVALUATIONS {
        return Err(Error::TooLarge {
            estimate,
            limit: MAX_EVALUATIONS,
        });
    }
    let placements = enumerate_placements(net);
    let reference =
        cost::per_request_costs(net, y, &cost::link_delays(net, power), HopWeight::Relaxed);
    let relaxed: Vec<RelaxedCache> = placements.iter().map(|x| x.to_relaxed()).collect();
    let grid = power_grid(net, resolution);
    let counts = exec.map_slice(&grid, |s| {
        let delays = cost::link_delays(net, s);
        relaxed
            .iter()
            .filter(|x| {
                let other = cost::per_request_costs(net, x, &delays, HopWeight::Relaxed);
                let no_worse = other.iter().zip(&reference).all(|(o, r)| *o <= r + tol);
                let better = other.iter().zip(&reference).any(|(o, r)| *o < r - tol);
                no_worse && better
            })
            .count()
    });
    Ok(ParetoReport {
        checked: placements.len() * grid.len(),
        dominating: counts.iter().sum(),
    })
}

//! Test-side reference model, written directly from the scenario data and
//! sharing no code with the library's cost or radio modules.

#![allow(dead_code)]

use hetcache::topology::{generate_micro_scenario, MicroParams, NodeKind, Scenario};
use hetcache::Network;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Product,
    Capped,
    Source,
}

fn gain(sc: &Scenario, j: usize, u: usize) -> f64 {
    let a = sc.nodes[j].position;
    let b = sc.nodes[u].position;
    let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt().max(1.0);
    d.powf(-sc.pathloss_exponent)
}

/// SINR of every scenario edge (0 for wired ones).
pub fn sinrs(sc: &Scenario, s: &[f64]) -> Vec<f64> {
    let mut total = vec![0.0; sc.nodes.len()];
    for (e, edge) in sc.edges.iter().enumerate() {
        if !edge.wired {
            total[edge.tx] += s[e];
        }
    }
    sc.edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            if edge.wired {
                return 0.0;
            }
            let (v, u) = (edge.tx, edge.rx);
            let mut noise = sc.nodes[u].noise_power;
            for (j, &p) in total.iter().enumerate() {
                if j != v && j != u {
                    noise += gain(sc, j, u) * p;
                }
            }
            noise += edge.gain * (total[v] - s[e]);
            edge.gain * s[e] / noise
        })
        .collect()
}

pub fn delays(sc: &Scenario, s: &[f64]) -> Vec<f64> {
    let x = sinrs(sc, s);
    sc.edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            if edge.wired {
                edge.wired_delay
            } else if x[e] > 0.0 {
                1.0 / (1.0 + x[e]).log2()
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

fn edge_of(sc: &Scenario, tx: usize, rx: usize) -> usize {
    sc.edges
        .iter()
        .position(|e| e.tx == tx && e.rx == rx)
        .expect("path edge exists")
}

/// Total cost with hop weights given by `rule`; `y` is node-major.
pub fn cost(sc: &Scenario, y: &[f64], s: &[f64], rule: Rule) -> f64 {
    let m = sc.catalog_size;
    let d = delays(sc, s);
    let mut total = 0.0;
    for req in &sc.requests {
        let mut prod = 1.0;
        let mut sum = 0.0;
        for k in 0..req.path.len() - 1 {
            let v = req.path[k];
            let yv = y[v * m + req.item];
            prod *= 1.0 - yv;
            sum += yv;
            let w = match rule {
                Rule::Product => prod,
                Rule::Capped => 1.0 - sum.min(1.0),
                Rule::Source => 1.0,
            };
            if w > 0.0 {
                total += req.rate * w * d[edge_of(sc, req.path[k + 1], v)];
            }
        }
    }
    total
}

pub fn pinned(sc: &Scenario, v: usize, i: usize) -> bool {
    sc.designated_sources
        .get(&i)
        .is_some_and(|srcs| srcs.contains(&v))
}

/// Random point of the relaxed cache set: pins at 1, free mass spread and
/// then shuffled by box-respecting pairwise transfers.
pub fn random_cache<R: Rng>(sc: &Scenario, rng: &mut R) -> Vec<f64> {
    let m = sc.catalog_size;
    let mut y = vec![0.0; sc.nodes.len() * m];
    for (v, node) in sc.nodes.iter().enumerate() {
        let free: Vec<usize> = (0..m).filter(|&i| !pinned(sc, v, i)).collect();
        for i in (0..m).filter(|&i| pinned(sc, v, i)) {
            y[v * m + i] = 1.0;
        }
        let room = node.cache_capacity - (m - free.len());
        if room == 0 || free.is_empty() {
            continue;
        }
        for &i in &free {
            y[v * m + i] = room as f64 / free.len() as f64;
        }
        for _ in 0..4 * free.len() {
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            if a == b {
                continue;
            }
            let amount = rng.gen::<f64>() * (1.0 - y[v * m + a]).min(y[v * m + b]);
            y[v * m + a] += amount;
            y[v * m + b] -= amount;
        }
    }
    y
}

/// Random strictly positive power allocation within every budget.
pub fn random_power<R: Rng>(sc: &Scenario, rng: &mut R) -> Vec<f64> {
    let mut s = vec![0.0; sc.edges.len()];
    for (v, node) in sc.nodes.iter().enumerate() {
        let out: Vec<usize> = (0..sc.edges.len())
            .filter(|&e| sc.edges[e].tx == v && !sc.edges[e].wired)
            .collect();
        if out.is_empty() {
            continue;
        }
        let total = node.power_budget * rng.gen_range(0.05..1.0);
        let w: Vec<f64> = out.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let sum: f64 = w.iter().sum();
        for (&e, wi) in out.iter().zip(&w) {
            s[e] = total * wi / sum;
        }
    }
    s
}

/// Micro instance with at most `max_nodes` nodes and `max_items` items.
pub fn micro<R: Rng>(rng: &mut R, max_nodes: usize, max_items: usize) -> Network {
    loop {
        let n_users = rng.gen_range(1..=2);
        let n_relays = rng.gen_range(0..=(max_nodes - 1 - n_users).min(3));
        let params = MicroParams {
            n_users,
            n_relays,
            catalog_size: rng.gen_range(1..=max_items),
            user_caches: rng.gen(),
        };
        if let Ok(sc) = generate_micro_scenario(rng.gen(), &params) {
            if sc.nodes.len() <= max_nodes {
                return Network::new(sc).expect("micro scenarios are valid");
            }
        }
    }
}

pub fn is_source(sc: &Scenario, v: usize) -> bool {
    matches!(sc.nodes[v].kind, NodeKind::MacroCell | NodeKind::Backbone)
}

/// Least-squares slope of `ys` against their index.
pub fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        num += dx * (y - my);
        den += dx * dx;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

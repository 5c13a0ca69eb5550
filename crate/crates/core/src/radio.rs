//! Per-link SINR and transmission delay, and the weighted link-delay
//! objective whose gradient drives every power optimizer in the crate.

use serde::{Deserialize, Serialize};

use crate::topology::Network;
use crate::{Error, Result};

/// Stand-in for an infinite delay in solver arithmetic.
pub const DELAY_SENTINEL: f64 = 1e18;

/// Transmit powers indexed by edge; wired edges always carry zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub s: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(net: &Network) -> Self {
        PowerAllocation {
            s: vec![0.0; net.n_edges()],
        }
    }

    /// Equal split of each node's budget over its outgoing links.
    pub fn equal_split(net: &Network) -> Self {
        let mut s = vec![0.0; net.n_edges()];
        for v in 0..net.n_nodes() {
            let out = net.out_edges(v);
            for &e in out {
                s[e] = net.budget(v) / out.len() as f64;
            }
        }
        PowerAllocation { s }
    }

    pub fn node_total(&self, net: &Network, v: usize) -> f64 {
        net.out_edges(v).iter().map(|&e| self.s[e]).sum()
    }

    /// Checks nonnegativity and per-node budgets within `tol`.
    pub fn check(&self, net: &Network, tol: f64) -> Result<()> {
        if self.s.len() != net.n_edges() {
            return Err(Error::Infeasible {
                what: "power allocation",
                detail: format!("{} entries for {} edges", self.s.len(), net.n_edges()),
            });
        }
        for (e, (&p, edge)) in self.s.iter().zip(net.edges()).enumerate() {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::Infeasible {
                    what: "power allocation",
                    detail: format!("edge {e} ({} -> {}) has power {p}", edge.tx, edge.rx),
                });
            }
            if edge.wired && p != 0.0 {
                return Err(Error::Infeasible {
                    what: "power allocation",
                    detail: format!("wired edge ({} -> {}) carries power", edge.tx, edge.rx),
                });
            }
        }
        for v in 0..net.n_nodes() {
            let total = self.node_total(net, v);
            if total > net.budget(v) + tol {
                return Err(Error::Infeasible {
                    what: "power allocation",
                    detail: format!("node {v} uses {total} above its budget {}", net.budget(v)),
                });
            }
        }
        Ok(())
    }
}

/// Delay in channel uses per bit for a given SINR, `1 / log2(1 + x)`.
pub fn delay_of_sinr(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::LN_2 / x.ln_1p()
    }
}

pub fn delay_derivative(x: f64) -> f64 {
    let l = x.ln_1p();
    -std::f64::consts::LN_2 / ((1.0 + x) * l * l)
}

pub fn delay_second_derivative(x: f64) -> f64 {
    let l = x.ln_1p();
    std::f64::consts::LN_2 * (l + 2.0) / ((1.0 + x).powi(2) * l.powi(3))
}

/// SINR and interference-plus-noise of every edge for one allocation.
#[derive(Clone, Debug)]
pub struct LinkState {
    pub sinr: Vec<f64>,
    pub interference: Vec<f64>,
}

impl LinkState {
    pub fn evaluate(net: &Network, power: &PowerAllocation) -> LinkState {
        let n = net.n_nodes();
        let totals: Vec<f64> = (0..n).map(|v| power.node_total(net, v)).collect();
        let mut sinr = vec![0.0; net.n_edges()];
        let mut interference = vec![0.0; net.n_edges()];
        for &e in net.wireless_edges() {
            let edge = &net.edges()[e];
            let (v, u) = (edge.tx, edge.rx);
            let mut denom = net.nodes()[u].noise_power;
            for (j, &pj) in totals.iter().enumerate() {
                if j != v && pj > 0.0 {
                    denom += net.gain(j, u) * pj;
                }
            }
            denom += edge.gain * (totals[v] - power.s[e]).max(0.0);
            interference[e] = denom;
            sinr[e] = edge.gain * power.s[e] / denom;
        }
        LinkState { sinr, interference }
    }

    /// Per-edge delay: fixed for wired links, saturated at
    /// [`DELAY_SENTINEL`] for dead wireless links.
    pub fn delays(&self, net: &Network) -> Vec<f64> {
        net.edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                if edge.wired {
                    edge.wired_delay
                } else {
                    delay_of_sinr(self.sinr[e]).min(DELAY_SENTINEL)
                }
            })
            .collect()
    }
}

fn wireless_edge(net: &Network, edge: (usize, usize)) -> Result<usize> {
    net.edge_index(edge.0, edge.1)
        .filter(|&e| !net.edges()[e].wired)
        .ok_or(Error::UnknownEdge {
            tx: edge.0,
            rx: edge.1,
        })
}

pub fn sinr(net: &Network, power: &PowerAllocation, edge: (usize, usize)) -> Result<f64> {
    let e = wireless_edge(net, edge)?;
    Ok(LinkState::evaluate(net, power).sinr[e])
}

/// Delay of one link; `+inf` for a wireless link with zero SINR.
pub fn link_delay(net: &Network, power: &PowerAllocation, edge: (usize, usize)) -> Result<f64> {
    let e = net.edge_index(edge.0, edge.1).ok_or(Error::UnknownEdge {
        tx: edge.0,
        rx: edge.1,
    })?;
    let link = &net.edges()[e];
    if link.wired {
        return Ok(link.wired_delay);
    }
    Ok(delay_of_sinr(LinkState::evaluate(net, power).sinr[e]))
}

/// `Σ_e w_e f(SINR_e)` over edges with nonzero weight; zero-weight links
/// contribute nothing even when dead.
pub fn weighted_delay(weights: &[f64], delays: &[f64]) -> f64 {
    weights
        .iter()
        .zip(delays)
        .filter(|(w, _)| **w != 0.0)
        .map(|(w, d)| w * d)
        .sum()
}

/// Gradient of `Σ_e w_e f(SINR_e(S))` with respect to every edge power.
///
/// Fails when a link with positive weight has zero SINR.
pub fn weighted_delay_gradient(
    net: &Network,
    weights: &[f64],
    links: &LinkState,
) -> Result<Vec<f64>> {
    let n_edges = net.n_edges();
    let mut grad = vec![0.0; n_edges];
    for &e in net.wireless_edges() {
        let w = weights[e];
        if w == 0.0 {
            continue;
        }
        let edge = &net.edges()[e];
        let x = links.sinr[e];
        if x <= 0.0 {
            return Err(Error::ZeroSinr {
                tx: edge.tx,
                rx: edge.rx,
            });
        }
        let coeff = w * delay_derivative(x);
        let denom = links.interference[e];
        let u = edge.rx;
        // same-transmitter links enter through G_vu (P_v - s_e); the gain
        // table stores G_vu for that pair, so one branch covers both cases
        for &a in net.wireless_edges() {
            let j = net.edges()[a].tx;
            let d_sinr = if a == e {
                edge.gain / denom
            } else if j == u {
                0.0
            } else {
                -x * net.gain(j, u) / denom
            };
            grad[a] += coeff * d_sinr;
        }
    }
    Ok(grad)
}

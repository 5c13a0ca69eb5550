//! Time-slotted cache-replacement baselines with per-slot power
//! optimization (POLRU, POLFU, POFIFO).
//!
//! Every slot each request redraws its item from the Zipf popularity. A
//! request walks up its path until some node holds the item; every node
//! below the hit then stores it, evicting according to the policy. The slot
//! is priced with the placement the requests met on arrival and a power
//! allocation optimized for that placement.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CachePlacement, HopWeight};
use crate::radio::PowerAllocation;
use crate::solvers::optimize_power;
use crate::topology::{sample_pmf, zipf_pmf, Network};
use crate::{Error, Result};

/// Inner tolerance of the per-slot power step.
pub const POWER_TOL: f64 = 1e-6;
const POWER_ITERS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Lru,
    Lfu,
    Fifo,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Lru, Policy::Lfu, Policy::Fifo];
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Lru => "lru",
            Policy::Lfu => "lfu",
            Policy::Fifo => "fifo",
        })
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Policy> {
        match s.to_ascii_lowercase().as_str() {
            "lru" => Ok(Policy::Lru),
            "lfu" => Ok(Policy::Lfu),
            "fifo" => Ok(Policy::Fifo),
            other => Err(Error::InvalidParams(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlottedSimConfig {
    pub n_slots: usize,
    pub warmup_slots: usize,
    pub seed: u64,
    pub policy: Policy,
    /// Popularity exponent; taken from the scenario parameters when absent.
    #[serde(default)]
    pub zipf_gamma: Option<f64>,
}

impl SlottedSimConfig {
    pub fn new(policy: Policy, seed: u64) -> Self {
        SlottedSimConfig {
            n_slots: 200,
            warmup_slots: 50,
            seed,
            policy,
            zipf_gamma: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.n_slots == 0 {
            return Err(Error::InvalidParams("n_slots must be positive".into()));
        }
        if self.warmup_slots >= self.n_slots {
            return Err(Error::InvalidParams(format!(
                "warmup_slots ({}) must be below n_slots ({})",
                self.warmup_slots, self.n_slots
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub delay: f64,
    /// Every request ends in exactly one hit, possibly at its source.
    pub hits: usize,
    /// Node lookups that missed on the way up.
    pub misses: usize,
    /// Cached (non-pinned) items per node at the start of the slot.
    pub occupancy: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub policy: Policy,
    /// Mean slot delay after warm-up.
    pub mean_delay: f64,
    pub slots: Vec<SlotRecord>,
    pub final_placement: CachePlacement,
    pub final_power: PowerAllocation,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    item: usize,
    inserted: u64,
    last_used: u64,
}

/// Replacement state of one node. Pinned items are not stored here: they
/// always hit and never take a slot.
#[derive(Clone, Debug)]
struct NodeCache {
    room: usize,
    entries: Vec<Entry>,
    /// Requests seen per item, kept across evictions.
    seen: HashMap<usize, u64>,
}

impl NodeCache {
    fn position(&self, item: usize) -> Option<usize> {
        self.entries.iter().position(|e| e.item == item)
    }

    fn victim(&self, policy: Policy) -> usize {
        let key = |e: &Entry| match policy {
            Policy::Lru => (e.last_used, e.inserted),
            Policy::Lfu => (self.seen.get(&e.item).copied().unwrap_or(0), e.inserted),
            Policy::Fifo => (e.inserted, 0),
        };
        (0..self.entries.len())
            .min_by_key(|&k| key(&self.entries[k]))
            .expect("victim requested from an empty cache")
    }

    fn insert(&mut self, item: usize, now: u64, policy: Policy) {
        if self.room == 0 {
            return;
        }
        if self.entries.len() == self.room {
            let k = self.victim(policy);
            self.entries.remove(k);
        }
        self.entries.push(Entry {
            item,
            inserted: now,
            last_used: now,
        });
    }
}

/// Simulates one replacement policy and returns the mean post-warm-up
/// exact delay with the per-slot trace.
pub fn run_baseline(net: &Network, config: &SlottedSimConfig) -> Result<BaselineReport> {
    config.check()?;
    let gamma = match config.zipf_gamma {
        Some(g) => g,
        None => net
            .scenario()
            .params
            .as_ref()
            .map(|p| p.zipf_gamma)
            .ok_or_else(|| {
                Error::InvalidParams("scenario has no parameters; set zipf_gamma".into())
            })?,
    };
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParams("zipf_gamma must be >= 0".into()));
    }
    let pmf = zipf_pmf(net.n_items(), gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let n = net.n_nodes();
    let m = net.n_items();
    let mut caches: Vec<NodeCache> = (0..n)
        .map(|v| NodeCache {
            room: net.capacity(v).saturating_sub(net.pinned_count(v)),
            entries: Vec::new(),
            seen: HashMap::new(),
        })
        .collect();
    let mut power = PowerAllocation::equal_split(net);
    let mut clock = 0u64;
    let mut slots = Vec::with_capacity(config.n_slots);

    for slot in 0..config.n_slots {
        let items: Vec<usize> = net
            .requests()
            .iter()
            .map(|_| sample_pmf(&pmf, &mut rng))
            .collect();
        let slot_net = net.with_request_items(&items)?;

        let mut placement = CachePlacement::sources_only(net);
        for (v, c) in caches.iter().enumerate() {
            for e in &c.entries {
                placement.set(v, e.item, true);
            }
        }
        let occupancy = caches.iter().map(|c| c.entries.len()).collect();

        let weights =
            cost::edge_weights(&slot_net, &placement.to_relaxed(), HopWeight::Multilinear);
        power = optimize_power(&slot_net, &weights, &power, POWER_TOL, POWER_ITERS)?.s;
        let delay = cost::exact_cost(&slot_net, &placement, &power)?;

        let (mut hits, mut misses) = (0, 0);
        for (req, &item) in net.requests().iter().zip(&items) {
            debug_assert!(item < m);
            let mut missed = Vec::new();
            for &v in &req.path {
                clock += 1;
                *caches[v].seen.entry(item).or_insert(0) += 1;
                if net.is_pinned(v, item) {
                    hits += 1;
                    break;
                }
                if let Some(k) = caches[v].position(item) {
                    caches[v].entries[k].last_used = clock;
                    hits += 1;
                    break;
                }
                misses += 1;
                missed.push(v);
            }
            // the response travels back down and is stored on the way
            for &v in missed.iter().rev() {
                clock += 1;
                caches[v].insert(item, clock, config.policy);
            }
        }

        slots.push(SlotRecord {
            slot,
            delay,
            hits,
            misses,
            occupancy,
        });
    }

    let measured = &slots[config.warmup_slots..];
    let mean_delay = measured.iter().map(|s| s.delay).sum::<f64>() / measured.len() as f64;
    let mut final_placement = CachePlacement::sources_only(net);
    for (v, c) in caches.iter().enumerate() {
        for e in &c.entries {
            final_placement.set(v, e.item, true);
        }
    }
    Ok(BaselineReport {
        policy: config.policy,
        mean_delay,
        slots,
        final_placement,
        final_power: power,
    })
}

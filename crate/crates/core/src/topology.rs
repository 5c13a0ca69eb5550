//! Network graph, requests and routing, plus the randomized scenario
//! generator (uniform users, Lloyd-placed small cells, Zipf demand).

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Distances below this are clamped before computing path loss.
pub const MIN_DISTANCE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    User,
    SmallCell,
    MacroCell,
    Backbone,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub position: Point,
    pub cache_capacity: usize,
    pub power_budget: f64,
    pub noise_power: f64,
}

/// A directed response link `tx -> rx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tx: usize,
    pub rx: usize,
    pub gain: f64,
    pub wired: bool,
    #[serde(default)]
    pub wired_delay: f64,
}

/// A request for `item` routed along `path`, from the requesting user
/// (`path[0]`) to a designated source (last element).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub item: usize,
    pub path: Vec<usize>,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheCaps {
    pub sc: usize,
    pub mc: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub n_users: usize,
    pub n_sc: usize,
    pub catalog_size: usize,
    pub zipf_gamma: f64,
    pub cache_caps: CacheCaps,
    pub power_budget: f64,
    pub pathloss_exp: f64,
    pub noise: f64,
    pub mc_radius: f64,
    pub d_mc: f64,
    pub d_sc: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            n_users: 30,
            n_sc: 4,
            catalog_size: 10,
            zipf_gamma: 0.25,
            cache_caps: CacheCaps { sc: 2, mc: 4 },
            power_budget: 100.0,
            pathloss_exp: 3.7,
            noise: 1.0,
            mc_radius: 10.0,
            d_mc: 0.05,
            d_sc: 0.1,
        }
    }
}

impl ScenarioParams {
    /// Cache-capacity sweep rule: `c_mc = min(2 c_sc, 8)`.
    pub fn with_sc_capacity(mut self, c_sc: usize) -> Self {
        self.cache_caps = CacheCaps {
            sc: c_sc,
            mc: (2 * c_sc).min(8),
        };
        self
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.n_users == 0 {
            return bad("n_users must be positive");
        }
        if self.n_sc == 0 {
            return bad("n_sc must be positive");
        }
        if self.n_sc > self.n_users {
            return bad("n_sc cannot exceed n_users (Lloyd seeding needs one user per cell)");
        }
        if self.catalog_size == 0 {
            return bad("catalog_size must be positive");
        }
        if !(self.zipf_gamma >= 0.0) {
            return bad("zipf_gamma must be >= 0");
        }
        if !(self.power_budget > 0.0) {
            return bad("power_budget must be positive");
        }
        if !(self.pathloss_exp > 2.0) {
            return bad("pathloss_exp must exceed 2");
        }
        if !(self.noise > 0.0) {
            return bad("noise must be positive");
        }
        if !(self.mc_radius > 0.0) {
            return bad("mc_radius must be positive");
        }
        if !(self.d_mc >= 0.0 && self.d_sc >= 0.0) {
            return bad("backhaul delays must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub catalog_size: usize,
    pub requests: Vec<Request>,
    pub designated_sources: BTreeMap<usize, Vec<usize>>,
    pub pathloss_exponent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ScenarioParams>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn path_gain(&self, a: usize, b: usize) -> f64 {
        let r = self.nodes[a]
            .position
            .distance(&self.nodes[b].position)
            .max(MIN_DISTANCE);
        r.powf(-self.pathloss_exponent)
    }
}

/// Lists every broken invariant of `scenario`; empty means well-formed.
pub fn validate(scenario: &Scenario) -> Vec<String> {
    let mut out = Vec::new();
    let n = scenario.nodes.len();
    let m = scenario.catalog_size;

    if m == 0 {
        out.push("catalog_size must be positive".to_string());
    }
    if !(scenario.pathloss_exponent > 2.0) {
        out.push(format!(
            "pathloss exponent {} must exceed 2",
            scenario.pathloss_exponent
        ));
    }
    for (idx, node) in scenario.nodes.iter().enumerate() {
        if node.id != idx {
            out.push(format!("node at index {idx} has id {}", node.id));
        }
        if !(node.noise_power > 0.0) {
            out.push(format!("node {idx}: noise power must be positive"));
        }
        if !(node.power_budget >= 0.0) || !node.power_budget.is_finite() {
            out.push(format!("node {idx}: power budget must be finite and >= 0"));
        }
    }

    let mut seen = HashMap::new();
    for (e, edge) in scenario.edges.iter().enumerate() {
        if edge.tx >= n || edge.rx >= n {
            out.push(format!(
                "edge {e} ({} -> {}) references a missing node",
                edge.tx, edge.rx
            ));
            continue;
        }
        if edge.tx == edge.rx {
            out.push(format!("edge {e} is a self-loop at node {}", edge.tx));
        }
        if seen.insert((edge.tx, edge.rx), e).is_some() {
            out.push(format!("edge ({} -> {}) is duplicated", edge.tx, edge.rx));
        }
        if edge.wired {
            if !(edge.wired_delay >= 0.0) {
                out.push(format!(
                    "wired edge ({} -> {}) has negative delay",
                    edge.tx, edge.rx
                ));
            }
        } else {
            let expected = scenario.path_gain(edge.tx, edge.rx);
            if !(edge.gain > 0.0) || ((edge.gain - expected) / expected).abs() > 1e-9 {
                out.push(format!(
                    "edge ({} -> {}) gain {} does not match r^-n = {}",
                    edge.tx, edge.rx, edge.gain, expected
                ));
            }
            if !(scenario.nodes[edge.tx].power_budget > 0.0) {
                out.push(format!(
                    "node {} transmits on ({} -> {}) but has no power budget",
                    edge.tx, edge.tx, edge.rx
                ));
            }
        }
    }

    for item in 0..m {
        match scenario.designated_sources.get(&item) {
            Some(srcs) if !srcs.is_empty() => {
                for &v in srcs {
                    if v >= n {
                        out.push(format!("item {item}: designated source {v} does not exist"));
                    }
                }
            }
            _ => out.push(format!("item {item} has an empty designated-source set")),
        }
    }
    for &item in scenario.designated_sources.keys() {
        if item >= m {
            out.push(format!(
                "designated sources given for item {item} outside the catalog"
            ));
        }
    }
    if n > 0 {
        let mut pinned = vec![0usize; n];
        for (item, srcs) in &scenario.designated_sources {
            if *item < m {
                for &v in srcs.iter().filter(|&&v| v < n) {
                    pinned[v] += 1;
                }
            }
        }
        for (v, node) in scenario.nodes.iter().enumerate() {
            if node.cache_capacity < pinned[v] {
                out.push(format!(
                    "node {v}: capacity {} is below its {} pinned items",
                    node.cache_capacity, pinned[v]
                ));
            }
            if node.cache_capacity > m {
                out.push(format!(
                    "node {v}: capacity {} exceeds the catalog size {m}",
                    node.cache_capacity
                ));
            }
        }
    }

    for (r, req) in scenario.requests.iter().enumerate() {
        if req.item >= m {
            out.push(format!(
                "request {r}: item {} outside the catalog",
                req.item
            ));
        }
        if !(req.rate > 0.0) || !req.rate.is_finite() {
            out.push(format!("request {r}: rate must be positive"));
        }
        if req.path.len() < 2 {
            out.push(format!("request {r}: path needs at least two nodes"));
            continue;
        }
        if req.path.iter().any(|&v| v >= n) {
            out.push(format!("request {r}: path references a missing node"));
            continue;
        }
        let mut visited = vec![false; n];
        let mut simple = true;
        for &v in &req.path {
            if std::mem::replace(&mut visited[v], true) {
                simple = false;
            }
        }
        if !simple {
            out.push(format!("request {r}: path not simple"));
        }
        if scenario.nodes[req.path[0]].kind != NodeKind::User {
            out.push(format!("request {r}: path does not start at a user"));
        }
        let last = *req.path.last().unwrap();
        let is_source = scenario
            .designated_sources
            .get(&req.item)
            .is_some_and(|s| s.contains(&last));
        if !is_source {
            out.push(format!(
                "request {r}: path ends at {last}, not a designated source of item {}",
                req.item
            ));
        }
        for w in req.path.windows(2) {
            // responses travel p_{k+1} -> p_k
            if !seen.contains_key(&(w[1], w[0])) {
                out.push(format!(
                    "request {r}: missing response edge ({} -> {})",
                    w[1], w[0]
                ));
            }
        }
    }
    out
}

/// Zipf popularity: `p_i ∝ i^-gamma` for `i = 1..=catalog_size`.
pub fn zipf_pmf(catalog_size: usize, gamma: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=catalog_size)
        .map(|i| (i as f64).powf(-gamma))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Draws an index from a probability vector by inverse CDF.
pub fn sample_pmf<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pmf.len() - 1
}

const LLOYD_MAX_ITERS: usize = 50;
const LLOYD_REL_TOL: f64 = 1e-6;

/// Lloyd's algorithm with k-means++ seeding. Returns `k` centroids.
pub fn lloyd<R: Rng + ?Sized>(points: &[Point], k: usize, rng: &mut R) -> Result<Vec<Point>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParams(format!(
            "cannot place {k} centroids among {} points",
            points.len()
        )));
    }
    let sq = |a: &Point, b: &Point| (a.x - b.x).powi(2) + (a.y - b.y).powi(2);

    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| sq(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "only {} distinct user positions for {k} cells",
                centers.len()
            )));
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = points.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            acc += d;
            if acc > target && *d > 0.0 {
                pick = i;
                break;
            }
        }
        centers.push(points[pick]);
    }

    let mean = points
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.x, a.1 + p.y));
    let mean = Point::new(mean.0 / points.len() as f64, mean.1 / points.len() as f64);
    let spread = (points.iter().map(|p| sq(p, &mean)).sum::<f64>() / points.len() as f64)
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _ in 0..LLOYD_MAX_ITERS {
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for p in points {
            let (best, _) = centers
                .iter()
                .enumerate()
                .map(|(j, c)| (j, sq(p, c)))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            sums[best].0 += p.x;
            sums[best].1 += p.y;
            sums[best].2 += 1;
        }
        let mut moved: f64 = 0.0;
        for (c, (sx, sy, cnt)) in centers.iter_mut().zip(sums) {
            // empty clusters keep their previous centroid
            if cnt > 0 {
                let next = Point::new(sx / cnt as f64, sy / cnt as f64);
                moved = moved.max(next.distance(c));
                *c = next;
            }
        }
        if moved / spread < LLOYD_REL_TOL {
            break;
        }
    }
    Ok(centers)
}

/// Builds the clustered topology from explicit user positions and
/// requested items: small cells at the Lloyd centroids, one macro cell at
/// the origin, and a wired backbone source holding the whole catalog.
pub fn build_scenario<R: Rng + ?Sized>(
    params: &ScenarioParams,
    users: &[Point],
    items: &[usize],
    rng: &mut R,
) -> Result<Scenario> {
    params.check()?;
    if users.len() != params.n_users || items.len() != params.n_users {
        return Err(Error::InvalidParams(
            "need one position and one item per user".to_string(),
        ));
    }
    if users.len() > 1 && users.iter().all(|p| p.distance(&users[0]) == 0.0) {
        return Err(Error::DegenerateGeometry(
            "all users are co-located".to_string(),
        ));
    }
    if let Some(&bad) = items.iter().find(|&&i| i >= params.catalog_size) {
        return Err(Error::InvalidParams(format!(
            "item {bad} outside the catalog"
        )));
    }
    let cells = lloyd(users, params.n_sc, rng)?;

    let n_users = params.n_users;
    let mc = n_users + params.n_sc;
    let backbone = mc + 1;
    let origin = Point::new(0.0, 0.0);

    let mut nodes = Vec::with_capacity(backbone + 1);
    let mk = |id, kind, position, cache_capacity, power_budget| Node {
        id,
        kind,
        position,
        cache_capacity,
        power_budget,
        noise_power: params.noise,
    };
    for (id, p) in users.iter().enumerate() {
        nodes.push(mk(id, NodeKind::User, *p, 0, params.power_budget));
    }
    for (j, p) in cells.iter().enumerate() {
        let cap = params.cache_caps.sc.min(params.catalog_size);
        nodes.push(mk(
            n_users + j,
            NodeKind::SmallCell,
            *p,
            cap,
            params.power_budget,
        ));
    }
    let mc_cap = params.cache_caps.mc.min(params.catalog_size);
    nodes.push(mk(
        mc,
        NodeKind::MacroCell,
        origin,
        mc_cap,
        params.power_budget,
    ));
    nodes.push(mk(
        backbone,
        NodeKind::Backbone,
        origin,
        params.catalog_size,
        0.0,
    ));

    let mut scenario = Scenario {
        nodes,
        edges: Vec::new(),
        catalog_size: params.catalog_size,
        requests: Vec::new(),
        designated_sources: (0..params.catalog_size)
            .map(|i| (i, vec![backbone]))
            .collect(),
        pathloss_exponent: params.pathloss_exp,
        params: Some(params.clone()),
    };

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let add_edge = |edges: &mut Vec<(usize, usize)>, tx, rx| {
        if !edges.contains(&(tx, rx)) {
            edges.push((tx, rx));
        }
    };
    add_edge(&mut edges, backbone, mc);
    for (u, p) in users.iter().enumerate() {
        let nearest_sc = (0..params.n_sc)
            .map(|j| (n_users + j, p.distance(&cells[j])))
            .fold(
                (usize::MAX, f64::INFINITY),
                |a, b| if b.1 < a.1 { b } else { a },
            );
        let path = if nearest_sc.1 < p.distance(&origin) {
            add_edge(&mut edges, mc, nearest_sc.0);
            add_edge(&mut edges, nearest_sc.0, u);
            vec![u, nearest_sc.0, mc, backbone]
        } else {
            add_edge(&mut edges, mc, u);
            vec![u, mc, backbone]
        };
        scenario.requests.push(Request {
            item: items[u],
            path,
            rate: 1.0,
        });
    }
    edges.sort_unstable();
    scenario.edges = edges
        .into_iter()
        .map(|(tx, rx)| {
            let wired = tx == backbone;
            Edge {
                tx,
                rx,
                gain: if wired {
                    1.0
                } else {
                    scenario.path_gain(tx, rx)
                },
                wired,
                wired_delay: if wired { params.d_mc } else { 0.0 },
            }
        })
        .collect();
    Ok(scenario)
}

/// Deterministic random scenario: users uniform in the macro-cell disk,
/// one Zipf-distributed request per user.
pub fn generate_scenario(seed: u64, params: &ScenarioParams) -> Result<Scenario> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users: Vec<Point> = (0..params.n_users)
        .map(|_| {
            let r = params.mc_radius * rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            Point::new(r * theta.cos(), r * theta.sin())
        })
        .collect();
    let pmf = zipf_pmf(params.catalog_size, params.zipf_gamma);
    let items: Vec<usize> = (0..params.n_users)
        .map(|_| sample_pmf(&pmf, &mut rng))
        .collect();
    build_scenario(params, &users, &items, &mut rng)
}

/// Shape of a small random instance for brute-force verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicroParams {
    pub n_users: usize,
    pub n_relays: usize,
    pub catalog_size: usize,
    /// Users may receive a one-item cache.
    pub user_caches: bool,
}

impl Default for MicroParams {
    fn default() -> Self {
        MicroParams {
            n_users: 2,
            n_relays: 2,
            catalog_size: 3,
            user_caches: true,
        }
    }
}

/// Small random instance: a macro cell at the origin holding the whole
/// catalog, relays on a ring around it, users near the relays routed via
/// their nearest relay (or directly when the macro cell is nearer).
/// Budgets, rates, capacities and requested items are randomized.
pub fn generate_micro_scenario(seed: u64, params: &MicroParams) -> Result<Scenario> {
    if params.n_users == 0 || params.catalog_size == 0 {
        return Err(Error::InvalidParams(
            "micro scenarios need at least one user and one item".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = params.catalog_size;
    let (nu, nr) = (params.n_users, params.n_relays);
    let mc = nu + nr;
    let mut nodes = Vec::with_capacity(mc + 1);
    let mut relay_pos = Vec::with_capacity(nr);
    for k in 0..nr {
        let r = rng.gen_range(1.5..3.0);
        let theta = std::f64::consts::TAU * (k as f64 + rng.gen::<f64>()) / nr as f64;
        relay_pos.push(Point::new(r * theta.cos(), r * theta.sin()));
    }
    for u in 0..nu {
        let anchor = if nr > 0 {
            relay_pos[rng.gen_range(0..nr)]
        } else {
            Point::new(0.0, 0.0)
        };
        let r = rng.gen_range(1.0..2.0);
        let theta = std::f64::consts::TAU * rng.gen::<f64>();
        let cap = usize::from(params.user_caches && m > 1 && rng.gen_bool(0.5));
        nodes.push(Node {
            id: u,
            kind: NodeKind::User,
            position: Point::new(anchor.x + r * theta.cos(), anchor.y + r * theta.sin()),
            cache_capacity: cap,
            power_budget: 1.0,
            noise_power: 1.0,
        });
    }
    for (k, &position) in relay_pos.iter().enumerate() {
        nodes.push(Node {
            id: nu + k,
            kind: NodeKind::SmallCell,
            position,
            cache_capacity: rng.gen_range(1..=m.min(2)),
            power_budget: rng.gen_range(1.0..5.0),
            noise_power: 1.0,
        });
    }
    nodes.push(Node {
        id: mc,
        kind: NodeKind::MacroCell,
        position: Point::new(0.0, 0.0),
        cache_capacity: m,
        power_budget: rng.gen_range(2.0..8.0),
        noise_power: 1.0,
    });
    let mut requests = Vec::new();
    for u in 0..nu {
        let here = nodes[u].position;
        let nearest = (nu..mc).min_by(|&a, &b| {
            here.distance(&nodes[a].position)
                .total_cmp(&here.distance(&nodes[b].position))
        });
        let path = match nearest {
            Some(r) if here.distance(&nodes[r].position) < here.distance(&nodes[mc].position) => {
                vec![u, r, mc]
            }
            _ => vec![u, mc],
        };
        let n_req = rng.gen_range(1..=m.min(2));
        let mut items: Vec<usize> = (0..m).collect();
        for k in 0..n_req {
            let j = rng.gen_range(k..m);
            items.swap(k, j);
        }
        for &item in &items[..n_req] {
            requests.push(Request {
                item,
                path: path.clone(),
                rate: rng.gen_range(0.5..2.0),
            });
        }
    }
    let mut scenario = Scenario {
        nodes,
        edges: Vec::new(),
        catalog_size: m,
        requests,
        designated_sources: (0..m).map(|i| (i, vec![mc])).collect(),
        pathloss_exponent: 3.0,
        params: None,
    };
    let mut pairs: Vec<(usize, usize)> = scenario
        .requests
        .iter()
        .flat_map(|r| r.path.windows(2).map(|w| (w[1], w[0])).collect::<Vec<_>>())
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    scenario.edges = pairs
        .into_iter()
        .map(|(tx, rx)| Edge {
            tx,
            rx,
            gain: scenario.path_gain(tx, rx),
            wired: false,
            wired_delay: 0.0,
        })
        .collect();
    Ok(scenario)
}

/// Hop `k` of a request: the response edge `p_{k+1} -> p_k`, with the
/// prefix `p_1..=p_k` of nodes whose caches can serve the request first.
#[derive(Clone, Debug)]
pub struct Hop {
    pub edge: usize,
    pub prefix_len: usize,
}

/// A validated scenario with derived lookup tables.
#[derive(Clone, Debug)]
pub struct Network {
    scenario: Scenario,
    gain: Vec<f64>,
    edge_index: HashMap<(usize, usize), usize>,
    out_edges: Vec<Vec<usize>>,
    wireless: Vec<usize>,
    hops: Vec<Vec<Hop>>,
    pinned: Vec<bool>,
}

impl Network {
    pub fn new(scenario: Scenario) -> Result<Network> {
        let violations = validate(&scenario);
        if !violations.is_empty() {
            return Err(Error::InvalidScenario(violations.join("; ")));
        }
        let n = scenario.nodes.len();
        let m = scenario.catalog_size;
        let mut gain = vec![0.0; n * n];
        for j in 0..n {
            for u in 0..n {
                if j != u {
                    gain[j * n + u] = scenario.path_gain(j, u);
                }
            }
        }
        let mut edge_index = HashMap::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut wireless = Vec::new();
        for (e, edge) in scenario.edges.iter().enumerate() {
            edge_index.insert((edge.tx, edge.rx), e);
            if !edge.wired {
                out_edges[edge.tx].push(e);
                wireless.push(e);
                gain[edge.tx * n + edge.rx] = edge.gain;
            }
        }
        let hops = scenario
            .requests
            .iter()
            .map(|req| {
                req.path
                    .windows(2)
                    .enumerate()
                    .map(|(k, w)| Hop {
                        edge: edge_index[&(w[1], w[0])],
                        prefix_len: k + 1,
                    })
                    .collect()
            })
            .collect();
        let mut pinned = vec![false; n * m];
        for (&item, srcs) in &scenario.designated_sources {
            for &v in srcs {
                pinned[v * m + item] = true;
            }
        }
        Ok(Network {
            scenario,
            gain,
            edge_index,
            out_edges,
            wireless,
            hops,
            pinned,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn n_nodes(&self) -> usize {
        self.scenario.nodes.len()
    }

    pub fn n_items(&self) -> usize {
        self.scenario.catalog_size
    }

    pub fn n_edges(&self) -> usize {
        self.scenario.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.scenario.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.scenario.edges
    }

    pub fn requests(&self) -> &[Request] {
        &self.scenario.requests
    }

    /// Channel gain from transmitter `j` to receiver `u` (zero when `j == u`).
    pub fn gain(&self, j: usize, u: usize) -> f64 {
        self.gain[j * self.n_nodes() + u]
    }

    pub fn edge_index(&self, tx: usize, rx: usize) -> Option<usize> {
        self.edge_index.get(&(tx, rx)).copied()
    }

    /// Wireless edges leaving `v` (the set `O_v`).
    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn wireless_edges(&self) -> &[usize] {
        &self.wireless
    }

    pub fn hops(&self, request: usize) -> &[Hop] {
        &self.hops[request]
    }

    pub fn is_pinned(&self, v: usize, item: usize) -> bool {
        self.pinned[v * self.n_items() + item]
    }

    pub fn pinned_count(&self, v: usize) -> usize {
        let m = self.n_items();
        self.pinned[v * m..(v + 1) * m]
            .iter()
            .filter(|&&p| p)
            .count()
    }

    pub fn budget(&self, v: usize) -> f64 {
        self.scenario.nodes[v].power_budget
    }

    pub fn capacity(&self, v: usize) -> usize {
        self.scenario.nodes[v].cache_capacity
    }

    /// Same topology with every request replaced by `items[r]` on its path.
    pub fn with_request_items(&self, items: &[usize]) -> Result<Network> {
        let mut scenario = self.scenario.clone();
        for (req, &item) in scenario.requests.iter_mut().zip(items) {
            req.item = item;
        }
        Network::new(scenario)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn node(id: usize, kind: NodeKind, x: f64, cap: usize, budget: f64) -> Node {
        Node {
            id,
            kind,
            position: Point::new(x, 0.0),
            cache_capacity: cap,
            power_budget: budget,
            noise_power: 1.0,
        }
    }

    pub fn wireless(s: &Scenario, tx: usize, rx: usize) -> Edge {
        Edge {
            tx,
            rx,
            gain: s.path_gain(tx, rx),
            wired: false,
            wired_delay: 0.0,
        }
    }

    /// user(0) <- relay(1) <- source(2) on a line, catalog `m`, one request
    /// per listed item.
    pub fn chain(m: usize, relay_cap: usize, items: &[usize]) -> Scenario {
        let mut s = Scenario {
            nodes: vec![
                node(0, NodeKind::User, 0.0, 0, 1.0),
                node(1, NodeKind::SmallCell, 1.5, relay_cap, 2.0),
                node(2, NodeKind::MacroCell, 3.0, m, 2.0),
            ],
            edges: vec![],
            catalog_size: m,
            requests: items
                .iter()
                .map(|&i| Request {
                    item: i,
                    path: vec![0, 1, 2],
                    rate: 1.0,
                })
                .collect(),
            designated_sources: (0..m).map(|i| (i, vec![2])).collect(),
            pathloss_exponent: 3.0,
            params: None,
        };
        s.edges = vec![wireless(&s, 1, 0), wireless(&s, 2, 1)];
        s
    }
}

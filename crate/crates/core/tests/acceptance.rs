//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when
//! any criterion fails.

mod common;

use std::f64::consts::E;
use std::time::{Duration, Instant};

use hetcache::cost::{self, HopWeight, RelaxedCache};
use hetcache::feasible::{project_capped_simplex, project_capped_sum};
use hetcache::oracle::{brute_force_opt, grid_size, placement_count};
use hetcache::radio::{self, PowerAllocation};
use hetcache::solvers::{
    check_kkt, initial_point, optimize_cache, round_cache, solve_sub, AltSolverConfig,
    SubSolverConfig,
};
use hetcache::sweep::{sweep_cache_capacity, sweep_power_budget, Method, SweepConfig};
use hetcache::topology::{generate_micro_scenario, MicroParams, ScenarioParams};
use hetcache::{Execution, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::Rule;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xacce_0000 + tag)
}

fn close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()).max(1e-12)
}

fn relaxed(y: &[f64], net: &Network) -> RelaxedCache {
    RelaxedCache {
        n_nodes: net.n_nodes(),
        n_items: net.n_items(),
        y: y.to_vec(),
    }
}

/// D >= D° >= (D - D^ub / e) / (1 - 1/e) on random feasible points.
fn sandwich() -> Outcome {
    let mut rng = rng(1);
    let (mut upper, mut lower, mut checked) = (0, 0, 0);
    let mut worst_upper: f64 = 0.0;
    for _ in 0..20 {
        let net = common::micro(&mut rng, 8, 4);
        let sc = net.scenario();
        for _ in 0..50 {
            let y = common::random_cache(sc, &mut rng);
            let s = common::random_power(sc, &mut rng);
            let (yr, sp) = (relaxed(&y, &net), PowerAllocation { s: s.clone() });
            let d = cost::relaxed_cost(&net, &yr, &sp).map_err(|e| e.to_string())?;
            let dml = cost::multilinear_cost(&net, &yr, &sp).map_err(|e| e.to_string())?;
            let dub = cost::upper_bound_cost(&net, &sp).map_err(|e| e.to_string())?;
            for (lib, rule) in [(d, Rule::Capped), (dml, Rule::Product), (dub, Rule::Source)] {
                let reference = common::cost(sc, &y, &s, rule);
                if !close(lib, reference, 1e-9) {
                    return Err(format!(
                        "library cost {lib} disagrees with reference {reference}"
                    ));
                }
            }
            checked += 1;
            if d < dml - 1e-9 {
                upper += 1;
                worst_upper = worst_upper.max(dml - d);
            }
            if dml < (d - dub / E) / (1.0 - 1.0 / E) - 1e-9 {
                lower += 1;
            }
        }
    }
    let detail = format!(
        "{checked} points: D >= D° violated {upper} times (worst gap {worst_upper:.3e}), lower bound violated {lower} times"
    );
    if upper == 0 && lower == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// All placements at a fixed power, enumerated on the test side.
fn reference_best(net: &Network, s: &[f64]) -> f64 {
    let sc = net.scenario();
    let m = sc.catalog_size;
    let n = sc.nodes.len();
    let mut best = f64::INFINITY;
    let mut y = vec![0.0; n * m];
    fn rec(v: usize, net: &Network, s: &[f64], y: &mut Vec<f64>, best: &mut f64) {
        let sc = net.scenario();
        let m = sc.catalog_size;
        if v == sc.nodes.len() {
            *best = best.min(common::cost(sc, y, s, Rule::Product));
            return;
        }
        let pins: Vec<usize> = (0..m).filter(|&i| common::pinned(sc, v, i)).collect();
        let free: Vec<usize> = (0..m).filter(|&i| !common::pinned(sc, v, i)).collect();
        let room = sc.nodes[v].cache_capacity - pins.len();
        for &i in &pins {
            y[v * m + i] = 1.0;
        }
        for mask in 0u32..(1 << free.len()) {
            if mask.count_ones() as usize > room {
                continue;
            }
            for (b, &i) in free.iter().enumerate() {
                y[v * m + i] = f64::from((mask >> b) & 1);
            }
            rec(v + 1, net, s, y, best);
        }
        for &i in &free {
            y[v * m + i] = 0.0;
        }
    }
    rec(0, net, s, &mut y, &mut best);
    best
}

fn solvable_micro(rng: &mut ChaCha8Rng, resolution: usize, limit: f64) -> Network {
    loop {
        let params = MicroParams {
            n_users: rng.gen_range(1..=2),
            n_relays: rng.gen_range(1..=3),
            catalog_size: rng.gen_range(1..=3),
            user_caches: rng.gen(),
        };
        let net = Network::new(generate_micro_scenario(rng.gen(), &params).unwrap()).unwrap();
        let evaluations = placement_count(&net) * grid_size(&net, resolution);
        if net.n_nodes() >= 3 && evaluations <= limit {
            return net;
        }
    }
}

/// Rounded pipeline output against the approximation bound at the oracle power.
fn corollary() -> Outcome {
    let mut rng = rng(2);
    let resolution = 5;
    let (mut worst, mut optimal, mut k) = (f64::NEG_INFINITY, 0, 0);
    while k < 20 {
        let net = solvable_micro(&mut rng, resolution, 1e7);
        let sc = net.scenario();
        let oracle =
            brute_force_opt(&net, resolution, Execution::Parallel).map_err(|e| e.to_string())?;
        let s = &oracle.power;
        let dub = common::cost(
            sc,
            &vec![0.0; net.n_nodes() * net.n_items()],
            &s.s,
            Rule::Source,
        );
        if dub - oracle.cost <= 1e-9 * dub {
            // caching cannot help, so the bound holds trivially
            continue;
        }
        k += 1;
        let reference = reference_best(&net, &s.s);
        if !close(reference, oracle.cost, 1e-9) {
            return Err(format!(
                "instance {k}: oracle {} vs enumeration {reference}",
                oracle.cost
            ));
        }
        let delays = cost::link_delays(&net, s);
        let (start, _) = initial_point(&net).map_err(|e| e.to_string())?;
        let cfg = AltSolverConfig {
            cache_iters: 5000,
            ..AltSolverConfig::default()
        };
        let (y, _) = optimize_cache(&net, &start, &delays, &cfg).map_err(|e| e.to_string())?;
        let rounded = round_cache(&net, &y, s).map_err(|e| e.to_string())?;
        let achieved = common::cost(sc, &rounded.placement.to_relaxed().y, &s.s, Rule::Product);
        let bound = dub / E + (1.0 - 1.0 / E) * reference;
        // margin as a fraction of the bound's slack over the optimum
        worst = worst.max((achieved - bound) / (bound - reference));
        if achieved <= reference + 1e-9 * reference {
            optimal += 1;
        }
        if achieved > bound + 1e-9 {
            return Err(format!(
                "instance {k}: D°(X') = {achieved} exceeds bound {bound}"
            ));
        }
    }
    Ok(format!(
        "20 nontrivial instances, {optimal} rounded to the optimum, worst relative margin {worst:.3}"
    ))
}

/// Analytic subgradients against central differences of the reference cost.
fn gradients() -> Outcome {
    let mut rng = rng(3);
    let mut points = 0;
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    while points < 200 {
        let net = common::micro(&mut rng, 8, 4);
        let sc = net.scenario();
        let m = sc.catalog_size;
        let y = common::random_cache(sc, &mut rng);
        let s = common::random_power(sc, &mut rng);
        let near_kink = sc.requests.iter().any(|r| {
            let mut sum = 0.0;
            r.path[..r.path.len() - 1].iter().any(|&v| {
                sum += y[v * m + r.item];
                (sum - 1.0).abs() < 1e-4
            })
        });
        if near_kink {
            continue;
        }
        points += 1;
        let g = cost::subgradient(&net, &relaxed(&y, &net), &PowerAllocation { s: s.clone() })
            .map_err(|e| e.to_string())?;
        let f = |y: &[f64], s: &[f64]| common::cost(sc, y, s, Rule::Capped);
        let mut check = |analytic: f64, fd: f64, scale: f64, what: String| -> Result<(), String> {
            let err = (analytic - fd).abs() / fd.abs().max(scale);
            worst = worst.max(err);
            if err > 1e-5 {
                Err(format!(
                    "{what}: analytic {analytic} vs finite difference {fd}"
                ))
            } else {
                Ok(())
            }
        };
        let y_scale = 1e-3 * g.d_y.y.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-9);
        for k in 0..y.len() {
            if common::pinned(sc, k / m, k % m) {
                continue;
            }
            let (mut up, mut down) = (y.clone(), y.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (f(&up, &s) - f(&down, &s)) / (2.0 * h);
            check(g.d_y.y[k], fd, y_scale, format!("d_y[{k}]"))?;
        }
        let s_scale = 1e-3 * g.d_s.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-9);
        for e in 0..s.len() {
            if sc.edges[e].wired {
                continue;
            }
            let step = 1e-5 * s[e];
            let (mut up, mut down) = (s.clone(), s.clone());
            up[e] += step;
            down[e] -= step;
            let fd = (f(&y, &up) - f(&y, &down)) / (2.0 * step);
            check(g.d_s[e], fd, s_scale, format!("d_s[{e}]"))?;
        }
    }
    Ok(format!("200 points, worst relative error {worst:.2e}"))
}

fn random_simplex_point(rng: &mut ChaCha8Rng, m: usize, c: usize) -> Vec<f64> {
    let mut w = vec![c as f64 / m as f64; m];
    for _ in 0..3 * m {
        let (a, b) = (rng.gen_range(0..m), rng.gen_range(0..m));
        if a != b {
            let t = rng.gen::<f64>() * (1.0 - w[a]).min(w[b]);
            w[a] += t;
            w[b] -= t;
        }
    }
    w
}

fn dot_gap(z: &[f64], p: &[f64], w: &[f64]) -> f64 {
    z.iter()
        .zip(p)
        .zip(w)
        .map(|((z, p), w)| (z - p) * (w - p))
        .sum()
}

/// Idempotence, feasibility and the variational inequality.
fn projections() -> Outcome {
    let mut rng = rng(4);
    let tol = 1e-9;
    for k in 0..500 {
        let m = rng.gen_range(1..=8);
        let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let scale = 1.0 + z.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if k % 2 == 0 {
            let c = rng.gen_range(0..=m);
            let p = project_capped_simplex(&z, c as f64);
            let sum: f64 = p.iter().sum();
            if (sum - c as f64).abs() > tol * scale
                || p.iter().any(|&v| !(-tol..=1.0 + tol).contains(&v))
            {
                return Err(format!("simplex input {k}: infeasible output {p:?}"));
            }
            let again = project_capped_simplex(&p, c as f64);
            if p.iter().zip(&again).any(|(a, b)| (a - b).abs() > tol) {
                return Err(format!("simplex input {k}: not idempotent"));
            }
            for _ in 0..100 {
                let w = random_simplex_point(&mut rng, m, c);
                if dot_gap(&z, &p, &w) > tol * scale {
                    return Err(format!("simplex input {k}: variational inequality fails"));
                }
            }
        } else {
            let budget = rng.gen_range(0.1..5.0);
            let p = project_capped_sum(&z, budget);
            if p.iter().any(|&v| v < -tol) || p.iter().sum::<f64>() > budget + tol * scale {
                return Err(format!("budget input {k}: infeasible output {p:?}"));
            }
            let again = project_capped_sum(&p, budget);
            if p.iter().zip(&again).any(|(a, b)| (a - b).abs() > tol) {
                return Err(format!("budget input {k}: not idempotent"));
            }
            for _ in 0..100 {
                let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
                let total = raw.iter().sum::<f64>().max(1e-12);
                let fill = rng.gen::<f64>() * budget;
                let w: Vec<f64> = raw.iter().map(|r| r / total * fill).collect();
                if dot_gap(&z, &p, &w) > tol * scale {
                    return Err(format!("budget input {k}: variational inequality fails"));
                }
            }
        }
    }
    Ok("500 inputs (250 capped simplex, 250 budget)".into())
}

/// Every rounding step removes a fractional entry without raising cost.
fn rounding() -> Outcome {
    let mut rng = rng(5);
    let mut steps_total = 0;
    for k in 0..500 {
        let net = common::micro(&mut rng, 8, 4);
        let sc = net.scenario();
        let y = common::random_cache(sc, &mut rng);
        let s = common::random_power(sc, &mut rng);
        let r = round_cache(&net, &relaxed(&y, &net), &PowerAllocation { s: s.clone() })
            .map_err(|e| e.to_string())?;
        if r.steps.len() > net.n_nodes() * net.n_items() {
            return Err(format!("instance {k}: {} steps", r.steps.len()));
        }
        for st in &r.steps {
            if st.fractional_after + 1 > st.fractional_before {
                return Err(format!(
                    "instance {k}: step kept {} fractional entries",
                    st.fractional_after
                ));
            }
            if st.cost_after > st.cost_before + 1e-9 * st.cost_before.abs().max(1.0) {
                return Err(format!(
                    "instance {k}: cost rose {} -> {}",
                    st.cost_before, st.cost_after
                ));
            }
        }
        r.placement.check(&net).map_err(|e| e.to_string())?;
        let before = common::cost(sc, &y, &s, Rule::Product);
        let after = common::cost(sc, &r.placement.to_relaxed().y, &s, Rule::Product);
        if after > before + 1e-9 * before.max(1.0) {
            return Err(format!(
                "instance {k}: final cost {after} above start {before}"
            ));
        }
        steps_total += r.steps.len();
    }
    Ok(format!("500 instances, {steps_total} steps"))
}

fn micro_net(seed: u64) -> Network {
    Network::new(generate_micro_scenario(seed, &MicroParams::default()).unwrap()).unwrap()
}

fn tight_sub() -> SubSolverConfig {
    SubSolverConfig {
        epsilon: 1e-8,
        max_iters: 20_000,
        ..SubSolverConfig::default()
    }
}

fn kkt() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let net = micro_net(seed);
        let init = initial_point(&net).map_err(|e| e.to_string())?;
        let r = solve_sub(&net, &tight_sub(), init).map_err(|e| e.to_string())?;
        let res = check_kkt(&net, &r.final_y, &r.final_s, 1e-3);
        worst = worst.max(res.max());
        if res.max() > 1e-3 {
            return Err(format!(
                "micro seed {seed}: residual {:.3e} ({res:?})",
                res.max()
            ));
        }
    }
    Ok(format!("10 instances, worst residual {worst:.3e}"))
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn fig2() -> Outcome {
    let base = ScenarioParams::default();
    let r = sweep_cache_capacity(
        &base,
        &[1, 2, 3, 4],
        &Method::ALL,
        &SEEDS,
        &SweepConfig::default(),
        Execution::Parallel,
    )
    .map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for c in [1.0, 2.0, 3.0, 4.0] {
        let mean = |m| r.mean_delay(c, m).unwrap();
        let baseline_best = [Method::PoLru, Method::PoLfu, Method::PoFifo]
            .map(mean)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        for m in [Method::Sub, Method::Alt] {
            if mean(m) > baseline_best {
                return Err(format!(
                    "c_sc={c}: {m} {:.4} above best baseline {baseline_best:.4}",
                    mean(m)
                ));
            }
        }
        let gain = 1.0 - mean(Method::Sub).max(mean(Method::Alt)) / baseline_best;
        detail.push(format!("c_sc={c}: {:.0}%", 100.0 * gain));
        if c == 4.0 && gain < 0.10 {
            return Err(format!("improvement at c_sc=4 only {:.1}%", 100.0 * gain));
        }
    }
    Ok(format!(
        "improvement over best baseline {}",
        detail.join(", ")
    ))
}

fn fig3() -> Outcome {
    let base = ScenarioParams::default().with_sc_capacity(2);
    let budgets = [25.0, 50.0, 100.0, 200.0];
    let r = sweep_power_budget(
        &base,
        &budgets,
        &Method::ALL,
        &SEEDS,
        &SweepConfig::default(),
        Execution::Parallel,
    )
    .map_err(|e| e.to_string())?;
    for m in Method::ALL {
        for w in budgets.windows(2) {
            let (a, b) = (
                r.mean_delay(w[0], m).unwrap(),
                r.mean_delay(w[1], m).unwrap(),
            );
            if b > a {
                return Err(format!(
                    "{m}: delay rises from {a:.4} to {b:.4} between budgets {} and {}",
                    w[0], w[1]
                ));
            }
        }
    }
    let mut wins = 0;
    for seed in SEEDS {
        if budgets.iter().all(|&b| {
            r.delay(b, Method::Sub, seed).unwrap() <= r.delay(b, Method::PoLfu, seed).unwrap()
        }) {
            wins += 1;
        }
    }
    if wins >= 4 {
        Ok(format!(
            "monotone for every method; SUB <= POLFU at every budget on {wins}/5 seeds"
        ))
    } else {
        Err(format!(
            "SUB <= POLFU at every budget on only {wins}/5 seeds"
        ))
    }
}

fn convergence() -> Outcome {
    let mut slopes = Vec::new();
    for seed in 0..10 {
        let net = micro_net(seed);
        let init = initial_point(&net).map_err(|e| e.to_string())?;
        let r = solve_sub(&net, &tight_sub(), init).map_err(|e| e.to_string())?;
        if r.trace.windows(2).any(|w| w[1].best > w[0].best) {
            return Err(format!("micro seed {seed}: best-so-far increased"));
        }
        let oracle = match brute_force_opt(&net, 3, Execution::Parallel) {
            Ok(o) => o.cost,
            Err(_) => continue,
        };
        let floor = r.trace.iter().map(|t| t.objective).fold(oracle, f64::min) - 1e-12;
        let burn = r.trace.len() / 5;
        let logs: Vec<f64> = r.trace[burn..]
            .iter()
            .map(|t| (t.objective - floor).ln())
            .collect();
        let slope = common::slope(&logs);
        slopes.push(slope);
        if slope > 0.0 {
            return Err(format!("micro seed {seed}: log-gap slope {slope:.3e} > 0"));
        }
    }
    if slopes.is_empty() {
        return Err("no instance had an oracle minimizer".into());
    }
    Ok(format!(
        "best-so-far monotone on 10 runs; {} oracle-backed slopes all <= 0",
        slopes.len()
    ))
}

/// Finite-difference signs of the library delay and cost.
fn signs() -> Outcome {
    let mut rng = rng(10);
    let (mut own, mut cross, mut cache) = (0, 0, 0);
    for k in 0..500 {
        let net = common::micro(&mut rng, 8, 4);
        let sc = net.scenario();
        let y = relaxed(&common::random_cache(sc, &mut rng), &net);
        let s = PowerAllocation {
            s: common::random_power(sc, &mut rng),
        };
        let wl = net.wireless_edges();
        let e = wl[rng.gen_range(0..wl.len())];
        let link = (net.edges()[e].tx, net.edges()[e].rx);
        let base = radio::link_delay(&net, &s, link).map_err(|e| e.to_string())?;
        let h = 1e-4 * s.s[e];

        let mut up = s.clone();
        up.s[e] += h;
        if radio::link_delay(&net, &up, link).map_err(|e| e.to_string())? > base {
            return Err(format!("point {k}: own power raised the delay of {link:?}"));
        }
        own += 1;
        if let Some(&other) = wl
            .iter()
            .filter(|&&o| o != e)
            .nth(rng.gen_range(0..wl.len()).saturating_sub(1))
        {
            let mut up = s.clone();
            up.s[other] += 1e-4 * s.s[other];
            if radio::link_delay(&net, &up, link).map_err(|e| e.to_string())? < base {
                return Err(format!(
                    "point {k}: interferer power lowered the delay of {link:?}"
                ));
            }
            cross += 1;
        }

        let d0 = cost::relaxed_cost(&net, &y, &s).map_err(|e| e.to_string())?;
        let v = rng.gen_range(0..net.n_nodes());
        let i = rng.gen_range(0..net.n_items());
        let mut more = y.clone();
        more.set(v, i, y.get(v, i) + 1e-4);
        let d1 = cost::cost_with_delays(
            &net,
            &more,
            &cost::link_delays(&net, &s),
            HopWeight::Relaxed,
        );
        if d1 > d0 + 1e-12 * d0 {
            return Err(format!(
                "point {k}: caching more of item {i} at node {v} raised the cost"
            ));
        }
        cache += 1;
    }
    Ok(format!(
        "500 points: {own} own-power, {cross} interferer, {cache} cache checks"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 sandwich inequality", sandwich, Duration::from_secs(60)),
        (
            "2 rounding bound on micro-instances",
            corollary,
            Duration::from_secs(300),
        ),
        ("3 gradient correctness", gradients, Duration::from_secs(60)),
        (
            "4 projection correctness",
            projections,
            Duration::from_secs(60),
        ),
        ("5 rounding monotonicity", rounding, Duration::from_secs(60)),
        ("6 KKT residuals", kkt, Duration::from_secs(300)),
        ("7 cache-capacity trend", fig2, Duration::from_secs(1800)),
        ("8 power-budget trend", fig3, Duration::from_secs(1800)),
        (
            "9 convergence properties",
            convergence,
            Duration::from_secs(300),
        ),
        ("10 monotonicity signs", signs, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = run();
        let took = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > budget => {
                Err(format!("{detail}; took {took:.1?}, budget {budget:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS #{name}: {detail} ({took:.1?})"),
            Err(detail) => {
                failed += 1;
                println!("FAIL #{name}: {detail} ({took:.1?})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

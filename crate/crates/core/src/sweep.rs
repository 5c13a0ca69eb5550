//! Parameter sweeps over cache capacity and power budget, and convergence
//! traces of the two relaxed solvers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, Policy, SlottedSimConfig};
use crate::par::Execution;
use crate::solvers::{initial_point, solve_alt, solve_sub, AltSolverConfig, SubSolverConfig};
use crate::topology::{generate_scenario, ScenarioParams};
use crate::{Error, Network, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sub,
    Alt,
    PoLru,
    PoLfu,
    PoFifo,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Sub,
        Method::Alt,
        Method::PoLru,
        Method::PoLfu,
        Method::PoFifo,
    ];

    pub fn policy(self) -> Option<Policy> {
        match self {
            Method::PoLru => Some(Policy::Lru),
            Method::PoLfu => Some(Policy::Lfu),
            Method::PoFifo => Some(Policy::Fifo),
            Method::Sub | Method::Alt => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sub => "sub",
            Method::Alt => "alt",
            Method::PoLru => "polru",
            Method::PoLfu => "polfu",
            Method::PoFifo => "pofifo",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "sub" => Ok(Method::Sub),
            "alt" => Ok(Method::Alt),
            "polru" => Ok(Method::PoLru),
            "polfu" => Ok(Method::PoLfu),
            "pofifo" => Ok(Method::PoFifo),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

/// Solver and simulator settings shared by every sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub sub: SubSolverConfig,
    pub alt: AltSolverConfig,
    pub slots: usize,
    pub warmup: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sub: SubSolverConfig::default(),
            alt: AltSolverConfig::default(),
            slots: 200,
            warmup: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub method: Method,
    pub seed: u64,
    pub delay: f64,
    /// Wall-clock seconds; the only column that varies between reruns.
    pub wall_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Name of the swept parameter, used as the first CSV header.
    pub parameter: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Writes `param,method,seed,delay,wall_secs` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            self.parameter.as_str(),
            "method",
            "seed",
            "delay",
            "wall_secs",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.param.to_string(),
                r.method.to_string(),
                r.seed.to_string(),
                r.delay.to_string(),
                r.wall_secs.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean delay of `method` at `param` over seeds.
    pub fn mean_delay(&self, param: f64, method: Method) -> Option<f64> {
        let cells: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.param == param && r.method == method)
            .map(|r| r.delay)
            .collect();
        (!cells.is_empty()).then(|| cells.iter().sum::<f64>() / cells.len() as f64)
    }

    pub fn delay(&self, param: f64, method: Method, seed: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.param == param && r.method == method && r.seed == seed)
            .map(|r| r.delay)
    }
}

/// Final exact delay of one method on one network.
pub fn run_method(net: &Network, method: Method, seed: u64, config: &SweepConfig) -> Result<f64> {
    match method.policy() {
        Some(policy) => {
            let sim = SlottedSimConfig {
                n_slots: config.slots,
                warmup_slots: config.warmup,
                ..SlottedSimConfig::new(policy, seed)
            };
            Ok(run_baseline(net, &sim)?.mean_delay)
        }
        None => {
            let init = initial_point(net)?;
            let report = if method == Method::Sub {
                solve_sub(net, &config.sub, init)?
            } else {
                solve_alt(net, &config.alt, init)?
            };
            Ok(report.final_exact_cost)
        }
    }
}

fn sweep(
    parameter: &str,
    values: &[f64],
    methods: &[Method],
    seeds: &[u64],
    config: &SweepConfig,
    exec: Execution,
    params_at: impl Fn(f64) -> ScenarioParams + Sync + Send,
) -> Result<SweepResult> {
    let cells: Vec<(f64, Method, u64)> = values
        .iter()
        .flat_map(|&p| {
            methods
                .iter()
                .flat_map(move |&m| seeds.iter().map(move |&s| (p, m, s)))
        })
        .collect();
    let rows = exec.map_slice(&cells, |&(param, method, seed)| {
        let started = Instant::now();
        let context = || format!("{parameter}={param} method={method} seed={seed}");
        let scenario =
            generate_scenario(seed, &params_at(param)).map_err(|e| e.context(context()))?;
        let net = Network::new(scenario).map_err(|e| e.context(context()))?;
        let delay = run_method(&net, method, seed, config).map_err(|e| e.context(context()))?;
        Ok(SweepRow {
            param,
            method,
            seed,
            delay,
            wall_secs: started.elapsed().as_secs_f64(),
        })
    });
    Ok(SweepResult {
        parameter: parameter.to_string(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// Sweeps the small-cell cache capacity with `c_mc = min(2 c_sc, 8)`.
pub fn sweep_cache_capacity(
    base: &ScenarioParams,
    c_sc: &[usize],
    methods: &[Method],
    seeds: &[u64],
    config: &SweepConfig,
    exec: Execution,
) -> Result<SweepResult> {
    let values: Vec<f64> = c_sc.iter().map(|&c| c as f64).collect();
    sweep("c_sc", &values, methods, seeds, config, exec, |c| {
        base.clone().with_sc_capacity(c as usize)
    })
}

/// Sweeps the common per-node power budget.
pub fn sweep_power_budget(
    base: &ScenarioParams,
    budgets: &[f64],
    methods: &[Method],
    seeds: &[u64],
    config: &SweepConfig,
    exec: Execution,
) -> Result<SweepResult> {
    sweep("power_budget", budgets, methods, seeds, config, exec, |b| {
        ScenarioParams {
            power_budget: b,
            ..base.clone()
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time_secs: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub method: Method,
    pub points: Vec<TracePoint>,
}

impl ConvergenceSeries {
    /// First time the objective covers `fraction` of the total decrease.
    pub fn time_to_fraction(&self, fraction: f64) -> Option<f64> {
        let first = self.points.first()?.objective;
        let last = self
            .points
            .iter()
            .map(|p| p.objective)
            .fold(f64::INFINITY, f64::min);
        let target = first - fraction * (first - last);
        self.points
            .iter()
            .find(|p| p.objective <= target)
            .map(|p| p.time_secs)
    }
}

/// Objective-versus-time series of SUB and ALT from the shared start.
pub fn convergence_trace(
    net: &Network,
    methods: &[Method],
    config: &SweepConfig,
) -> Result<Vec<ConvergenceSeries>> {
    let init = initial_point(net)?;
    methods
        .iter()
        .map(|&method| {
            let report = match method {
                Method::Sub => solve_sub(net, &config.sub, init.clone())?,
                Method::Alt => solve_alt(net, &config.alt, init.clone())?,
                other => {
                    return Err(Error::InvalidParams(format!(
                        "no convergence trace for baseline {other}"
                    )))
                }
            };
            Ok(ConvergenceSeries {
                method,
                points: report
                    .trace
                    .iter()
                    .map(|t| TracePoint {
                        time_secs: t.elapsed_secs,
                        objective: t.objective,
                    })
                    .collect(),
            })
        })
        .collect()
}

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hetcache::baselines::{run_baseline, Policy, SlottedSimConfig};
use hetcache::oracle::brute_force_opt;
use hetcache::solvers::{initial_point, solve_alt, solve_sub, AltSolverConfig, SubSolverConfig};
use hetcache::sweep::{
    convergence_trace, sweep_cache_capacity, sweep_power_budget, Method, SweepConfig,
};
use hetcache::topology::{generate_micro_scenario, generate_scenario, MicroParams, ScenarioParams};
use hetcache::{par, Error, Execution, Network, Result, Scenario};

/// Joint cache placement and transmit-power optimization for multi-hop
/// wireless HetNets.
#[derive(Parser, Debug)]
#[command(author, version, about, long_about = None)]
struct Cli {
    /// Worker threads for parallel work (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scenario and write it as JSON
    Generate {
        #[command(flatten)]
        params: ParamArgs,
        /// Scenario seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Small brute-force-sized instance instead of the full layout
        #[arg(long)]
        micro: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve the relaxed problem, round, and report
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = SolverKind::Sub)]
        method: SolverKind,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Initial optimum-estimate offset, relative to the starting objective
        #[arg(long)]
        delta0: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a cache-replacement baseline with per-slot power optimization
    Baseline {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = PolicyArg::Lru)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 200)]
        slots: usize,
        #[arg(long, default_value_t = 50)]
        warmup: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Brute-force optimum over placements and a power grid
    Oracle {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Power grid resolution
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Final delay versus small-cell cache capacity (CSV)
    SweepCache {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Small-cell capacities; the macro cell gets min(2 c_sc, 8)
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        c_sc: Vec<usize>,
    },
    /// Final delay versus common power budget (CSV)
    SweepPower {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_delimiter = ',', default_value = "25,50,100,200")]
        budgets: Vec<f64>,
        /// Small-cell capacity held fixed during the sweep
        #[arg(long, default_value_t = 2)]
        c_sc: usize,
    },
    /// Objective-versus-time series of SUB and ALT (JSON)
    Trace {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// JSON file with scenario parameters; flags below override it
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    small_cells: Option<usize>,
    #[arg(long)]
    catalog: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    power_budget: Option<f64>,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario JSON file; generated from --seed and --params when absent
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Scenario seeds, one run per seed and cell
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "sub,alt,polru,polfu,pofifo"
    )]
    methods: Vec<String>,
    #[arg(long, default_value_t = 200)]
    slots: usize,
    #[arg(long, default_value_t = 50)]
    warmup: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverKind {
    Sub,
    Alt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Lru,
    Lfu,
    Fifo,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Lru => Policy::Lru,
            PolicyArg::Lfu => Policy::Lfu,
            PolicyArg::Fifo => Policy::Fifo,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))
}

impl ParamArgs {
    fn resolve(&self) -> Result<ScenarioParams> {
        let mut p = match &self.params {
            Some(path) => serde_json::from_str(&read(path)?)
                .map_err(|e| Error::from(e).context(format!("parsing {}", path.display())))?,
            None => ScenarioParams::default(),
        };
        if let Some(v) = self.users {
            p.n_users = v;
        }
        if let Some(v) = self.small_cells {
            p.n_sc = v;
        }
        if let Some(v) = self.catalog {
            p.catalog_size = v;
        }
        if let Some(v) = self.gamma {
            p.zipf_gamma = v;
        }
        if let Some(v) = self.power_budget {
            p.power_budget = v;
        }
        Ok(p)
    }
}

impl ScenarioArgs {
    fn load(&self) -> Result<Network> {
        let scenario = match &self.scenario {
            Some(path) => Scenario::from_json(&read(path)?)
                .map_err(|e| e.context(format!("loading {}", path.display())))?,
            None => generate_scenario(self.seed, &self.params.resolve()?)?,
        };
        Network::new(scenario)
    }
}

impl SweepArgs {
    fn config(&self) -> Result<(ScenarioParams, Vec<Method>, SweepConfig)> {
        let methods = self
            .methods
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| m.parse())
            .collect::<Result<Vec<Method>>>()?;
        let config = SweepConfig {
            slots: self.slots,
            warmup: self.warmup,
            ..SweepConfig::default()
        };
        Ok((self.params.resolve()?, methods, config))
    }
}

fn emit(output: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match output {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(output: Option<&Path>, value: &T) -> Result<()> {
    emit(output, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn run(cli: Cli) -> Result<()> {
    let exec = Execution::Parallel;
    match cli.command {
        Command::Generate {
            params,
            seed,
            micro,
            output,
        } => {
            let scenario = if micro {
                generate_micro_scenario(seed, &MicroParams::default())?
            } else {
                generate_scenario(seed, &params.resolve()?)?
            };
            let text = scenario.to_json()?;
            emit(output.as_deref(), |w| {
                writeln!(w, "{text}")?;
                Ok(())
            })
        }
        Command::Solve {
            scenario,
            method,
            epsilon,
            max_iters,
            delta0,
            output,
        } => {
            let net = scenario.load()?;
            let init = initial_point(&net)?;
            let report = match method {
                SolverKind::Sub => {
                    let mut cfg = SubSolverConfig {
                        seed: scenario.seed,
                        ..SubSolverConfig::default()
                    };
                    cfg.epsilon = epsilon.unwrap_or(cfg.epsilon);
                    cfg.max_iters = max_iters.unwrap_or(cfg.max_iters);
                    cfg.delta0 = delta0.unwrap_or(cfg.delta0);
                    solve_sub(&net, &cfg, init)?
                }
                SolverKind::Alt => {
                    let mut cfg = AltSolverConfig::default();
                    cfg.epsilon = epsilon.unwrap_or(cfg.epsilon);
                    cfg.max_outer = max_iters.unwrap_or(cfg.max_outer);
                    cfg.delta0 = delta0.unwrap_or(cfg.delta0);
                    solve_alt(&net, &cfg, init)?
                }
            };
            emit_json(output.as_deref(), &report)
        }
        Command::Baseline {
            scenario,
            policy,
            slots,
            warmup,
            output,
        } => {
            let net = scenario.load()?;
            let cfg = SlottedSimConfig {
                n_slots: slots,
                warmup_slots: warmup,
                ..SlottedSimConfig::new(policy.into(), scenario.seed)
            };
            emit_json(output.as_deref(), &run_baseline(&net, &cfg)?)
        }
        Command::Oracle {
            scenario,
            grid,
            output,
        } => {
            let net = scenario.load()?;
            par::with_jobs(cli.jobs, || brute_force_opt(&net, grid, exec))
                .and_then(|sol| emit_json(output.as_deref(), &sol))
        }
        Command::SweepCache { sweep, c_sc } => {
            let (params, methods, cfg) = sweep.config()?;
            let result = par::with_jobs(cli.jobs, || {
                sweep_cache_capacity(&params, &c_sc, &methods, &sweep.seeds, &cfg, exec)
            })?;
            emit(sweep.output.as_deref(), |w| result.write_csv(w))
        }
        Command::SweepPower {
            sweep,
            budgets,
            c_sc,
        } => {
            let (params, methods, cfg) = sweep.config()?;
            let params = params.with_sc_capacity(c_sc);
            let result = par::with_jobs(cli.jobs, || {
                sweep_power_budget(&params, &budgets, &methods, &sweep.seeds, &cfg, exec)
            })?;
            emit(sweep.output.as_deref(), |w| result.write_csv(w))
        }
        Command::Trace { scenario, output } => {
            let net = scenario.load()?;
            let series =
                convergence_trace(&net, &[Method::Sub, Method::Alt], &SweepConfig::default())?;
            emit_json(output.as_deref(), &series)
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}

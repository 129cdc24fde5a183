use clap::{Args, Parser, Subcommand, ValueEnum};
use qcl_core::eptas::eptas;
use qcl_core::experiment::{run_suite, SuiteSummary};
use qcl_core::instance::{random_instance, GeneratorParams, QModel, RModel};
use qcl_core::lp::{solve_lp_c_colgen, ColgenOptions, PricingMode};
use qcl_core::numerics::{self, NumericsReport, Suite, ALL_SUITES};
use qcl_core::prcrs::estimate_selectability;
use qcl_core::rounding::{evaluate_policy, Policy};
use qcl_core::{
    json, opt_dp, solve_lp_c_explicit, solve_lp_m, Budgets, DualPrices, EdgeMarginals, Error, Instance, LpSolution,
    Patience, PrcrsInput, SchemeFamily, StarInstance,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "qcl", version, about = "Query-commit matching: LPs, rounding, star EPTAS, numeric checks")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size of the worker pool (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Exact optimal adaptive policy value.
    Opt { instance: PathBuf },
    /// Solve the edge LP.
    LpM { instance: PathBuf },
    /// Solve the configuration LP with every column.
    LpC { instance: PathBuf },
    /// Solve the configuration LP by column generation.
    LpCColgen {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = PricingArg::Exact)]
        pricing: PricingArg,
    },
    /// Round the configuration LP and simulate the resulting policy.
    Round {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Full)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Also compute the exact optimum when it fits the budget.
        #[arg(long)]
        opt: bool,
    },
    /// Monte Carlo selectability of a single contention resolution scheme.
    PrcrsMc {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = FamilyArg::Attenuated)]
        family: FamilyArg,
    },
    /// Approximate the best policy of one star.
    StarEptas {
        instance: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Online vertex whose star is solved.
        #[arg(long, default_value_t = 0)]
        v: usize,
    },
    /// Run the numeric verification suites.
    VerifyNumerics {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Run every experiment of a manifest and print the summary table.
    Suite {
        manifest: PathBuf,
        /// Keep only experiments whose id contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Print the JSON summary instead of CSV.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Generator parameters as JSON; overrides the size flags.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    offline: usize,
    #[arg(long, default_value_t = 3)]
    online: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    /// Comma list of patience values to draw from, e.g. `1,2,inf`.
    #[arg(long, default_value = "1,2,inf")]
    patience: String,
    #[arg(long, default_value_t = 1.0)]
    r_max: f64,
    /// Use the price/acceptance trade-off reward model.
    #[arg(long)]
    tradeoff: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PricingArg {
    Exact,
    Eptas,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Relaxed,
    Full,
    Greedy,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Attenuated,
    Greedy,
}

/// Error kinds mapped onto the exit-code contract.
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

#[derive(Serialize)]
struct LpOut<'a> {
    value: f64,
    n_columns: usize,
    marginals: &'a EdgeMarginals,
    duals: Option<&'a DualPrices>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
}

#[derive(Serialize)]
struct OptOut {
    value: f64,
    states_expanded: u64,
}

#[derive(Serialize)]
struct EptasOut {
    value: f64,
    order: Vec<usize>,
    actions: Vec<usize>,
    guesses_tried: u64,
    feasible_guesses: u64,
    lp_value: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Run(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, v: &T) -> Result<(), Failure> {
    let s = json::to_string(v).map_err(|e| Failure::Run(e.into()))?;
    emit(out, &s)
}

fn read_instance(p: &Path) -> Result<Instance, Failure> {
    let inst = Instance::read(p)?;
    inst.ensure_valid()?;
    Ok(inst)
}

fn check_eps(eps: f64) -> Result<(), Failure> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--eps must lie in (0,1), got {eps}")))
    }
}

/// Ok(true) on pass, Ok(false) when an acceptance check failed.
fn run(cli: &Cli) -> Result<bool, Failure> {
    let budgets = Budgets::from_env()?;
    let out = &cli.out;
    match &cli.cmd {
        Cmd::Gen(g) => {
            let params = match &g.params {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(Error::from)?;
                    serde_json::from_str::<GeneratorParams>(&text)
                        .map_err(|e| Failure::Run(Error::config(p.display().to_string(), e.to_string())))?
                }
                None => {
                    let patience = g
                        .patience
                        .split(',')
                        .map(|s| s.parse::<Patience>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| Failure::Usage(e.to_string()))?;
                    let mut p = GeneratorParams::small(g.offline, g.online, g.actions, patience);
                    p.q_model = QModel::Uniform { lo: 0.0, hi: 1.0 };
                    p.r_model = if g.tradeoff {
                        RModel::Tradeoff { max: g.r_max }
                    } else {
                        RModel::Uniform { max: g.r_max }
                    };
                    p
                }
            };
            let inst = random_instance(cli.seed, &params)?;
            emit(out, &inst.to_json())?;
            Ok(true)
        }
        Cmd::Opt { instance } => {
            let inst = read_instance(instance)?;
            let r = opt_dp(&inst, &budgets)?;
            emit_json(
                out,
                &OptOut {
                    value: r.value,
                    states_expanded: r.states_expanded,
                },
            )?;
            Ok(true)
        }
        Cmd::LpM { instance } => {
            let inst = read_instance(instance)?;
            let r = solve_lp_m(&inst)?;
            emit_json(
                out,
                &LpOut {
                    value: r.value,
                    n_columns: inst.n_pairs(),
                    marginals: &r.z,
                    duals: None,
                    iterations: None,
                },
            )?;
            Ok(true)
        }
        Cmd::LpC { instance } => {
            let inst = read_instance(instance)?;
            let r = solve_lp_c_explicit(&inst, &budgets)?;
            emit_json(out, &lp_out(&r.solution, r.n_columns, &r.duals, None))?;
            Ok(true)
        }
        Cmd::LpCColgen { instance, eps, pricing } => {
            check_eps(*eps)?;
            let inst = read_instance(instance)?;
            let pricing = match pricing {
                PricingArg::Exact => PricingMode::Exact,
                PricingArg::Eptas => PricingMode::Eptas { eps: *eps },
            };
            let r = solve_lp_c_colgen(
                &inst,
                &ColgenOptions {
                    eps: *eps,
                    pricing,
                    budgets,
                },
            )?;
            emit_json(out, &lp_out(&r.solution, r.n_columns, &r.duals, Some(r.iterations)))?;
            Ok(true)
        }
        Cmd::Round {
            instance,
            policy,
            trials,
            opt,
        } => {
            if *trials == 0 {
                return Err(Failure::Usage("--trials must be at least 1".into()));
            }
            let inst = read_instance(instance)?;
            let lp = solve_lp_c_explicit(&inst, &budgets)?;
            let policy = match policy {
                PolicyArg::Relaxed => Policy::Relaxed,
                PolicyArg::Full => Policy::Full,
                PolicyArg::Greedy => Policy::Greedy,
            };
            let mut rep = evaluate_policy(policy, &inst, &lp.solution, *trials, cli.seed)?;
            if *opt {
                rep = rep.with_opt(opt_dp(&inst, &budgets)?.value);
            }
            emit_json(out, &rep)?;
            Ok(true)
        }
        Cmd::PrcrsMc { input, trials, family } => {
            if *trials == 0 {
                return Err(Failure::Usage("--trials must be at least 1".into()));
            }
            let text = std::fs::read_to_string(input).map_err(Error::from)?;
            let inp: PrcrsInput = serde_json::from_str(&text)
                .map_err(|e| Failure::Run(Error::config(input.display().to_string(), e.to_string())))?;
            let family = match family {
                FamilyArg::Attenuated => SchemeFamily::Attenuated,
                FamilyArg::Greedy => SchemeFamily::Greedy,
            };
            let rows = estimate_selectability(&inp, family, *trials, cli.seed)?;
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["i", "a", "x", "p", "estimate", "half_width", "bound", "pass"])
                .map_err(csv_err)?;
            for r in &rows {
                w.write_record([
                    r.i.to_string(),
                    r.a.to_string(),
                    format!("{:.16e}", r.x),
                    format!("{:.16e}", r.p),
                    format!("{:.16e}", r.estimate),
                    format!("{:.16e}", r.half_width),
                    format!("{:.16e}", r.bound),
                    r.pass.to_string(),
                ])
                .map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Run(std::io::Error::other(e.to_string()).into()))?;
            emit(out, &String::from_utf8(bytes).expect("csv writes utf-8"))?;
            Ok(rows.iter().all(|r| r.pass))
        }
        Cmd::StarEptas { instance, eps, v } => {
            check_eps(*eps)?;
            let inst = read_instance(instance)?;
            if *v >= inst.n_online() {
                return Err(Failure::Usage(format!(
                    "--v {v} out of range for {} online vertices",
                    inst.n_online()
                )));
            }
            let star = StarInstance::of_online(&inst, *v);
            let r = eptas(&star, *eps, &budgets)?;
            emit_json(
                out,
                &EptasOut {
                    value: r.policy.value,
                    order: r.policy.edges.clone(),
                    actions: r.policy.actions.clone(),
                    guesses_tried: r.guesses_tried,
                    feasible_guesses: r.feasible_guesses,
                    lp_value: r.lp_value,
                },
            )?;
            Ok(true)
        }
        Cmd::VerifyNumerics { suite } => {
            let suites: Vec<Suite> = if suite == "all" {
                ALL_SUITES.to_vec()
            } else {
                vec![suite.parse::<Suite>().map_err(Failure::Usage)?]
            };
            let reports: Vec<NumericsReport> = suites.into_iter().map(numerics::run_suite).collect();
            let pass = reports.iter().all(|r| r.pass);
            if reports.len() == 1 {
                emit_json(out, &reports[0])?;
            } else {
                emit_json(out, &reports)?;
            }
            Ok(pass)
        }
        Cmd::Suite { manifest, filter, json } => {
            let summary: SuiteSummary = run_suite(manifest, filter.as_deref(), &budgets)?;
            if *json {
                emit_json(out, &summary)?;
            } else {
                emit(out, &summary.to_csv())?;
            }
            Ok(summary.all_pass)
        }
    }
}

fn lp_out<'a>(s: &'a LpSolution, n_columns: usize, d: &'a DualPrices, iterations: Option<usize>) -> LpOut<'a> {
    LpOut {
        value: s.objective,
        n_columns,
        marginals: &s.marginals,
        duals: Some(d),
        iterations,
    }
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Run(std::io::Error::other(e.to_string()).into())
}

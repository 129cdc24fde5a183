//! End-to-end experiments: solve, round, simulate, report.

use crate::lp::{solve_lp_c_colgen, solve_lp_c_explicit, solve_lp_m, ColgenOptions, PricingMode};
use crate::prcrs::{beta, beta0, one_minus_inv_e};
use crate::rounding::{evaluate_with_log, Policy};
use crate::{instance, json, opt_dp, Budgets, Error, Instance, Patience, Result, SimReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pipeline {
    /// Greedy rounding of the configuration LP, ratio taken against the edge LP.
    #[serde(rename = "lp-m+greedy")]
    LpMGreedy,
    #[serde(rename = "lp-c+full")]
    LpCFull,
    #[serde(rename = "lp-c-colgen+full")]
    LpCColgenFull,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    File(PathBuf),
    Generator { params: instance::GeneratorParams, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingChoice {
    #[default]
    Exact,
    Eptas,
}

fn default_eps() -> f64 {
    0.01
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub instance: InstanceSource,
    pub pipeline: Pipeline,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub pricing: PricingChoice,
    pub trials: u64,
    pub seed: u64,
    /// Overrides the guarantee used as pass threshold.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Compute the exact optimum when within budget.
    #[serde(default = "yes")]
    pub opt: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::config(format!("{path}.id"), "must be nonempty"));
        }
        if self.trials == 0 {
            return Err(Error::config(format!("{path}.trials"), "must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::config(format!("{path}.eps"), "must lie in (0,1)"));
        }
        if self.pipeline == Pipeline::LpCColgenFull && self.pricing == PricingChoice::Eptas {
            crate::eptas::inverse_eps(self.eps).map_err(|e| Error::config(format!("{path}.eps"), e.to_string()))?;
        }
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::config(format!("{path}.threshold"), "must lie in [0,1]"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub pipeline: Pipeline,
    pub eps: f64,
    pub seed: u64,
    /// Objective of the LP solution that was rounded.
    pub rounded_lp_value: f64,
    pub n_columns: usize,
    pub threshold: f64,
    pub pass: bool,
    pub report: SimReport,
}

/// The guarantee of the pipeline on this instance.
pub fn default_threshold(inst: &Instance, pipeline: Pipeline, eps: f64) -> f64 {
    let base = match pipeline {
        Pipeline::LpMGreedy => beta0(),
        _ => {
            let one_sided = inst
                .offline_patience
                .iter()
                .all(|l| matches!(l, Patience::Infinite | Patience::Finite(1)));
            if one_sided {
                one_minus_inv_e()
            } else {
                beta()
            }
        }
    };
    base * (1.0 - eps)
}

pub fn load_instance(src: &InstanceSource, base_dir: &Path) -> Result<Instance> {
    match src {
        InstanceSource::File(p) => {
            let p = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
            Instance::read(&p)
        }
        InstanceSource::Generator { params, seed } => instance::random_instance(*seed, params),
    }
}

/// Runs one experiment; writes `<id>.json` and `<id>.trials.csv` when an
/// output directory is configured. `base_dir` resolves relative paths.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path, budgets: &Budgets) -> Result<ExperimentReport> {
    cfg.validate("experiment")?;
    let inst = load_instance(&cfg.instance, base_dir)?;
    inst.ensure_valid()?;
    let (solution, n_columns, lp_report) = match cfg.pipeline {
        Pipeline::LpCFull | Pipeline::LpMGreedy => {
            let r = solve_lp_c_explicit(&inst, budgets)?;
            let lp = if cfg.pipeline == Pipeline::LpMGreedy {
                solve_lp_m(&inst)?.value
            } else {
                r.solution.objective
            };
            (r.solution, r.n_columns, lp)
        }
        Pipeline::LpCColgenFull => {
            let pricing = match cfg.pricing {
                PricingChoice::Exact => PricingMode::Exact,
                PricingChoice::Eptas => PricingMode::Eptas { eps: cfg.eps },
            };
            let r = solve_lp_c_colgen(
                &inst,
                &ColgenOptions {
                    eps: cfg.eps,
                    pricing,
                    budgets: *budgets,
                },
            )?;
            let lp = r.solution.objective;
            (r.solution, r.n_columns, lp)
        }
    };
    let policy = if cfg.pipeline == Pipeline::LpMGreedy {
        Policy::Greedy
    } else {
        Policy::Full
    };
    let (sim, rewards) = evaluate_with_log(policy, &inst, &solution, cfg.trials, cfg.seed, |_| {})?;
    let mut report = sim.with_lp(lp_report);
    if cfg.opt {
        match opt_dp(&inst, budgets) {
            Ok(o) => report = report.with_opt(o.value),
            Err(Error::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let threshold = cfg.threshold.unwrap_or_else(|| default_threshold(&inst, cfg.pipeline, cfg.eps));
    let pass = report.mean >= threshold * solution.objective - 4.0 * report.sigma();
    let out = ExperimentReport {
        id: cfg.id.clone(),
        pipeline: cfg.pipeline,
        eps: cfg.eps,
        seed: cfg.seed,
        rounded_lp_value: solution.objective,
        n_columns,
        threshold,
        pass,
        report,
    };
    if let Some(dir) = &cfg.output {
        let dir = if dir.is_absolute() { dir.clone() } else { base_dir.join(dir) };
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join(format!("{}.json", cfg.id)), json::to_string(&out)?)?;
        let mut w = csv::Writer::from_path(dir.join(format!("{}.trials.csv", cfg.id))).map_err(csv_err)?;
        w.write_record(["trial", "reward"]).map_err(csv_err)?;
        for (t, r) in rewards.iter().enumerate() {
            w.write_record([t.to_string(), format!("{r:.16e}")]).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiments: Vec<ExperimentConfig>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        for (i, e) in m.experiments.iter().enumerate() {
            e.validate(&format!("experiments[{i}]"))?;
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub reports: Vec<ExperimentReport>,
    pub all_pass: bool,
}

impl SuiteSummary {
    /// id, lp, opt, mean, half_width, ratio, threshold, pass
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,pipeline,lp,opt,mean,half_width,ratio_vs_lp,threshold,pass\n");
        for r in &self.reports {
            let opt = r.report.opt_value.map(|o| format!("{o:.10}")).unwrap_or_default();
            let pipeline = serde_json::to_value(r.pipeline).unwrap();
            writeln!(
                s,
                "{},{},{:.10},{},{:.10},{:.10},{:.10},{:.10},{}",
                r.id,
                pipeline.as_str().unwrap_or(""),
                r.report.lp_value.unwrap_or(r.rounded_lp_value),
                opt,
                r.report.mean,
                r.report.half_width,
                r.report.ratio_vs_lp.unwrap_or(1.0),
                r.threshold,
                r.pass
            )
            .unwrap();
        }
        s
    }
}

/// Runs the manifest's experiments whose id contains `filter`, in parallel,
/// and collects their reports in manifest order.
pub fn run_suite(manifest_path: &Path, filter: Option<&str>, budgets: &Budgets) -> Result<SuiteSummary> {
    let m = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let chosen: Vec<&ExperimentConfig> = m
        .experiments
        .iter()
        .filter(|e| filter.is_none_or(|f| e.id.contains(f)))
        .collect();
    if chosen.is_empty() {
        return Err(Error::config("experiments", "no experiment left after filtering"));
    }
    let reports: Vec<ExperimentReport> = chosen
        .par_iter()
        .map(|e| run_experiment(e, base, budgets))
        .collect::<Result<_>>()?;
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(SuiteSummary { reports, all_pass })
}

use super::lp_c::solve_master;
use super::{enumerate_configs, price_configs, Config, DualPrices, LpSolution, PricingMode};
use crate::{Budgets, Error, Instance, Patience, Result};
use std::collections::HashSet;

const PRICE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColgenOptions {
    pub eps: f64,
    pub pricing: PricingMode,
    pub budgets: Budgets,
}

impl ColgenOptions {
    pub fn exact(eps: f64) -> Self {
        ColgenOptions {
            eps,
            pricing: PricingMode::Exact,
            budgets: Budgets::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ColgenResult {
    pub solution: LpSolution,
    /// Duals of the last master; feasible for the relaxed dual at `eps`.
    pub duals: DualPrices,
    pub eps: f64,
    pub iterations: usize,
    pub n_columns: usize,
}

/// Restricted-master column generation. A column enters when its modified
/// value exceeds beta_v; with exact pricing the loop stops at the LP optimum,
/// with EPTAS pricing at a point where every column satisfies the relaxed
/// dual constraint.
pub fn solve_lp_c_colgen(inst: &Instance, opts: &ColgenOptions) -> Result<ColgenResult> {
    inst.ensure_valid()?;
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(Error::Invalid(format!("eps must lie in (0,1), got {}", opts.eps)));
    }
    let mut columns: Vec<Config> = Vec::new();
    let mut present: HashSet<Config> = HashSet::new();
    let zero = DualPrices::zeros(inst);
    for v in 0..inst.n_online() {
        if let Some(c) = price_configs(inst, v, &zero, opts.pricing, &opts.budgets)?.config {
            present.insert(c.clone());
            columns.push(c);
        }
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let master = solve_master(inst, columns.clone())?;
        let mut added = false;
        for v in 0..inst.n_online() {
            let p = price_configs(inst, v, &master.duals, opts.pricing, &opts.budgets)?;
            if p.value > master.duals.beta[v] + PRICE_TOL {
                let c = p.config.expect("positive value has a config");
                if present.insert(c.clone()) {
                    columns.push(c);
                    added = true;
                }
            }
        }
        if !added {
            return Ok(ColgenResult {
                solution: master.solution,
                duals: master.duals,
                eps: opts.eps,
                iterations,
                n_columns: columns.len(),
            });
        }
        if columns.len() as u64 > opts.budgets.colgen_columns {
            return Err(Error::IterationLimit(iterations));
        }
    }
}

/// sum alpha + sum l_u gamma_u + sum beta.
pub fn dual_objective(inst: &Instance, d: &DualPrices) -> f64 {
    let patience: f64 = inst
        .offline_patience
        .iter()
        .zip(&d.gamma)
        .map(|(l, g)| match l {
            Patience::Finite(l) => *l as f64 * g,
            Patience::Infinite => 0.0,
        })
        .sum();
    d.alpha.iter().sum::<f64>() + patience + d.beta.iter().sum::<f64>()
}

/// Largest violation of the relaxed dual constraints over every configuration:
/// max of (1-eps) val - sum (q alpha + gamma) reach - beta_v. Nonpositive means
/// the duals are feasible.
pub fn relaxed_dual_violation(inst: &Instance, d: &DualPrices, eps: f64, budgets: &Budgets) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for v in 0..inst.n_online() {
        for cfg in enumerate_configs(inst, v, budgets)? {
            let mut charge = 0.0;
            for ((&u, &a), reach) in cfg.edges.iter().zip(&cfg.actions).zip(cfg.reach(inst)) {
                charge += (inst.q(u, v, a) * d.alpha[u] + d.gamma[u]) * reach;
            }
            worst = worst.max((1.0 - eps) * cfg.val() - charge - d.beta[v]);
        }
    }
    Ok(worst)
}

use super::{enumerate_configs, solve_generic_lp, Config, DualPrices, EdgeMarginals, LpSolution, Rows};
use crate::{Budgets, Instance, Patience, Result, Violation};

const FEAS_TOL: f64 = 1e-9;
const KEEP: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct LpcResult {
    pub solution: LpSolution,
    pub duals: DualPrices,
    pub n_columns: usize,
}

/// Solves the configuration LP with every configuration as a column.
pub fn solve_lp_c_explicit(inst: &Instance, budgets: &Budgets) -> Result<LpcResult> {
    inst.ensure_valid()?;
    let mut columns = Vec::new();
    for v in 0..inst.n_online() {
        columns.extend(enumerate_configs(inst, v, budgets)?.into_iter().filter(|c| c.val() > 0.0));
    }
    solve_master(inst, columns)
}

pub(crate) fn solve_master(inst: &Instance, columns: Vec<Config>) -> Result<LpcResult> {
    let rows = Rows::new(inst);
    let res = solve_generic_lp(&rows.problem(inst, &columns))?;
    let n_columns = columns.len();
    let weights: Vec<(Config, f64)> = columns
        .into_iter()
        .zip(res.x)
        .filter(|(_, z)| *z > KEEP)
        .collect();
    Ok(LpcResult {
        solution: LpSolution::from_weights(inst, weights),
        duals: rows.duals(&res.duals),
        n_columns,
    })
}

/// z~_e(a): probability that relaxed rounding queries e via a.
pub fn edge_marginals(weights: &[(Config, f64)], inst: &Instance) -> EdgeMarginals {
    let mut m = EdgeMarginals::for_instance(inst);
    for (cfg, z) in weights {
        let mut reach = 1.0;
        for (&u, &a) in cfg.edges.iter().zip(&cfg.actions) {
            m.add(u, cfg.v, a, reach * z);
            reach *= 1.0 - inst.q(u, cfg.v, a);
        }
    }
    m
}

/// Per-edge mass <= 1, per-u query mass <= l_u, per-u match mass <= 1.
pub fn check_marginal_feasibility(m: &EdgeMarginals, inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    for u in 0..inst.n_offline() {
        let mut queries = 0.0;
        let mut matches = 0.0;
        for v in 0..inst.n_online() {
            let mut edge = 0.0;
            for a in 0..inst.n_actions() {
                let z = m.get(u, v, a);
                if z < -FEAS_TOL {
                    out.push(Violation::new(format!("z[{u},{v},{a}]"), "negative marginal"));
                }
                edge += z;
                matches += inst.q(u, v, a) * z;
            }
            if edge > 1.0 + FEAS_TOL {
                out.push(Violation::new(format!("z[{u},{v}]"), format!("edge mass {edge} exceeds 1")));
            }
            queries += edge;
        }
        if let Patience::Finite(l) = inst.offline_patience[u] {
            if queries > l as f64 + FEAS_TOL {
                out.push(Violation::new(format!("u[{u}]"), format!("query mass {queries} exceeds patience {l}")));
            }
        }
        if matches > 1.0 + FEAS_TOL {
            out.push(Violation::new(format!("u[{u}]"), format!("match mass {matches} exceeds 1")));
        }
    }
    out
}

//! The edge LP (LP-M), the configuration LP (LP-C) and its dual machinery.

mod colgen;
mod config;
mod lp_c;
mod lp_m;
mod pricing;
pub mod simplex;

pub use colgen::{dual_objective, relaxed_dual_violation, solve_lp_c_colgen, ColgenOptions, ColgenResult};
pub use config::{config_count, enumerate_configs, Config};
pub use lp_c::{check_marginal_feasibility, edge_marginals, solve_lp_c_explicit, LpcResult};
pub use lp_m::{check_lp_m_feasibility, solve_lp_m, EdgeLpSolution};
pub use pricing::{modified_star, price_configs, Priced, PricingMode};
pub use simplex::{solve_generic_lp, LpProblem, LpResult};

use serde::Serialize;

/// Dense (u, v, a) table of per-pair quantities such as z~ or LP-M's z.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeMarginals {
    pub n_offline: usize,
    pub n_online: usize,
    pub n_actions: usize,
    pub values: Vec<f64>,
}

impl EdgeMarginals {
    pub fn zeros(n_offline: usize, n_online: usize, n_actions: usize) -> Self {
        EdgeMarginals {
            n_offline,
            n_online,
            n_actions,
            values: vec![0.0; n_offline * n_online * n_actions],
        }
    }

    pub fn for_instance(inst: &crate::Instance) -> Self {
        Self::zeros(inst.n_offline(), inst.n_online(), inst.n_actions())
    }

    #[inline]
    fn idx(&self, u: usize, v: usize, a: usize) -> usize {
        (u * self.n_online + v) * self.n_actions + a
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize, a: usize) -> f64 {
        self.values[self.idx(u, v, a)]
    }

    #[inline]
    pub fn add(&mut self, u: usize, v: usize, a: usize, x: f64) {
        let i = self.idx(u, v, a);
        self.values[i] += x;
    }

    pub fn set(&mut self, u: usize, v: usize, a: usize, x: f64) {
        let i = self.idx(u, v, a);
        self.values[i] = x;
    }
}

/// A configuration LP solution: positive-weight columns plus their marginals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    pub weights: Vec<(Config, f64)>,
    pub objective: f64,
    pub marginals: EdgeMarginals,
}

impl LpSolution {
    /// Builds a solution from arbitrary weights, recomputing objective and marginals.
    pub fn from_weights(inst: &crate::Instance, weights: Vec<(Config, f64)>) -> Self {
        let objective = weights.iter().map(|(c, z)| c.val() * z).sum();
        let marginals = edge_marginals(&weights, inst);
        LpSolution {
            weights,
            objective,
            marginals,
        }
    }

    pub fn empty(inst: &crate::Instance) -> Self {
        Self::from_weights(inst, vec![])
    }

    /// Total weight on configurations of online vertex `v`.
    pub fn mass(&self, v: usize) -> f64 {
        self.weights.iter().filter(|(c, _)| c.v == v).map(|(_, z)| z).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualPrices {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl DualPrices {
    pub fn zeros(inst: &crate::Instance) -> Self {
        DualPrices {
            alpha: vec![0.0; inst.n_offline()],
            gamma: vec![0.0; inst.n_offline()],
            beta: vec![0.0; inst.n_online()],
        }
    }
}

/// Row layout shared by the explicit LP and the column-generation master.
pub(crate) struct Rows {
    pub matching: Vec<usize>,
    pub patience: Vec<Option<usize>>,
    pub distribution: Vec<usize>,
    pub b: Vec<f64>,
}

impl Rows {
    pub fn new(inst: &crate::Instance) -> Self {
        let mut b = Vec::new();
        let mut matching = Vec::new();
        let mut patience = Vec::new();
        for l in &inst.offline_patience {
            matching.push(b.len());
            b.push(1.0);
            match l {
                crate::Patience::Finite(l) => {
                    patience.push(Some(b.len()));
                    b.push(*l as f64);
                }
                crate::Patience::Infinite => patience.push(None),
            }
        }
        let distribution = (0..inst.n_online())
            .map(|_| {
                b.push(1.0);
                b.len() - 1
            })
            .collect();
        Rows {
            matching,
            patience,
            distribution,
            b,
        }
    }

    /// Column of `cfg` as a dense vector over rows.
    pub fn column(&self, inst: &crate::Instance, cfg: &Config) -> Vec<f64> {
        let mut col = vec![0.0; self.b.len()];
        let mut reach = 1.0;
        for (&u, &a) in cfg.edges.iter().zip(&cfg.actions) {
            let q = inst.q(u, cfg.v, a);
            col[self.matching[u]] += q * reach;
            if let Some(p) = self.patience[u] {
                col[p] += reach;
            }
            reach *= 1.0 - q;
        }
        col[self.distribution[cfg.v]] = 1.0;
        col
    }

    pub fn problem(&self, inst: &crate::Instance, columns: &[Config]) -> LpProblem {
        let mut a = vec![Vec::with_capacity(columns.len()); self.b.len()];
        for cfg in columns {
            for (row, x) in a.iter_mut().zip(self.column(inst, cfg)) {
                row.push(x);
            }
        }
        LpProblem {
            c: columns.iter().map(|c| c.val()).collect(),
            a,
            b: self.b.clone(),
        }
    }

    pub fn duals(&self, y: &[f64]) -> DualPrices {
        DualPrices {
            alpha: self.matching.iter().map(|&i| y[i]).collect(),
            gamma: self.patience.iter().map(|p| p.map_or(0.0, |i| y[i])).collect(),
            beta: self.distribution.iter().map(|&i| y[i]).collect(),
        }
    }
}

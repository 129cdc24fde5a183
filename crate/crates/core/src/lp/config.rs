use crate::{Budgets, Error, Instance, Result};
use serde::Serialize;
use std::hash::{Hash, Hasher};

/// An ordered list of distinct offline vertices queried from online vertex
/// `v`, with one action each. `val` is its expected reward, cached.
#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub v: usize,
    pub edges: Vec<usize>,
    pub actions: Vec<usize>,
    val: f64,
}

impl PartialEq for Config {
    fn eq(&self, o: &Self) -> bool {
        self.v == o.v && self.edges == o.edges && self.actions == o.actions
    }
}
impl Eq for Config {}
impl Hash for Config {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.v.hash(h);
        self.edges.hash(h);
        self.actions.hash(h);
    }
}

impl Config {
    pub fn new(inst: &Instance, v: usize, edges: Vec<usize>, actions: Vec<usize>) -> Self {
        assert_eq!(edges.len(), actions.len());
        let val = Self::value(inst, v, &edges, &actions);
        Config { v, edges, actions, val }
    }

    /// sum_i r_i q_i prod_{j<i} (1 - q_j)
    pub fn value(inst: &Instance, v: usize, edges: &[usize], actions: &[usize]) -> f64 {
        let mut reach = 1.0;
        let mut total = 0.0;
        for (&u, &a) in edges.iter().zip(actions) {
            let q = inst.q(u, v, a);
            total += inst.r(u, v, a) * q * reach;
            reach *= 1.0 - q;
        }
        total
    }

    pub fn val(&self) -> f64 {
        self.val
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Probability of reaching each position: prod_{j<i} (1 - q_j).
    pub fn reach(&self, inst: &Instance) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut reach = 1.0;
        for (&u, &a) in self.edges.iter().zip(&self.actions) {
            out.push(reach);
            reach *= 1.0 - inst.q(u, self.v, a);
        }
        out
    }

    /// Distinct edges, length within the patience of `v`, indices in range.
    pub fn is_well_formed(&self, inst: &Instance) -> bool {
        let mut seen = vec![false; inst.n_offline()];
        self.v < inst.n_online()
            && self.len() <= inst.online_patience[self.v].cap(inst.n_offline())
            && self.edges.iter().all(|&u| u < inst.n_offline() && !std::mem::replace(&mut seen[u], true))
            && self.actions.iter().all(|&a| a < inst.n_actions())
    }
}

/// |C_v| = sum_{k=1..cap} perm(|U|, k) |A|^k, saturating.
pub fn config_count(inst: &Instance, v: usize) -> u64 {
    let n = inst.n_offline();
    let cap = inst.online_patience[v].cap(n);
    let na = inst.n_actions() as u64;
    let mut total: u64 = 0;
    let mut term: u64 = 1;
    for k in 0..cap {
        term = term.saturating_mul((n - k) as u64).saturating_mul(na);
        total = total.saturating_add(term);
    }
    total
}

pub fn enumerate_configs(inst: &Instance, v: usize, budgets: &Budgets) -> Result<Vec<Config>> {
    let count = config_count(inst, v);
    if count > budgets.configs {
        return Err(Error::BudgetExceeded {
            what: "configurations",
            estimate: count,
            budget: budgets.configs,
        });
    }
    let cap = inst.online_patience[v].cap(inst.n_offline());
    let mut out = Vec::with_capacity(count as usize);
    let mut edges = Vec::new();
    let mut actions = Vec::new();
    let mut used = vec![false; inst.n_offline()];
    fn go(
        inst: &Instance,
        v: usize,
        cap: usize,
        used: &mut Vec<bool>,
        edges: &mut Vec<usize>,
        actions: &mut Vec<usize>,
        out: &mut Vec<Config>,
    ) {
        if edges.len() == cap {
            return;
        }
        for u in 0..inst.n_offline() {
            if used[u] {
                continue;
            }
            used[u] = true;
            for a in 0..inst.n_actions() {
                edges.push(u);
                actions.push(a);
                out.push(Config::new(inst, v, edges.clone(), actions.clone()));
                go(inst, v, cap, used, edges, actions, out);
                edges.pop();
                actions.pop();
            }
            used[u] = false;
        }
    }
    go(inst, v, cap, &mut used, &mut edges, &mut actions, &mut out);
    Ok(out)
}

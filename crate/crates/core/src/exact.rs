//! Exact oracles: the optimal committal policy by dynamic programming over
//! the probing MDP, and exact optima of the single-vertex (star) problem.

use crate::{Budgets, Error, Instance, Patience, Result};
use serde::Serialize;
use std::collections::HashMap;

// ------------------------------------------------------------------ star

/// A star: one vertex with `n` incident edges, per-edge per-action (q, r).
#[derive(Clone, Debug, PartialEq)]
pub struct StarInstance {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub patience: Patience,
}

impl StarInstance {
    pub fn new(q: Vec<Vec<f64>>, r: Vec<Vec<f64>>, patience: Patience) -> Self {
        assert_eq!(q.len(), r.len());
        StarInstance { q, r, patience }
    }

    pub fn n_edges(&self) -> usize {
        self.q.len()
    }

    pub fn n_actions(&self) -> usize {
        self.q.first().map_or(0, |a| a.len())
    }

    /// Maximum ordering length.
    pub fn cap(&self) -> usize {
        self.patience.cap(self.n_edges())
    }

    /// The star of online vertex `v`; edge i is (offline i, v).
    pub fn of_online(inst: &Instance, v: usize) -> Self {
        let na = inst.n_actions();
        let q = (0..inst.n_offline()).map(|u| (0..na).map(|a| inst.q(u, v, a)).collect()).collect();
        let r = (0..inst.n_offline()).map(|u| (0..na).map(|a| inst.r(u, v, a)).collect()).collect();
        StarInstance::new(q, r, inst.online_patience[v])
    }

    /// Star as an instance with a single online vertex, for the DP oracle.
    pub fn to_instance(&self) -> Instance {
        let n = self.n_edges();
        let mut inst = Instance::with_sizes(n, 1, self.n_actions(), Patience::Finite(1), self.patience);
        for e in 0..n {
            for a in 0..self.n_actions() {
                inst.set(e, 0, a, self.q[e][a], self.r[e][a]);
            }
        }
        inst
    }

    /// Best action for edge `e` when the continuation is worth `next`.
    /// Ties go to the lowest action index.
    #[inline]
    pub fn best_step(&self, e: usize, next: f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for a in 0..self.n_actions() {
            let q = self.q[e][a];
            let val = self.r[e][a] * q + next * (1.0 - q);
            if val > best.0 {
                best = (val, a);
            }
        }
        best
    }

    /// Expected reward of querying `edges` in order via `actions`, stopping
    /// at the first success.
    pub fn value_of(&self, edges: &[usize], actions: &[usize]) -> f64 {
        let mut reach = 1.0;
        let mut total = 0.0;
        for (&e, &a) in edges.iter().zip(actions) {
            total += self.r[e][a] * self.q[e][a] * reach;
            reach *= 1.0 - self.q[e][a];
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FutureValues {
    /// R_1..R_{k+1}; the last entry is 0.
    pub values: Vec<f64>,
    pub actions: Vec<usize>,
}

pub fn star_future_values(star: &StarInstance, order: &[usize]) -> FutureValues {
    let k = order.len();
    let mut values = vec![0.0; k + 1];
    let mut actions = vec![0; k];
    for i in (0..k).rev() {
        let (v, a) = star.best_step(order[i], values[i + 1]);
        values[i] = v;
        actions[i] = a;
    }
    FutureValues { values, actions }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarPolicy {
    pub edges: Vec<usize>,
    pub actions: Vec<usize>,
    pub value: f64,
}

impl StarPolicy {
    pub fn empty() -> Self {
        StarPolicy {
            edges: vec![],
            actions: vec![],
            value: 0.0,
        }
    }

    pub fn from_order(star: &StarInstance, order: Vec<usize>) -> Self {
        let fv = star_future_values(star, &order);
        StarPolicy {
            edges: order,
            actions: fv.actions,
            value: fv.values[0],
        }
    }
}

/// Number of ordered subsets of length at most `cap` drawn from `n` items,
/// saturating.
pub fn ordering_count(n: usize, cap: usize) -> u64 {
    let mut total: u64 = 1;
    let mut term: u64 = 1;
    for k in 0..cap.min(n) {
        term = term.saturating_mul((n - k) as u64);
        total = total.saturating_add(term);
    }
    total
}

/// Exhaustive optimum over ordered subsets. Sequences are grown by
/// prepending, so the future value of the suffix is already known and each
/// node costs O(|A|).
pub fn star_opt_bruteforce(star: &StarInstance, budgets: &Budgets) -> Result<StarPolicy> {
    let n = star.n_edges();
    let cap = star.cap();
    let count = ordering_count(n, cap);
    if count > budgets.star_orderings {
        return Err(Error::BudgetExceeded {
            what: "star orderings",
            estimate: count,
            budget: budgets.star_orderings,
        });
    }
    struct Search<'a> {
        star: &'a StarInstance,
        cap: usize,
        used: Vec<bool>,
        suffix: Vec<usize>,
        best: f64,
        best_seq: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, next: f64) {
            if self.suffix.len() == self.cap {
                return;
            }
            for e in 0..self.star.n_edges() {
                if self.used[e] {
                    continue;
                }
                let (val, _) = self.star.best_step(e, next);
                self.used[e] = true;
                self.suffix.push(e);
                if val > self.best {
                    self.best = val;
                    self.best_seq = self.suffix.iter().rev().copied().collect();
                }
                self.go(val);
                self.suffix.pop();
                self.used[e] = false;
            }
        }
    }
    let mut s = Search {
        star,
        cap,
        used: vec![false; n],
        suffix: Vec::with_capacity(cap),
        best: 0.0,
        best_seq: vec![],
    };
    s.go(0.0);
    Ok(prune(star, s.best_seq))
}

/// Drops positions whose future value does not exceed that of the next
/// position; such positions never add value, and without them R is strictly
/// decreasing along the ordering.
pub fn prune(star: &StarInstance, mut order: Vec<usize>) -> StarPolicy {
    loop {
        let fv = star_future_values(star, &order);
        match (0..order.len()).find(|&i| fv.values[i] <= fv.values[i + 1]) {
            Some(i) => {
                order.remove(i);
            }
            None => {
                return StarPolicy {
                    edges: order,
                    actions: fv.actions,
                    value: fv.values[0],
                }
            }
        }
    }
}

// ------------------------------------------------------------------- MDP

/// A probing state. `available` is a bitmask over the solver's active edge
/// list; matched vertices are recorded by their remaining patience being 0
/// and their edges removed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MdpState {
    pub available: u64,
    pub remaining: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptResult {
    pub value: f64,
    pub states_expanded: u64,
    /// Optimal first query (u, v, a), if any query is worth making.
    pub first_action: Option<(usize, usize, usize)>,
}

/// Memoised optimal-policy solver. Edges whose every action has q = 0 are
/// left out: querying them only burns patience.
pub struct OptSolver<'a> {
    inst: &'a Instance,
    edges: Vec<(usize, usize)>,
    budget: u64,
    memo: HashMap<MdpState, (f64, Option<(u8, u8)>)>,
}

impl<'a> OptSolver<'a> {
    pub fn new(inst: &'a Instance, budgets: &Budgets) -> Result<Self> {
        inst.ensure_valid()?;
        let mut edges = Vec::new();
        for u in 0..inst.n_offline() {
            for v in 0..inst.n_online() {
                if inst.edge_active(u, v) {
                    edges.push((u, v));
                }
            }
        }
        if edges.len() > 64 {
            return Err(Error::BudgetExceeded {
                what: "MDP edges (bitmask width)",
                estimate: edges.len() as u64,
                budget: 64,
            });
        }
        if inst.n_actions() > 255 || inst.n_offline() + inst.n_online() > 255 {
            return Err(Error::Invalid("instance too large for the exact DP".into()));
        }
        Ok(OptSolver {
            inst,
            edges,
            budget: budgets.dp_states,
            memo: HashMap::new(),
        })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn nu(&self) -> usize {
        self.inst.n_offline()
    }

    pub fn initial_state(&self) -> MdpState {
        let nu = self.nu();
        let mut remaining = Vec::with_capacity(nu + self.inst.n_online());
        for (s, l) in self.inst.offline_patience.iter().chain(&self.inst.online_patience).enumerate() {
            let deg = self
                .edges
                .iter()
                .filter(|&&(u, v)| if s < nu { u == s } else { v == s - nu })
                .count();
            remaining.push(l.cap(deg).min(255) as u8);
        }
        self.canonical(MdpState {
            available: if self.edges.len() == 64 { u64::MAX } else { (1u64 << self.edges.len()) - 1 },
            remaining,
        })
    }

    /// Removes edges that can no longer be queried and caps each remaining
    /// patience at the number of still-available incident edges.
    fn canonical(&self, mut s: MdpState) -> MdpState {
        let nu = self.nu();
        let mut deg = vec![0u8; s.remaining.len()];
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            if s.available >> k & 1 == 1 {
                if s.remaining[u] == 0 || s.remaining[nu + v] == 0 {
                    s.available &= !(1u64 << k);
                } else {
                    deg[u] += 1;
                    deg[nu + v] += 1;
                }
            }
        }
        for (r, d) in s.remaining.iter_mut().zip(deg) {
            *r = (*r).min(d);
        }
        s
    }

    pub fn after_success(&self, s: &MdpState, k: usize) -> MdpState {
        let (u, v) = self.edges[k];
        let nu = self.nu();
        let mut t = s.clone();
        t.remaining[u] = 0;
        t.remaining[nu + v] = 0;
        self.canonical(t)
    }

    pub fn after_failure(&self, s: &MdpState, k: usize) -> MdpState {
        let (u, v) = self.edges[k];
        let nu = self.nu();
        let mut t = s.clone();
        t.available &= !(1u64 << k);
        t.remaining[u] -= 1;
        t.remaining[nu + v] -= 1;
        self.canonical(t)
    }

    pub fn states_expanded(&self) -> u64 {
        self.memo.len() as u64
    }

    /// Optimal expected reward from `s`.
    pub fn value(&mut self, s: &MdpState) -> Result<f64> {
        Ok(self.solve(s)?.0)
    }

    /// Optimal query (edge index into `edges()`, action) at `s`.
    pub fn best_action(&mut self, s: &MdpState) -> Result<Option<(usize, usize)>> {
        Ok(self.solve(s)?.1.map(|(k, a)| (k as usize, a as usize)))
    }

    fn solve(&mut self, s: &MdpState) -> Result<(f64, Option<(u8, u8)>)> {
        if s.available == 0 {
            return Ok((0.0, None));
        }
        if let Some(&hit) = self.memo.get(s) {
            return Ok(hit);
        }
        let mut best: (f64, Option<(u8, u8)>) = (0.0, None);
        let mut bits = s.available;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (u, v) = self.edges[k];
            let vs = self.solve(&self.after_success(s, k))?.0;
            let vf = self.solve(&self.after_failure(s, k))?.0;
            for a in 0..self.inst.n_actions() {
                let q = self.inst.q(u, v, a);
                if q <= 0.0 {
                    continue;
                }
                let val = q * (self.inst.r(u, v, a) + vs) + (1.0 - q) * vf;
                if val > best.0 {
                    best = (val, Some((k as u8, a as u8)));
                }
            }
        }
        if self.memo.len() as u64 >= self.budget {
            return Err(Error::BudgetExceeded {
                what: "MDP states",
                estimate: self.memo.len() as u64 + 1,
                budget: self.budget,
            });
        }
        self.memo.insert(s.clone(), best);
        Ok(best)
    }
}

pub fn opt_dp(inst: &Instance, budgets: &Budgets) -> Result<OptResult> {
    let mut solver = OptSolver::new(inst, budgets)?;
    let root = solver.initial_state();
    let (value, first) = solver.solve(&root)?;
    Ok(OptResult {
        value,
        states_expanded: solver.states_expanded(),
        first_action: first.map(|(k, a)| {
            let (u, v) = solver.edges[k as usize];
            (u, v, a as usize)
        }),
    })
}

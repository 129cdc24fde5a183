//! Rounding a configuration LP solution into a probing policy.
//!
//! `relaxed` samples a configuration per online vertex and probes it,
//! ignoring offline constraints; `full` routes every probe of an offline
//! vertex through that vertex's contention resolution scheme and replaces
//! declined probes by simulated coin flips so suggestions keep their
//! marginals.

use crate::prcrs::{PrcrsInput, Scheme, SchemeFamily, SchemeState};
use crate::report::{Moments, SimReport};
use crate::rng::{self, StreamKey};
use crate::{Instance, LpSolution, Result};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Relaxed,
    Full,
    Greedy,
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "relaxed" => Ok(Policy::Relaxed),
            "full" => Ok(Policy::Full),
            "greedy" => Ok(Policy::Greedy),
            _ => Err(format!("unknown policy {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QueryLog {
    pub u: usize,
    pub v: usize,
    pub a: usize,
    /// False for a simulated coin flip.
    pub real: bool,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutcome {
    /// Matched (u, v, action).
    pub matching: Vec<(usize, usize, usize)>,
    pub reward: f64,
    pub queries: Vec<QueryLog>,
    pub order: Vec<usize>,
    /// Suggested (u, v, action) triples, in order.
    pub suggestions: Vec<(usize, usize, usize)>,
}

impl RunOutcome {
    /// Matching validity, patience accounting and reward consistency.
    /// `two_sided` also requires offline vertices to be matched at most once.
    pub fn check(&self, inst: &Instance, two_sided: bool) -> std::result::Result<(), String> {
        let mut seen_v = HashSet::new();
        let mut seen_u = HashSet::new();
        let mut reward = 0.0;
        for &(u, v, a) in &self.matching {
            if !seen_v.insert(v) {
                return Err(format!("online {v} matched twice"));
            }
            if two_sided && !seen_u.insert(u) {
                return Err(format!("offline {u} matched twice"));
            }
            reward += inst.r(u, v, a);
        }
        if (reward - self.reward).abs() > 1e-9 * (1.0 + reward.abs()) {
            return Err(format!("reward {} but matched edges sum to {reward}", self.reward));
        }
        let mut edges = HashSet::new();
        let mut per_u = vec![0usize; inst.n_offline()];
        let mut per_v = vec![0usize; inst.n_online()];
        for q in self.queries.iter().filter(|q| q.real) {
            if !edges.insert((q.u, q.v)) {
                return Err(format!("edge ({},{}) queried twice", q.u, q.v));
            }
            per_u[q.u] += 1;
            per_v[q.v] += 1;
            if q.success != self.matching.contains(&(q.u, q.v, q.a)) {
                return Err(format!("query ({},{}) success does not match the matching", q.u, q.v));
            }
        }
        for (v, &k) in per_v.iter().enumerate() {
            if k > inst.online_patience[v].cap(usize::MAX) {
                return Err(format!("online {v} queried {k} times"));
            }
        }
        if two_sided {
            for (u, &k) in per_u.iter().enumerate() {
                if k > inst.offline_patience[u].cap(usize::MAX) {
                    return Err(format!("offline {u} queried {k} times"));
                }
            }
        }
        Ok(())
    }
}

/// Source of the three kinds of randomness a run consumes.
pub trait BitSource {
    /// Real state Q_{u,v}(a).
    fn real(&mut self, u: usize, v: usize, a: usize) -> bool;
    /// Simulated state Q~_{u,v}(a).
    fn simulated(&mut self, u: usize, v: usize, a: usize) -> bool;
    /// Uniform draw behind the attenuation bit of (u, v).
    fn attenuation(&mut self, u: usize, v: usize) -> f64;
}

/// Bits read at fixed counter positions of seeded streams.
pub struct SeededBits<'a> {
    inst: &'a Instance,
    q: ChaCha8Rng,
    qt: ChaCha8Rng,
    att: ChaCha8Rng,
}

impl<'a> SeededBits<'a> {
    pub fn new(inst: &'a Instance, keys: &RunKeys, trial: u64) -> Self {
        SeededBits {
            inst,
            q: keys.q.rng(trial),
            qt: keys.qtilde.rng(trial),
            att: keys.attenuation.rng(trial),
        }
    }
}

impl BitSource for SeededBits<'_> {
    fn real(&mut self, u: usize, v: usize, a: usize) -> bool {
        rng::uniform_at(&mut self.q, self.inst.pair_index(u, v, a) as u64) < self.inst.q(u, v, a)
    }
    fn simulated(&mut self, u: usize, v: usize, a: usize) -> bool {
        rng::uniform_at(&mut self.qt, self.inst.pair_index(u, v, a) as u64) < self.inst.q(u, v, a)
    }
    fn attenuation(&mut self, u: usize, v: usize) -> f64 {
        rng::uniform_at(&mut self.att, (u * self.inst.n_online() + v) as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Real(usize, usize, usize),
    Simulated(usize, usize, usize),
    Attenuation(usize, usize),
}

/// Wraps a source and records what was read.
pub struct Recording<B> {
    pub inner: B,
    pub read: Vec<(Slot, f64)>,
}

impl<B: BitSource> BitSource for Recording<B> {
    fn real(&mut self, u: usize, v: usize, a: usize) -> bool {
        let b = self.inner.real(u, v, a);
        self.read.push((Slot::Real(u, v, a), b as u8 as f64));
        b
    }
    fn simulated(&mut self, u: usize, v: usize, a: usize) -> bool {
        let b = self.inner.simulated(u, v, a);
        self.read.push((Slot::Simulated(u, v, a), b as u8 as f64));
        b
    }
    fn attenuation(&mut self, u: usize, v: usize) -> f64 {
        let x = self.inner.attenuation(u, v);
        self.read.push((Slot::Attenuation(u, v), x));
        x
    }
}

/// Replays recorded reads and inverts every slot that was never read.
pub struct Flipped<B> {
    pub inner: B,
    pub recorded: std::collections::HashMap<Slot, f64>,
}

impl<B: BitSource> BitSource for Flipped<B> {
    fn real(&mut self, u: usize, v: usize, a: usize) -> bool {
        match self.recorded.get(&Slot::Real(u, v, a)) {
            Some(&b) => b > 0.5,
            None => !self.inner.real(u, v, a),
        }
    }
    fn simulated(&mut self, u: usize, v: usize, a: usize) -> bool {
        match self.recorded.get(&Slot::Simulated(u, v, a)) {
            Some(&b) => b > 0.5,
            None => !self.inner.simulated(u, v, a),
        }
    }
    fn attenuation(&mut self, u: usize, v: usize) -> f64 {
        match self.recorded.get(&Slot::Attenuation(u, v)) {
            Some(&x) => x,
            None => 1.0 - self.inner.attenuation(u, v),
        }
    }
}

/// Stream keys for one evaluation.
#[derive(Clone, Debug)]
pub struct RunKeys {
    pub permutation: StreamKey,
    pub configs: StreamKey,
    pub q: StreamKey,
    pub qtilde: StreamKey,
    pub attenuation: StreamKey,
}

impl RunKeys {
    pub fn new(seed: u64) -> Self {
        RunKeys {
            permutation: StreamKey::new(seed, rng::PERMUTATION),
            configs: StreamKey::new(seed, rng::CONFIG_SAMPLING),
            q: StreamKey::new(seed, rng::Q_BITS),
            qtilde: StreamKey::new(seed, rng::QTILDE_BITS),
            attenuation: StreamKey::new(seed, rng::ATTENUATION_BITS),
        }
    }
}

/// Everything a run needs, prepared once per (instance, solution).
pub struct Rounder<'a> {
    inst: &'a Instance,
    solution: &'a LpSolution,
    /// Per online vertex: (cumulative weight, index into solution.weights).
    tables: Vec<Vec<(f64, usize)>>,
    /// Per offline vertex scheme, elements are online vertices.
    schemes: Vec<Scheme>,
    pub family: SchemeFamily,
}

impl<'a> Rounder<'a> {
    pub fn new(inst: &'a Instance, solution: &'a LpSolution, family: SchemeFamily) -> Self {
        let mut tables = vec![Vec::new(); inst.n_online()];
        for (k, (cfg, z)) in solution.weights.iter().enumerate() {
            let t = &mut tables[cfg.v];
            let prev = t.last().map_or(0.0, |&(c, _)| c);
            t.push((prev + z, k));
        }
        let schemes = (0..inst.n_offline())
            .map(|u| Scheme::for_input(&Self::scheme_input_of(inst, solution, u), family))
            .collect();
        Rounder {
            inst,
            solution,
            tables,
            schemes,
            family,
        }
    }

    /// The contention resolution input of offline vertex `u`: elements are
    /// online vertices, states q_{u,v}(a), suggestions z~_{u,v}(a).
    pub fn scheme_input(&self, u: usize) -> PrcrsInput {
        Self::scheme_input_of(self.inst, self.solution, u)
    }

    fn scheme_input_of(inst: &Instance, solution: &LpSolution, u: usize) -> PrcrsInput {
        let na = inst.n_actions();
        let p = (0..inst.n_online()).map(|v| (0..na).map(|a| inst.q(u, v, a)).collect()).collect();
        let x = (0..inst.n_online())
            .map(|v| (0..na).map(|a| solution.marginals.get(u, v, a).clamp(0.0, 1.0)).collect())
            .collect();
        PrcrsInput {
            patience: inst.offline_patience[u],
            p,
            x,
        }
    }

    pub fn scheme(&self, u: usize) -> &Scheme {
        &self.schemes[u]
    }

    fn sample_config(&self, v: usize, uniform: f64) -> Option<usize> {
        self.tables[v].iter().find(|&&(c, _)| uniform < c).map(|&(_, k)| k)
    }

    fn order(&self, keys: &RunKeys, trial: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.inst.n_online()).collect();
        order.shuffle(&mut keys.permutation.rng(trial));
        order
    }

    /// Configuration drawn by each online vertex in this trial.
    fn draws(&self, keys: &RunKeys, trial: u64) -> Vec<Option<usize>> {
        let mut r = keys.configs.rng(trial);
        (0..self.inst.n_online())
            .map(|v| self.sample_config(v, rng::uniform_at(&mut r, v as u64)))
            .collect()
    }

    /// One trial of the relaxed rounding.
    pub fn relaxed_trial(&self, keys: &RunKeys, trial: u64) -> RunOutcome {
        let order = self.order(keys, trial);
        let draws = self.draws(keys, trial);
        let mut bits = SeededBits::new(self.inst, keys, trial);
        let mut out = RunOutcome {
            matching: vec![],
            reward: 0.0,
            queries: vec![],
            order: order.clone(),
            suggestions: vec![],
        };
        for &v in &order {
            let Some(k) = draws[v] else { continue };
            let cfg = &self.solution.weights[k].0;
            for (&u, &a) in cfg.edges.iter().zip(&cfg.actions) {
                out.suggestions.push((u, v, a));
                let s = bits.real(u, v, a);
                out.queries.push(QueryLog { u, v, a, real: true, success: s });
                if s {
                    out.matching.push((u, v, a));
                    out.reward += self.inst.r(u, v, a);
                    break;
                }
            }
        }
        out
    }

    /// One trial of the full rounding with the given bit source.
    pub fn full_trial_with<B: BitSource>(&self, keys: &RunKeys, trial: u64, bits: &mut B) -> RunOutcome {
        let order = self.order(keys, trial);
        let draws = self.draws(keys, trial);
        let mut states = vec![SchemeState::default(); self.inst.n_offline()];
        let mut out = RunOutcome {
            matching: vec![],
            reward: 0.0,
            queries: vec![],
            order: order.clone(),
            suggestions: vec![],
        };
        for &v in &order {
            let Some(k) = draws[v] else { continue };
            let cfg = &self.solution.weights[k].0;
            for (&u, &a) in cfg.edges.iter().zip(&cfg.actions) {
                out.suggestions.push((u, v, a));
                // online vertices suggesting nothing to u are no-ops for its
                // scheme, so only suggestions are fed
                let scheme = &self.schemes[u];
                let st = &mut states[u];
                let go = st.can_query(scheme) && st.offer(scheme, v, true, bits.attenuation(u, v));
                if go {
                    let s = bits.real(u, v, a);
                    st.report(v, s);
                    out.queries.push(QueryLog { u, v, a, real: true, success: s });
                    if s {
                        out.matching.push((u, v, a));
                        out.reward += self.inst.r(u, v, a);
                        break;
                    }
                } else {
                    let s = bits.simulated(u, v, a);
                    out.queries.push(QueryLog { u, v, a, real: false, success: s });
                    if s {
                        break;
                    }
                }
            }
        }
        out
    }

    pub fn full_trial(&self, keys: &RunKeys, trial: u64) -> RunOutcome {
        self.full_trial_with(keys, trial, &mut SeededBits::new(self.inst, keys, trial))
    }

    pub fn trial(&self, policy: Policy, keys: &RunKeys, trial: u64) -> RunOutcome {
        match policy {
            Policy::Relaxed => self.relaxed_trial(keys, trial),
            Policy::Full | Policy::Greedy => self.full_trial(keys, trial),
        }
    }

    /// Runs a trial, then reruns it with every unread bit inverted and
    /// reports whether the outcome changed.
    pub fn replay_check(&self, keys: &RunKeys, trial: u64) -> std::result::Result<(), String> {
        let mut rec = Recording {
            inner: SeededBits::new(self.inst, keys, trial),
            read: vec![],
        };
        let first = self.full_trial_with(keys, trial, &mut rec);
        let mut flipped = Flipped {
            inner: SeededBits::new(self.inst, keys, trial),
            recorded: rec.read.into_iter().collect(),
        };
        let second = self.full_trial_with(keys, trial, &mut flipped);
        if first == second {
            Ok(())
        } else {
            Err(format!("trial {trial}: outcome depends on unread bits"))
        }
    }
}

fn rounder_for<'a>(inst: &'a Instance, solution: &'a LpSolution, policy: Policy) -> Rounder<'a> {
    let family = if policy == Policy::Greedy {
        SchemeFamily::Greedy
    } else {
        SchemeFamily::Attenuated
    };
    Rounder::new(inst, solution, family)
}

pub fn relaxed_round(solution: &LpSolution, inst: &Instance, seed: u64) -> RunOutcome {
    Rounder::new(inst, solution, SchemeFamily::Attenuated).relaxed_trial(&RunKeys::new(seed), 0)
}

pub fn full_round(solution: &LpSolution, inst: &Instance, family: SchemeFamily, seed: u64) -> RunOutcome {
    Rounder::new(inst, solution, family).full_trial(&RunKeys::new(seed), 0)
}

pub fn greedy_round(solution: &LpSolution, inst: &Instance, seed: u64) -> RunOutcome {
    full_round(solution, inst, SchemeFamily::Greedy, seed)
}

const CHUNK: u64 = 2048;

/// Mean reward over `trials` independent runs.
pub fn evaluate_policy(policy: Policy, inst: &Instance, solution: &LpSolution, trials: u64, seed: u64) -> Result<SimReport> {
    evaluate_with_log(policy, inst, solution, trials, seed, |_| {}).map(|(r, _)| r)
}

/// As `evaluate_policy`, also returning the per-trial rewards.
pub fn evaluate_with_log(
    policy: Policy,
    inst: &Instance,
    solution: &LpSolution,
    trials: u64,
    seed: u64,
    check: impl Fn(&RunOutcome) + Sync,
) -> Result<(SimReport, Vec<f64>)> {
    if trials == 0 {
        return Err(crate::Error::config("trials", "must be at least 1"));
    }
    let r = rounder_for(inst, solution, policy);
    let keys = RunKeys::new(seed);
    let chunks: Vec<Vec<f64>> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(trials))
                .map(|t| {
                    let o = r.trial(policy, &keys, t);
                    check(&o);
                    o.reward
                })
                .collect()
        })
        .collect();
    let rewards: Vec<f64> = chunks.into_iter().flatten().collect();
    let mut m = Moments::default();
    rewards.iter().for_each(|&x| m.push(x));
    let report = SimReport::from_moments(&m).with_lp(solution.objective);
    Ok((report, rewards))
}

/// How often each (u, v, a) was suggested over `trials` runs, indexed by
/// `Instance::pair_index`.
pub fn suggestion_counts(policy: Policy, inst: &Instance, solution: &LpSolution, trials: u64, seed: u64) -> Vec<u64> {
    let r = rounder_for(inst, solution, policy);
    let keys = RunKeys::new(seed);
    let n = inst.n_pairs();
    (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; n];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                for (u, v, a) in r.trial(policy, &keys, t).suggestions {
                    counts[inst.pair_index(u, v, a)] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0; n],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

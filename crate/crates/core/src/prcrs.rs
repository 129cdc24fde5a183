//! Patience random-order contention resolution.
//!
//! A scheme sees elements in uniformly random order. Each element carries a
//! suggestion (at most one action) and a hidden state per action; the scheme
//! may query at most `patience` suggested elements and must stop at the
//! first successful query.

use crate::rng::{self, StreamKey};
use crate::{Error, Patience, Result, Violation};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::E;

const TOL: f64 = 1e-9;

/// (19 - 67 e^-3) / 27.
pub fn beta() -> f64 {
    (19.0 - 67.0 * (-3.0f64).exp()) / 27.0
}

/// 1 - 1/e.
pub fn one_minus_inv_e() -> f64 {
    1.0 - 1.0 / E
}

/// (4 - e) / e, the greedy guarantee.
pub fn beta0() -> f64 {
    (4.0 - E) / E
}

/// int_0^1 e^{-(3-s) y} (1 + 2y + 2y^2) dy in closed form.
pub fn attenuation_denominator(s: f64) -> f64 {
    let c = 3.0 - s;
    let ec = (-c).exp();
    let i0 = (1.0 - ec) / c;
    let i1 = (1.0 - ec * (1.0 + c)) / (c * c);
    let i2 = 2.0 * (1.0 - ec * (1.0 + c + c * c / 2.0)) / (c * c * c);
    i0 + 2.0 * i1 + 2.0 * i2
}

/// Attenuation for finite patience at least 2.
pub fn attenuation_b(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    (beta() / attenuation_denominator(s)).min(1.0)
}

/// Attenuation for patience 1 or infinite: (1-1/e)(1-s)/(1-e^{-(1-s)}).
pub fn attenuation_b_inf(s: f64) -> f64 {
    let t = 1.0 - s.clamp(0.0, 1.0);
    if t < 1e-8 {
        // series of t / (1 - e^-t)
        return one_minus_inv_e() * (1.0 + t / 2.0);
    }
    (one_minus_inv_e() * t / -(-t).exp_m1()).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeFamily {
    /// The attenuated scheme.
    Attenuated,
    /// Query whenever allowed.
    Greedy,
}

impl SchemeFamily {
    /// Selection guarantee of the family at the given patience.
    pub fn bound(self, patience: Patience) -> f64 {
        match (self, patience) {
            (SchemeFamily::Greedy, _) => beta0(),
            (_, Patience::Finite(l)) if l >= 2 => beta(),
            _ => one_minus_inv_e(),
        }
    }
}

// ------------------------------------------------------------------ input

/// A multi-action input; `p[i][a]` are state probabilities and `x[i][a]`
/// suggestion probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrcrsInput {
    pub patience: Patience,
    pub p: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
}

impl PrcrsInput {
    pub fn single_action(patience: Patience, p: Vec<f64>, x: Vec<f64>) -> Self {
        PrcrsInput {
            patience,
            p: p.into_iter().map(|v| vec![v]).collect(),
            x: x.into_iter().map(|v| vec![v]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn n_actions(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = vec![];
        if self.p.len() != self.x.len() {
            out.push(Violation::new("p", "length differs from x"));
            return out;
        }
        if let Patience::Finite(l) = self.patience {
            if l < 1 {
                out.push(Violation::new("patience", "must be at least 1"));
            }
        }
        let na = self.n_actions();
        let (mut mass, mut pmass) = (0.0, 0.0);
        for i in 0..self.n() {
            if self.x[i].len() != na || self.p[i].len() != na {
                out.push(Violation::new(format!("x[{i}]"), "ragged action list"));
                continue;
            }
            for a in 0..na {
                for (name, v) in [("p", self.p[i][a]), ("x", self.x[i][a])] {
                    if !(0.0..=1.0).contains(&v) {
                        out.push(Violation::new(format!("{name}[{i}][{a}]"), "probability out of range"));
                    }
                }
            }
            let xi: f64 = self.x[i].iter().sum();
            if xi > 1.0 + TOL {
                out.push(Violation::new(format!("x[{i}]"), format!("suggestion mass {xi} exceeds 1")));
            }
            mass += xi;
            pmass += self.p[i].iter().zip(&self.x[i]).map(|(p, x)| p * x).sum::<f64>();
        }
        if let Patience::Finite(l) = self.patience {
            if mass > l as f64 + TOL {
                out.push(Violation::new("x", format!("total mass {mass} exceeds patience {l}")));
            }
        }
        if pmass > 1.0 + TOL {
            out.push(Violation::new("p", format!("success mass {pmass} exceeds 1")));
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        match self.validate().first() {
            None => Ok(()),
            Some(v) => Err(Error::Invalid(v.to_string())),
        }
    }
}

/// Aggregated single-action input: x_i = sum_a x_i(a) and
/// p_i = sum_a p_i(a) x_i(a) / x_i (0 when x_i = 0).
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub patience: Patience,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

pub fn reduce_to_single_action(input: &PrcrsInput) -> Reduction {
    let mut x = Vec::with_capacity(input.n());
    let mut p = Vec::with_capacity(input.n());
    for i in 0..input.n() {
        let xi: f64 = input.x[i].iter().sum();
        let m: f64 = input.p[i].iter().zip(&input.x[i]).map(|(p, x)| p * x).sum();
        x.push(xi.min(1.0));
        p.push(if xi > 0.0 { (m / xi).min(1.0) } else { 0.0 });
    }
    Reduction {
        patience: input.patience,
        x,
        p,
    }
}

/// Coupled single-action (X_i, P_i) from one element's suggestion and action
/// states. `states(a)` is only called for the suggested action; `p_tilde` is
/// only drawn when no action is suggested.
pub fn couple(suggested: Option<usize>, mut states: impl FnMut(usize) -> bool, p_tilde: impl FnOnce() -> bool) -> (bool, bool) {
    match suggested {
        Some(a) => (true, states(a)),
        None => (false, p_tilde()),
    }
}

// ----------------------------------------------------------------- scheme

/// Immutable per-input scheme: attenuation probability per element and the
/// query cap.
#[derive(Clone, Debug, PartialEq)]
pub struct Scheme {
    pub cap: usize,
    pub attenuation: Vec<f64>,
}

impl Scheme {
    pub fn new(red: &Reduction, family: SchemeFamily) -> Self {
        let n = red.x.len();
        let cap = match red.patience {
            Patience::Finite(l) => l.max(0) as usize,
            Patience::Infinite => usize::MAX,
        };
        let attenuation = (0..n)
            .map(|i| match family {
                SchemeFamily::Greedy => 1.0,
                SchemeFamily::Attenuated => match red.patience {
                    Patience::Finite(l) if l >= 2 => attenuation_b(red.p[i] * red.x[i]),
                    Patience::Finite(_) => attenuation_b_inf(red.x[i]),
                    Patience::Infinite => attenuation_b_inf(red.p[i] * red.x[i]),
                },
            })
            .collect();
        Scheme { cap, attenuation }
    }

    pub fn for_input(input: &PrcrsInput, family: SchemeFamily) -> Self {
        Self::new(&reduce_to_single_action(input), family)
    }

    pub fn fresh(&self) -> SchemeState {
        SchemeState::default()
    }
}

/// Mutable state of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SchemeState {
    pub queries: usize,
    pub output: Option<usize>,
}

impl SchemeState {
    /// Arrival of element `i`. `b_uniform` is the uniform draw behind its
    /// attenuation bit. Returns whether to query.
    #[inline]
    pub fn offer(&mut self, scheme: &Scheme, i: usize, suggested: bool, b_uniform: f64) -> bool {
        if suggested && b_uniform < scheme.attenuation[i] && self.queries < scheme.cap && self.output.is_none() {
            self.queries += 1;
            true
        } else {
            false
        }
    }

    /// Outcome of the query just granted to `i`.
    #[inline]
    pub fn report(&mut self, i: usize, success: bool) {
        if success {
            self.output = Some(i);
        }
    }

    pub fn can_query(&self, scheme: &Scheme) -> bool {
        self.queries < scheme.cap && self.output.is_none()
    }
}

// ------------------------------------------------------------------ traces

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pass,
    Query(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrcrsTrace {
    pub order: Vec<usize>,
    /// Suggested action per element.
    pub suggestions: Vec<Option<usize>>,
    /// Revealed state per element; only queried elements are revealed.
    pub states: Vec<Option<bool>>,
    pub attenuation_bits: Vec<bool>,
    /// Decision per element, indexed by element.
    pub decisions: Vec<Decision>,
    pub output: Option<(usize, usize)>,
}

impl PrcrsTrace {
    pub fn queried(&self) -> usize {
        self.decisions.iter().filter(|d| matches!(d, Decision::Query(_))).count()
    }

    /// Checks the run invariants against the patience cap.
    pub fn check(&self, patience: Patience) -> std::result::Result<(), String> {
        if self.queried() > patience.cap(self.decisions.len()) {
            return Err(format!("{} queries exceed patience {patience}", self.queried()));
        }
        for (i, d) in self.decisions.iter().enumerate() {
            if let Decision::Query(a) = *d {
                if self.suggestions[i] != Some(a) {
                    return Err(format!("element {i} queried via unsuggested action {a}"));
                }
                if self.states[i].is_none() {
                    return Err(format!("element {i} queried without a revealed state"));
                }
            } else if self.states[i].is_some() {
                return Err(format!("element {i} revealed without a query"));
            }
        }
        if let Some((i, a)) = self.output {
            if self.decisions[i] != Decision::Query(a) || self.states[i] != Some(true) {
                return Err(format!("output ({i},{a}) was not a successful query"));
            }
            // nothing is queried after the output
            let pos = self.order.iter().position(|&j| j == i).unwrap();
            if self.order[pos + 1..].iter().any(|&j| self.decisions[j] != Decision::Pass) {
                return Err("query after output".into());
            }
        }
        Ok(())
    }
}

/// Runs the scheme on a multi-action input. `suggestions[i]` is the action
/// suggested to element `i`, `states(i, a)` reveals a state and is only
/// called on queries, and `b_uniform(i)` yields the attenuation draw.
pub fn prcrs_multi_action_run(
    scheme: &Scheme,
    order: &[usize],
    suggestions: &[Option<usize>],
    mut states: impl FnMut(usize, usize) -> bool,
    mut b_uniform: impl FnMut(usize) -> f64,
) -> PrcrsTrace {
    let n = suggestions.len();
    let mut trace = PrcrsTrace {
        order: order.to_vec(),
        suggestions: suggestions.to_vec(),
        states: vec![None; n],
        attenuation_bits: vec![false; n],
        decisions: vec![Decision::Pass; n],
        output: None,
    };
    let mut st = scheme.fresh();
    for &i in order {
        let u = b_uniform(i);
        trace.attenuation_bits[i] = u < scheme.attenuation[i];
        if let Some(a) = suggestions[i] {
            if st.offer(scheme, i, true, u) {
                let s = states(i, a);
                trace.decisions[i] = Decision::Query(a);
                trace.states[i] = Some(s);
                st.report(i, s);
                if s {
                    trace.output = Some((i, a));
                }
            }
        }
    }
    trace
}

/// Single-action run: suggestions are bits and states take only the element.
pub fn prcrs_run(
    scheme: &Scheme,
    order: &[usize],
    suggestions: &[bool],
    mut states: impl FnMut(usize) -> bool,
    b_uniform: impl FnMut(usize) -> f64,
) -> PrcrsTrace {
    let sugg: Vec<Option<usize>> = suggestions.iter().map(|&s| s.then_some(0)).collect();
    prcrs_multi_action_run(scheme, order, &sugg, |i, _| states(i), b_uniform)
}

/// Draws the suggested action of every element: action a with probability
/// x_i(a), none with the remaining probability.
pub fn draw_suggestions<R: Rng>(input: &PrcrsInput, rng: &mut R) -> Vec<Option<usize>> {
    input
        .x
        .iter()
        .map(|xi| {
            let mut u: f64 = rng.gen();
            for (a, &x) in xi.iter().enumerate() {
                if u < x {
                    return Some(a);
                }
                u -= x;
            }
            None
        })
        .collect()
}

/// Uniform permutation of 0..n.
pub fn random_order<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Order induced by i.i.d. uniform arrival times; ties go to the lower index.
pub fn arrival_time_order<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let times: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    order
}

/// One seeded trial: everything is drawn from the trial's own streams.
pub fn sample_trace(input: &PrcrsInput, scheme: &Scheme, keys: &TrialKeys, trial: u64) -> PrcrsTrace {
    let mut perm = keys.permutation.rng(trial);
    let mut sugg = keys.suggestions.rng(trial);
    let mut states = keys.states.rng(trial);
    let mut atten = keys.attenuation.rng(trial);
    let order = random_order(input.n(), &mut perm);
    let suggestions = draw_suggestions(input, &mut sugg);
    let na = input.n_actions() as u64;
    prcrs_multi_action_run(
        scheme,
        &order,
        &suggestions,
        |i, a| rng::uniform_at(&mut states, i as u64 * na + a as u64) < input.p[i][a],
        |_| atten.gen(),
    )
}

/// Stream keys shared by all trials of one estimate.
#[derive(Clone, Debug)]
pub struct TrialKeys {
    pub permutation: StreamKey,
    pub suggestions: StreamKey,
    pub states: StreamKey,
    pub attenuation: StreamKey,
}

impl TrialKeys {
    pub fn new(seed: u64) -> Self {
        TrialKeys {
            permutation: StreamKey::new(seed, rng::PERMUTATION),
            suggestions: StreamKey::new(seed, rng::SUGGESTIONS),
            states: StreamKey::new(seed, rng::STATES),
            attenuation: StreamKey::new(seed, rng::ATTENUATION_BITS),
        }
    }
}

// ------------------------------------------------------------ estimation

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectabilityRow {
    pub i: usize,
    pub a: usize,
    pub x: f64,
    pub p: f64,
    pub suggested: u64,
    pub queried: u64,
    pub estimate: f64,
    /// 95% Wilson half-width.
    pub half_width: f64,
    /// Standard error at the bound, sqrt(bound (1 - bound) / suggested).
    pub sigma: f64,
    pub bound: f64,
    pub pass: bool,
}

/// 95% Wilson score interval (center, half-width) for k successes in n.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.5, 0.5);
    }
    let z = 1.96f64;
    let n = n as f64;
    let ph = k as f64 / n;
    let d = 1.0 + z * z / n;
    let c = (ph + z * z / (2.0 * n)) / d;
    let h = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / d;
    (c, h)
}

/// Monte Carlo estimate of P[i queried via a | X_i(a) = 1] for every pair
/// with positive suggestion probability. Passing means estimate >= bound -
/// 4 sigma.
pub fn estimate_selectability(
    input: &PrcrsInput,
    family: SchemeFamily,
    trials: u64,
    seed: u64,
) -> Result<Vec<SelectabilityRow>> {
    input.ensure_valid()?;
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let scheme = Scheme::for_input(input, family);
    let keys = TrialKeys::new(seed);
    let na = input.n_actions();
    let cells = input.n() * na;
    const CHUNK: u64 = 4096;
    let n_chunks = trials.div_ceil(CHUNK);
    let (sugg, quer) = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = vec![0u64; cells];
            let mut q = vec![0u64; cells];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let tr = sample_trace(input, &scheme, &keys, t);
                for (i, sa) in tr.suggestions.iter().enumerate() {
                    if let Some(a) = *sa {
                        s[i * na + a] += 1;
                        if tr.decisions[i] == Decision::Query(a) {
                            q[i * na + a] += 1;
                        }
                    }
                }
            }
            (s, q)
        })
        .reduce(
            || (vec![0; cells], vec![0; cells]),
            |(mut s1, mut q1), (s2, q2)| {
                s1.iter_mut().zip(&s2).for_each(|(a, b)| *a += b);
                q1.iter_mut().zip(&q2).for_each(|(a, b)| *a += b);
                (s1, q1)
            },
        );
    let bound = family.bound(input.patience);
    let mut rows = vec![];
    for i in 0..input.n() {
        for a in 0..na {
            if input.x[i][a] <= 0.0 {
                continue;
            }
            let (k, n) = (quer[i * na + a], sugg[i * na + a]);
            let estimate = if n > 0 { k as f64 / n as f64 } else { f64::NAN };
            let sigma = if n > 0 { (bound * (1.0 - bound) / n as f64).sqrt() } else { f64::INFINITY };
            rows.push(SelectabilityRow {
                i,
                a,
                x: input.x[i][a],
                p: input.p[i][a],
                suggested: n,
                queried: k,
                estimate,
                half_width: wilson(k, n).1,
                sigma,
                bound,
                pass: n == 0 || estimate >= bound - 4.0 * sigma,
            });
        }
    }
    Ok(rows)
}

/// Worst-case style input: `n1` elements with p = 1 sharing success mass 1
/// and `n0` elements with p = 0 sharing the remaining patience mass.
pub fn poisson_regime_input(patience: i64, n1: usize, n0: usize) -> PrcrsInput {
    let mut p = vec![1.0; n1];
    let mut x = vec![1.0 / n1 as f64; n1];
    let rest = (patience - 1) as f64;
    if n0 > 0 && rest > 0.0 {
        p.extend(std::iter::repeat(0.0).take(n0));
        x.extend(std::iter::repeat(rest / n0 as f64).take(n0));
    }
    PrcrsInput::single_action(Patience::Finite(patience), p, x)
}

//! Approximation scheme for the star problem.
//!
//! Guess an estimate E of the optimum, the number K of large drops of the
//! future value along an optimal ordering, and grid values (step eps^2 E)
//! for the future value after each of the 2K+1 buckets and for each
//! bucket's drop. Each guess becomes an assignment problem of edges to
//! buckets with load lower bounds, solved here exactly by branch and bound.
//! A feasible assignment is turned into an ordering, last bucket first.

use crate::exact::{star_future_values, StarInstance, StarPolicy};
use crate::lp::{solve_generic_lp, LpProblem};
use crate::{Budgets, Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashSet;

const LOAD_TOL: f64 = 1e-9;

/// Checks eps in (0,1) with 1/eps an integer and returns 1/eps.
pub fn inverse_eps(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    let k = (1.0 / eps).round();
    if (k * eps - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("1/eps must be an integer, got eps = {eps}")));
    }
    Ok(k as usize)
}

/// Optimum of the star's edge LP: max sum r q z s.t. sum q z <= 1,
/// sum z <= l, sum_a z_e(a) <= 1.
pub fn star_lp_value(star: &StarInstance) -> Result<f64> {
    let (n, na) = (star.n_edges(), star.n_actions());
    if n == 0 || na == 0 {
        return Ok(0.0);
    }
    let idx = |e: usize, a: usize| e * na + a;
    let mut c = vec![0.0; n * na];
    let mut qrow = vec![0.0; n * na];
    for e in 0..n {
        for a in 0..na {
            c[idx(e, a)] = star.r[e][a] * star.q[e][a];
            qrow[idx(e, a)] = star.q[e][a];
        }
    }
    let mut a = vec![qrow];
    let mut b = vec![1.0];
    if !star.patience.is_infinite() {
        a.push(vec![1.0; n * na]);
        b.push(star.cap() as f64);
    }
    for e in 0..n {
        let mut row = vec![0.0; n * na];
        row[e * na..(e + 1) * na].iter_mut().for_each(|x| *x = 1.0);
        a.push(row);
        b.push(1.0);
    }
    Ok(solve_generic_lp(&LpProblem { c, a, b })?.value)
}

/// Powers of (1+eps) in [lp / (2 (1+eps)), lp], ascending. The lower end is
/// widened by one factor so that the largest power not above the optimum is
/// always included.
pub fn candidates_from_lp(lp: f64, eps: f64) -> Vec<f64> {
    if lp <= 0.0 {
        return vec![];
    }
    let base = 1.0 + eps;
    let lo = lp / (2.0 * base);
    let mut k = (lo.ln() / base.ln()).ceil() as i32;
    let mut out = vec![];
    loop {
        let e = base.powi(k);
        if e > lp * (1.0 + 1e-12) {
            break;
        }
        if e >= lo * (1.0 - 1e-12) {
            out.push(e);
        }
        k += 1;
    }
    out
}

pub fn estimate_opt(star: &StarInstance, eps: f64) -> Result<Vec<f64>> {
    inverse_eps(eps)?;
    Ok(candidates_from_lp(star_lp_value(star)?, eps))
}

/// max_a [(r_j(a) - base) q_j(a)]^+
pub fn load(star: &StarInstance, j: usize, base: f64) -> f64 {
    (0..star.n_actions())
        .map(|a| ((star.r[j][a] - base) * star.q[j][a]).max(0.0))
        .fold(0.0, f64::max)
}

/// Buckets B_1..B_M, M = 2K+1; odd buckets (1-based) are stable, even ones
/// are jumps. Guesses are grid indices; the value of index g is g eps^2 E.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BucketPlan {
    pub estimate: f64,
    pub eps: f64,
    pub k: usize,
    pub base: Vec<usize>,
    pub delta: Vec<usize>,
}

impl BucketPlan {
    pub fn n_buckets(&self) -> usize {
        2 * self.k + 1
    }

    /// 0-based bucket index.
    pub fn is_jump(&self, i: usize) -> bool {
        i % 2 == 1
    }

    pub fn step(&self) -> f64 {
        self.eps * self.eps * self.estimate
    }

    pub fn grid(&self) -> usize {
        (1.0 / (self.eps * self.eps)).round() as usize
    }

    pub fn base_value(&self, i: usize) -> f64 {
        self.base[i] as f64 * self.step()
    }

    pub fn delta_value(&self, i: usize) -> f64 {
        self.delta[i] as f64 * self.step()
    }

    pub fn is_well_formed(&self) -> bool {
        let m = self.n_buckets();
        let g = self.grid();
        self.base.len() == m
            && self.delta.len() == m
            && self.base.iter().chain(&self.delta).all(|&x| x <= g)
    }
}

/// bucket[j] = Some(i) when edge j is assigned to bucket i (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub bucket: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment { bucket: vec![None; n] }
    }

    pub fn n_assigned(&self) -> usize {
        self.bucket.iter().flatten().count()
    }

    pub fn loads(&self, plan: &BucketPlan, star: &StarInstance) -> Vec<f64> {
        let mut l = vec![0.0; plan.n_buckets()];
        for (j, b) in self.bucket.iter().enumerate() {
            if let Some(i) = *b {
                l[i] += load(star, j, plan.base_value(i));
            }
        }
        l
    }

    /// All assignment constraints, with load lower bounds met up to a small
    /// tolerance.
    pub fn is_feasible(&self, plan: &BucketPlan, star: &StarInstance) -> bool {
        let m = plan.n_buckets();
        if self.bucket.len() != star.n_edges() || self.bucket.iter().flatten().any(|&i| i >= m) {
            return false;
        }
        if self.n_assigned() > star.cap() {
            return false;
        }
        for i in (0..m).filter(|&i| plan.is_jump(i)) {
            if self.bucket.iter().filter(|&&b| b == Some(i)).count() > 1 {
                return false;
            }
        }
        let tol = LOAD_TOL * (1.0 + plan.estimate);
        self.loads(plan, star)
            .iter()
            .enumerate()
            .all(|(i, &l)| l >= plan.delta_value(i) - tol)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IpStats {
    pub nodes: u64,
}

/// Exact feasibility search for the bucket assignment problem. Edges are
/// decided in index order; each edge tries buckets 1..M and then no bucket.
pub fn solve_ip_th(plan: &BucketPlan, star: &StarInstance, budgets: &Budgets) -> Result<Option<Assignment>> {
    let mut stats = IpStats::default();
    solve_ip_th_counted(plan, star, budgets, &mut stats)
}

pub fn solve_ip_th_counted(
    plan: &BucketPlan,
    star: &StarInstance,
    budgets: &Budgets,
    stats: &mut IpStats,
) -> Result<Option<Assignment>> {
    let n = star.n_edges();
    let m = plan.n_buckets();
    let c: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| load(star, j, plan.base_value(i))).collect())
        .collect();
    let tol = LOAD_TOL * (1.0 + plan.estimate);
    let need: Vec<f64> = (0..m).map(|i| plan.delta_value(i) - tol).collect();
    // suffix[i][j] = sum of c[i][j..]
    let suffix: Vec<Vec<f64>> = c
        .iter()
        .map(|row| {
            let mut s = vec![0.0; n + 1];
            for j in (0..n).rev() {
                s[j] = s[j + 1] + row[j];
            }
            s
        })
        .collect();
    struct Search<'a> {
        n: usize,
        m: usize,
        cap: usize,
        c: &'a [Vec<f64>],
        need: &'a [f64],
        suffix: &'a [Vec<f64>],
        jump: Vec<bool>,
        loads: Vec<f64>,
        used: Vec<usize>,
        assigned: usize,
        bucket: Vec<Option<usize>>,
        nodes: u64,
        budget: u64,
    }
    impl Search<'_> {
        fn go(&mut self, j: usize) -> Result<bool> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::BudgetExceeded {
                    what: "assignment search nodes",
                    estimate: self.nodes,
                    budget: self.budget,
                });
            }
            let mut unmet = 0;
            for i in 0..self.m {
                if self.loads[i] < self.need[i] {
                    if self.loads[i] + self.suffix[i][j] < self.need[i] {
                        return Ok(false);
                    }
                    unmet += 1;
                }
            }
            if unmet == 0 {
                return Ok(true);
            }
            if j == self.n || unmet > self.cap - self.assigned || unmet > self.n - j {
                return Ok(false);
            }
            if self.assigned < self.cap {
                for i in 0..self.m {
                    if self.jump[i] && self.used[i] > 0 {
                        continue;
                    }
                    if self.c[i][j] <= 0.0 && self.loads[i] < self.need[i] {
                        // a zero load cannot help an unmet bucket
                        continue;
                    }
                    if self.loads[i] >= self.need[i] {
                        // met buckets never need more edges
                        continue;
                    }
                    self.loads[i] += self.c[i][j];
                    self.used[i] += 1;
                    self.assigned += 1;
                    self.bucket[j] = Some(i);
                    if self.go(j + 1)? {
                        return Ok(true);
                    }
                    self.bucket[j] = None;
                    self.assigned -= 1;
                    self.used[i] -= 1;
                    self.loads[i] -= self.c[i][j];
                }
            }
            self.go(j + 1)
        }
    }
    let mut s = Search {
        n,
        m,
        cap: star.cap(),
        c: &c,
        need: &need,
        suffix: &suffix,
        jump: (0..m).map(|i| plan.is_jump(i)).collect(),
        loads: vec![0.0; m],
        used: vec![0; m],
        assigned: 0,
        bucket: vec![None; n],
        nodes: 0,
        budget: budgets.ip_nodes,
    };
    let found = s.go(0)?;
    stats.nodes += s.nodes;
    Ok(found.then(|| Assignment { bucket: s.bucket }))
}

/// Ordering B_M first, ..., B_1 last; ascending edge id inside a bucket.
pub fn reconstruct_order(assignment: &Assignment, plan: &BucketPlan) -> Vec<usize> {
    let mut order = vec![];
    for i in (0..plan.n_buckets()).rev() {
        for (j, b) in assignment.bucket.iter().enumerate() {
            if *b == Some(i) {
                order.push(j);
            }
        }
    }
    order
}

pub fn reconstruct(assignment: &Assignment, plan: &BucketPlan, star: &StarInstance) -> StarPolicy {
    StarPolicy::from_order(star, reconstruct_order(assignment, plan))
}

/// Upper bound on the number of (base, delta) guesses for one estimate.
pub fn guess_count(inv_eps: usize) -> u64 {
    let g = (inv_eps * inv_eps) as u64;
    let mut total: u64 = 0;
    for k in 0..=inv_eps as u64 {
        let m = 2 * k + 1;
        // nondecreasing bases for buckets 2..M in 0..=G: C(G + M - 1, M - 1)
        let mut bases: u64 = 1;
        for t in 0..(m - 1) {
            bases = bases.saturating_mul(g + 1 + t) / (t + 1);
        }
        let deltas = 2u64.saturating_pow((m - 1) as u32).saturating_mul(g + 1);
        total = total.saturating_add(bases.saturating_mul(deltas));
    }
    total
}

/// Calls `f` on every guess for the given estimate and K. Guesses are the
/// grid indices a truth-rounded plan can take: base_1 = 0, bases
/// nondecreasing, each delta within one step below the base difference (any
/// value up to the grid top once the next base is clamped), jump deltas at
/// least 1/eps steps.
pub fn for_each_plan(estimate: f64, eps: f64, k: usize, mut f: impl FnMut(&BucketPlan) -> Result<()>) -> Result<()> {
    let inv = (1.0 / eps).round() as usize;
    let g = inv * inv;
    let m = 2 * k + 1;
    let mut plan = BucketPlan {
        estimate,
        eps,
        k,
        base: vec![0; m],
        delta: vec![0; m],
    };
    fn deltas(plan: &mut BucketPlan, i: usize, g: usize, inv: usize, f: &mut dyn FnMut(&BucketPlan) -> Result<()>) -> Result<()> {
        let m = plan.n_buckets();
        if i == m {
            return f(plan);
        }
        let (mut lo, hi) = if i + 1 == m {
            (0, g)
        } else {
            let (b0, b1) = (plan.base[i], plan.base[i + 1]);
            let d = b1 - b0;
            (d.saturating_sub(1), if b1 == g { g } else { d })
        };
        if plan.is_jump(i) {
            lo = lo.max(inv);
        }
        for d in lo..=hi.min(g) {
            plan.delta[i] = d;
            deltas(plan, i + 1, g, inv, f)?;
        }
        Ok(())
    }
    fn bases(plan: &mut BucketPlan, i: usize, g: usize, inv: usize, f: &mut dyn FnMut(&BucketPlan) -> Result<()>) -> Result<()> {
        if i == plan.n_buckets() {
            return deltas(plan, 0, g, inv, f);
        }
        for b in plan.base[i - 1]..=g {
            plan.base[i] = b;
            bases(plan, i + 1, g, inv, f)?;
        }
        Ok(())
    }
    if m == 1 {
        return deltas(&mut plan, 0, g, inv, &mut f);
    }
    bases(&mut plan, 1, g, inv, &mut f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EptasResult {
    pub policy: StarPolicy,
    pub lp_value: f64,
    pub candidates: Vec<f64>,
    pub guesses_tried: u64,
    pub feasible_guesses: u64,
    pub ip_nodes: u64,
}

/// Best reconstructed policy over all estimates, K and guesses.
pub fn eptas(star: &StarInstance, eps: f64, budgets: &Budgets) -> Result<EptasResult> {
    let inv = inverse_eps(eps)?;
    let lp_value = star_lp_value(star)?;
    let candidates = candidates_from_lp(lp_value, eps);
    let estimate = guess_count(inv).saturating_mul(candidates.len() as u64);
    if estimate > budgets.eptas_guesses {
        return Err(Error::BudgetExceeded {
            what: "eptas guesses",
            estimate,
            budget: budgets.eptas_guesses,
        });
    }
    let jobs: Vec<(f64, usize)> = candidates.iter().flat_map(|&e| (0..=inv).map(move |k| (e, k))).collect();
    struct Part {
        best: StarPolicy,
        tried: u64,
        feasible: u64,
        nodes: u64,
    }
    let parts: Vec<Result<Part>> = jobs
        .par_iter()
        .map(|&(e, k)| {
            let mut part = Part {
                best: StarPolicy::empty(),
                tried: 0,
                feasible: 0,
                nodes: 0,
            };
            let mut seen: HashSet<Vec<usize>> = HashSet::new();
            let mut stats = IpStats::default();
            for_each_plan(e, eps, k, |plan| {
                part.tried += 1;
                if let Some(asg) = solve_ip_th_counted(plan, star, budgets, &mut stats)? {
                    part.feasible += 1;
                    let order = reconstruct_order(&asg, plan);
                    if seen.insert(order.clone()) {
                        let p = StarPolicy::from_order(star, order);
                        if p.value > part.best.value {
                            part.best = p;
                        }
                    }
                }
                Ok(())
            })?;
            part.nodes = stats.nodes;
            Ok(part)
        })
        .collect();
    let mut res = EptasResult {
        policy: StarPolicy::empty(),
        lp_value,
        candidates,
        guesses_tried: 0,
        feasible_guesses: 0,
        ip_nodes: 0,
    };
    for p in parts {
        let p = p?;
        res.guesses_tried += p.tried;
        res.feasible_guesses += p.feasible;
        res.ip_nodes += p.nodes;
        if p.best.value > res.policy.value {
            res.policy = p.best;
        }
    }
    Ok(res)
}

// ------------------------------------------------------------- analysis

/// Positions (0-based) i with R_i - R_{i+1} >= eps R_1.
pub fn jumps(values: &[f64], eps: f64) -> Vec<usize> {
    let r1 = values.first().copied().unwrap_or(0.0);
    (0..values.len().saturating_sub(1))
        .filter(|&i| values[i] - values[i + 1] >= eps * r1 && r1 > 0.0)
        .collect()
}

/// Bucket of each position of an ordering with the given jump positions,
/// as 0-based bucket indices (B_1 = 0 holds the positions after the last
/// jump).
pub fn position_buckets(len: usize, jumps: &[usize]) -> Vec<usize> {
    let k = jumps.len();
    (0..len)
        .map(|p| {
            // number of jumps strictly after p, and whether p is a jump
            let after = jumps.iter().filter(|&&t| t > p).count();
            if jumps.contains(&p) {
                2 * after + 1
            } else {
                2 * after.min(k)
            }
        })
        .collect()
}

/// Plan and assignment read off a policy whose future values are strictly
/// decreasing, with guesses rounded down to the grid of `estimate`.
pub fn truth_plan(star: &StarInstance, policy: &StarPolicy, estimate: f64, eps: f64) -> (BucketPlan, Assignment) {
    let fv = star_future_values(star, &policy.edges);
    let vals = &fv.values;
    let len = policy.edges.len();
    let js = jumps(vals, eps);
    let k = js.len();
    let m = 2 * k + 1;
    let pb = position_buckets(len, &js);
    // BaseVal(B_i) = R at the position right after the bucket's last one;
    // an empty bucket uses the start of the bucket below it.
    let mut base_val = vec![0.0; m + 1];
    for i in 0..m {
        // first position of any lower bucket (i' < i), or len
        let after = (0..len).find(|&p| pb[p] < i).unwrap_or(len);
        base_val[i] = vals[after];
    }
    base_val[m] = vals[0];
    let inv = (1.0 / eps).round() as usize;
    let g = inv * inv;
    let step = eps * eps * estimate;
    let round = |x: f64| (((x / step) + 1e-9).floor().max(0.0) as usize).min(g);
    let base: Vec<usize> = (0..m).map(|i| round(base_val[i])).collect();
    let delta: Vec<usize> = (0..m).map(|i| round(base_val[i + 1] - base_val[i])).collect();
    let mut bucket = vec![None; star.n_edges()];
    for (p, &e) in policy.edges.iter().enumerate() {
        bucket[e] = Some(pb[p]);
    }
    (
        BucketPlan {
            estimate,
            eps,
            k,
            base,
            delta,
        },
        Assignment { bucket },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Patience;

    fn star(edges: &[(f64, f64)], l: Patience) -> StarInstance {
        StarInstance::new(
            edges.iter().map(|e| vec![e.0]).collect(),
            edges.iter().map(|e| vec![e.1]).collect(),
            l,
        )
    }

    #[test]
    fn load_examples() {
        let s = StarInstance::new(vec![vec![0.5, 0.9]], vec![vec![5.0, 3.5]], Patience::Finite(1));
        assert!((load(&s, 0, 3.0) - 1.0).abs() < 1e-15);
        assert_eq!(load(&s, 0, 10.0), 0.0);
    }

    #[test]
    fn single_edge() {
        let s = star(&[(1.0, 1.0)], Patience::Finite(1));
        let c = estimate_opt(&s, 0.5).unwrap();
        assert!(!c.is_empty() && c.iter().all(|&e| e <= 1.0 + 1e-12 && e >= 1.0 / 3.0));
        let r = eptas(&s, 0.5, &Budgets::default()).unwrap();
        assert_eq!(r.policy.edges, vec![0]);
        assert_eq!(r.policy.value, 1.0);
    }

    #[test]
    fn trivial_plans() {
        let s = star(&[(1.0, 1.0)], Patience::Finite(1));
        let plan = BucketPlan {
            estimate: 1.0,
            eps: 0.5,
            k: 0,
            base: vec![0],
            delta: vec![0],
        };
        assert_eq!(solve_ip_th(&plan, &s, &Budgets::default()).unwrap(), Some(Assignment::empty(1)));
        let plan = BucketPlan { delta: vec![4], ..plan };
        let a = solve_ip_th(&plan, &s, &Budgets::default()).unwrap().unwrap();
        assert_eq!(a.bucket, vec![Some(0)]);
        assert_eq!(reconstruct(&Assignment::empty(1), &plan, &s), StarPolicy::from_order(&s, vec![]));
    }

    #[test]
    fn inverse_eps_checks() {
        assert_eq!(inverse_eps(0.25).unwrap(), 4);
        assert!(inverse_eps(0.3).is_err());
        assert!(inverse_eps(1.0).is_err());
    }

    #[test]
    fn position_bucket_layout() {
        // jumps at 1 and 2 of 5 positions: [B5, B4, B2, B1, B1]
        assert_eq!(position_buckets(5, &[1, 2]), vec![4, 3, 1, 0, 0]);
        assert_eq!(position_buckets(3, &[]), vec![0, 0, 0]);
    }
}

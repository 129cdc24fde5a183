//! Problem instances, their validation, generators, reductions and file format.
//!
//! The graph is always complete bipartite U x V: an (edge, action) pair that
//! was never given a value has q = 0 and r = 0.

use crate::rng::{self, INSTANCE_GEN};
use crate::{json, Error, Result};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

/// Query budget of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Patience {
    Finite(i64),
    Infinite,
}

impl Patience {
    /// Number of queries that can actually happen with `n` incident edges.
    pub fn cap(self, n: usize) -> usize {
        match self {
            Patience::Finite(l) if l <= 0 => 0,
            Patience::Finite(l) => (l as u64).min(n as u64) as usize,
            Patience::Infinite => n,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Patience::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Patience::Finite(l) => l as f64,
            Patience::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Patience {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Patience::Finite(l) => write!(f, "{l}"),
            Patience::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Patience {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Patience::Infinite);
        }
        s.parse::<i64>()
            .map(Patience::Finite)
            .map_err(|_| Error::Invalid(format!("patience must be an integer or \"inf\", got `{s}`")))
    }
}

impl Serialize for Patience {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Patience::Finite(l) => s.serialize_i64(*l),
            Patience::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Patience {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(l) => Ok(Patience::Finite(l)),
            Raw::Str(s) if s == "inf" => Ok(Patience::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("patience string must be \"inf\", got `{s}`"))),
        }
    }
}

/// One failed invariant, with a path to the offending field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub offline: Vec<String>,
    pub online: Vec<String>,
    pub actions: Vec<String>,
    pub offline_patience: Vec<Patience>,
    pub online_patience: Vec<Patience>,
    pub meta: BTreeMap<String, String>,
    q: Vec<f64>,
    r: Vec<f64>,
}

impl Instance {
    /// All pairs start at (q, r) = (0, 0).
    pub fn new(
        offline: Vec<String>,
        online: Vec<String>,
        actions: Vec<String>,
        offline_patience: Vec<Patience>,
        online_patience: Vec<Patience>,
    ) -> Self {
        assert_eq!(offline.len(), offline_patience.len());
        assert_eq!(online.len(), online_patience.len());
        let len = offline.len() * online.len() * actions.len();
        Instance {
            offline,
            online,
            actions,
            offline_patience,
            online_patience,
            meta: BTreeMap::new(),
            q: vec![0.0; len],
            r: vec![0.0; len],
        }
    }

    /// Ids `u0.., v0.., a0..`.
    pub fn with_sizes(n_offline: usize, n_online: usize, n_actions: usize, lu: Patience, lv: Patience) -> Self {
        Self::new(
            (0..n_offline).map(|i| format!("u{i}")).collect(),
            (0..n_online).map(|i| format!("v{i}")).collect(),
            (0..n_actions).map(|i| format!("a{i}")).collect(),
            vec![lu; n_offline],
            vec![lv; n_online],
        )
    }

    pub fn n_offline(&self) -> usize {
        self.offline.len()
    }
    pub fn n_online(&self) -> usize {
        self.online.len()
    }
    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    #[inline]
    fn idx(&self, u: usize, v: usize, a: usize) -> usize {
        (u * self.online.len() + v) * self.actions.len() + a
    }

    #[inline]
    pub fn q(&self, u: usize, v: usize, a: usize) -> f64 {
        self.q[self.idx(u, v, a)]
    }

    #[inline]
    pub fn r(&self, u: usize, v: usize, a: usize) -> f64 {
        self.r[self.idx(u, v, a)]
    }

    pub fn set(&mut self, u: usize, v: usize, a: usize, q: f64, r: f64) {
        let i = self.idx(u, v, a);
        self.q[i] = q;
        self.r[i] = r;
    }

    /// Flat index of (u, v, a); stable for the lifetime of the instance.
    #[inline]
    pub fn pair_index(&self, u: usize, v: usize, a: usize) -> usize {
        self.idx(u, v, a)
    }

    pub fn n_pairs(&self) -> usize {
        self.q.len()
    }

    /// True when some action of (u, v) can succeed.
    pub fn edge_active(&self, u: usize, v: usize) -> bool {
        (0..self.n_actions()).any(|a| self.q(u, v, a) > 0.0)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (side, ids) in [("U", &self.offline), ("V", &self.online)] {
            for (i, id) in ids.iter().enumerate() {
                if !seen.insert(id.as_str()) {
                    out.push(Violation::new(format!("{side}[{i}]"), format!("duplicate vertex id `{id}`")));
                }
            }
        }
        let mut seen_a = HashSet::new();
        for (i, id) in self.actions.iter().enumerate() {
            if !seen_a.insert(id.as_str()) {
                out.push(Violation::new(format!("A[{i}]"), format!("duplicate action id `{id}`")));
            }
        }
        for (ids, pats) in [(&self.offline, &self.offline_patience), (&self.online, &self.online_patience)] {
            for (id, p) in ids.iter().zip(pats.iter()) {
                if let Patience::Finite(l) = p {
                    if *l < 0 {
                        out.push(Violation::new(format!("patience.{id}"), "patience negative"));
                    }
                }
            }
        }
        for u in 0..self.n_offline() {
            for v in 0..self.n_online() {
                for a in 0..self.n_actions() {
                    let (q, r) = (self.q(u, v, a), self.r(u, v, a));
                    let path = format!("edges[{},{}].{}", self.offline[u], self.online[v], self.actions[a]);
                    if !(0.0..=1.0).contains(&q) {
                        out.push(Violation::new(format!("{path}.q"), "probability out of range"));
                    }
                    if !(r >= 0.0 && r.is_finite()) {
                        out.push(Violation::new(format!("{path}.r"), "reward negative or not finite"));
                    }
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(Error::Invalid(msg.join("; ")))
        }
    }

    pub fn to_json(&self) -> String {
        json::to_string(&InstanceDoc::from(self)).expect("instance documents always serialise")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(s)?;
        doc.into_instance()
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionDoc {
    a: String,
    q: f64,
    r: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    u: String,
    v: String,
    actions: Vec<ActionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(rename = "U")]
    u: Vec<String>,
    #[serde(rename = "V")]
    v: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<String>,
    patience: BTreeMap<String, Patience>,
    edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        let mut patience = BTreeMap::new();
        for (id, p) in inst.offline.iter().zip(&inst.offline_patience) {
            patience.insert(id.clone(), *p);
        }
        for (id, p) in inst.online.iter().zip(&inst.online_patience) {
            patience.insert(id.clone(), *p);
        }
        let mut edges = Vec::new();
        for u in 0..inst.n_offline() {
            for v in 0..inst.n_online() {
                let actions: Vec<ActionDoc> = (0..inst.n_actions())
                    .filter(|&a| inst.q(u, v, a) != 0.0 || inst.r(u, v, a) != 0.0)
                    .map(|a| ActionDoc {
                        a: inst.actions[a].clone(),
                        q: inst.q(u, v, a),
                        r: inst.r(u, v, a),
                    })
                    .collect();
                if !actions.is_empty() {
                    edges.push(EdgeDoc {
                        u: inst.offline[u].clone(),
                        v: inst.online[v].clone(),
                        actions,
                    });
                }
            }
        }
        InstanceDoc {
            u: inst.offline.clone(),
            v: inst.online.clone(),
            a: inst.actions.clone(),
            patience,
            edges,
            meta: inst.meta.clone(),
        }
    }
}

fn index_of(ids: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut m = HashMap::new();
    for (i, id) in ids.iter().enumerate() {
        if m.insert(id.clone(), i).is_some() {
            return Err(Error::Invalid(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(m)
}

impl InstanceDoc {
    fn into_instance(self) -> Result<Instance> {
        let ui = index_of(&self.u, "U")?;
        let vi = index_of(&self.v, "V")?;
        let ai = index_of(&self.a, "A")?;
        if let Some(id) = self.u.iter().find(|id| vi.contains_key(*id)) {
            return Err(Error::Invalid(format!("vertex id `{id}` appears in both U and V")));
        }
        let pat = |id: &String| {
            self.patience
                .get(id)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("patience.{id}: missing")))
        };
        let lu = self.u.iter().map(pat).collect::<Result<Vec<_>>>()?;
        let lv = self.v.iter().map(pat).collect::<Result<Vec<_>>>()?;
        if let Some(k) = self.patience.keys().find(|k| !ui.contains_key(*k) && !vi.contains_key(*k)) {
            return Err(Error::Invalid(format!("patience.{k}: unknown vertex")));
        }
        let mut inst = Instance::new(self.u.clone(), self.v.clone(), self.a.clone(), lu, lv);
        inst.meta = self.meta;
        let mut seen = HashSet::new();
        for (k, e) in self.edges.iter().enumerate() {
            let u = *ui
                .get(&e.u)
                .ok_or_else(|| Error::Invalid(format!("edges[{k}].u: unknown vertex `{}`", e.u)))?;
            let v = *vi
                .get(&e.v)
                .ok_or_else(|| Error::Invalid(format!("edges[{k}].v: unknown vertex `{}`", e.v)))?;
            for (j, act) in e.actions.iter().enumerate() {
                let a = *ai
                    .get(&act.a)
                    .ok_or_else(|| Error::Invalid(format!("edges[{k}].actions[{j}].a: unknown action `{}`", act.a)))?;
                if !seen.insert((u, v, a)) {
                    return Err(Error::Invalid(format!(
                        "edges[{k}].actions[{j}]: duplicate entry for ({}, {}, {})",
                        e.u, e.v, act.a
                    )));
                }
                inst.set(u, v, a, act.q, act.r);
            }
        }
        Ok(inst)
    }
}

// ---------------------------------------------------------------- generators

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QModel {
    /// q ~ U[lo, hi] on every (edge, action).
    Uniform { lo: f64, hi: f64 },
    /// Each edge is present with probability `density`; present pairs as Uniform.
    Sparse { density: f64, lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RModel {
    Uniform { max: f64 },
    /// Action k gets reward scaled by (k+1)/nA and probability scaled down,
    /// the usual price/acceptance trade-off.
    Tradeoff { max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_offline: usize,
    pub n_online: usize,
    pub n_actions: usize,
    pub patience: Vec<Patience>,
    #[serde(default)]
    pub online_patience: Option<Vec<Patience>>,
    pub q_model: QModel,
    pub r_model: RModel,
}

impl GeneratorParams {
    pub fn small(n_offline: usize, n_online: usize, n_actions: usize, patience: Vec<Patience>) -> Self {
        GeneratorParams {
            n_offline,
            n_online,
            n_actions,
            patience,
            online_patience: None,
            q_model: QModel::Uniform { lo: 0.0, hi: 1.0 },
            r_model: RModel::Uniform { max: 1.0 },
        }
    }
}

/// Deterministic in (seed, params).
pub fn random_instance(seed: u64, p: &GeneratorParams) -> Result<Instance> {
    if p.n_offline == 0 || p.n_online == 0 || p.n_actions == 0 || p.patience.is_empty() {
        return Err(Error::Invalid("generator sizes and patience choices must be nonempty".into()));
    }
    let mut g = rng::stream(seed, INSTANCE_GEN, 0);
    let pick = |g: &mut rand_chacha::ChaCha8Rng, xs: &[Patience]| xs[g.gen_range(0..xs.len())];
    let lu: Vec<Patience> = (0..p.n_offline).map(|_| pick(&mut g, &p.patience)).collect();
    let vs = p.online_patience.as_deref().unwrap_or(&p.patience);
    if vs.is_empty() {
        return Err(Error::Invalid("online patience choices must be nonempty".into()));
    }
    let lv: Vec<Patience> = (0..p.n_online).map(|_| pick(&mut g, vs)).collect();
    let mut inst = Instance::with_sizes(p.n_offline, p.n_online, p.n_actions, Patience::Infinite, Patience::Infinite);
    inst.offline_patience = lu;
    inst.online_patience = lv;
    let na = p.n_actions;
    for u in 0..p.n_offline {
        for v in 0..p.n_online {
            let (present, lo, hi) = match p.q_model {
                QModel::Uniform { lo, hi } => (true, lo, hi),
                QModel::Sparse { density, lo, hi } => (g.gen::<f64>() < density, lo, hi),
            };
            for a in 0..na {
                let q0 = lo + (hi - lo) * g.gen::<f64>();
                let r0 = g.gen::<f64>();
                if !present {
                    continue;
                }
                let (q, r) = match p.r_model {
                    RModel::Uniform { max } => (q0, max * r0),
                    RModel::Tradeoff { max } => {
                        let k = (a + 1) as f64 / na as f64;
                        (q0 * (1.0 - 0.5 * (k - 1.0 / na as f64)), max * (0.5 * r0 + 0.5) * k)
                    }
                };
                inst.set(u, v, a, q.clamp(0.0, 1.0), r);
            }
        }
    }
    inst.meta.insert("generator".into(), serde_json::to_string(p).expect("params serialise"));
    inst.meta.insert("seed".into(), seed.to_string());
    Ok(inst)
}

// ---------------------------------------------------------------- reductions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Revenue,
    Welfare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub value: f64,
    pub patience: Patience,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    pub id: String,
    pub patience: Patience,
}

/// Acceptance curve of one (job, worker) pair: (payment, probability) points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub job: usize,
    pub worker: usize,
    pub points: Vec<(f64, f64)>,
}

/// Discrete cost distribution of one (job, worker) pair: (cost, probability).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostDist {
    pub job: usize,
    pub worker: usize,
    pub atoms: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricingSpec {
    pub jobs: Vec<Job>,
    pub workers: Vec<Worker>,
    pub curves: Vec<Curve>,
    #[serde(default)]
    pub costs: Vec<CostDist>,
    pub objective: Objective,
}

impl PricingSpec {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, j) in self.jobs.iter().enumerate() {
            if !(j.value >= 0.0) {
                out.push(Violation::new(format!("jobs[{k}].value"), "job value negative"));
            }
        }
        for (k, c) in self.curves.iter().enumerate() {
            if c.job >= self.jobs.len() || c.worker >= self.workers.len() {
                out.push(Violation::new(format!("curves[{k}]"), "unknown job or worker"));
            }
            for (i, &(tau, p)) in c.points.iter().enumerate() {
                if !(tau >= 0.0) {
                    out.push(Violation::new(format!("curves[{k}].points[{i}]"), "payment negative"));
                }
                if !(0.0..=1.0).contains(&p) {
                    out.push(Violation::new(format!("curves[{k}].points[{i}]"), "probability out of range"));
                }
            }
        }
        for (k, c) in self.costs.iter().enumerate() {
            if c.job >= self.jobs.len() || c.worker >= self.workers.len() {
                out.push(Violation::new(format!("costs[{k}]"), "unknown job or worker"));
            }
            let total: f64 = c.atoms.iter().map(|a| a.1).sum();
            if (total - 1.0).abs() > 1e-9 || c.atoms.iter().any(|a| !(0.0..=1.0).contains(&a.1)) {
                out.push(Violation::new(format!("costs[{k}]"), "cost distribution does not sum to 1"));
            }
        }
        out
    }
}

fn first_violation(v: Vec<Violation>) -> Result<()> {
    match v.into_iter().next() {
        None => Ok(()),
        Some(x) => Err(Error::Invalid(x.to_string())),
    }
}

/// One action per distinct payment level, named `tau=<payment>`.
pub fn from_pricing(spec: &PricingSpec) -> Result<Instance> {
    first_violation(spec.validate())?;
    let mut levels: Vec<f64> = spec.curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut inst = Instance::new(
        spec.jobs.iter().map(|j| j.id.clone()).collect(),
        spec.workers.iter().map(|w| w.id.clone()).collect(),
        levels.iter().map(|t| format!("tau={t}")).collect(),
        spec.jobs.iter().map(|j| j.patience).collect(),
        spec.workers.iter().map(|w| w.patience).collect(),
    );
    let level = |tau: f64| levels.iter().position(|&t| t == tau).expect("level collected above");
    for c in &spec.curves {
        let b = spec.jobs[c.job].value;
        let cost = spec.costs.iter().find(|d| d.job == c.job && d.worker == c.worker);
        for &(tau, p) in &c.points {
            let r = match spec.objective {
                Objective::Revenue => b - tau,
                Objective::Welfare => {
                    let d = cost.ok_or_else(|| {
                        Error::Invalid(format!(
                            "cost distribution required for ({}, {})",
                            spec.jobs[c.job].id, spec.workers[c.worker].id
                        ))
                    })?;
                    let mass: f64 = d.atoms.iter().filter(|a| a.0 <= tau).map(|a| a.1).sum();
                    if mass <= 0.0 {
                        return Err(Error::Invalid(format!(
                            "payment {tau} for ({}, {}): no cost at or below it, conditional cost undefined",
                            spec.jobs[c.job].id, spec.workers[c.worker].id
                        )));
                    }
                    let mean: f64 = d.atoms.iter().filter(|a| a.0 <= tau).map(|a| a.0 * a.1).sum::<f64>() / mass;
                    b - mean
                }
            };
            inst.set(c.job, c.worker, level(tau), p, r.max(0.0));
        }
    }
    Ok(inst)
}

/// Weight distribution of one edge: (value, probability) atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights {
    pub u: usize,
    pub v: usize,
    pub atoms: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProphetSpec {
    pub offline: Vec<String>,
    pub online: Vec<String>,
    pub offline_patience: Vec<Patience>,
    pub online_patience: Vec<Patience>,
    pub weights: Vec<EdgeWeights>,
}

impl ProphetSpec {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, w) in self.weights.iter().enumerate() {
            if w.u >= self.offline.len() || w.v >= self.online.len() {
                out.push(Violation::new(format!("weights[{k}]"), "unknown vertex"));
            }
            if w.atoms.iter().any(|a| !(a.0 >= 0.0)) {
                out.push(Violation::new(format!("weights[{k}]"), "weight value negative"));
            }
            let total: f64 = w.atoms.iter().map(|a| a.1).sum();
            if (total - 1.0).abs() > 1e-9 || w.atoms.iter().any(|a| !(0.0..=1.0).contains(&a.1)) {
                out.push(Violation::new(format!("weights[{k}]"), "distribution does not sum to 1"));
            }
        }
        out
    }
}

/// Support points of a weight distribution, ascending, zero-mass atoms dropped
/// and equal values merged.
pub fn support(atoms: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut s: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.1 > 0.0).collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(s.len());
    for (w, p) in s {
        match out.last_mut() {
            Some(last) if last.0 == w => last.1 += p,
            _ => out.push((w, p)),
        }
    }
    out
}

/// Action k on an edge is the threshold at its k-th smallest support point.
pub fn from_prophet(spec: &ProphetSpec) -> Result<Instance> {
    first_violation(spec.validate())?;
    let supports: Vec<Vec<(f64, f64)>> = spec.weights.iter().map(|w| support(&w.atoms)).collect();
    if let Some(k) = supports.iter().position(|s| s.is_empty()) {
        return Err(Error::Invalid(format!("weights[{k}]: empty support")));
    }
    let m = supports.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut inst = Instance::new(
        spec.offline.clone(),
        spec.online.clone(),
        (0..m).map(|k| format!("t{k}")).collect(),
        spec.offline_patience.clone(),
        spec.online_patience.clone(),
    );
    for (w, s) in spec.weights.iter().zip(&supports) {
        for (k, &(tau, _)) in s.iter().enumerate() {
            let tail = &s[k..];
            let q: f64 = tail.iter().map(|a| a.1).sum();
            let r = tail.iter().map(|a| a.0 * a.1).sum::<f64>() / q;
            inst.set(w.u, w.v, k, q.min(1.0), r);
            let _ = tau;
        }
    }
    Ok(inst)
}

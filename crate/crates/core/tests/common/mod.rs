#![allow(dead_code)]

use qcl_core::instance::{random_instance, GeneratorParams, QModel, RModel};
use qcl_core::{Instance, Patience};

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// P[Pois(mu) < k] by the plain series.
pub fn pois_lt(k: u64, mu: f64) -> f64 {
    let mut term = (-mu).exp();
    let mut s = 0.0;
    for i in 0..k {
        s += term;
        term *= mu / (i + 1) as f64;
    }
    s
}

pub fn factorial(k: u64) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Solves a small square system; None when singular.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..n {
                        m[r][c] -= f * m[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// max c.x s.t. A x <= b, x >= 0, by trying every basis of tight constraints.
pub fn lp_by_vertices(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let m = rows.len();
    let mut best = f64::NEG_INFINITY;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let mat = pick.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs = pick.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve(mat, rhs) {
            let feasible = rows
                .iter()
                .all(|(r, bi)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9);
            if feasible {
                best = best.max(c.iter().zip(&x).map(|(p, q)| p * q).sum());
            }
        }
        // next n-combination of 0..m
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < m - n + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..n {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// The two-edge star: online v with patience 2, offline u1, u2 with patience
/// 1; (q, r) = (0.5, 1.0) and (1.0, 0.6).
pub fn two_edge_star() -> Instance {
    let mut inst = Instance::with_sizes(2, 1, 1, Patience::Finite(1), Patience::Finite(2));
    inst.set(0, 0, 0, 0.5, 1.0);
    inst.set(1, 0, 0, 1.0, 0.6);
    inst
}

pub fn single_edge(lu: Patience, q: f64, r: f64) -> Instance {
    let mut inst = Instance::with_sizes(1, 1, 1, lu, Patience::Finite(1));
    inst.set(0, 0, 0, q, r);
    inst
}

/// Random instance with sizes drawn from the seed, |U|,|V| <= 3, |A| <= 2,
/// patience in {1, 2, inf}.
pub fn small_random(seed: u64) -> Instance {
    let nu = 1 + (seed % 3) as usize;
    let nv = 1 + ((seed / 3) % 3) as usize;
    let na = 1 + ((seed / 9) % 2) as usize;
    let params = GeneratorParams {
        n_offline: nu,
        n_online: nv,
        n_actions: na,
        patience: vec![Patience::Finite(1), Patience::Finite(2), Patience::Infinite],
        online_patience: None,
        q_model: QModel::Uniform { lo: 0.05, hi: 1.0 },
        r_model: RModel::Uniform { max: 1.0 },
    };
    random_instance(seed, &params).unwrap()
}

/// As `small_random` with every offline patience infinite.
pub fn one_sided_random(seed: u64) -> Instance {
    let mut inst = small_random(seed);
    inst.offline_patience.iter_mut().for_each(|l| *l = Patience::Infinite);
    inst
}

/// Star with one online vertex over `n` offline vertices.
pub fn random_star_instance(seed: u64, n: usize, na: usize, patience: Vec<Patience>) -> Instance {
    let mut p = GeneratorParams::small(n, 1, na, vec![Patience::Finite(1)]);
    p.online_patience = Some(patience);
    random_instance(seed, &p).unwrap()
}

/// Offline u with patience 2 facing a Poisson-like crowd: v_j (q = 0.95,
/// r = 0, weight 1) takes u's patience first for nothing, ten v's with q = 0
/// share the remaining patience, and v_i (q = 1, r = 1, weight 0.05) is the
/// only reward. Greedy spends u's queries before v_i arrives; the attenuated
/// scheme holds some back.
pub fn greedy_trap() -> (Instance, Vec<(usize, Vec<usize>, f64)>) {
    let n_online = 12;
    let mut inst = Instance::with_sizes(1, n_online, 1, Patience::Finite(2), Patience::Finite(1));
    inst.set(0, 0, 0, 0.95, 0.0);
    for v in 1..=10 {
        inst.set(0, v, 0, 0.0, 0.0);
    }
    inst.set(0, 11, 0, 1.0, 1.0);
    let mut weights = vec![(0, vec![0], 1.0)];
    for v in 1..=10 {
        weights.push((v, vec![0], 0.095));
    }
    weights.push((11, vec![0], 0.05));
    (inst, weights)
}

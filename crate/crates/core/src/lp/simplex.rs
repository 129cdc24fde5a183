//! Dense revised simplex for packing LPs: max c'x s.t. Ax <= b, x >= 0, b >= 0.
//!
//! Starts from the all-slack basis, uses Bland's rule for both the entering
//! and the leaving choice, and keeps an explicit basis inverse that is
//! refactorised with partial pivoting every `REFACTOR` pivots.

use crate::{Error, Result};

const TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR: usize = 64;
const MAX_ITERS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    /// Row-major constraint matrix, one `Vec` per row.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// One price per row, nonnegative.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// Inverts a dense square matrix by Gauss-Jordan with partial pivoting.
fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col && a[i][col] != 0.0 {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

struct Tableau<'a> {
    p: &'a LpProblem,
    m: usize,
    n: usize,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
}

impl Tableau<'_> {
    /// Column j of [A | I].
    fn column(&self, j: usize) -> Vec<f64> {
        if j < self.n {
            self.p.a.iter().map(|row| row[j]).collect()
        } else {
            let mut e = vec![0.0; self.m];
            e[j - self.n] = 1.0;
            e
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.p.c[j]
        } else {
            0.0
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let mut bm = vec![vec![0.0; self.m]; self.m];
        for (k, &j) in self.basis.iter().enumerate() {
            for (i, x) in self.column(j).into_iter().enumerate() {
                bm[i][k] = x;
            }
        }
        self.binv = invert(&bm).ok_or_else(|| Error::Infeasible("singular basis".into()))?;
        Ok(())
    }

    fn times_binv(&self, v: &[f64]) -> Vec<f64> {
        self.binv.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    fn primal(&self) -> Vec<f64> {
        self.times_binv(&self.p.b)
    }

    fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (k, &j) in self.basis.iter().enumerate() {
            let cb = self.cost(j);
            if cb != 0.0 {
                for (yi, bi) in y.iter_mut().zip(&self.binv[k]) {
                    *yi += cb * bi;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.p.c[j] - self.p.a.iter().zip(y).map(|(row, yi)| row[j] * yi).sum::<f64>()
        } else {
            -y[j - self.n]
        }
    }
}

pub fn solve_generic_lp(p: &LpProblem) -> Result<LpResult> {
    let m = p.b.len();
    let n = p.c.len();
    if p.a.len() != m || p.a.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("LP dimensions do not match".into()));
    }
    if p.b.iter().any(|&b| !(b >= 0.0)) {
        return Err(Error::Invalid("packing LP needs b >= 0".into()));
    }
    if p.c.iter().chain(p.a.iter().flatten()).any(|x| !x.is_finite()) {
        return Err(Error::Invalid("LP data must be finite".into()));
    }
    let mut t = Tableau {
        p,
        m,
        n,
        basis: (n..n + m).collect(),
        binv: (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
    };
    let mut in_basis = vec![false; n + m];
    for &j in &t.basis {
        in_basis[j] = true;
    }
    let mut iters = 0;
    loop {
        if iters >= MAX_ITERS {
            return Err(Error::IterationLimit(iters));
        }
        if iters > 0 && iters % REFACTOR == 0 {
            t.refactor()?;
        }
        let y = t.duals();
        let Some(enter) = (0..n + m).find(|&j| !in_basis[j] && t.reduced_cost(&y, j) > TOL) else {
            break;
        };
        let d = t.times_binv(&t.column(enter));
        let xb = t.primal();
        let ratios: Vec<Option<f64>> = (0..m).map(|i| (d[i] > PIVOT_TOL).then(|| xb[i].max(0.0) / d[i])).collect();
        let Some(min_ratio) = ratios.iter().flatten().copied().min_by(f64::total_cmp) else {
            return Err(Error::Unbounded(format!("column {enter} has no blocking row")));
        };
        // Bland: among tied rows, the basic variable with the smallest index leaves
        let r = (0..m)
            .filter(|&i| ratios[i].is_some_and(|q| q <= min_ratio + 1e-12))
            .min_by_key(|&i| t.basis[i])
            .expect("the minimum is attained");
        // eta update of the basis inverse
        let piv = d[r];
        let row_r: Vec<f64> = t.binv[r].iter().map(|x| x / piv).collect();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = d[i];
            if f != 0.0 {
                for (x, rr) in t.binv[i].iter_mut().zip(&row_r) {
                    *x -= f * rr;
                }
            }
        }
        t.binv[r] = row_r;
        in_basis[t.basis[r]] = false;
        in_basis[enter] = true;
        t.basis[r] = enter;
        iters += 1;
    }
    t.refactor()?;
    let xb = t.primal();
    let mut x = vec![0.0; n];
    for (k, &j) in t.basis.iter().enumerate() {
        if j < n {
            x[j] = xb[k].max(0.0);
        }
    }
    let duals: Vec<f64> = t.duals().into_iter().map(|v| v.max(0.0)).collect();
    let value = p.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpResult {
        x,
        value,
        duals,
        iterations: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> LpProblem {
        LpProblem { c, a, b }
    }

    #[test]
    fn one_constraint() {
        let r = solve_generic_lp(&lp(vec![1.0], vec![vec![1.0]], vec![1.0])).unwrap();
        assert_eq!(r.x, vec![1.0]);
        assert_eq!(r.duals, vec![1.0]);
    }

    #[test]
    fn two_constraints() {
        let r = solve_generic_lp(&lp(vec![1.0, 1.0], vec![vec![1.0, 1.0], vec![1.0, 0.0]], vec![1.0, 0.3])).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_bad_input() {
        assert!(matches!(
            solve_generic_lp(&lp(vec![1.0], vec![vec![-1.0]], vec![1.0])),
            Err(Error::Unbounded(_))
        ));
        assert!(solve_generic_lp(&lp(vec![1.0], vec![vec![1.0]], vec![-1.0])).is_err());
        assert!(solve_generic_lp(&lp(vec![1.0], vec![vec![1.0, 2.0]], vec![1.0])).is_err());
    }

    #[test]
    fn empty_problem() {
        let r = solve_generic_lp(&lp(vec![], vec![], vec![])).unwrap();
        assert_eq!(r.value, 0.0);
    }
}

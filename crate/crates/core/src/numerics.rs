//! Special functions and grid checks of the inequalities behind the
//! selection guarantee.

use crate::prcrs::{attenuation_b, beta};
use serde::Serialize;

/// ln k!
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// P[Pois(mu) < k], summed from the top term downward.
pub fn poisson_cdf_lt(k: u64, mu: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if mu <= 0.0 {
        return 1.0;
    }
    let top = k - 1;
    let mut term = (-mu + top as f64 * mu.ln() - ln_factorial(top)).exp();
    let mut sum = 0.0;
    for i in (0..=top).rev() {
        sum += term;
        if i > 0 {
            term *= i as f64 / mu;
        }
    }
    sum.min(1.0)
}

/// P[Pois(mu) >= k]; summed upward when it is the small side.
pub fn poisson_tail_ge(k: u64, mu: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mu <= 0.0 {
        return 0.0;
    }
    if mu > k as f64 + 1.0 {
        return (1.0 - poisson_cdf_lt(k, mu)).max(0.0);
    }
    let mut term = (-mu + k as f64 * mu.ln() - ln_factorial(k)).exp();
    let mut sum = 0.0;
    let mut i = k;
    while term > 1e-18 * sum {
        sum += term;
        i += 1;
        term *= mu / i as f64;
    }
    sum.min(1.0)
}

/// Gamma(s, z) = (s-1)! e^{-z} sum_{k<s} z^k / k! for integer s >= 1.
pub fn upper_incomplete_gamma_int(s: u64, z: f64) -> f64 {
    assert!(s >= 1);
    ln_factorial(s - 1).exp() * poisson_cdf_lt(s, z)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    // seed with a few panels so narrow features are not missed
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, f1, fmid) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
            let w = h / 6.0 * (f0 + 4.0 * fmid + f1);
            rec(f, x0, x1, f0, fmid, f1, w, tol / PANELS as f64, 50)
        })
        .sum()
}

/// int_0^y y^k e^{-c y} dy = k! / c^{k+1} P[Pois(c y) >= k+1], divided by k!.
fn scaled_moment(k: u64, c: f64, y: f64) -> f64 {
    poisson_tail_ge(k + 1, c * y) / c.powi(k as i32 + 1)
}

/// Domain of (x1, xN1): both in [0,1] with x1 + xN1 <= 1.
fn in_domain(x1: f64, xn1: f64) -> bool {
    (0.0..=1.0).contains(&x1) && (0.0..=1.0).contains(&xn1) && x1 + xn1 <= 1.0 + 1e-12
}

/// int_0^{y_c} sum_{k<l} e^{-y (l - x1)} (y X0)^k / k! dy with
/// X0 = l - xN1 - x1 and y_c = (l-1)/X0, summed termwise. Exact for every
/// xN1, including 0.
pub fn f_ell_series(l: u64, x1: f64, xn1: f64) -> f64 {
    let x0 = l as f64 - xn1 - x1;
    let c = l as f64 - x1;
    let yc = (l as f64 - 1.0) / x0;
    (0..l).map(|k| x0.powi(k as i32) * scaled_moment(k, c, yc)).sum()
}

/// Closed form of the same integral:
/// [1 - Q(l-1) e^{-t} - (X0/(l-x1))^l (1 - Q(l-1+t))] / xN1 with
/// t = (l-1) xN1 / X0 and Q(z) = Gamma(l, z)/Gamma(l).
pub fn f_ell_closed(l: u64, x1: f64, xn1: f64) -> f64 {
    let lf = l as f64;
    let x0 = lf - xn1 - x1;
    let t = (lf - 1.0) * xn1 / x0;
    let q = |z: f64| poisson_cdf_lt(l, z);
    let num = 1.0 - q(lf - 1.0) * (-t).exp() - (x0 / (lf - x1)).powi(l as i32) * (1.0 - q(lf - 1.0 + t));
    num / xn1
}

/// Availability lower bound F_l(x1, xN1). The closed form loses digits as
/// xN1 -> 0, where the termwise series takes over.
pub fn f_ell(l: u64, x1: f64, xn1: f64) -> Option<f64> {
    if !(2..120).contains(&l) || !in_domain(x1, xn1) {
        return None;
    }
    Some(if xn1 >= 1e-3 { f_ell_closed(l, x1, xn1) } else { f_ell_series(l, x1, xn1) })
}

/// int_0^1 P[Pois(y(l-1)) < l] e^{-y(1-x1)} dy, termwise.
pub fn availability_integral(l: u64, x1: f64) -> f64 {
    let c = l as f64 - x1;
    let r = (l as f64 - 1.0) / c;
    (0..l).map(|k| r.powi(k as i32) / c * poisson_tail_ge(k + 1, c)).sum()
}

/// b(x1) int_0^1 P[Pois(y(l-1)) < l] e^{-y(1-x1)} dy.
pub fn final_bound_mid(l: u64, x1: f64) -> f64 {
    attenuation_b(x1) * availability_integral(l, x1)
}

/// int_0^1 y^120 e^{120(1-y)} e^{-y(1-x1)} dy, the Bennett tail term.
pub fn bennett_tail_integral(x1: f64) -> f64 {
    let c = 121.0 - x1;
    (120.0 + ln_factorial(120) - 121.0 * c.ln()).exp() * poisson_tail_ge(121, c)
}

fn decay_integral(x1: f64) -> f64 {
    let s = 1.0 - x1;
    if s < 1e-12 {
        1.0
    } else {
        -(-s).exp_m1() / s
    }
}

/// b(x1) int_0^1 (1 - e^{-120 (y + ln(1/y) - 1)}) e^{-y(1-x1)} dy by
/// adaptive quadrature. The integrand equals 1 - y^120 e^{120(1-y)}
/// times the decay factor, which is smooth on [0,1].
pub fn bennett_bound_large(x1: f64) -> f64 {
    let f = move |y: f64| {
        let tail = if y <= 0.0 { 0.0 } else { (120.0 * (y.ln() + 1.0 - y)).exp() };
        (1.0 - tail) * (-y * (1.0 - x1)).exp()
    };
    attenuation_b(x1) * adaptive_simpson(&f, 0.0, 1.0, 1e-12)
}

/// Same value through the incomplete-gamma closed form.
pub fn bennett_bound_closed(x1: f64) -> f64 {
    attenuation_b(x1) * (decay_integral(x1) - bennett_tail_integral(x1))
}

// ---------------------------------------------------------------- suites

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericsReport {
    pub suite: String,
    pub points_checked: u64,
    /// Smallest slack found; the check passes when this is >= -1e-9.
    pub min_margin: f64,
    /// Arguments at which `min_margin` was attained (or the first failure).
    pub witness: Vec<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub const MARGIN_TOL: f64 = 1e-9;

struct Tracker {
    points: u64,
    min: f64,
    witness: Vec<f64>,
    extra_fail: Option<Vec<f64>>,
    notes: Vec<String>,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            points: 0,
            min: f64::INFINITY,
            witness: vec![],
            extra_fail: None,
            notes: vec![],
        }
    }

    fn see(&mut self, margin: f64, at: &[f64]) {
        self.points += 1;
        if margin < self.min || margin.is_nan() {
            self.min = margin;
            self.witness = at.to_vec();
        }
    }

    fn fail(&mut self, at: &[f64], note: String) {
        if self.extra_fail.is_none() {
            self.extra_fail = Some(at.to_vec());
        }
        self.notes.push(note);
    }

    fn finish(self, suite: &str) -> NumericsReport {
        let ok = self.min >= -MARGIN_TOL && self.extra_fail.is_none();
        NumericsReport {
            suite: suite.into(),
            points_checked: self.points,
            min_margin: self.min,
            witness: self.extra_fail.unwrap_or(self.witness),
            pass: ok,
            notes: self.notes,
        }
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| i as f64 / n as f64)
}

/// b(0) = 1, b nonincreasing, the halving inequality
/// int (1 - y z b(z)) >= int (1 - y z b(z/2)/2)^2 and the single sign change
/// of their difference in y.
pub fn verify_b_properties(n: usize) -> NumericsReport {
    let mut t = Tracker::new();
    let b0 = attenuation_b(0.0);
    t.see(-(b0 - 1.0).abs() + 0.0, &[0.0]);
    if (b0 - 1.0).abs() > 1e-12 {
        t.fail(&[0.0], format!("b(0) = {b0}"));
    }
    let mut prev = b0;
    for z in grid(n).skip(1) {
        let bz = attenuation_b(z);
        t.see(prev - bz, &[z]);
        prev = bz;
        let bh = attenuation_b(z / 2.0);
        let margin = (z * bh - z * bz) / 2.0 - z * z * bh * bh / 12.0;
        t.see(margin, &[z]);
        // f(y) = y z (b(z/2) - b(z)) - y^2 z^2 b(z/2)^2 / 4
        let root = 4.0 * (bh - bz) / (z * bh * bh);
        let f = |y: f64| y * z * (bh - bz) - y * y * z * z * bh * bh / 4.0;
        let direct = |y: f64| (1.0 - y * z * bz) - (1.0 - y * z * bh / 2.0).powi(2);
        for y in grid(20) {
            if (f(y) - direct(y)).abs() > 1e-12 {
                t.fail(&[z, y], format!("quadratic form mismatch at z={z}, y={y}"));
            }
            let expected_sign = if y < root { 1.0 } else { -1.0 };
            let v = f(y);
            if v * expected_sign < -1e-12 {
                t.fail(&[z, y], format!("sign of f at z={z}, y={y} is wrong (root {root})"));
            }
        }
    }
    t.finish("b")
}

/// Nonnegativity of the two exchange integrals on an n^3 grid of
/// (x1, xN1, x_i0) with x1 + xN1 <= 1.
pub fn verify_exchange_l2(n: usize) -> NumericsReport {
    let mut t = Tracker::new();
    let pts: Vec<f64> = grid(n - 1).collect();
    for &x1 in &pts {
        for &xn in &pts {
            if x1 + xn > 1.0 + 1e-12 {
                continue;
            }
            for &xi in &pts {
                let v = exchange_integral(x1, xn, xi);
                t.see(v, &[x1, xn, xi]);
            }
        }
    }
    t.finish("exchange")
}

/// Integral over y in [0,1] of the exchange lower bound; the case is picked
/// by whether x_i0 exceeds 1 - xN1 - x1.
pub fn exchange_integral(x1: f64, xn: f64, xi: f64) -> f64 {
    let s = 2.0 - xn - x1 - xi;
    let gap = 1.0 - xn - x1;
    let f = move |y: f64| {
        if xi > gap + 1e-12 {
            ((-y * xn).exp() - (-y * (1.0 - x1)).exp()) * (1.0 - y * s)
                - ((-y * gap).exp() * (1.0 - y * (xi - gap)) - (1.0 - y * xi)) * y * s * (-y * (1.0 - x1 - xi)).exp()
        } else {
            (-y * xn).exp() * (1.0 - (-y * xi).exp()) * (1.0 - y) * (1.0 - y * (gap - xi))
                - ((-y * xi).exp() - (1.0 - y * xi)) * y * s * (-y * (1.0 - x1 - xi)).exp()
        }
    };
    adaptive_simpson(&f, 0.0, 1.0, 1e-12)
}

/// F_l(x1, xN1) >= F_l(x1, 1 - x1) on an (n+1)^2 grid for each l.
pub fn verify_fl_monotonicity(ells: &[u64], n: usize) -> NumericsReport {
    let mut t = Tracker::new();
    for &l in ells {
        for x1 in grid(n) {
            let floor = f_ell(l, x1, 1.0 - x1).unwrap();
            for xn in grid(n) {
                if x1 + xn > 1.0 + 1e-12 {
                    continue;
                }
                let v = f_ell(l, x1, xn).unwrap();
                t.see(v - floor, &[l as f64, x1, xn]);
            }
        }
    }
    t.finish("fl")
}

pub const FINAL_ELLS: [u64; 9] = [2, 3, 4, 5, 10, 20, 50, 100, 119];
pub const BENNETT_CLAIM: f64 = 0.5803;

/// final_bound_mid >= beta on the grid with equality at (3, 0), and the
/// large-patience bound >= beta with its minimum at x1 = 1.
pub fn verify_final_bounds(n: usize) -> NumericsReport {
    let mut t = Tracker::new();
    let b = beta();
    for &l in &FINAL_ELLS {
        for x1 in grid(n) {
            t.see(final_bound_mid(l, x1) - b, &[l as f64, x1]);
        }
    }
    let at = final_bound_mid(3, 0.0);
    if (at - b).abs() > 1e-9 {
        t.fail(&[3.0, 0.0], format!("final bound at (3,0) is {at}, not beta"));
    }
    let (mut min_x, mut min_v) = (0.0, f64::INFINITY);
    for x1 in grid(n) {
        let v = bennett_bound_closed(x1);
        t.see(v - b, &[120.0, x1]);
        if v < min_v {
            min_v = v;
            min_x = x1;
        }
    }
    if min_x != 1.0 {
        t.fail(&[120.0, min_x], format!("large-patience minimum at x1 = {min_x}, not 1"));
    }
    t.finish("final")
}

/// The stated numeric value of the large-patience bound at x1 = 1.
pub fn verify_bennett() -> NumericsReport {
    let mut t = Tracker::new();
    let q = bennett_bound_large(1.0);
    let c = bennett_bound_closed(1.0);
    t.see(q - (BENNETT_CLAIM - 1e-6), &[1.0]);
    if (q - c).abs() > 1e-9 {
        t.fail(&[1.0], format!("quadrature {q} and closed form {c} disagree"));
    }
    t.notes.push(format!("value at x1 = 1: {q:.14}; claimed >= {BENNETT_CLAIM}; beta = {:.14}", beta()));
    t.finish("bennett")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    B,
    Exchange,
    Fl,
    Final,
    Bennett,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "b" => Ok(Suite::B),
            "exchange" => Ok(Suite::Exchange),
            "fl" => Ok(Suite::Fl),
            "final" => Ok(Suite::Final),
            "bennett" => Ok(Suite::Bennett),
            _ => Err(format!("unknown suite {s:?}")),
        }
    }
}

pub const FL_ELLS: [u64; 6] = [3, 4, 5, 10, 50, 119];

/// Runs a suite at its default grid.
pub fn run_suite(s: Suite) -> NumericsReport {
    match s {
        Suite::B => verify_b_properties(1000),
        Suite::Exchange => verify_exchange_l2(50),
        Suite::Fl => verify_fl_monotonicity(&FL_ELLS, 100),
        Suite::Final => verify_final_bounds(1000),
        Suite::Bennett => verify_bennett(),
    }
}

pub const ALL_SUITES: [Suite; 5] = [Suite::B, Suite::Exchange, Suite::Fl, Suite::Final, Suite::Bennett];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_cdf_lt(3, 0.0), 1.0);
        assert!((poisson_cdf_lt(3, 2.0) - 5.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((poisson_cdf_lt(5, 30.0) + poisson_tail_ge(5, 30.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_examples() {
        assert!((upper_incomplete_gamma_int(3, 0.0) - 2.0).abs() < 1e-14);
        assert!((upper_incomplete_gamma_int(1, 0.7) - (-0.7f64).exp()).abs() < 1e-15);
        assert!((upper_incomplete_gamma_int(3, 2.0) - 10.0 * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn f3_at_corner_is_beta() {
        assert!((f_ell(3, 0.0, 1.0).unwrap() - beta()).abs() < 1e-12);
        assert!((f_ell_series(3, 0.0, 1.0) - beta()).abs() < 1e-12);
    }

    #[test]
    fn bennett_integrand_ends() {
        let tail = |y: f64| (120.0 * (y.ln() + 1.0 - y)).exp();
        assert_eq!(1.0 - tail(1.0), 0.0);
        assert!(tail(1e-6) < 1e-300);
    }

    #[test]
    fn simpson_polynomial() {
        let v = adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
    }
}

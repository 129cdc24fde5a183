use serde::{Deserialize, Serialize};

/// Summary of a Monte Carlo reward estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mean: f64,
    /// Sample variance of the per-trial reward.
    pub variance: f64,
    pub trials: u64,
    /// 1.96 sqrt(variance / trials).
    pub half_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_vs_lp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_vs_opt: Option<f64>,
}

/// Running sums of a sample; merged in a fixed order for reproducible output.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }
}

impl SimReport {
    pub fn from_moments(m: &Moments) -> Self {
        let variance = m.variance();
        SimReport {
            mean: m.mean(),
            variance,
            trials: m.n,
            half_width: 1.96 * (variance / m.n.max(1) as f64).sqrt(),
            lp_value: None,
            opt_value: None,
            ratio_vs_lp: None,
            ratio_vs_opt: None,
        }
    }

    /// Standard error of the mean.
    pub fn sigma(&self) -> f64 {
        (self.variance / self.trials.max(1) as f64).sqrt()
    }

    pub fn with_lp(mut self, lp: f64) -> Self {
        self.lp_value = Some(lp);
        self.ratio_vs_lp = Some(ratio(self.mean, lp));
        self
    }

    pub fn with_opt(mut self, opt: f64) -> Self {
        self.opt_value = Some(opt);
        self.ratio_vs_opt = Some(ratio(self.mean, opt));
        self
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        1.0
    }
}

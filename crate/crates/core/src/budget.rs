use crate::{Error, Result};

/// Caps on every exponential enumeration in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    pub dp_states: u64,
    pub star_orderings: u64,
    pub configs: u64,
    pub ip_nodes: u64,
    pub eptas_guesses: u64,
    pub colgen_columns: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            dp_states: 20_000_000,
            star_orderings: 10_000_000,
            configs: 1_000_000,
            ip_nodes: 10_000_000,
            eptas_guesses: 5_000_000,
            colgen_columns: 10_000,
        }
    }
}

pub const BUDGET_ENV: &str = "QCL_BUDGET";

impl Budgets {
    /// Defaults overridden by `QCL_BUDGET`, if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(BUDGET_ENV) {
            Ok(s) => Self::default().with_overrides(&s),
            Err(_) => Ok(Self::default()),
        }
    }

    /// Accepts either one integer (applied to every enumeration budget) or a
    /// comma list like `dp=1000,star=50`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.is_empty() {
            return Ok(self);
        }
        if let Ok(n) = spec.parse::<u64>() {
            self.dp_states = n;
            self.star_orderings = n;
            self.configs = n;
            self.ip_nodes = n;
            self.eptas_guesses = n;
            return Ok(self);
        }
        for part in spec.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::config(BUDGET_ENV, format!("expected key=value, got `{part}`")))?;
            let n: u64 = v
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("{BUDGET_ENV}.{}", k.trim()), "not an integer"))?;
            match k.trim() {
                "dp" => self.dp_states = n,
                "star" => self.star_orderings = n,
                "configs" => self.configs = n,
                "ip" => self.ip_nodes = n,
                "guesses" => self.eptas_guesses = n,
                "columns" => self.colgen_columns = n,
                other => return Err(Error::config(BUDGET_ENV, format!("unknown budget `{other}`"))),
            }
        }
        Ok(self)
    }
}

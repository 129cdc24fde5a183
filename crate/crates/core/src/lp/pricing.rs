use super::{Config, DualPrices};
use crate::exact::{star_opt_bruteforce, StarInstance};
use crate::{eptas, Budgets, Instance, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PricingMode {
    Exact,
    /// Star EPTAS with the given epsilon (1/eps must be an integer).
    Eptas { eps: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Priced {
    pub config: Option<Config>,
    /// val of the configuration under the modified rewards.
    pub value: f64,
}

/// Star of `v` with r^(a) = max(r(a) - alpha_u - gamma_u / q(a), 0); pairs
/// with q = 0 get r^ = 0 (they can never pay out).
pub fn modified_star(inst: &Instance, v: usize, duals: &DualPrices) -> StarInstance {
    let mut star = StarInstance::of_online(inst, v);
    for u in 0..inst.n_offline() {
        for a in 0..inst.n_actions() {
            let q = star.q[u][a];
            star.r[u][a] = if q > 0.0 {
                (star.r[u][a] - duals.alpha[u] - duals.gamma[u] / q).max(0.0)
            } else {
                0.0
            };
        }
    }
    star
}

/// Best configuration of `v` under the modified rewards. Positions whose
/// modified reward is 0 are dropped; this never lowers the modified value and
/// makes it equal to the column's true reduced value plus beta_v.
pub fn price_configs(
    inst: &Instance,
    v: usize,
    duals: &DualPrices,
    mode: PricingMode,
    budgets: &Budgets,
) -> Result<Priced> {
    let star = modified_star(inst, v, duals);
    let policy = match mode {
        PricingMode::Exact => star_opt_bruteforce(&star, budgets)?,
        PricingMode::Eptas { eps } => eptas::eptas(&star, eps, budgets)?.policy,
    };
    let (edges, actions): (Vec<usize>, Vec<usize>) = policy
        .edges
        .iter()
        .zip(&policy.actions)
        .filter(|&(&e, &a)| star.r[e][a] > 0.0)
        .map(|(&e, &a)| (e, a))
        .unzip();
    let value = star.value_of(&edges, &actions);
    if edges.is_empty() || value <= 0.0 {
        return Ok(Priced { config: None, value: 0.0 });
    }
    Ok(Priced {
        config: Some(Config::new(inst, v, edges, actions)),
        value,
    })
}

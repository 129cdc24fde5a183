use super::{solve_generic_lp, EdgeMarginals, LpProblem};
use crate::{Instance, Patience, Result, Violation};

const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct EdgeLpSolution {
    pub z: EdgeMarginals,
    pub value: f64,
}

/// The edge LP: max sum r q z subject to, for every vertex, expected
/// matches <= 1 and expected queries <= patience, and per edge sum_a z <= 1.
pub fn solve_lp_m(inst: &Instance) -> Result<EdgeLpSolution> {
    inst.ensure_valid()?;
    let (nu, nv, na) = (inst.n_offline(), inst.n_online(), inst.n_actions());
    let n = nu * nv * na;
    let var = |u: usize, v: usize, a: usize| (u * nv + v) * na + a;
    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut b = Vec::new();
    let mut vertex_rows = |members: &dyn Fn(usize, usize) -> bool, l: Patience| {
        let mut matching = vec![0.0; n];
        let mut queries = vec![0.0; n];
        for u in 0..nu {
            for v in 0..nv {
                if members(u, v) {
                    for a in 0..na {
                        matching[var(u, v, a)] = inst.q(u, v, a);
                        queries[var(u, v, a)] = 1.0;
                    }
                }
            }
        }
        a_rows.push(matching);
        b.push(1.0);
        if let Patience::Finite(l) = l {
            a_rows.push(queries);
            b.push(l as f64);
        }
    };
    for s in 0..nu {
        vertex_rows(&|u, _| u == s, inst.offline_patience[s]);
    }
    for s in 0..nv {
        vertex_rows(&|_, v| v == s, inst.online_patience[s]);
    }
    for u in 0..nu {
        for v in 0..nv {
            let mut row = vec![0.0; n];
            for a in 0..na {
                row[var(u, v, a)] = 1.0;
            }
            a_rows.push(row);
            b.push(1.0);
        }
    }
    let mut c = vec![0.0; n];
    for u in 0..nu {
        for v in 0..nv {
            for a in 0..na {
                c[var(u, v, a)] = inst.r(u, v, a) * inst.q(u, v, a);
            }
        }
    }
    let res = solve_generic_lp(&LpProblem { c, a: a_rows, b })?;
    let mut z = EdgeMarginals::for_instance(inst);
    z.values = res.x;
    Ok(EdgeLpSolution { z, value: res.value })
}

/// Every LP-M constraint, on both sides of the graph.
pub fn check_lp_m_feasibility(z: &EdgeMarginals, inst: &Instance) -> Vec<Violation> {
    let mut out = super::check_marginal_feasibility(z, inst);
    for v in 0..inst.n_online() {
        let mut queries = 0.0;
        let mut matches = 0.0;
        for u in 0..inst.n_offline() {
            for a in 0..inst.n_actions() {
                queries += z.get(u, v, a);
                matches += inst.q(u, v, a) * z.get(u, v, a);
            }
        }
        if let Patience::Finite(l) = inst.online_patience[v] {
            if queries > l as f64 + FEAS_TOL {
                out.push(Violation::new(format!("v[{v}]"), format!("query mass {queries} exceeds patience {l}")));
            }
        }
        if matches > 1.0 + FEAS_TOL {
            out.push(Violation::new(format!("v[{v}]"), format!("match mass {matches} exceeds 1")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let mut inst = Instance::with_sizes(1, 1, 1, Patience::Finite(1), Patience::Finite(1));
        inst.set(0, 0, 0, 0.5, 2.0);
        let s = solve_lp_m(&inst).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.z.get(0, 0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matching_constraint_binds() {
        let mut inst = Instance::with_sizes(1, 2, 1, Patience::Finite(2), Patience::Finite(1));
        inst.set(0, 0, 0, 1.0, 1.0);
        inst.set(0, 1, 0, 1.0, 1.0);
        let s = solve_lp_m(&inst).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!(check_lp_m_feasibility(&s.z, &inst).is_empty());
    }
}

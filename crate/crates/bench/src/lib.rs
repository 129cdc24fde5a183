//! Fixtures shared by the benchmarks.

use qcl_core::instance::{random_instance, GeneratorParams};
use qcl_core::{Instance, Patience};

/// Small random instance with patience drawn from {1, 2, inf}.
pub fn small_instance(seed: u64, n_offline: usize, n_online: usize, n_actions: usize) -> Instance {
    let params = GeneratorParams::small(
        n_offline,
        n_online,
        n_actions,
        vec![Patience::Finite(1), Patience::Finite(2), Patience::Infinite],
    );
    random_instance(seed, &params).expect("valid generator parameters")
}

//! Fixtures shared by the criterion benches.

use twcst::thresholds::gen_random_instance;
use twcst::Instance;

/// Deterministic instances of `n` keys with weights in `1..=100`.
pub fn fixtures(n: usize, count: u64) -> Vec<Instance> {
    (0..count)
        .map(|seed| gen_random_instance(n, (1, 100), seed).expect("valid range"))
        .collect()
}

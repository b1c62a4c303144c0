//! Shared inputs for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sybilproof_core::experiment::{generate_price_graph, sample_value, PriceModelParams};
use sybilproof_core::ReportProfile;

/// A Price's-model market with uniform values, as in the experiments.
pub fn price_market(n: usize, m: usize, seed: u64) -> ReportProfile {
    let mut p = generate_price_graph(&PriceModelParams { n, m, seed }).expect("valid parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in p.reports.values_mut() {
        r.bid = sample_value(&mut rng);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markets_are_deterministic_and_sized() {
        let a = price_market(30, 2, 5);
        assert_eq!(a.reports.len(), 29);
        assert_eq!(a, price_market(30, 2, 5));
    }
}

mod common;

use num_bigint::BigInt;
use privcache::caching::DemandVector;
use privcache::cli::round_half_even;
use privcache::dist::{rational_from_f64, Rational};
use privcache::pipeline::{run, simulate_trials, DemandSet, TOLERANCE_BITS};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn perfect_privacy_codes_pass_every_per_demand_check(seed in any::<u64>()) {
        let config = common::random_config(seed, 1);
        let out = run(&config).unwrap();
        for a in &out.audit.per_demand {
            prop_assert!(a.exact_independent, "d={}", a.demand);
            prop_assert_eq!(a.decode_errors, 0);
            prop_assert!(a.expected_length_per_key.windows(2).all(|w| w[0] == w[1]));
            prop_assert!(a.violations.is_empty(), "{:?}", a.violations);
        }
        prop_assert!(out.bounds.upper_slack() >= -TOLERANCE_BITS);
    }

    #[test]
    fn leaky_codes_leak_exactly_epsilon(seed in any::<u64>(), frac in 0.05f64..=1.0) {
        let config = common::random_config(seed, 2);
        let eps = config.model.x_entropy_bits() * frac;
        let out = run(&config.with_epsilon(eps).unwrap()).unwrap();
        prop_assert!(out.audit.max_leakage_deviation <= TOLERANCE_BITS);
        prop_assert!(out.audit.is_ok(), "{:?}", out.audit.violations().collect::<Vec<_>>());
    }

    #[test]
    fn rerounding_report_values_is_idempotent(num in -10_000_000i64..10_000_000, den in 1i64..100_000) {
        let r = Rational::new(BigInt::from(num), BigInt::from(den));
        for digits in [6, 9] {
            let once = round_half_even(&r, digits);
            let back = rational_from_f64(once.parse::<f64>().unwrap()).unwrap();
            prop_assert_eq!(round_half_even(&back, digits), once);
        }
    }
}

#[test]
fn example1_trials_match_the_exact_mean() {
    let config = common::example1().with_seed(11);
    let d = DemandVector::from_one_based(&[1, 2], &config.params).unwrap();
    let config = config.with_demands(DemandSet::List(vec![d]));
    let summary = simulate_trials(&config, 10_000).unwrap();
    let t = &summary.per_demand[0];
    assert_eq!(t.analytical_mean, 3.25);
    assert_eq!(t.decode_failures, 0);
    assert!(t.within_band(), "{} vs {}", t.empirical_mean, t.analytical_mean);
}

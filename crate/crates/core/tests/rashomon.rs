mod common;

use proptest::prelude::*;
use rashomon_core::rashomon::{extract_from, summary_from, sweep_from};

fn accuracies() -> impl Strategy<Value = Vec<f64>> {
    (10u32..300).prop_flat_map(|n| prop::collection::vec((0..=n).prop_map(move |k| k as f64 / n as f64), 1..80))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn invariants_hold(acc in accuracies(), mut eps in prop::collection::vec(0.0f64..0.5, 1..6)) {
        eps.sort_by(f64::total_cmp);
        prop_assert_eq!(common::rashomon_invariants(&acc, &eps), Ok(()));
    }

    #[test]
    fn huge_epsilon_takes_everything(acc in accuracies()) {
        prop_assert_eq!(extract_from(&acc, 1.0).unwrap().len(), acc.len());
    }

    #[test]
    fn set_mean_is_at_least_space_mean(acc in accuracies(), eps in 0.0f64..0.3) {
        let set = extract_from(&acc, eps).unwrap();
        let s = summary_from(&acc, &set).unwrap();
        prop_assert!(s.set_mean >= s.space_mean - 1e-12);
        prop_assert!(s.set_size <= s.space_size);
        prop_assert!(s.set_sd >= 0.0);
    }

    #[test]
    fn sweep_matches_independent_extraction(acc in accuracies(), mut eps in prop::collection::vec(0.0f64..0.5, 0..6)) {
        eps.sort_by(f64::total_cmp);
        let sweep = sweep_from(&acc, &eps).unwrap();
        for (e, size) in sweep {
            prop_assert_eq!(size, extract_from(&acc, e).unwrap().len());
        }
    }
}

#[test]
fn hundred_random_spaces() {
    common::check_rashomon_spaces(100, 12).unwrap();
}

#[test]
fn boundary_member_is_included_exactly() {
    // Dyadic values keep the boundary comparison exact.
    let acc = [0.875, 0.8125, 0.75];
    let set = extract_from(&acc, 0.0625).unwrap();
    assert_eq!(set.member_ids, vec![0, 1]);
}

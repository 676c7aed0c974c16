use kquant::{interlacing_check, moment_match_set, SymmetricSpectrum};
use proptest::prelude::*;

fn spectrum(v: &[f64]) -> SymmetricSpectrum {
    SymmetricSpectrum::from_values(v.to_vec()).unwrap()
}

// The moment-matched bound is not universal: for this 8-point set the
// 5th largest value exceeds the 2nd largest matched value.
#[test]
fn moment_matched_bound_can_fail_for_small_sets() {
    let s = [7.0, 8.0, 14.0, 18.0, 19.0, 20.0, 22.0, 27.0];
    let t = moment_match_set(&s, 4).unwrap();
    let expected = [7.3587, 16.9797, 17.7352, 25.4264];
    for (a, b) in t.iter().zip(expected) {
        assert!((a - b).abs() < 1e-4, "{t:?}");
    }
    let report = interlacing_check(&spectrum(&s), &spectrum(&t));
    assert!(!report.flags[4]);
    assert_eq!(report.flags.iter().filter(|f| !**f).count(), 1);
    assert!(report.upper[4] < 18.0);
}

#[test]
fn reference_matched_set_interlaces() {
    let s = kquant::REFERENCE_SET;
    let t = moment_match_set(&s, 5).unwrap();
    let r = interlacing_check(&spectrum(&s), &spectrum(&t));
    assert_eq!(r.coverage, 1.0);
    assert_eq!(r.mean_relative_violation(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interlacing_with_itself_is_complete(v in prop::collection::vec(0.0f64..100.0, 1..30)) {
        let a = spectrum(&v);
        let r = interlacing_check(&a, &a);
        prop_assert_eq!(r.coverage, 1.0);
    }
}

use chgoe::distributions::{gap_finite, smallest_finite, FiniteSpec};
use chgoe::kernels::{kernel_cd, kernel_sum};
use chgoe::microscopic::gap_micro;
use chgoe::LogScaled;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gap_is_a_survival_function(p in 2usize..14, k in 0usize..4, t1 in 0.01f64..4.0, dt in 0.001f64..2.0) {
        let e1 = gap_finite(FiniteSpec::new(p, k, t1).unwrap()).unwrap();
        let e2 = gap_finite(FiniteSpec::new(p, k, t1 + dt).unwrap()).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&e1));
        prop_assert!(e2 <= e1 + 1e-12);
        prop_assert!(smallest_finite(FiniteSpec::new(p, k, t1).unwrap()).unwrap() >= 0.0);
    }

    #[test]
    fn kernel_forms_agree(gamma in 0u32..2, l in 2usize..9, t in 0.05f64..4.0, x in 0.0f64..6.0, y in 0.0f64..6.0) {
        let a = kernel_cd(x, y, gamma, l, t).unwrap();
        let b = kernel_sum(x, y, gamma, l, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-3), "{} vs {}", a, b);
        let c = kernel_sum(y, x, gamma, l, t).unwrap();
        prop_assert!((b + c).abs() <= 1e-10 * b.abs().max(1e-12));
    }

    #[test]
    fn hard_edge_gap_decreases(k in 0usize..4, u in 0.01f64..40.0, du in 0.01f64..5.0) {
        let a = gap_micro(k, u).unwrap();
        let b = gap_micro(k, u + du).unwrap();
        prop_assert!(b <= a + 1e-12 && a <= 1.0 + 1e-9);
    }

    #[test]
    fn log_scaled_arithmetic(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let (la, lb) = (LogScaled::from_f64(a), LogScaled::from_f64(b));
        let s = la.add(lb).to_f64();
        prop_assert!((s - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300));
        prop_assert!(((la * lb).to_f64() - a * b).abs() <= 1e-12 * (a * b).abs().max(1e-300));
    }
}

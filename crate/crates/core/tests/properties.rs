use std::collections::BTreeSet;

use num_traits::Zero;
use proptest::prelude::*;
use urn_core::attributable::{
    a_from_s, control_law, feasible_s, hl_estimate_a, interval_a, pvalue_s, pvalue_s_exact,
};
use urn_core::bayes::{a_posterior, hpd_interval_with, tau_posterior, HpdRule, Prior};
use urn_core::exact::to_f64;
use urn_core::likelihood::{assignment_count, loglik_general, loglik_monotone, surface};
use urn_core::moments::{
    improved_variance, n01_bounds, neyman_variance, sensitivity_variance, BoundAssumption,
};
use urn_core::tables::{general_support, monotone_support, ParameterPoint};
use urn_core::ObservedTable;

fn observed(max: u64) -> impl Strategy<Value = ObservedTable> {
    (0..=max, 0..=max, 0..=max, 0..=max).prop_filter_map("both arms nonempty", |(a, b, c, d)| {
        ObservedTable::new(a, b, c, d).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_support_size(o in observed(25)) {
        let support = monotone_support(&o);
        prop_assert_eq!(support.len() as u64, (o.n11() + 1) * (o.n00() + 1));
        let distinct: BTreeSet<ParameterPoint> = support.iter().copied().collect();
        prop_assert_eq!(distinct.len(), support.len());
    }

    #[test]
    fn general_reduces_to_monotone(o in observed(30)) {
        for p in monotone_support(&o) {
            let g = loglik_general(&o, &p);
            let m = loglik_monotone(&o, &p);
            prop_assert!((g - m).abs() <= 1e-12, "{:?}: {} vs {}", p, g, m);
        }
    }

    #[test]
    fn support_is_nonzero_likelihood(o in observed(4), k in 0u64..6) {
        let n = o.total();
        let support: BTreeSet<ParameterPoint> = general_support(&o, k).into_iter().collect();
        for n11 in 0..=n {
            for n10 in 0..=n - n11 {
                if n10 + n11 + k > n {
                    continue;
                }
                let p = ParameterPoint::new(n10, n11, k);
                let positive = !assignment_count(&o, &p).is_zero();
                prop_assert_eq!(positive, support.contains(&p), "{:?}", p);
            }
        }
    }

    #[test]
    fn surface_matches_support(o in observed(8), k in 0u64..4) {
        let s = surface(&o, k);
        prop_assert_eq!(s.len(), general_support(&o, k).len());
        prop_assert!(s.entries().iter().all(|(_, ll)| ll.is_finite()));
    }

    #[test]
    fn posteriors_normalize_and_hpd_covers(o in observed(12), k in 0u64..3) {
        let Ok(d) = tau_posterior(&o, k, &Prior::Uniform) else {
            prop_assert!(general_support(&o, k).is_empty());
            return Ok(());
        };
        prop_assert!((d.total_mass() - 1.0).abs() <= 1e-9);
        for rule in [HpdRule::MinimalWindow, HpdRule::OneStepPast] {
            let ci = hpd_interval_with(&d, 0.9, rule);
            prop_assert!(ci.contains(ci.point));
            let covered: f64 = d.iter().filter(|(v, _)| ci.contains(*v)).map(|(_, m)| m).sum();
            prop_assert!(covered >= 0.9 - 1e-12);
        }
        let a = a_posterior(&o, k, &Prior::Uniform).unwrap();
        prop_assert!((a.total_mass() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn neyman_is_wider_when_tau_hat_nonnegative(o in observed(40)) {
        if o.p1_hat() >= o.p0_hat() {
            prop_assert!(neyman_variance(&o) >= improved_variance(&o) - 1e-15);
        }
    }

    #[test]
    fn sensitivity_variance_decreases(o in observed(40)) {
        let mut last = f64::INFINITY;
        for k in 0..5 {
            match sensitivity_variance(&o, k) {
                Ok(v) => {
                    prop_assert!(v < last);
                    last = v;
                }
                Err(_) => break,
            }
        }
    }

    #[test]
    fn bounds_nest(o in observed(40)) {
        let frechet = n01_bounds(&o, BoundAssumption::Frechet);
        if let Ok((lo, hi)) = n01_bounds(&o, BoundAssumption::NonnegCorrelation) {
            let (flo, fhi) = frechet.unwrap();
            prop_assert!(flo == lo && hi <= fhi);
        }
        if let Ok((lo, _)) = n01_bounds(&o, BoundAssumption::NonnegCorrelationAndEffect) {
            prop_assert_eq!(lo, 0);
        }
    }

    #[test]
    fn pvalues_are_probabilities(o in observed(20)) {
        let mut best = 0.0f64;
        for s in feasible_s(&o) {
            let p = pvalue_s(&o, s).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0 + 1e-12);
            prop_assert!((p - to_f64(&pvalue_s_exact(&o, s).unwrap())).abs() < 1e-12);
            prop_assert!(control_law(&o, s).unwrap().contains(o.n01()));
            best = best.max(p);
        }
        let hl = hl_estimate_a(&o);
        for a in &hl {
            let s = (o.n11() + o.n01()) as i64 - a;
            prop_assert_eq!(pvalue_s(&o, s as u64).unwrap(), best);
        }
        let inv = interval_a(&o, 0.05).unwrap();
        prop_assert!(hl.iter().all(|a| inv.retained.contains(a)));
        prop_assert!(inv.retained.iter().all(|a| feasible_s(&o).any(|s| a_from_s(&o, s) == *a)));
    }

    #[test]
    fn serde_round_trip(o in observed(50)) {
        let json = serde_json::to_string(&o).unwrap();
        let back: ObservedTable = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, o);
    }
}

#[test]
fn invalid_json_table_is_rejected() {
    assert!(serde_json::from_str::<ObservedTable>(r#"{"n11":0,"n10":0,"n01":1,"n00":1}"#).is_err());
}

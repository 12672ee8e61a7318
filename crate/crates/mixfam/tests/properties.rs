//! Randomized invariant checks for the family layer: divergence
//! nonnegativity, projection geometry, and dual-potential convexity.

use proptest::prelude::*;

use mixfam::family::{dual_potential, m_projection};
use mixfam::{
    kl_divergence, renyi_divergence, Distribution, FeatureFunction, MixtureFamily,
};

fn dist(n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.05..1.0f64, n)
        .prop_map(|w| Distribution::normalized(w).unwrap())
}

fn theta(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, k)
}

fn line_family() -> MixtureFamily {
    MixtureFamily::new(
        4,
        vec![(
            FeatureFunction::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
            1.2,
        )],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kl_nonnegative_and_faithful(p in dist(4), q in dist(4)) {
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-14);
        // D = 0 only at equality (within numerical slack).
        let tv: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).sum();
        if tv > 1e-3 {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn renyi_nonnegative_and_ordered(p in dist(4), q in dist(4)) {
        // D_α ≥ 0 and nondecreasing in α.
        let orders = [0.3, 0.5, 0.9, 1.5, 2.0];
        let mut last = 0.0;
        for &a in &orders {
            let d = renyi_divergence(a, &p, &q).unwrap();
            prop_assert!(d >= -1e-13, "order {a}: {d}");
            prop_assert!(d >= last - 1e-10, "order {a} below previous");
            last = d;
        }
    }

    #[test]
    fn projection_satisfies_pythagoras(q in dist(4), member_seed in dist(4)) {
        let fam = line_family();
        let (proj, report) = m_projection(&q, &fam, 1e-12).unwrap();
        prop_assert!(report.converged);
        // Any member p: D(p‖q) = D(p‖Γq) + D(Γq‖q).
        let (p, _) = m_projection(&member_seed, &fam, 1e-12).unwrap();
        let lhs = kl_divergence(&p, &q).unwrap();
        let rhs = kl_divergence(&p, &proj).unwrap() + kl_divergence(&proj, &q).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
        // And the projection is the closest member.
        prop_assert!(kl_divergence(&proj, &q).unwrap() <= kl_divergence(&p, &q).unwrap() + 1e-10);
    }

    #[test]
    fn dual_potential_is_convex(q in dist(4), t1 in theta(1), t2 in theta(1)) {
        let fam = line_family();
        let mid: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| 0.5 * (a + b)).collect();
        let (v1, _) = dual_potential(&q, &fam, &t1).unwrap();
        let (v2, _) = dual_potential(&q, &fam, &t2).unwrap();
        let (vm, _) = dual_potential(&q, &fam, &mid).unwrap();
        prop_assert!(vm <= 0.5 * (v1 + v2) + 1e-10);
    }

    #[test]
    fn dual_gradient_matches_finite_differences(q in dist(4), t in theta(1)) {
        let fam = line_family();
        let (_, grad) = dual_potential(&q, &fam, &t).unwrap();
        let h = 1e-6;
        for j in 0..t.len() {
            let mut up = t.clone();
            let mut dn = t.clone();
            up[j] += h;
            dn[j] -= h;
            let (vu, _) = dual_potential(&q, &fam, &up).unwrap();
            let (vd, _) = dual_potential(&q, &fam, &dn).unwrap();
            let fd = (vu - vd) / (2.0 * h);
            prop_assert!((grad[j] - fd).abs() < 1e-6, "{} vs {fd}", grad[j]);
        }
    }

    #[test]
    fn projection_is_idempotent(q in dist(4)) {
        let fam = line_family();
        let (proj, _) = m_projection(&q, &fam, 1e-12).unwrap();
        let (again, _) = m_projection(&proj, &fam, 1e-12).unwrap();
        for (a, b) in proj.probs().iter().zip(again.probs()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

use proptest::prelude::*;
use robust_hedge::prelude::*;

fn power_law(scale: f64, alpha: f64, z_min: f64, z_max: f64) -> JumpSpec {
    JumpSpec::new(Measure::PowerLaw { scale, alpha, z_min, z_max }, MarkFactor::Identity).unwrap()
}

/// `∫_{|z| ≤ ε} z² · scale |z|^{-1-α}` over `[z_min, z_max]`, one side at a time.
fn g2_closed_form(scale: f64, alpha: f64, z_min: f64, z_max: f64, eps: f64) -> f64 {
    let side = |reach: f64| scale * eps.min(reach).powf(2.0 - alpha) / (2.0 - alpha);
    side(-z_min) + side(z_max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn small_jump_variance_matches_closed_form(
        scale in 0.1f64..5.0,
        alpha in 0.05f64..1.9,
        z_min in -2.0f64..-0.05,
        z_max in 0.05f64..2.0,
        eps in 1e-4f64..3.0,
    ) {
        let j = power_law(scale, alpha, z_min, z_max);
        let want = g2_closed_form(scale, alpha, z_min, z_max, eps);
        let got = j.small_jump_variance(eps);
        prop_assert!((got - want).abs() <= 1e-8 * want.max(1e-300), "{got} vs {want}");
    }

    #[test]
    fn small_jump_variance_is_monotone_and_splits_exactly(
        alpha in 0.05f64..1.9,
        e1 in 1e-4f64..1.5,
        e2 in 1e-4f64..1.5,
    ) {
        let j = power_law(1.0, alpha, -1.0, 1.0);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(j.small_jump_variance(lo) <= j.small_jump_variance(hi) * (1.0 + 1e-9));
        for eps in [lo, hi] {
            let (small, kept) = j.split_g2(eps);
            prop_assert_eq!(small + kept, j.total_g2());
        }
    }

    #[test]
    fn added_noise_leaves_kappa_unchanged(eps in 1e-3f64..1.5, a in -0.2f64..0.2, b in 0.05f64..0.6) {
        let j = power_law(1.0, 0.5, -1.0, 1.0);
        let model = MarketModel::new(j, CoefficientSpec::constant(a, b, 0.0, 0.3), 1.0, 1.0).unwrap();
        let kind = ApproximationKind::new(KindTag::TruncateAddB, eps).unwrap();
        let p = KindParams::resolve(&model, kind, 1e-4).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            prop_assert_eq!(p.kappa(&model, t).to_bits(), model.kappa(t).to_bits());
        }
    }
}

#[test]
fn atoms_split_by_mark_size() {
    let atoms = vec![
        Atom { mark: -0.3, intensity: 2.0 },
        Atom { mark: 0.1, intensity: 1.0 },
        Atom { mark: 0.6, intensity: 0.5 },
    ];
    let j = JumpSpec::new(Measure::Atoms { atoms }, MarkFactor::Identity).unwrap();
    assert_eq!(j.small_jump_variance(0.05), 0.0);
    assert!((j.small_jump_variance(0.2) - 0.01).abs() < 1e-15);
    assert!((j.small_jump_variance(0.3) - (0.01 + 0.18)).abs() < 1e-15);
    assert!((j.total_g2() - (0.01 + 0.18 + 0.18)).abs() < 1e-15);
}

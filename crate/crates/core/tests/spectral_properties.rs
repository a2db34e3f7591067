use levywave::spectral::{SpectralDomain, TransformKind};
use proptest::prelude::*;

fn coeffs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn poincare_holds_for_random_vectors(
        c in coeffs(12),
        length in 0.5f64..8.0,
        alpha in -1.0f64..2.0,
        gap in 0.0f64..2.0,
    ) {
        let d = SpectralDomain::new(length, 12).unwrap();
        let beta = alpha + gap;
        prop_assert!(d.poincare_check(&c, alpha, beta).unwrap());
        let lhs = d.fractional_norm(&c, alpha).unwrap();
        let rhs = d.lambda1().powf((alpha - beta) / 2.0) * d.fractional_norm(&c, beta).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-14));
    }

    #[test]
    fn parseval_matches_grid_norm(c in coeffs(9), length in 0.5f64..8.0, extra in 0usize..7) {
        let d = SpectralDomain::with_grid(length, 9, 18 + extra).unwrap();
        let field = d.to_physical(&c).unwrap();
        let grid: f64 = field.iter().map(|x| x * x).sum::<f64>() * d.quadrature_weight();
        let h = d.fractional_norm(&c, 0.0).unwrap().powi(2);
        prop_assert!((grid - h).abs() <= 1e-10 * h.max(1e-300));
    }

    #[test]
    fn transform_pair_is_identity(c in coeffs(10), extra in 0usize..9) {
        let d = SpectralDomain::with_grid(std::f64::consts::PI, 10, 20 + extra).unwrap();
        let back = d.from_physical(&d.to_physical(&c).unwrap()).unwrap();
        let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in c.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn projection_is_idempotent(field in prop::collection::vec(-3.0f64..3.0, 16)) {
        let d = SpectralDomain::with_grid(2.0, 6, 16).unwrap();
        let once = d.from_physical(&field).unwrap();
        let twice = d.from_physical(&d.to_physical(&once).unwrap()).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn eigenvalues_scale_to_squares() {
    for &length in &[1.0, std::f64::consts::PI, 7.5] {
        let d = SpectralDomain::new(length, 40).unwrap();
        let s = (length / std::f64::consts::PI).powi(2);
        for (k, l) in d.eigenvalues().iter().enumerate() {
            let n = (k + 1) as f64;
            assert!((l * s - n * n).abs() <= 1e-12 * n * n, "k = {}", k + 1);
        }
    }
}

#[test]
fn fast_and_direct_transforms_agree() {
    let k = 300;
    let direct = SpectralDomain::with_transform(3.0, k, 2 * k, TransformKind::Direct).unwrap();
    let fast = SpectralDomain::with_transform(3.0, k, 2 * k, TransformKind::Fast).unwrap();
    assert!(fast.uses_fast_transform());
    assert!(!direct.uses_fast_transform());
    let c: Vec<f64> = (0..k)
        .map(|i| ((i * 37 % 11) as f64 - 5.0) / (1.0 + i as f64))
        .collect();
    let fd = direct.to_physical(&c).unwrap();
    let ff = fast.to_physical(&c).unwrap();
    for (a, b) in fd.iter().zip(&ff) {
        assert!((a - b).abs() < 1e-10);
    }
    let cd = direct.from_physical(&fd).unwrap();
    let cf = fast.from_physical(&fd).unwrap();
    for ((a, b), orig) in cd.iter().zip(&cf).zip(&c) {
        assert!((a - b).abs() < 1e-10);
        assert!((a - orig).abs() < 1e-10);
    }
}

#[test]
fn ground_mode_attains_poincare_equality() {
    let d = SpectralDomain::new(std::f64::consts::PI, 5).unwrap();
    let e1 = [1.0, 0.0, 0.0, 0.0, 0.0];
    let h = d.fractional_norm(&e1, 0.0).unwrap();
    let v = d.fractional_norm(&e1, 1.0).unwrap();
    assert_eq!(h, d.lambda1().powf(-0.5) * v);
}

use num_complex::Complex64;
use proptest::prelude::*;

use waring_shifts::exponents::parse_rational;
use waring_shifts::polynomials::{monomial, Constant, RealCoefficient};
use waring_shifts::weyl::{fitted_slope, oscillatory_integral, weyl_sum, WeylRange};

fn poly(coeffs: &[(i64, i64)], tag: Option<Constant>) -> Vec<RealCoefficient> {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, &(p, q))| {
            let r = parse_rational(&format!("{p}/{q}")).unwrap();
            match tag {
                Some(c) if j == 1 => RealCoefficient::tagged(r, c, parse_rational("1/3").unwrap()),
                _ => RealCoefficient::rational(r),
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_symmetry(
        coeffs in prop::collection::vec((-20i64..20, 1i64..9), 3..6),
        lead in 1i64..5,
        alpha in -3.0f64..3.0,
        p in 5.0f64..200.0,
        b in 0.0f64..0.5,
        width in 0.2f64..2.0,
    ) {
        let mut c = coeffs.clone();
        c.push((lead, 1));
        let h = poly(&c, Some(Constant::Golden));
        let r = WeylRange::new(b, b + width, p).unwrap();
        let plus = weyl_sum(&h, &r, alpha).unwrap();
        let minus = weyl_sum(&h, &r, -alpha).unwrap();
        prop_assert!((plus - minus.conj()).norm() < 1e-12 * (r.len() as f64).max(1.0));
    }

    #[test]
    fn zero_frequency_counts_the_range(p in 1.0f64..500.0, b in 0.0f64..1.0, width in 0.01f64..3.0) {
        let r = WeylRange::new(b, b + width, p).unwrap();
        let g = weyl_sum(&monomial(3), &r, 0.0).unwrap();
        prop_assert_eq!(g, Complex64::new(r.len() as f64, 0.0));
    }
}

#[test]
fn oscillatory_integral_decays_like_alpha_to_minus_one_over_k() {
    for k in 2..=6u32 {
        let alphas: Vec<f64> = (0..=16).map(|i| 10f64.powf(i as f64 / 4.0)).collect();
        let logs: Vec<f64> = alphas
            .iter()
            .map(|&a| oscillatory_integral(&monomial(k), 0.0, 1.0, a, 1e-10).unwrap().value.norm().ln())
            .collect();
        let xs: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();
        let slope = fitted_slope(&xs, &logs);
        assert!((slope + 1.0 / k as f64).abs() < 0.05, "k = {k}: slope {slope}");
    }
}

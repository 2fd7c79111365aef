use nalgebra::DMatrix;
use num_complex::Complex64;
use opdiff_core::bounds::{exact_norm_bz, lower_bound_norm, upper_bound_norm};
use opdiff_core::linalg::largest_singular_value;
use opdiff_core::operator::{apply_to_monomial, build_matrix, find_fixed_point, OperatorSpec};
use opdiff_core::series::{
    bell_coefficients, blaschke_series, compose, derivative_at, multiply, TruncatedSeries,
};
use opdiff_core::space::{inner_product, norm};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn small_point() -> impl Strategy<Value = Complex64> {
    (0.0..0.7f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn polynomial(max_len: usize) -> impl Strategy<Value = TruncatedSeries> {
    prop::collection::vec(complex(), 1..=max_len).prop_map(TruncatedSeries::new)
}

/// Self-map with `φ(0) = 0` and sup at most 0.8.
fn symbol() -> impl Strategy<Value = TruncatedSeries> {
    prop::collection::vec(complex(), 1..=3).prop_map(|cs| {
        let l1: f64 = cs.iter().map(|c| c.norm()).sum();
        let scale = if l1 > 0.8 { 0.8 / l1 } else { 1.0 };
        let mut coeffs = vec![Complex64::new(0.0, 0.0)];
        coeffs.extend(cs.iter().map(|c| c * scale));
        TruncatedSeries::new(coeffs)
    })
}

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![Just(-1.0), Just(0.0), Just(1.0), 0.0..3.0f64]
}

fn frob(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiply_is_pointwise(f in polynomial(6), g in polynomial(6), z in small_point()) {
        let p = multiply(&f, &g, 12);
        let expected = f.eval(z) * g.eval(z);
        prop_assert!((p.eval(z) - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    }

    #[test]
    fn derivative_matches_finite_difference(f in polynomial(8), z in small_point()) {
        let h = 1e-6;
        let hc = Complex64::new(h, 0.0);
        let fd = (f.eval(z + hc) - f.eval(z - hc)) / (2.0 * h);
        let d = derivative_at(&f, 1, z).unwrap();
        prop_assert!((fd - d).norm() <= 1e-6 * (1.0 + d.norm()));
    }

    #[test]
    fn bell_matches_composition(g in polynomial(6), phi in symbol(), w in small_point(), j in 1usize..6) {
        // (g∘φ)^{(j)}(w) = Σ_k g^{(k)}(φ(w)) B_{j,k}
        let derivs: Vec<Complex64> = (1..=j).map(|k| derivative_at(&phi, k, w).unwrap()).collect();
        let table = bell_coefficients(&derivs, j).unwrap();
        let at = phi.eval(w);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..=j {
            sum += derivative_at(&g, k, at).unwrap() * table.get(k);
        }
        let h = compose(&g, &phi, 40);
        let direct = derivative_at(&h, j, w).unwrap();
        prop_assert!((sum - direct).norm() <= 1e-9 * (1.0 + direct.norm()));
    }

    #[test]
    fn matrix_columns_match_monomial_images(psi in polynomial(3), phi in symbol(), n in 1usize..3, a in alpha()) {
        let spec = OperatorSpec::differentiation(psi, phi, n).unwrap();
        let dim = 24;
        let m = build_matrix(&spec, a, dim).unwrap();
        for j in [0usize, 3, 11, 23] {
            let image = apply_to_monomial(&spec, j, dim - 1);
            let e = TruncatedSeries::monomial(j, Complex64::new(1.0, 0.0));
            let col = m.to_orthonormal(&image) / Complex64::new(norm(&e, a), 0.0);
            let diff = (m.entries.column(j) - col).norm();
            prop_assert!(diff <= 1e-10 * (1.0 + m.entries.column(j).norm()));
        }
    }

    #[test]
    fn adjoint_is_coherent(psi in polynomial(3), phi in symbol(), a in alpha(),
                           f in polynomial(6), g in polynomial(6)) {
        // ⟨T f, g⟩ = ⟨f, T* g⟩ in orthonormal coordinates
        let spec = OperatorSpec::differentiation(psi, phi, 1).unwrap();
        let m = build_matrix(&spec, a, 16).unwrap();
        let x = m.to_orthonormal(&f);
        let y = m.to_orthonormal(&g);
        let tf = m.from_orthonormal(&(&m.entries * &x));
        let lhs = inner_product(&tf, &g, a);
        let rhs = (m.adjoint() * &y).dotc(&x);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn scaling_the_weight_scales_the_matrix(psi in polynomial(3), phi in symbol(), c in complex()) {
        let spec = OperatorSpec::differentiation(psi, phi, 1).unwrap();
        let m = build_matrix(&spec, -1.0, 20).unwrap().entries;
        let ms = build_matrix(&spec.scaled(c), -1.0, 20).unwrap().entries;
        prop_assert!(frob(&(ms - m * c)) <= 1e-12 * (1.0 + frob(&build_matrix(&spec, -1.0, 20).unwrap().entries)));
    }

    #[test]
    fn section_norm_is_monotone(psi in polynomial(3), phi in symbol(), n in 1usize..3) {
        let spec = OperatorSpec::differentiation(psi, phi, n).unwrap();
        let small = largest_singular_value(&build_matrix(&spec, -1.0, 16).unwrap().entries, 1e-14).unwrap().value;
        let large = largest_singular_value(&build_matrix(&spec, -1.0, 32).unwrap().entries, 1e-14).unwrap().value;
        prop_assert!(large >= small * (1.0 - 1e-8));
    }

    #[test]
    fn exact_norm_depends_on_modulus_only(r in 0.05..0.95f64, t in 0.0..std::f64::consts::TAU, n in 1usize..5) {
        let a = exact_norm_bz(Complex64::new(r, 0.0), n).unwrap();
        let b = exact_norm_bz(Complex64::from_polar(r, t), n).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn numeric_norm_sits_between_bounds(psi in polynomial(3), c1 in 0.05..0.5f64, c2 in -0.3..0.3f64, n in 1usize..3) {
        let phi = TruncatedSeries::from_real(&[0.0, c1, c2]);
        let spec = OperatorSpec::differentiation(psi, phi.clone(), n).unwrap();
        let fp = find_fixed_point(&phi).unwrap();
        let lower = lower_bound_norm(&spec, &fp, -1.0).unwrap().value;
        let upper = upper_bound_norm(&spec, -1.0, None).unwrap().value;
        let numeric = largest_singular_value(&build_matrix(&spec, -1.0, 128).unwrap().entries, 1e-12).unwrap().value;
        prop_assert!(lower <= numeric * (1.0 + 1e-6) + 1e-9, "lower {} numeric {}", lower, numeric);
        // The sampled sup of ψ is a lower estimate, hence the slack.
        prop_assert!(numeric <= upper * (1.0 + 1e-4), "numeric {} upper {}", numeric, upper);
    }

    #[test]
    fn blaschke_multiplication_is_isometric(f in polynomial(10), w in small_point()) {
        let b = blaschke_series(w, 256).unwrap();
        let bf = multiply(&f, &b, 256);
        let before = norm(&f, -1.0);
        let after = norm(&bf, -1.0);
        prop_assert!((before - after).abs() <= 1e-10 * (1.0 + before));
    }
}

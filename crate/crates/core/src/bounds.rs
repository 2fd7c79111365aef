//! Norm estimates for `D_{ψ,φ,n}` on the Hardy space: a lower bound from
//! the spectrum of an isometrically modified weight, an upper bound through
//! the factorization `D_{φ,n} = C_{φ/b} D_{bz,n}`, the exact norm for
//! `φ(z) = bz`, and the hyponormality classification.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_in_disk, OpError, Result};
use crate::linalg::{hermitian_eigenvalues, largest_singular_value};
use crate::operator::{build_matrix, FixedPointInfo, OperatorSpec};
use crate::series::{
    blaschke_series, derivative_at, factorial, multiply, power, sup_norm_estimate, TruncatedSeries,
    DEFAULT_SUP_SAMPLES,
};
use crate::spectral::{argmax_l, check_vanishing, operator_norm};

pub const DEFAULT_VANISHING_THRESHOLD: f64 = 1e-9;
/// Truncation used for products with Blaschke factors.
const BLASCHKE_TRUNC: usize = 256;
/// `|φ'(w)|` below this counts as zero.
const ZERO_DERIVATIVE: f64 = 1e-14;
/// Relative size below which a coefficient counts as absent in structural checks.
const STRUCTURAL_TOL: f64 = 1e-14;

fn require_hardy(alpha: f64, what: &str) -> Result<()> {
    if alpha == -1.0 {
        Ok(())
    } else {
        Err(OpError::Unsupported(format!(
            "{what} is only available on the Hardy space (alpha = -1), got alpha = {alpha}"
        )))
    }
}

/// Smallest `k` with `|ψ^{(k)}(w)| / k! > threshold · (1 + max_j |ψ_j|)`.
pub fn vanishing_order(psi: &TruncatedSeries, w: Complex64, threshold: f64) -> Result<usize> {
    check_in_disk(w)?;
    let scale = psi.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cutoff = threshold * (1.0 + scale);
    for k in 0..=psi.trunc_degree() {
        let taylor = derivative_at(psi, k, w)?.norm() / factorial(k);
        if taylor > cutoff {
            return Ok(k);
        }
    }
    Err(OpError::IdenticallyZero {
        degree: psi.trunc_degree(),
    })
}

/// Which branch of the lower bound produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundCase {
    /// `φ'(w) ≠ 0`: spectral-radius type bound for the modified weight.
    NonzeroDerivative,
    /// `φ'(w) = 0`.
    ZeroDerivative,
    /// `φ'(w) = 0`, `ψ''(w) = 0`, `n = 1`: the extra eigenvalue `ψ(w)φ''(w)`.
    ZeroDerivativeFirstOrder,
    /// `ψ ≡ 0`.
    ZeroOperator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    pub case: LowerBoundCase,
    /// Vanishing order `m` of `ψ` at the fixed point.
    pub psi_order: Option<usize>,
    /// `|φ̂^{(n)}(w)|` for the modified weight `φ̂`.
    pub modified_weight_derivative: f64,
}

/// The weight `ψ` times enough Blaschke factors at `w` to vanish to order `n`.
pub fn modified_weight(
    psi: &TruncatedSeries,
    w: Complex64,
    n: usize,
) -> Result<(TruncatedSeries, Option<usize>)> {
    let m = match vanishing_order(psi, w, DEFAULT_VANISHING_THRESHOLD) {
        Ok(m) => m,
        Err(OpError::IdenticallyZero { .. }) => return Ok((psi.clone(), None)),
        Err(e) => return Err(e),
    };
    if m >= n {
        return Ok((psi.clone(), Some(m)));
    }
    let factors = n - m;
    let trunc = BLASCHKE_TRUNC.max(psi.trunc_degree() + n + 16);
    let b = blaschke_series(w, trunc)?;
    let bk = power(&b, factors, trunc);
    Ok((multiply(psi, &bk, trunc), Some(m)))
}

/// Lower bound for `‖D_{ψ,φ,n}‖` on `H²`.
pub fn lower_bound_norm(
    spec: &OperatorSpec,
    fp: &FixedPointInfo,
    alpha: f64,
) -> Result<LowerBound> {
    require_hardy(alpha, "the norm lower bound")?;
    let d = spec.diff_only().ok_or_else(|| {
        OpError::Unsupported("norm bounds need a differentiation-only operator".into())
    })?;
    let w = fp.w;
    let (hat, order) = modified_weight(&d.psi, w, d.order)?;
    if order.is_none() {
        return Ok(LowerBound {
            value: 0.0,
            case: LowerBoundCase::ZeroOperator,
            psi_order: None,
            modified_weight_derivative: 0.0,
        });
    }
    let hat_n = derivative_at(&hat, d.order, w)?.norm();
    let r = derivative_at(&d.phi, 1, w)?.norm();
    if r > ZERO_DERIVATIVE {
        let m = argmax_l(d.order, r)?;
        return Ok(LowerBound {
            value: hat_n * m.value,
            case: LowerBoundCase::NonzeroDerivative,
            psi_order: order,
            modified_weight_derivative: hat_n,
        });
    }
    let psi_second = derivative_at(&d.psi, 2, w)?.norm();
    if d.order == 1 && psi_second <= ZERO_DERIVATIVE {
        let extra = (d.psi.eval(w) * derivative_at(&d.phi, 2, w)?).norm();
        return Ok(LowerBound {
            value: hat_n.max(extra),
            case: LowerBoundCase::ZeroDerivativeFirstOrder,
            psi_order: order,
            modified_weight_derivative: hat_n,
        });
    }
    Ok(LowerBound {
        value: hat_n,
        case: LowerBoundCase::ZeroDerivative,
        psi_order: order,
        modified_weight_derivative: hat_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: f64,
    pub b: f64,
    /// Sampled estimate of `‖ψ‖∞` used in the bound.
    pub psi_sup: f64,
    /// `φ(0) = 0` and `‖φ‖∞ ≤ 1/(n+1)`: the value is `n! ‖ψ‖∞`, which is the
    /// norm itself when `ψ ≡ 1`.
    pub small_symbol_clause: bool,
}

/// Default `b`: the sampled sup of `φ` rounded up to `1e-6`.
pub fn default_b(phi: &TruncatedSeries) -> f64 {
    (sup_norm_estimate(phi, DEFAULT_SUP_SAMPLES) * 1e6).ceil() / 1e6
}

/// Upper bound `n! ‖ψ‖∞ sqrt((b+|φ(0)|)/(b-|φ(0)|)) C(l*, n) b^{l*-n}` with
/// `l* = ⌊n/(1-b)⌋`, for any `‖φ‖∞ ≤ b < 1`.
///
/// Sup norms are circle-sampled lower estimates, so the result is a
/// certified bound only when both maxima fall on a sample point.
pub fn upper_bound_norm(spec: &OperatorSpec, alpha: f64, b: Option<f64>) -> Result<UpperBound> {
    require_hardy(alpha, "the norm upper bound")?;
    let d = spec.diff_only().ok_or_else(|| {
        OpError::Unsupported("norm bounds need a differentiation-only operator".into())
    })?;
    let n = d.order;
    let phi_sup = sup_norm_estimate(&d.phi, DEFAULT_SUP_SAMPLES);
    let psi_sup = sup_norm_estimate(&d.psi, DEFAULT_SUP_SAMPLES);
    let phi0 = d.phi.coeff(0).norm();
    let b = match b {
        Some(b) => {
            if !(b.is_finite() && b >= phi_sup * (1.0 - 1e-12) && b < 1.0) {
                return Err(OpError::InvalidArgument(format!(
                    "b = {b} must satisfy sup|phi| = {phi_sup} <= b < 1"
                )));
            }
            b
        }
        None => default_b(&d.phi),
    };
    if b <= phi0 {
        return Err(OpError::InvalidArgument(format!(
            "b = {b} must exceed |phi(0)| = {phi0}"
        )));
    }
    if b >= 1.0 {
        return Err(OpError::InvalidArgument(format!("b = {b} must be below 1")));
    }
    if phi0 == 0.0 && small_symbol(phi_sup, n) {
        return Ok(UpperBound {
            value: factorial(n) * psi_sup,
            b,
            psi_sup,
            small_symbol_clause: true,
        });
    }
    let m = argmax_l(n, b)?;
    let value = factorial(n) * psi_sup * ((b + phi0) / (b - phi0)).sqrt() * m.value;
    Ok(UpperBound {
        value,
        b,
        psi_sup,
        small_symbol_clause: false,
    })
}

/// `‖φ‖∞ ≤ 1/(n+1)` up to rounding in the sampled sup.
fn small_symbol(phi_sup: f64, n: usize) -> bool {
    phi_sup <= (1.0 + 1e-12) / (n as f64 + 1.0)
}

/// `‖D_{bz,n}‖ = n! C(l*, n) |b|^{l*-n}` on `H²`, `l* = ⌊n/(1-|b|)⌋`.
pub fn exact_norm_bz(b: Complex64, n: usize) -> Result<f64> {
    let r = b.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(OpError::InvalidArgument(format!(
            "exact norm formula needs 0 < |b| < 1, got |b| = {r}"
        )));
    }
    Ok(factorial(n) * argmax_l(n, r)?.value)
}

/// `Some(c)` when `f = c z^k` exactly (with `c ≠ 0`).
fn monomial_coefficient(f: &TruncatedSeries, k: usize) -> Option<Complex64> {
    if !f.is_exact() {
        return None;
    }
    let scale = f.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let lead = f.coeff(k);
    let others_vanish = f
        .coeffs()
        .iter()
        .enumerate()
        .all(|(j, c)| j == k || c.norm() <= STRUCTURAL_TOL * scale);
    (others_vanish && lead.norm() > STRUCTURAL_TOL * scale).then_some(lead)
}

/// Norm report for a differentiation-only operator on `H²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
    pub numeric: f64,
    pub trunc_degree: usize,
    pub lower_case: LowerBoundCase,
    pub upper_b: f64,
    pub method_tags: Vec<String>,
}

/// Closed-form norm when the operator is `D_{az^n, bz, n}` or the small
/// symbol clause applies with `ψ ≡ 1`.
pub fn exact_norm(spec: &OperatorSpec) -> Option<(f64, &'static str)> {
    let d = spec.diff_only()?;
    if let (Some(a), Some(b)) = (
        monomial_coefficient(&d.psi, d.order),
        monomial_coefficient(&d.phi, 1),
    ) {
        return exact_norm_bz(b, d.order)
            .ok()
            .map(|v| (a.norm() * v, "monomial_weight_linear_symbol"));
    }
    let unit_weight =
        d.psi.is_exact() && d.psi.degree() == 0 && d.psi.coeff(0) == Complex64::new(1.0, 0.0);
    let phi_sup = sup_norm_estimate(&d.phi, DEFAULT_SUP_SAMPLES);
    if unit_weight && d.phi.coeff(0).norm() == 0.0 && small_symbol(phi_sup, d.order) {
        return Some((factorial(d.order), "small_symbol_clause"));
    }
    None
}

pub fn norm_report(
    spec: &OperatorSpec,
    dim: usize,
    tol: f64,
    b: Option<f64>,
) -> Result<NormReport> {
    let alpha = -1.0;
    let d = spec.diff_only().ok_or_else(|| {
        OpError::Unsupported("norm bounds need a differentiation-only operator".into())
    })?;
    let fp = crate::operator::find_fixed_point(&d.phi)?;
    let lower = lower_bound_norm(spec, &fp, alpha)?;
    let upper = upper_bound_norm(spec, alpha, b)?;
    let m = build_matrix(spec, alpha, dim)?;
    let numeric = operator_norm(&m, tol)?;
    let mut method_tags = vec![
        format!("lower:{}", serde_case(lower.case)),
        if upper.small_symbol_clause {
            "upper:small_symbol_clause".to_string()
        } else {
            "upper:factorization_bound".to_string()
        },
        "numeric:power_iteration".to_string(),
    ];
    let exact = exact_norm(spec).map(|(v, tag)| {
        method_tags.push(format!("exact:{tag}"));
        v
    });
    Ok(NormReport {
        lower: lower.value,
        upper: upper.value,
        exact,
        numeric,
        trunc_degree: dim,
        lower_case: lower.case,
        upper_b: upper.b,
        method_tags,
    })
}

fn serde_case(case: LowerBoundCase) -> &'static str {
    match case {
        LowerBoundCase::NonzeroDerivative => "nonzero_derivative",
        LowerBoundCase::ZeroDerivative => "zero_derivative",
        LowerBoundCase::ZeroDerivativeFirstOrder => "zero_derivative_first_order",
        LowerBoundCase::ZeroOperator => "zero_operator",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HyponormalityVerdict {
    /// `ψ = a z^n`, `φ = b z`: diagonal in the monomial basis, hence normal.
    Normal,
    /// Neither hyponormal nor cohyponormal.
    NotHyponormal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyponormalityReport {
    pub verdict: HyponormalityVerdict,
    pub psi_coefficient: Option<Complex64>,
    pub phi_coefficient: Option<Complex64>,
    /// `n! |a| C(l*, n) |b|^{l*-n}` for the normal case.
    pub norm_closed: Option<f64>,
    pub norm_numeric: f64,
    pub block_size: usize,
    pub commutator_min: f64,
    pub commutator_max: f64,
    pub commutator_max_abs_entry: f64,
    pub tol: f64,
    /// Numeric evidence agrees with the verdict.
    pub consistent: bool,
}

/// Structural hyponormality verdict for a compact `D_{ψ,φ,n}` whose weight
/// vanishes to order at least `n` at the fixed point, with numeric evidence
/// from the leading `⌊dim/4⌋` block of `T*T − TT*`.
pub fn hyponormality_classify(
    spec: &OperatorSpec,
    fp: &FixedPointInfo,
    alpha: f64,
    dim: usize,
) -> Result<HyponormalityReport> {
    let d = spec.diff_only().ok_or_else(|| {
        OpError::Unsupported(
            "hyponormality classification needs a differentiation-only operator".into(),
        )
    })?;
    if d.psi.is_zero() {
        return Err(OpError::Hypothesis(
            "psi must not be identically zero".into(),
        ));
    }
    if d.phi.is_exact() && d.phi.degree() == 0 {
        return Err(OpError::Hypothesis("phi must be nonconstant".into()));
    }
    check_vanishing(&d.psi, fp.w, d.order)?;

    let a = monomial_coefficient(&d.psi, d.order);
    let b = monomial_coefficient(&d.phi, 1);
    let verdict = match (a, b) {
        (Some(_), Some(b)) if b.norm() > 0.0 && b.norm() < 1.0 => HyponormalityVerdict::Normal,
        _ => HyponormalityVerdict::NotHyponormal,
    };
    let norm_closed = match (verdict, a, b) {
        (HyponormalityVerdict::Normal, Some(a), Some(b)) => {
            Some(a.norm() * exact_norm_bz(b, d.order)?)
        }
        _ => None,
    };

    let m = build_matrix(spec, alpha, dim)?;
    let norm_numeric = largest_singular_value(&m.entries, 1e-12)?.value;
    let t = &m.entries;
    let commutator = t.adjoint() * t - t * t.adjoint();
    let k = (dim / 4).max(1);
    let block = commutator.view((0, 0), (k, k)).into_owned();
    let max_abs_entry = block.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let spectrum = hermitian_eigenvalues(&block);
    let commutator_min = spectrum.first().copied().unwrap_or(0.0);
    let commutator_max = spectrum.last().copied().unwrap_or(0.0);
    let tol = 1e-8 * norm_numeric * norm_numeric;
    let consistent = match verdict {
        HyponormalityVerdict::Normal => commutator_min >= -tol && commutator_max <= tol,
        HyponormalityVerdict::NotHyponormal => commutator_min < -tol && commutator_max > tol,
    };
    Ok(HyponormalityReport {
        verdict,
        psi_coefficient: a,
        phi_coefficient: b,
        norm_closed,
        norm_numeric,
        block_size: k,
        commutator_min,
        commutator_max,
        commutator_max_abs_entry: max_abs_entry,
        tol,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::find_fixed_point;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn poly(cs: &[f64]) -> TruncatedSeries {
        TruncatedSeries::from_real(cs)
    }

    fn diff(psi: &[f64], phi: &[f64], n: usize) -> (OperatorSpec, FixedPointInfo) {
        let spec = OperatorSpec::differentiation(poly(psi), poly(phi), n).unwrap();
        let fp = find_fixed_point(&poly(phi)).unwrap();
        (spec, fp)
    }

    #[test]
    fn vanishing_order_examples() {
        assert_eq!(
            vanishing_order(&poly(&[0.0, 0.0, 1.0]), c(0.0), 1e-9).unwrap(),
            2
        );
        assert_eq!(vanishing_order(&poly(&[1.0]), c(0.0), 1e-9).unwrap(), 0);
        // (z - 0.5)^3
        let cube = poly(&[-0.125, 0.75, -1.5, 1.0]);
        assert_eq!(vanishing_order(&cube, c(0.5), 1e-9).unwrap(), 3);
        assert!(matches!(
            vanishing_order(&poly(&[0.0, 0.0]), c(0.2), 1e-9),
            Err(OpError::IdenticallyZero { .. })
        ));
    }

    #[test]
    fn lower_bound_examples() {
        let (spec, fp) = diff(&[0.0, 1.0], &[0.0, 0.5], 1);
        let lb = lower_bound_norm(&spec, &fp, -1.0).unwrap();
        assert_relative_eq!(lb.value, 1.0, epsilon = 1e-15);
        assert_eq!(lb.case, LowerBoundCase::NonzeroDerivative);

        let (spec, fp) = diff(&[1.0], &[0.0, 0.75, 0.0, 0.0, 0.0, 0.1], 1);
        let lb = lower_bound_norm(&spec, &fp, -1.0).unwrap();
        assert_relative_eq!(lb.value, 1.6875, epsilon = 1e-14);
        assert_eq!(lb.psi_order, Some(0));

        let (spec, fp) = diff(&[1.0], &[0.0, 0.0, 0.6, 0.3], 1);
        let lb = lower_bound_norm(&spec, &fp, -1.0).unwrap();
        assert_eq!(lb.case, LowerBoundCase::ZeroDerivativeFirstOrder);
        assert_relative_eq!(lb.value, 1.2, epsilon = 1e-14);

        assert!(matches!(
            lower_bound_norm(&spec, &fp, 0.0),
            Err(OpError::Unsupported(_))
        ));
    }

    #[test]
    fn modified_weight_derivative_matches_closed_form() {
        // ψ = (w - z) g with g ≡ 1, n = 3: φ̂^{(3)}(w) = (-1)^3 3! g(w) / (1 - |w|²)^2
        let w = Complex64::new(0.3, 0.2);
        let psi = TruncatedSeries::new(vec![w, c(-1.0)]);
        let (hat, m) = modified_weight(&psi, w, 3).unwrap();
        assert_eq!(m, Some(1));
        let got = derivative_at(&hat, 3, w).unwrap();
        let expected = c(-6.0) / (1.0 - w.norm_sqr()).powi(2);
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn upper_bound_examples() {
        let (spec, _) = diff(&[1.0], &[0.0, 0.5], 1);
        let ub = upper_bound_norm(&spec, -1.0, Some(0.5)).unwrap();
        assert_relative_eq!(ub.value, 1.0, epsilon = 1e-14);

        let (spec, _) = diff(&[1.0], &[0.0, 0.0, 0.5], 1);
        let ub = upper_bound_norm(&spec, -1.0, None).unwrap();
        assert!(ub.small_symbol_clause);
        assert_relative_eq!(ub.value, 1.0, epsilon = 1e-14);
        assert_eq!(exact_norm(&spec).map(|e| e.0), Some(1.0));

        let (spec, _) = diff(&[1.0], &[0.25, 0.25], 1);
        let ub = upper_bound_norm(&spec, -1.0, Some(0.5)).unwrap();
        assert_relative_eq!(ub.value, 3.0_f64.sqrt(), epsilon = 1e-14);

        // b not above |φ(0)|
        let (spec, _) = diff(&[1.0], &[0.5], 1);
        assert!(upper_bound_norm(&spec, -1.0, Some(0.5)).is_err());
        // b below the sup
        let (spec, _) = diff(&[1.0], &[0.0, 0.5], 1);
        assert!(upper_bound_norm(&spec, -1.0, Some(0.4)).is_err());
    }

    #[test]
    fn exact_norm_examples() {
        assert_relative_eq!(exact_norm_bz(c(0.5), 1).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(exact_norm_bz(c(0.5), 2).unwrap(), 3.0, epsilon = 1e-14);
        assert_relative_eq!(
            exact_norm_bz(c(0.9), 1).unwrap(),
            3.87420489,
            epsilon = 1e-8
        );
        assert_eq!(
            exact_norm_bz(c(0.5), 3).unwrap(),
            exact_norm_bz(Complex64::new(0.0, 0.5), 3).unwrap()
        );
        assert!(exact_norm_bz(c(0.0), 1).is_err());
        assert!(exact_norm_bz(c(1.0), 1).is_err());
    }

    #[test]
    fn hyponormality_normal_case() {
        let (spec, fp) = diff(&[0.0, 2.0], &[0.0, 0.5], 1);
        let r = hyponormality_classify(&spec, &fp, -1.0, 128).unwrap();
        assert_eq!(r.verdict, HyponormalityVerdict::Normal);
        assert_relative_eq!(r.norm_closed.unwrap(), 2.0, epsilon = 1e-14);
        assert!((r.norm_numeric - 2.0).abs() < 1e-6);
        assert!(r.commutator_max_abs_entry <= 1e-12);
        assert!(r.consistent);
    }

    #[test]
    fn hyponormality_mixed_cases() {
        for psi in [&[0.0, 1.0, 1.0][..], &[0.0, 0.0, 1.0][..]] {
            let (spec, fp) = diff(psi, &[0.0, 0.5], 1);
            let r = hyponormality_classify(&spec, &fp, -1.0, 128).unwrap();
            assert_eq!(r.verdict, HyponormalityVerdict::NotHyponormal);
            assert!(
                r.commutator_min < -r.tol && r.commutator_max > r.tol,
                "{r:?}"
            );
            assert!(r.consistent);
        }
    }

    #[test]
    fn hyponormality_preconditions() {
        let (spec, fp) = diff(&[1.0, 1.0], &[0.0, 0.5], 1);
        assert!(matches!(
            hyponormality_classify(&spec, &fp, -1.0, 32),
            Err(OpError::Hypothesis(_))
        ));
    }
}

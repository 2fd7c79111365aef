//! Spectra and norms: numeric eigenvalues and operator norms of finite
//! sections, the closed-form spectrum of a compact sum with an interior
//! common fixed point, its spectral radius and discrete maximizer, and the
//! classical two-sided norm bound for composition operators.

use num_complex::Complex64;
use serde::Serialize;

use crate::bounds::vanishing_order;
use crate::error::{check_in_disk, OpError, Result};
use crate::linalg::{self, EigenPair};
use crate::operator::{build_matrix, FixedPointInfo, OperatorMatrix, OperatorSpec};
use crate::series::{binomial, derivative_at, TruncatedSeries};
use crate::space::SpaceParams;

pub use crate::linalg::DEFAULT_POWER_TOL;

/// Smallest default number of closed-form terms reported.
pub const DEFAULT_MIN_LMAX: usize = 50;
/// Relative tolerance for recognising a tie `n/(1-r) ∈ ℤ`.
const TIE_TOL: f64 = 1e-9;
/// Largest accepted fixed-point defect `|φ(w) − w|` for a shared fixed point.
const SHARED_FIXED_POINT_TOL: f64 = 1e-10;
const VANISHING_THRESHOLD: f64 = 1e-9;

/// Numeric eigenvalues of a finite section, with residual certificates.
pub fn eigenvalues(m: &OperatorMatrix, tol: f64) -> Result<Vec<EigenPair>> {
    linalg::eigenpairs(&m.entries, tol)
}

/// Largest singular value of a finite section by power iteration.
pub fn operator_norm(m: &OperatorMatrix, tol: f64) -> Result<f64> {
    linalg::largest_singular_value(&m.entries, tol).map(|e| e.value)
}

/// Maximizer of `l ↦ C(l, n) r^{l-n}` over integers `l ≥ n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Maximizer {
    pub l_star: usize,
    pub value: f64,
    /// `n/(1-r)` is an integer, so `l* - 1` attains the same value.
    pub tie: bool,
}

/// `l* = ⌊n/(1-r)⌋` and `C(l*, n) r^{l*-n}`, with `0^0 = 1`.
pub fn argmax_l(n: usize, r: f64) -> Result<Maximizer> {
    if n == 0 {
        return Err(OpError::InvalidArgument("order n must be positive".into()));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(OpError::Hypothesis(format!(
            "|phi'(w)| = {r} must lie in [0, 1) at an interior fixed point"
        )));
    }
    let x = n as f64 / (1.0 - r);
    let nearest = x.round();
    let (l_star, tie) = if (x - nearest).abs() <= TIE_TOL * x {
        (nearest as usize, r > 0.0)
    } else {
        (x.floor() as usize, false)
    };
    let value = binomial(l_star, n) * r.powi((l_star - n) as i32);
    Ok(Maximizer { l_star, value, tie })
}

/// A closed-form eigenvalue, tagged by its index `l` (none for the point 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormEigenvalue {
    pub l: Option<usize>,
    pub value: Complex64,
}

/// Closed-form part of a spectrum report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormSpectrum {
    pub fixed_point: Complex64,
    pub eigenvalues: Vec<ClosedFormEigenvalue>,
    pub radius_closed: f64,
    pub l_star: Option<usize>,
    pub l_max: usize,
    /// The differentiation symbol is constant, `φ ≡ a`.
    pub constant_symbol: bool,
    pub tie: bool,
}

/// Closed-form spectrum, numeric eigenvalues and settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub closed_form: ClosedFormSpectrum,
    pub numeric: Vec<EigenPair>,
    pub flagged: usize,
    pub alpha: f64,
    pub trunc_degree: usize,
    pub tol: f64,
}

struct FixedPointData {
    psi0_w: Complex64,
    phi0_prime: Complex64,
    psin_n: Complex64,
    phin_prime: Complex64,
}

fn check_fixes(phi: &TruncatedSeries, w: Complex64, which: &str) -> Result<()> {
    let defect = (phi.eval(w) - w).norm();
    if defect > SHARED_FIXED_POINT_TOL {
        return Err(OpError::Hypothesis(format!(
            "{which} must fix the point w = {w} (|{which}(w) - w| = {defect:e})"
        )));
    }
    Ok(())
}

/// `ψ` vanishes at `w` to order at least `n` (an identically zero `ψ` does).
pub fn check_vanishing(psi: &TruncatedSeries, w: Complex64, n: usize) -> Result<usize> {
    match vanishing_order(psi, w, VANISHING_THRESHOLD) {
        Ok(order) if order >= n => Ok(order),
        Ok(order) => Err(OpError::Hypothesis(format!(
            "psi_n must vanish at the fixed point w = {w} to order >= n = {n}, found order {order}"
        ))),
        Err(OpError::IdenticallyZero { .. }) => Ok(usize::MAX),
        Err(e) => Err(e),
    }
}

/// The common interior fixed point of every `φ` in the spec.
pub fn common_fixed_point(spec: &OperatorSpec) -> Result<FixedPointInfo> {
    let (phi, other) = match (spec.diff_part(), spec.weighted_comp()) {
        (Some(d), c) => (&d.phi, c.map(|c| &c.phi)),
        (None, Some(c)) => (&c.phi, None),
        (None, None) => unreachable!("a spec always has one part"),
    };
    let fp = crate::operator::find_fixed_point(phi)?;
    if let Some(o) = other {
        check_fixes(o, fp.w, "phi0")?;
    }
    Ok(fp)
}

/// Candidate spectrum `{0} ∪ {ψ₀(w) φ₀'(w)^l : l < n} ∪ {ψ₀(w) φ₀'(w)^l + C(l,n) ψn^{(n)}(w) φn'(w)^{l-n} : n ≤ l ≤ L}`.
///
/// For a differentiation-only spec with constant symbol `φ ≡ a` the result
/// is `{0, ψ^{(n)}(a)}` without any vanishing requirement on `ψ`. When
/// `l_max` is `None` it defaults to `max(3 l*, 50)`.
pub fn closed_form_spectrum(
    spec: &OperatorSpec,
    fp: &FixedPointInfo,
    l_max: Option<usize>,
) -> Result<ClosedFormSpectrum> {
    let w = fp.w;
    check_in_disk(w)?;

    if let Some(d) = spec.diff_only() {
        if d.phi.is_exact() && d.phi.degree() == 0 {
            let a = d.phi.coeff(0);
            let value = derivative_at(&d.psi, d.order, a)?;
            let mut eigenvalues = vec![ClosedFormEigenvalue {
                l: None,
                value: Complex64::new(0.0, 0.0),
            }];
            if value.norm() > 0.0 {
                eigenvalues.push(ClosedFormEigenvalue {
                    l: Some(d.order),
                    value,
                });
            }
            return Ok(ClosedFormSpectrum {
                fixed_point: a,
                radius_closed: value.norm(),
                l_star: (value.norm() > 0.0).then_some(d.order),
                l_max: d.order,
                eigenvalues,
                constant_symbol: true,
                tie: false,
            });
        }
    }

    let n = spec.diff_part().map(|d| d.order).unwrap_or(0);
    let mut data = FixedPointData {
        psi0_w: Complex64::new(0.0, 0.0),
        phi0_prime: Complex64::new(0.0, 0.0),
        psin_n: Complex64::new(0.0, 0.0),
        phin_prime: Complex64::new(0.0, 0.0),
    };
    if let Some(c) = spec.weighted_comp() {
        check_fixes(&c.phi, w, "phi0")?;
        data.psi0_w = c.psi.eval(w);
        data.phi0_prime = derivative_at(&c.phi, 1, w)?;
    }
    let mut tie = false;
    let mut default_lmax = DEFAULT_MIN_LMAX;
    if let Some(d) = spec.diff_part() {
        check_fixes(&d.phi, w, "phin")?;
        check_vanishing(&d.psi, w, d.order)?;
        data.psin_n = derivative_at(&d.psi, d.order, w)?;
        data.phin_prime = derivative_at(&d.phi, 1, w)?;
        let m = argmax_l(d.order, data.phin_prime.norm())?;
        tie = m.tie;
        default_lmax = default_lmax.max(3 * m.l_star);
    }
    let l_max = l_max.unwrap_or(default_lmax).max(n);

    let mut eigenvalues = vec![ClosedFormEigenvalue {
        l: None,
        value: Complex64::new(0.0, 0.0),
    }];
    for l in 0..=l_max {
        let comp = data.psi0_w * data.phi0_prime.powu(l as u32);
        let value = if l < n {
            if spec.weighted_comp().is_none() {
                continue;
            }
            comp
        } else if spec.diff_part().is_some() {
            comp + data.psin_n * data.phin_prime.powu((l - n) as u32) * binomial(l, n)
        } else {
            comp
        };
        eigenvalues.push(ClosedFormEigenvalue { l: Some(l), value });
    }

    let radius_closed = eigenvalues
        .iter()
        .map(|e| e.value.norm())
        .fold(0.0, f64::max);
    // Largest l among the (near-)maximizers, matching the floor convention.
    let l_star = if radius_closed > 0.0 {
        eigenvalues
            .iter()
            .filter(|e| e.value.norm() >= radius_closed * (1.0 - 1e-12))
            .filter_map(|e| e.l)
            .max()
    } else {
        None
    };

    Ok(ClosedFormSpectrum {
        fixed_point: w,
        eigenvalues,
        radius_closed,
        l_star,
        l_max,
        constant_symbol: false,
        tie,
    })
}

/// `r(D_{ψ,φ,n}) = |ψ^{(n)}(w)| C(l*, n) |φ'(w)|^{l*-n}`, `l* = ⌊n/(1-|φ'(w)|)⌋`.
/// Requires a differentiation-only spec whose `ψ` has a zero of order
/// exactly `n` at the fixed point.
pub fn spectral_radius_closed(spec: &OperatorSpec, fp: &FixedPointInfo) -> Result<(f64, usize)> {
    let d = spec.diff_only().ok_or_else(|| {
        OpError::Unsupported("spectral radius formula needs a differentiation-only operator".into())
    })?;
    check_fixes(&d.phi, fp.w, "phi")?;
    let order = check_vanishing(&d.psi, fp.w, d.order)?;
    if order != d.order {
        return Err(OpError::Hypothesis(format!(
            "psi must have a zero of order exactly n = {} at w = {}, found order {}",
            d.order,
            fp.w,
            if order == usize::MAX {
                "infinite".to_string()
            } else {
                order.to_string()
            }
        )));
    }
    let psi_n = derivative_at(&d.psi, d.order, fp.w)?;
    let phi_prime = derivative_at(&d.phi, 1, fp.w)?;
    let m = argmax_l(d.order, phi_prime.norm())?;
    Ok((psi_n.norm() * m.value, m.l_star))
}

/// `((1/(1-|φ(0)|²))^{(α+2)/2}, ((1+|φ(0)|)/(1-|φ(0)|))^{(α+2)/2})`.
pub fn composition_norm_bounds(phi0_at_zero: Complex64, alpha: f64) -> Result<(f64, f64)> {
    check_in_disk(phi0_at_zero)?;
    SpaceParams::new(alpha)?;
    let r = phi0_at_zero.norm();
    let e = (alpha + 2.0) / 2.0;
    Ok((
        (1.0 / (1.0 - r * r)).powf(e),
        ((1.0 + r) / (1.0 - r)).powf(e),
    ))
}

/// Closed form plus numeric eigenvalues of the `dim`-section.
pub fn spectrum_report(
    spec: &OperatorSpec,
    alpha: f64,
    dim: usize,
    l_max: Option<usize>,
    tol: f64,
) -> Result<SpectrumReport> {
    let fp = common_fixed_point(spec)?;
    let closed_form = closed_form_spectrum(spec, &fp, l_max)?;
    let m = build_matrix(spec, alpha, dim)?;
    let numeric = eigenvalues(&m, tol)?;
    let flagged = numeric.iter().filter(|p| p.flagged).count();
    Ok(SpectrumReport {
        closed_form,
        numeric,
        flagged,
        alpha,
        trunc_degree: dim,
        tol,
    })
}

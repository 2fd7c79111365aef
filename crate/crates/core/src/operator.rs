//! Operators `C_{ψ₀,φ₀} + D_{ψn,φn,n}` and their finite sections.
//!
//! The matrix of an operator is taken in the orthonormal basis
//! `e_m = z^m / ‖z^m‖_α`, so column `j` holds the coefficients of `T z^j`
//! rescaled by `sqrt(w_i / w_j)`. For polynomial symbols every entry is a
//! finite sum and therefore exact up to rounding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{OpError, Result};
use crate::series::{
    derivative_at, falling_factorial, multiply, sup_norm_estimate, TruncatedSeries,
    DEFAULT_SUP_SAMPLES,
};
use crate::space::{basis_weights, SpaceParams};

/// Default margin below one required of `sup |φ|`.
pub const DEFAULT_SELF_MAP_MARGIN: f64 = 1e-6;
/// Step size below which fixed-point iteration is considered converged.
pub const FIXED_POINT_STEP_TOL: f64 = 1e-14;
pub const FIXED_POINT_MAX_ITER: usize = 1_000_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Weighted composition part `f ↦ ψ₀ · (f ∘ φ₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionPart {
    pub psi: TruncatedSeries,
    pub phi: TruncatedSeries,
}

/// Weighted composition-differentiation part `f ↦ ψ · (f^{(n)} ∘ φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentiationPart {
    pub psi: TruncatedSeries,
    pub phi: TruncatedSeries,
    pub order: usize,
}

/// `C_{ψ₀,φ₀} + D_{ψn,φn,n}` with at least one part present and every
/// symbol `φ` a validated self-map of the disk.
///
/// JSON form: `{ "psi0": [...], "phi0": [...], "psin": [...], "phin": [...], "n": k }`
/// where either pair may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOperatorSpec", into = "RawOperatorSpec")]
pub struct OperatorSpec {
    weighted_comp: Option<CompositionPart>,
    diff_part: Option<DifferentiationPart>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psi0: Option<TruncatedSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi0: Option<TruncatedSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psin: Option<TruncatedSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phin: Option<TruncatedSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

impl TryFrom<RawOperatorSpec> for OperatorSpec {
    type Error = OpError;

    fn try_from(raw: RawOperatorSpec) -> Result<Self> {
        let weighted_comp = match (raw.psi0, raw.phi0) {
            (Some(psi), Some(phi)) => Some(CompositionPart { psi, phi }),
            (None, None) => None,
            _ => {
                return Err(OpError::InvalidArgument(
                    "\"psi0\" and \"phi0\" must be given together".into(),
                ))
            }
        };
        let diff_part = match (raw.psin, raw.phin, raw.n) {
            (Some(psi), Some(phi), Some(order)) => Some(DifferentiationPart { psi, phi, order }),
            (None, None, None) => None,
            _ => {
                return Err(OpError::InvalidArgument(
                    "\"psin\", \"phin\" and \"n\" must be given together".into(),
                ))
            }
        };
        OperatorSpec::new(weighted_comp, diff_part)
    }
}

impl From<OperatorSpec> for RawOperatorSpec {
    fn from(spec: OperatorSpec) -> Self {
        let (psi0, phi0) = match spec.weighted_comp {
            Some(c) => (Some(c.psi), Some(c.phi)),
            None => (None, None),
        };
        let (psin, phin, n) = match spec.diff_part {
            Some(d) => (Some(d.psi), Some(d.phi), Some(d.order)),
            None => (None, None, None),
        };
        RawOperatorSpec {
            psi0,
            phi0,
            psin,
            phin,
            n,
        }
    }
}

impl OperatorSpec {
    pub fn new(
        weighted_comp: Option<CompositionPart>,
        diff_part: Option<DifferentiationPart>,
    ) -> Result<Self> {
        if weighted_comp.is_none() && diff_part.is_none() {
            return Err(OpError::InvalidArgument(
                "operator needs a weighted composition part, a differentiation part, or both"
                    .into(),
            ));
        }
        if let Some(d) = &diff_part {
            if d.order == 0 {
                return Err(OpError::InvalidArgument(
                    "differentiation order n must be positive".into(),
                ));
            }
        }
        let phis = weighted_comp
            .iter()
            .map(|c| &c.phi)
            .chain(diff_part.iter().map(|d| &d.phi));
        for phi in phis {
            let report = validate_self_map(phi, DEFAULT_SELF_MAP_MARGIN);
            if !report.ok {
                return Err(OpError::NotSelfMap {
                    sup: report.sup_estimate,
                    limit: report.limit,
                });
            }
        }
        Ok(OperatorSpec {
            weighted_comp,
            diff_part,
        })
    }

    /// `C_{ψ,φ}` alone.
    pub fn weighted_composition(psi: TruncatedSeries, phi: TruncatedSeries) -> Result<Self> {
        OperatorSpec::new(Some(CompositionPart { psi, phi }), None)
    }

    /// `D_{ψ,φ,n}` alone.
    pub fn differentiation(
        psi: TruncatedSeries,
        phi: TruncatedSeries,
        order: usize,
    ) -> Result<Self> {
        OperatorSpec::new(None, Some(DifferentiationPart { psi, phi, order }))
    }

    /// `D_{φ,n}`, i.e. `ψ ≡ 1`.
    pub fn unweighted_differentiation(phi: TruncatedSeries, order: usize) -> Result<Self> {
        OperatorSpec::differentiation(
            TruncatedSeries::constant(Complex64::new(1.0, 0.0)),
            phi,
            order,
        )
    }

    pub fn weighted_comp(&self) -> Option<&CompositionPart> {
        self.weighted_comp.as_ref()
    }

    pub fn diff_part(&self) -> Option<&DifferentiationPart> {
        self.diff_part.as_ref()
    }

    /// The differentiation part when no composition part is present.
    pub fn diff_only(&self) -> Option<&DifferentiationPart> {
        match (&self.weighted_comp, &self.diff_part) {
            (None, Some(d)) => Some(d),
            _ => None,
        }
    }

    /// Same spec with every `ψ` multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> OperatorSpec {
        OperatorSpec {
            weighted_comp: self.weighted_comp.as_ref().map(|p| CompositionPart {
                psi: p.psi.scale(c),
                phi: p.phi.clone(),
            }),
            diff_part: self.diff_part.as_ref().map(|p| DifferentiationPart {
                psi: p.psi.scale(c),
                phi: p.phi.clone(),
                order: p.order,
            }),
        }
    }
}

/// `T z^m` truncated at degree `trunc`.
pub fn apply_to_monomial(spec: &OperatorSpec, m: usize, trunc: usize) -> TruncatedSeries {
    let mut out = TruncatedSeries::zero(trunc);
    if let Some(c) = &spec.weighted_comp {
        let p = crate::series::power(&c.phi, m, trunc);
        out = out.add(&multiply(&c.psi, &p, trunc));
    }
    if let Some(d) = &spec.diff_part {
        if m >= d.order {
            let p = crate::series::power(&d.phi, m - d.order, trunc);
            let term = multiply(&d.psi, &p, trunc)
                .scale(Complex64::new(falling_factorial(m, d.order), 0.0));
            out = out.add(&term);
        }
    }
    out.truncate(trunc)
}

/// Finite section of an operator in the orthonormal basis of `H_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub entries: DMatrix<Complex64>,
    pub alpha: f64,
    pub trunc_degree: usize,
    pub spec: Option<OperatorSpec>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> DMatrix<Complex64> {
        self.entries.adjoint()
    }

    /// Orthonormal coordinates `f_k ‖z^k‖` of the first `dim` coefficients.
    pub fn to_orthonormal(&self, f: &TruncatedSeries) -> DVector<Complex64> {
        to_orthonormal(f, self.alpha, self.dim())
    }

    pub fn from_orthonormal(&self, v: &DVector<Complex64>) -> TruncatedSeries {
        from_orthonormal(v, self.alpha)
    }
}

pub fn to_orthonormal(f: &TruncatedSeries, alpha: f64, dim: usize) -> DVector<Complex64> {
    let w = basis_weights(dim, alpha);
    DVector::from_iterator(dim, (0..dim).map(|k| f.coeff(k) * w[k].sqrt()))
}

pub fn from_orthonormal(v: &DVector<Complex64>, alpha: f64) -> TruncatedSeries {
    let w = basis_weights(v.len(), alpha);
    TruncatedSeries::new(v.iter().zip(w).map(|(c, wk)| c / wk.sqrt()).collect())
}

/// The `dim × dim` section of `spec` on `H_α`.
pub fn build_matrix(spec: &OperatorSpec, alpha: f64, dim: usize) -> Result<OperatorMatrix> {
    SpaceParams::new(alpha)?;
    if dim == 0 {
        return Err(OpError::InvalidArgument(
            "matrix dimension must be positive".into(),
        ));
    }
    let entries = section(
        spec.weighted_comp.as_ref().map(|c| (&c.psi, &c.phi)),
        spec.diff_part.as_ref().map(|d| (&d.psi, &d.phi, d.order)),
        alpha,
        dim,
    );
    Ok(OperatorMatrix {
        entries,
        alpha,
        trunc_degree: dim,
        spec: Some(spec.clone()),
    })
}

/// Section builder without the self-map check. Used for auxiliary unitary
/// operators whose symbols are disk automorphisms.
pub(crate) fn section(
    comp: Option<(&TruncatedSeries, &TruncatedSeries)>,
    diff: Option<(&TruncatedSeries, &TruncatedSeries, usize)>,
    alpha: f64,
    dim: usize,
) -> DMatrix<Complex64> {
    let top = dim - 1;
    let weights = basis_weights(dim, alpha);
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);

    let one = TruncatedSeries::constant(Complex64::new(1.0, 0.0)).truncate(top);
    let mut comp_power = one.clone();
    let mut diff_power = one;
    for j in 0..dim {
        let mut column = vec![ZERO; dim];
        if let Some((psi, phi)) = comp {
            if j > 0 {
                comp_power = multiply(&comp_power, phi, top);
            }
            let t = multiply(psi, &comp_power, top);
            for (slot, v) in column.iter_mut().zip(t.coeffs()) {
                *slot += v;
            }
        }
        if let Some((psi, phi, n)) = diff {
            if j >= n {
                if j > n {
                    diff_power = multiply(&diff_power, phi, top);
                }
                let t = multiply(psi, &diff_power, top);
                let factor = falling_factorial(j, n);
                for (slot, v) in column.iter_mut().zip(t.coeffs()) {
                    *slot += v * factor;
                }
            }
        }
        for (i, v) in column.into_iter().enumerate() {
            m[(i, j)] = v * (sqrt_w[i] / sqrt_w[j]);
        }
    }
    m
}

/// Outcome of the self-map check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfMapReport {
    pub ok: bool,
    pub sup_estimate: f64,
    pub limit: f64,
}

/// Accepts `φ` when its sampled circle maximum (plus tail) is at most
/// `1 - margin`. Identity maps and automorphisms have sup one and fail.
pub fn validate_self_map(phi: &TruncatedSeries, margin: f64) -> SelfMapReport {
    let sup_estimate = sup_norm_estimate(phi, DEFAULT_SUP_SAMPLES);
    let limit = 1.0 - margin;
    SelfMapReport {
        ok: sup_estimate <= limit,
        sup_estimate,
        limit,
    }
}

/// Interior fixed point of a self-map with `φ(w)`, `φ'(w)` and higher derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointInfo {
    pub w: Complex64,
    pub phi_prime: Complex64,
    /// `φ^{(k)}(w)` for `k = 1..=deg φ` (at least one entry).
    pub higher_derivs: Vec<Complex64>,
}

impl FixedPointInfo {
    /// `φ^{(k)}(w)` for `k ≥ 1`, zero past the stored range.
    pub fn deriv(&self, k: usize) -> Complex64 {
        if k == 0 {
            return self.w;
        }
        self.higher_derivs.get(k - 1).copied().unwrap_or(ZERO)
    }

    /// `[φ'(w), …, φ^{(count)}(w)]`.
    pub fn derivs(&self, count: usize) -> Vec<Complex64> {
        (1..=count).map(|k| self.deriv(k)).collect()
    }
}

/// Forward iteration `z_{k+1} = φ(z_k)` from `z_0 = 0`.
pub fn find_fixed_point(phi: &TruncatedSeries) -> Result<FixedPointInfo> {
    let report = validate_self_map(phi, DEFAULT_SELF_MAP_MARGIN);
    if !report.ok {
        return Err(OpError::NotSelfMap {
            sup: report.sup_estimate,
            limit: report.limit,
        });
    }
    let mut z = ZERO;
    let mut last_step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = phi.eval(z);
        last_step = (next - z).norm();
        z = next;
        if last_step < FIXED_POINT_STEP_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(OpError::NoInteriorFixedPoint {
            iterations: FIXED_POINT_MAX_ITER,
            last_step,
        });
    }
    let defect = (phi.eval(z) - z).norm();
    if defect > 1e-12 {
        return Err(OpError::NoInteriorFixedPoint {
            iterations: FIXED_POINT_MAX_ITER,
            last_step: defect,
        });
    }
    let top = phi.degree().max(1);
    let higher_derivs = (1..=top)
        .map(|k| derivative_at(phi, k, z))
        .collect::<Result<Vec<_>>>()?;
    let phi_prime = higher_derivs[0];
    if phi_prime.norm() >= 1.0 {
        return Err(OpError::Hypothesis(format!(
            "|phi'(w)| = {} at the fixed point; an interior attracting fixed point needs |phi'(w)| < 1",
            phi_prime.norm()
        )));
    }
    Ok(FixedPointInfo {
        w: z,
        phi_prime,
        higher_derivs,
    })
}

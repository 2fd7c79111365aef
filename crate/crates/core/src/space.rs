//! The spaces `H_α`: the Hardy space for `α = -1` and the weighted Bergman
//! spaces for `α > -1`. Monomials are orthogonal in all of them, so the
//! whole geometry is carried by the weights `‖z^m‖²_α`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_in_disk, OpError, Result};
use crate::series::{falling_factorial, TruncatedSeries};

/// Weight parameter of the space. `-1` is the Hardy space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    alpha: f64,
}

impl SpaceParams {
    pub const HARDY: SpaceParams = SpaceParams { alpha: -1.0 };

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha >= -1.0 {
            Ok(SpaceParams { alpha })
        } else {
            Err(OpError::InvalidArgument(format!(
                "alpha must be -1 (Hardy) or greater than -1 (weighted Bergman), got {alpha}"
            )))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_hardy(&self) -> bool {
        self.alpha == -1.0
    }

    pub fn weight(&self, m: usize) -> f64 {
        basis_weight(m, self.alpha)
    }

    /// `w_0(α) .. w_{len-1}(α)`.
    pub fn weights(&self, len: usize) -> Vec<f64> {
        basis_weights(len, self.alpha)
    }
}

/// `‖z^m‖²_α` via `w_0 = 1`, `w_m = w_{m-1} · m / (m + α + 1)`.
pub fn basis_weight(m: usize, alpha: f64) -> f64 {
    (1..=m).fold(1.0, |w, k| w * k as f64 / (k as f64 + alpha + 1.0))
}

pub fn basis_weights(len: usize, alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut w = 1.0;
    for m in 0..len {
        if m > 0 {
            w *= m as f64 / (m as f64 + alpha + 1.0);
        }
        out.push(w);
    }
    out
}

/// `⟨f, g⟩_α = Σ f_k conj(g_k) w_k(α)` over the common stored range.
pub fn inner_product(f: &TruncatedSeries, g: &TruncatedSeries, alpha: f64) -> Complex64 {
    let len = f.coeffs().len().min(g.coeffs().len());
    let weights = basis_weights(len, alpha);
    f.coeffs()
        .iter()
        .zip(g.coeffs())
        .zip(weights)
        .map(|((a, b), w)| a * b.conj() * w)
        .sum()
}

pub fn norm(f: &TruncatedSeries, alpha: f64) -> f64 {
    inner_product(f, f, alpha).re.max(0.0).sqrt()
}

/// The kernel `K^{[n]}_{w,α}` reproducing the `n`-th derivative at `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSeries {
    pub w: Complex64,
    pub order: usize,
    pub alpha: f64,
    pub series: TruncatedSeries,
}

/// Taylor coefficients of `K^{[n]}_{w,α}` up to degree `trunc`.
///
/// The coefficient of `z^k` is `k!/(k-n)! · conj(w)^{k-n} / w_k(α)` for
/// `k ≥ n` and zero below, which is the expansion of
/// `(α+2)⋯(α+n+1) z^n / (1 - conj(w) z)^{n+α+2}`. The tail bound uses the
/// fact that the ratio of consecutive coefficient moduli decreases in `k`.
pub fn kernel_series(w: Complex64, n: usize, alpha: f64, trunc: usize) -> Result<KernelSeries> {
    check_in_disk(w)?;
    SpaceParams::new(alpha)?;
    let wc = w.conj();
    let weights = basis_weights(trunc + 2, alpha);
    let coefficient = |k: usize, pw: Complex64| pw * (falling_factorial(k, n) / weights[k]);

    let mut coeffs = vec![Complex64::new(0.0, 0.0); trunc + 1];
    let mut pw = Complex64::new(1.0, 0.0);
    for (k, slot) in coeffs.iter_mut().enumerate().skip(n) {
        *slot = coefficient(k, pw);
        pw *= wc;
    }

    let r = w.norm();
    let tail = if r == 0.0 {
        0.0
    } else {
        let k = (trunc + 1).max(n);
        let first = falling_factorial(k, n) / basis_weight(k, alpha) * r.powi((k - n) as i32);
        let ratio = r * (k as f64 + alpha + 2.0) / ((k + 1 - n) as f64);
        if ratio < 1.0 {
            first / (1.0 - ratio)
        } else {
            f64::INFINITY
        }
    };

    Ok(KernelSeries {
        w,
        order: n,
        alpha,
        series: TruncatedSeries::with_tail(coeffs, tail),
    })
}

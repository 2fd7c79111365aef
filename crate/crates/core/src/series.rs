//! Truncated complex power series.
//!
//! A [`TruncatedSeries`] stores the Taylor coefficients `c_0..c_N` of an
//! analytic function on the unit disk together with a bound on the sup norm
//! of the discarded remainder over the closed disk. Exact polynomials carry a
//! zero tail, so every quantity computed from them is exact up to rounding.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_in_disk, OpError, Result};

/// Default number of circle samples used for sup-norm estimates.
pub const DEFAULT_SUP_SAMPLES: usize = 4096;
/// Smallest sample count accepted by [`sup_norm_estimate`].
pub const MIN_SUP_SAMPLES: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Coefficients of `z^0..z^N` plus a bound on the remainder.
///
/// On the wire a series is a JSON array of `[re, im]` pairs in ascending
/// degree; the tail bound is not serialized and deserialized series are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
    tail_bound: f64,
}

impl From<Vec<Complex64>> for TruncatedSeries {
    fn from(coeffs: Vec<Complex64>) -> Self {
        TruncatedSeries::new(coeffs)
    }
}

impl From<TruncatedSeries> for Vec<Complex64> {
    fn from(s: TruncatedSeries) -> Self {
        s.coeffs
    }
}

impl TruncatedSeries {
    /// Exact polynomial from its coefficients. An empty vector is the zero
    /// polynomial of degree 0.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        TruncatedSeries {
            coeffs,
            tail_bound: 0.0,
        }
    }

    pub fn with_tail(coeffs: Vec<Complex64>, tail_bound: f64) -> Self {
        let mut s = TruncatedSeries::new(coeffs);
        s.tail_bound = tail_bound.max(0.0);
        s
    }

    /// Exact polynomial with real coefficients.
    pub fn from_real(coeffs: &[f64]) -> Self {
        TruncatedSeries::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero(trunc_degree: usize) -> Self {
        TruncatedSeries::new(vec![ZERO; trunc_degree + 1])
    }

    pub fn constant(c: Complex64) -> Self {
        TruncatedSeries::new(vec![c])
    }

    /// `c * z^k`.
    pub fn monomial(k: usize, c: Complex64) -> Self {
        let mut coeffs = vec![ZERO; k + 1];
        coeffs[k] = c;
        TruncatedSeries::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^k`, zero beyond the stored range.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn trunc_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn is_exact(&self) -> bool {
        self.tail_bound == 0.0
    }

    /// Index of the highest nonzero stored coefficient (0 for the zero series).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != ZERO).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.is_exact() && self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Sum of coefficient moduli; bounds the stored polynomial on the closed disk.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Certified bound of `sup |f|` over the closed unit disk.
    pub fn disk_bound(&self) -> f64 {
        self.l1_norm() + self.tail_bound
    }

    /// Horner evaluation of the stored polynomial part.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Re-truncate at degree `n`. Dropped coefficients are moved into the tail.
    pub fn truncate(&self, n: usize) -> TruncatedSeries {
        let mut coeffs = self.coeffs.clone();
        let mut tail = self.tail_bound;
        if coeffs.len() > n + 1 {
            tail += coeffs[n + 1..].iter().map(|c| c.norm()).sum::<f64>();
            coeffs.truncate(n + 1);
        } else {
            coeffs.resize(n + 1, ZERO);
        }
        TruncatedSeries::with_tail(coeffs, tail)
    }

    pub fn scale(&self, c: Complex64) -> TruncatedSeries {
        TruncatedSeries::with_tail(
            self.coeffs.iter().map(|&a| a * c).collect(),
            self.tail_bound * c.norm(),
        )
    }

    pub fn add(&self, other: &TruncatedSeries) -> TruncatedSeries {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeff(k) + other.coeff(k)).collect();
        TruncatedSeries::with_tail(coeffs, self.tail_bound + other.tail_bound)
    }

    /// Formal derivative. A nonzero tail gives no control over the derivative
    /// on the circle, so the result's tail is infinite in that case.
    pub fn derivative(&self) -> TruncatedSeries {
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        let tail = if self.is_exact() { 0.0 } else { f64::INFINITY };
        TruncatedSeries::with_tail(coeffs, tail)
    }
}

/// Cauchy product truncated at degree `n`.
pub fn multiply(f: &TruncatedSeries, g: &TruncatedSeries, n: usize) -> TruncatedSeries {
    let mut out = vec![ZERO; n + 1];
    let mut dropped = 0.0;
    for (i, &a) in f.coeffs.iter().enumerate() {
        if a == ZERO {
            continue;
        }
        for (j, &b) in g.coeffs.iter().enumerate() {
            let k = i + j;
            if k <= n {
                out[k] += a * b;
            } else {
                dropped += (a * b).norm();
            }
        }
    }
    let tail = f.tail_bound * g.l1_norm()
        + g.tail_bound * f.l1_norm()
        + f.tail_bound * g.tail_bound
        + dropped;
    TruncatedSeries::with_tail(out, tail)
}

/// `f^k` truncated at degree `n`; `f^0` is the constant 1.
pub fn power(f: &TruncatedSeries, k: usize, n: usize) -> TruncatedSeries {
    let mut result = TruncatedSeries::constant(ONE).truncate(n);
    let mut base = f.truncate(n);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = multiply(&result, &base, n);
        }
        e >>= 1;
        if e > 0 {
            base = multiply(&base, &base, n);
        }
    }
    result
}

/// `f ∘ g` truncated at degree `n`, by Horner's scheme in `g`.
///
/// The remainder of `f` is carried through only when `g` maps the closed
/// disk into itself (certified by its coefficient bound); otherwise the tail
/// of a non-exact `f` becomes infinite.
pub fn compose(f: &TruncatedSeries, g: &TruncatedSeries, n: usize) -> TruncatedSeries {
    let mut acc = TruncatedSeries::constant(ZERO).truncate(n);
    for &c in f.coeffs.iter().rev() {
        acc = multiply(&acc, g, n).add(&TruncatedSeries::constant(c));
        acc = acc.truncate(n);
    }
    let extra = if f.is_exact() {
        0.0
    } else if g.disk_bound() <= 1.0 {
        f.tail_bound
    } else {
        f64::INFINITY
    };
    TruncatedSeries::with_tail(acc.coeffs, acc.tail_bound + extra)
}

/// `f^{(order)}(w) = Σ_{k≥order} c_k k!/(k-order)! w^{k-order}`.
pub fn derivative_at(f: &TruncatedSeries, order: usize, w: Complex64) -> Result<Complex64> {
    check_in_disk(w)?;
    if order > f.trunc_degree() {
        if f.is_exact() {
            return Ok(ZERO);
        }
        return Err(OpError::TruncationInsufficient {
            order,
            degree: f.trunc_degree(),
        });
    }
    // Horner on the differentiated coefficients.
    let mut acc = ZERO;
    for k in (order..=f.trunc_degree()).rev() {
        acc = acc * w + f.coeffs[k] * falling_factorial(k, order);
    }
    Ok(acc)
}

/// `k (k-1) ... (k-j+1)` as a float; 1 when `j = 0`.
pub fn falling_factorial(k: usize, j: usize) -> f64 {
    if j > k {
        return 0.0;
    }
    ((k - j + 1)..=k).fold(1.0, |acc, v| acc * v as f64)
}

/// Binomial coefficient as a float, computed multiplicatively.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn factorial(n: usize) -> f64 {
    falling_factorial(n, n)
}

/// Taylor expansion of the Blaschke factor `(w - z) / (1 - conj(w) z)`.
pub fn blaschke_series(w: Complex64, n: usize) -> Result<TruncatedSeries> {
    check_in_disk(w)?;
    let wc = w.conj();
    let r = w.norm();
    let scale = 1.0 - w.norm_sqr();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(w);
    let mut p = ONE;
    for _ in 1..=n {
        coeffs.push(-p * scale);
        p *= wc;
    }
    let tail = (1.0 + r) * r.powi(n as i32);
    Ok(TruncatedSeries::with_tail(coeffs, tail))
}

/// Maximum of `|f|` over `samples` equispaced points of the unit circle,
/// plus the tail bound.
///
/// This is a lower estimate of the sup norm of the stored polynomial: it is
/// exact only when the maximum is attained at a sample point. Fewer than
/// [`MIN_SUP_SAMPLES`] samples are raised to that minimum.
pub fn sup_norm_estimate(f: &TruncatedSeries, samples: usize) -> f64 {
    let samples = samples.max(MIN_SUP_SAMPLES);
    let step = 2.0 * PI / samples as f64;
    let max = (0..samples)
        .map(|s| f.eval(Complex64::from_polar(1.0, step * s as f64)).norm())
        .fold(0.0_f64, f64::max);
    max + f.tail_bound
}

/// Partial Bell coefficients `B_{j,k}` for one order `j`, evaluated at the
/// derivative values `x_1, x_2, ...` of the inner function.
///
/// `(f∘φ)^{(j)}(w) = Σ_{k=1}^{j} f^{(k)}(φ(w)) B_{j,k}` for `j ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellTable {
    order: usize,
    entries: Vec<Complex64>,
}

impl BellTable {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `B_{j,k}`; zero outside `1 ≤ k ≤ j`.
    pub fn get(&self, k: usize) -> Complex64 {
        if k == 0 || k > self.order {
            ZERO
        } else {
            self.entries[k - 1]
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

/// Full triangle `B_{i,k}` for `0 ≤ k ≤ i ≤ j`, including `B_{0,0} = 1` and
/// `B_{i,0} = 0` for `i ≥ 1`. `derivs[0]` is `x_1`.
pub fn bell_triangle(derivs: &[Complex64], j: usize) -> Result<Vec<Vec<Complex64>>> {
    if derivs.len() < j {
        return Err(OpError::InvalidArgument(format!(
            "partial Bell coefficients of order {j} need {j} derivative values, got {}",
            derivs.len()
        )));
    }
    let mut table: Vec<Vec<Complex64>> = Vec::with_capacity(j + 1);
    table.push(vec![ONE]);
    for i in 1..=j {
        let mut row = vec![ZERO; i + 1];
        for (k, slot) in row.iter_mut().enumerate().skip(1) {
            // B_{i,k} = Σ_{m=1}^{i-k+1} C(i-1, m-1) x_m B_{i-m,k-1}
            let mut acc = ZERO;
            for m in 1..=(i + 1 - k) {
                let prev = &table[i - m];
                if k - 1 < prev.len() {
                    acc += derivs[m - 1] * prev[k - 1] * binomial(i - 1, m - 1);
                }
            }
            *slot = acc;
        }
        table.push(row);
    }
    Ok(table)
}

/// The `B_{j,k}`, `1 ≤ k ≤ j`, for a single order `j`. Order 0 yields an
/// empty table; that term is `f(φ(w))` itself.
pub fn bell_coefficients(phi_derivs: &[Complex64], j: usize) -> Result<BellTable> {
    if j == 0 {
        return Ok(BellTable {
            order: 0,
            entries: Vec::new(),
        });
    }
    let mut table = bell_triangle(phi_derivs, j)?;
    let row = table.swap_remove(j);
    Ok(BellTable {
        order: j,
        entries: row[1..].to_vec(),
    })
}

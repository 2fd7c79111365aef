//! Dense complex linear algebra: residual-certified eigenpairs, power
//! iteration for the largest singular value, Hermitian spectra.
//!
//! Eigenvalues are computed LAPACK-style: a symmetric permutation first
//! isolates every eigenvalue it can read directly off the diagonal (so a
//! triangular input is never touched by QR), the remaining block goes through
//! a complex Schur decomposition, and eigenvectors come from back
//! substitution on the combined triangular factor.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{OpError, Result};

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 100_000;
const SCHUR_MAX_ITER: usize = 10_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One computed eigenvalue with the residual `‖Mv − λv‖ / ‖v‖` of its
/// computed eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub value: Complex64,
    pub residual: f64,
    /// Residual exceeded `tol · ‖M‖_F`.
    pub flagged: bool,
}

pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Permutation that isolates eigenvalues. Returns `(perm, lo, hi)` such
/// that, with `B = P^T A P` (`B[i][j] = A[perm[i]][perm[j]]`), rows and
/// columns outside `lo..hi` are already upper triangular.
fn isolate(a: &DMatrix<Complex64>) -> (Vec<usize>, usize, usize) {
    let n = a.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut lo = 0;
    let mut hi = n;
    let at = |perm: &[usize], i: usize, j: usize| a[(perm[i], perm[j])];

    // Rows with no off-diagonal entry in the active block go to the bottom.
    while hi > lo + 1 {
        let Some(j) = (lo..hi)
            .rev()
            .find(|&j| (lo..hi).all(|i| i == j || at(&perm, j, i) == ZERO))
        else {
            break;
        };
        perm.swap(j, hi - 1);
        hi -= 1;
    }
    // Columns with no off-diagonal entry in the active block go to the top.
    while hi > lo + 1 {
        let Some(j) = (lo..hi).find(|&j| (lo..hi).all(|i| i == j || at(&perm, i, j) == ZERO))
        else {
            break;
        };
        perm.swap(j, lo);
        lo += 1;
    }
    (perm, lo, hi)
}

/// All eigenvalues of a square matrix, sorted by decreasing modulus, each
/// with a residual certificate. Pairs whose residual exceeds `tol · ‖M‖_F`
/// are flagged, not dropped.
pub fn eigenpairs(a: &DMatrix<Complex64>, tol: f64) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(OpError::InvalidArgument(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (perm, lo, hi) = isolate(a);
    let mut t = DMatrix::from_fn(n, n, |i, j| a[(perm[i], perm[j])]);
    // Unitary acting on the middle block; identity outside.
    let mut q_mid: Option<DMatrix<Complex64>> = None;
    if hi > lo + 1 {
        let size = hi - lo;
        let block = t.view((lo, lo), (size, size)).into_owned();
        let scale = frobenius(&block).max(f64::MIN_POSITIVE);
        let schur = Schur::try_new(block, f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
            OpError::Eigensolver("complex Schur iteration did not converge".into())
        })?;
        let (q, tb) = schur.unpack();
        for i in 1..size {
            if tb[(i, i - 1)].norm() > 1e3 * f64::EPSILON * scale {
                return Err(OpError::Eigensolver(
                    "Schur factor is not triangular".into(),
                ));
            }
        }
        // T ← diag(I, Q^H, I) T diag(I, Q, I)
        let right = t.view((0, lo), (n, size)).into_owned() * &q;
        t.view_mut((0, lo), (n, size)).copy_from(&right);
        let left = q.adjoint() * t.view((lo, 0), (size, n)).into_owned();
        t.view_mut((lo, 0), (size, n)).copy_from(&left);
        for i in lo..hi {
            for j in lo..i {
                t[(i, j)] = ZERO;
            }
        }
        q_mid = Some(q);
    }

    let a_norm = frobenius(a);
    let smin = (f64::EPSILON * frobenius(&t)).max(f64::MIN_POSITIVE * 1e10);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        // Back substitution for (T - λ I) x = 0, x_k = 1.
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in (i + 1)..=k {
                s += t[(i, j)] * x[j];
            }
            let mut pivot = t[(i, i)] - lambda;
            if pivot.norm() < smin {
                pivot = Complex64::new(smin, 0.0);
            }
            x[i] = -s / pivot;
            let big = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                for v in x.iter_mut() {
                    *v /= big;
                }
            }
        }
        let mut y = DVector::from_vec(x);
        if let Some(q) = &q_mid {
            let size = hi - lo;
            let mid = q * y.rows(lo, size).into_owned();
            y.rows_mut(lo, size).copy_from(&mid);
        }
        let mut v = DVector::from_element(n, ZERO);
        for (i, &p) in perm.iter().enumerate() {
            v[p] = y[i];
        }
        let vnorm = v.norm();
        let residual = if vnorm > 0.0 {
            (a * &v - &v * lambda).norm() / vnorm
        } else {
            f64::INFINITY
        };
        pairs.push(EigenPair {
            value: lambda,
            residual,
            flagged: residual > tol * a_norm,
        });
    }
    pairs.sort_by(|p, q| {
        q.value
            .norm()
            .total_cmp(&p.value.norm())
            .then(q.value.re.total_cmp(&p.value.re))
            .then(q.value.im.total_cmp(&p.value.im))
    });
    Ok(pairs)
}

/// Result of power iteration on `M^H M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
}

/// Largest singular value by power iteration on `M^H M` from the normalized
/// all-ones vector.
///
/// The Rayleigh quotient increases monotonically toward `σ₁²`. Iteration
/// stops once the relative change is below `tol` and the geometric
/// extrapolation of the remaining error (from the ratio of successive
/// changes) is below `tol` as well.
pub fn largest_singular_value(a: &DMatrix<Complex64>, tol: f64) -> Result<NormEstimate> {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Ok(NormEstimate {
            value: 0.0,
            iterations: 0,
        });
    }
    let noise = 32.0 * f64::EPSILON;
    let adj = a.adjoint();
    let mut x = DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut mu_prev = 0.0_f64;
    let mut delta_prev = f64::INFINITY;
    for it in 1..=POWER_MAX_ITER {
        let y = a * &x;
        let mu = y.norm_squared();
        let z = &adj * &y;
        let znorm = z.norm();
        if znorm == 0.0 || mu == 0.0 {
            return Ok(NormEstimate {
                value: mu.sqrt(),
                iterations: it,
            });
        }
        x = z / Complex64::new(znorm, 0.0);
        let delta = (mu - mu_prev).abs() / mu;
        if delta <= tol {
            let q = delta / delta_prev;
            let remaining = if delta == 0.0 || delta <= noise {
                0.0
            } else if q < 1.0 {
                delta * q / (1.0 - q)
            } else {
                f64::INFINITY
            };
            if remaining <= tol.max(noise) {
                // One more quotient from the normalized iterate.
                let mu_final = (a * &x).norm_squared().max(mu);
                return Ok(NormEstimate {
                    value: mu_final.sqrt(),
                    iterations: it,
                });
            }
        }
        mu_prev = mu;
        delta_prev = delta;
    }
    Err(OpError::NoConvergence {
        iterations: POWER_MAX_ITER,
        last_estimate: mu_prev.sqrt(),
    })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

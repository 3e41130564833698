//! Tridiagonal linear algebra over real or complex scalars.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction so the same BVP assembly serves real p (forward and
/// asymptotic work) and complex p (contour inversion).
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + PartialEq
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Solves a tridiagonal system by the Thomas algorithm.
///
/// `lower[i]` multiplies unknown i in row i+1, `upper[i]` multiplies unknown
/// i+1 in row i. The systems assembled in this crate are perturbations of
/// symmetric positive definite matrices with dominant diagonals, so no
/// pivoting is needed.
pub fn solve_tridiagonal<T: Scalar>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &[T],
) -> Result<Vec<T>, String> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert_eq!(lower.len(), n.saturating_sub(1));
    assert_eq!(upper.len(), n.saturating_sub(1));
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    if diag[0].modulus() == 0.0 {
        return Err("zero pivot in tridiagonal solve".into());
    }
    c[0] = if n > 1 { upper[0] / diag[0] } else { T::zero() };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom.modulus() == 0.0 {
            return Err("zero pivot in tridiagonal solve".into());
        }
        if i + 1 < n {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Ok(x)
}

/// Solves (T - shift I) x = rhs for a symmetric tridiagonal T with partial
/// pivoting. Used by inverse iteration, where the shifted matrix is nearly
/// singular and the plain Thomas algorithm is unreliable.
pub fn solve_shifted_sym_tridiagonal(
    diag: &[f64],
    off: &[f64],
    shift: f64,
    rhs: &mut [f64],
) -> Result<(), String> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(());
    }
    // Band storage with one fill-in superdiagonal created by row swaps.
    let mut a = vec![0.0f64; n]; // main
    let mut b = vec![0.0f64; n]; // first superdiagonal
    let mut c = vec![0.0f64; n]; // second superdiagonal (fill-in)
    let mut l = vec![0.0f64; n]; // multipliers
    let mut swapped = vec![false; n];
    for i in 0..n {
        a[i] = diag[i] - shift;
        if i + 1 < n {
            b[i] = off[i];
        }
    }
    let mut sub: Vec<f64> = (0..n.saturating_sub(1)).map(|i| off[i]).collect();
    for i in 0..n - 1 {
        if sub[i].abs() > a[i].abs() {
            swapped[i] = true;
            std::mem::swap(&mut a[i], &mut sub[i]);
            let t = b[i];
            b[i] = a[i + 1];
            a[i + 1] = t;
            if i + 2 <= n - 1 {
                c[i] = b[i + 1];
                b[i + 1] = 0.0;
            }
            rhs.swap(i, i + 1);
        }
        let piv = if a[i] != 0.0 { a[i] } else { f64::MIN_POSITIVE.sqrt() };
        let m = sub[i] / piv;
        l[i] = m;
        a[i + 1] -= m * b[i];
        if i + 2 <= n - 1 {
            b[i + 1] -= m * c[i];
        }
        rhs[i + 1] -= m * rhs[i];
    }
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v -= b[i] * rhs[i + 1];
        }
        if i + 2 < n {
            v -= c[i] * rhs[i + 2];
        }
        let piv = if a[i] != 0.0 { a[i] } else { f64::MIN_POSITIVE.sqrt() };
        rhs[i] = v / piv;
    }
    Ok(())
}

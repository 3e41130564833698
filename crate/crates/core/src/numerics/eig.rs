//! K smallest eigenpairs of a symmetric tridiagonal matrix via Sturm-count
//! bisection and inverse iteration.

use super::tridiag::solve_shifted_sym_tridiagonal;

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// strictly below `x`, by the Sturm sequence.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let mut denom = q;
        if denom.abs() < f64::MIN_POSITIVE.sqrt() {
            denom = f64::MIN_POSITIVE.sqrt().copysign(if denom < 0.0 { -1.0 } else { 1.0 });
        }
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Returns the `k` smallest eigenvalues (ascending) and unit eigenvectors.
pub fn smallest_eigenpairs(diag: &[f64], off: &[f64], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    assert!(k >= 1 && k <= n);
    assert_eq!(off.len(), n - 1);
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i + 1 < n {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let mut lambdas = Vec::with_capacity(k);
    for idx in 0..k {
        // Bisect for the eigenvalue with `idx` eigenvalues below it.
        let mut a = lo;
        let mut b = hi;
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) <= idx {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 1e-15 * scale {
                break;
            }
        }
        lambdas.push(0.5 * (a + b));
    }
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (idx, &lam) in lambdas.iter().enumerate() {
        let shift = lam + 1e-11 * scale;
        // Deterministic pseudo-random start vector.
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let t = (i as f64 + 1.0) * 0.754877666 + idx as f64 * 0.381966;
                (t - t.floor()) - 0.5
            })
            .collect();
        for _ in 0..4 {
            solve_shifted_sym_tridiagonal(diag, off, shift, &mut v).unwrap();
            // Re-orthogonalize against close previous eigenvectors.
            if idx > 0 && (lam - lambdas[idx - 1]).abs() < 1e-6 * scale {
                let prev = &vectors[idx - 1];
                let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= dot * pi;
                }
            }
            let nrm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= nrm;
            }
        }
        vectors.push(v);
    }
    (lambdas, vectors)
}

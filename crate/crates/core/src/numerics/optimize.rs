//! Small dense least squares and a derivative-free simplex minimizer.

use nalgebra::{DMatrix, DVector};

/// Solves min ||A x - b||_2 by SVD with column equilibration; returns x.
pub fn least_squares(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    assert_eq!(rows, b.len());
    // Column scaling keeps the design matrix well conditioned when columns
    // span many orders of magnitude (p^alpha columns at small p).
    let mut scale = vec![0.0f64; cols];
    for row in a {
        for (j, v) in row.iter().enumerate() {
            scale[j] = scale[j].max(v.abs());
        }
    }
    for s in scale.iter_mut() {
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| a[i][j] / scale[j]);
    let rhs = DVector::from_column_slice(b);
    let svd = m.svd(true, true);
    let y = svd.solve(&rhs, 1e-13).expect("svd solve");
    (0..cols).map(|j| y[j] / scale[j]).collect()
}

/// Residual sum of squares for the least-squares fit (convenience).
pub fn least_squares_rss(a: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, f64) {
    let x = least_squares(a, b);
    let mut rss = 0.0;
    for (i, row) in a.iter().enumerate() {
        let pred: f64 = row.iter().zip(&x).map(|(aij, xj)| aij * xj).sum();
        let r = b[i] - pred;
        rss += r * r;
    }
    (x, rss)
}

/// Ordinary least-squares slope of y against x (used for log-log order fits).
pub fn slope_fit(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// Nelder-Mead simplex minimization. Returns (best point, best value).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1e-8 { step * p[i].abs() } else { step };
        simplex.push(p);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..max_iter {
        // Order simplex.
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap());
        let simplex2: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let fv2: Vec<f64> = idx.iter().map(|&i| fv[i]).collect();
        simplex = simplex2;
        fv = fv2;
        if (fv[n] - fv[0]).abs() <= ftol * (1.0 + fv[0].abs()) {
            break;
        }
        // Centroid of all but worst.
        let mut cen = vec![0.0; n];
        for p in simplex.iter().take(n) {
            for (c, v) in cen.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let refl: Vec<f64> = cen.iter().zip(&simplex[n]).map(|(c, w)| 2.0 * c - w).collect();
        let fr = f(&refl);
        if fr < fv[0] {
            let exp: Vec<f64> = cen.iter().zip(&simplex[n]).map(|(c, w)| 3.0 * c - 2.0 * w).collect();
            let fe = f(&exp);
            if fe < fr {
                simplex[n] = exp;
                fv[n] = fe;
            } else {
                simplex[n] = refl;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = refl;
            fv[n] = fr;
        } else {
            let con: Vec<f64> = cen
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| 0.5 * (c + w))
                .collect();
            let fc = f(&con);
            if fc < fv[n] {
                simplex[n] = con;
                fv[n] = fc;
            } else {
                // Shrink toward best.
                for i in 1..=n {
                    let best = simplex[0].clone();
                    for (pj, bj) in simplex[i].iter_mut().zip(&best) {
                        *pj = bj + 0.5 * (*pj - bj);
                    }
                    fv[i] = f(&simplex[i].clone());
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if fv[i] < fv[best] {
            best = i;
        }
    }
    (simplex[best].clone(), fv[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ls_recovers_line() {
        let a: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let b: Vec<f64> = (0..10).map(|i| 2.0 + 3.0 * i as f64).collect();
        let x = least_squares(&a, &b);
        assert_relative_eq!(x[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn nm_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, _) = nelder_mead(f, &[-1.2, 1.0], 0.5, 4000, 1e-16);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-5);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-5);
    }
}

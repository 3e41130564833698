//! Finite-difference derivative stencils on uniform grids.
//!
//! The boundary-value solves are second order, but flux extraction and the
//! interface identities need endpoint derivatives whose stencil truncation
//! error sits well below the scheme error; the 4th-order 5-point one-sided
//! stencils are used throughout for that reason.

/// 4th-order one-sided derivative at the left end of `u` (spacing `h`).
pub fn d_left(u: &[f64], h: f64) -> f64 {
    assert!(u.len() >= 5);
    (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h)
}

/// 4th-order one-sided derivative at the right end of `u` (spacing `h`).
pub fn d_right(u: &[f64], h: f64) -> f64 {
    let n = u.len();
    assert!(n >= 5);
    (25.0 * u[n - 1] - 48.0 * u[n - 2] + 36.0 * u[n - 3] - 16.0 * u[n - 4] + 3.0 * u[n - 5])
        / (12.0 * h)
}

/// 4th-order derivative of `u` at every node (central in the interior,
/// one-sided near the ends).
pub fn derivative_array(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    assert!(n >= 5);
    let mut d = vec![0.0; n];
    d[0] = d_left(u, h);
    d[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) / (12.0 * h);
    for i in 2..n - 2 {
        d[i] = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h);
    }
    d[n - 2] =
        (3.0 * u[n - 1] + 10.0 * u[n - 2] - 18.0 * u[n - 3] + 6.0 * u[n - 4] - u[n - 5]) / (12.0 * h);
    d[n - 1] = d_right(u, h);
    d
}

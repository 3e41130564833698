//! Quadrature helpers on uniform grids.

/// Composite Simpson rule over `y` sampled on a uniform grid of spacing `h`.
/// Requires an even number of cells (odd number of samples).
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even cell count");
    let mut s4 = 0.0;
    let mut s2 = 0.0;
    let mut i = 1;
    while i < n {
        s4 += y[i];
        i += 2;
    }
    let mut j = 2;
    while j < n {
        s2 += y[j];
        j += 2;
    }
    h / 3.0 * (y[0] + y[n] + 4.0 * s4 + 2.0 * s2)
}

/// Cumulative trapezoid integral on a (possibly nonuniform) grid; result has
/// the same length as the input with a leading zero.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    for i in 1..x.len() {
        let prev = out[i - 1];
        out.push(prev + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
    }
    out
}

/// Trapezoid integral on a nonuniform grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mut s = 0.0;
    for i in 1..x.len() {
        s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_cubic_exact() {
        // Simpson is exact on cubics.
        let n = 8;
        let h = 1.0 / n as f64;
        let y: Vec<f64> = (0..=n)
            .map(|i| {
                let x = i as f64 * h;
                x * x * x - 2.0 * x + 1.0
            })
            .collect();
        assert_relative_eq!(simpson(&y, h), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn cumulative_matches_total() {
        let x: Vec<f64> = (0..=100).map(|i| (i as f64 / 100.0).powi(2)).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let cum = cumulative_trapezoid(&x, &y);
        assert_relative_eq!(*cum.last().unwrap(), trapezoid(&x, &y), max_relative = 1e-14);
    }
}

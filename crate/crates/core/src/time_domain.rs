//! Time-domain forward solver via contour inverse Laplace transform, and the
//! numerical Laplace transform used to bring measured series back to the
//! p domain.

use crate::error::{Error, Result};
use crate::laplace_domain::{solve_global, GlobalGrid};
use crate::model::{BoundaryExcitation, ProblemSpec, Side};
use crate::numerics::optimize::least_squares;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_li, gamma_ui};

/// Deformed Bromwich contour: an arc of radius delta/t around the origin
/// joined to two rays at angle +-theta. The declared `delta` is a scale; the
/// arc radius actually used at time t is delta/t, which keeps |e^{tp}|
/// bounded uniformly in t. Rays are truncated where e^{t Re p} reaches
/// machine precision.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourConfig {
    pub theta: f64,
    pub delta: f64,
    pub quad_nodes: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            theta: 0.75 * std::f64::consts::PI,
            delta: 1.0,
            quad_nodes: 240,
        }
    }
}

impl ContourConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > std::f64::consts::FRAC_PI_2 && self.theta < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!(
                "theta = {} outside (pi/2, pi)",
                self.theta
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        if self.quad_nodes < 16 {
            return Err(Error::InvalidArgument("quad_nodes must be at least 16".into()));
        }
        Ok(())
    }
}

/// Sampled boundary flux, either in time or in the Laplace variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesDomain {
    Time,
    Laplace,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxSeries {
    pub domain: SeriesDomain,
    pub side: Side,
    pub samples: Vec<(f64, f64)>,
}

impl FluxSeries {
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0.0;
        for &(a, v) in &self.samples {
            if !(a > prev) {
                return Err(Error::InvalidArgument(format!(
                    "abscissas must be strictly increasing and positive (at {a})"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite sample at {a}")));
            }
            prev = a;
        }
        Ok(())
    }
}

fn complex_ghat(excitation: &BoundaryExcitation, p: Complex64) -> Complex64 {
    let mut g = Complex64::new(0.0, 0.0);
    for (i, &gk) in excitation.coeffs.iter().enumerate() {
        let k = (i + 2) as f64;
        let fact: f64 = (1..=(i + 2)).map(|v| v as f64).product();
        g += Complex64::new(gk * fact, 0.0) * p.powf(-k - 1.0);
    }
    g
}

fn d_left_c(u: &[Complex64], h: f64) -> Complex64 {
    (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h)
}

fn d_right_c(u: &[Complex64], h: f64) -> Complex64 {
    let n = u.len();
    (25.0 * u[n - 1] - 48.0 * u[n - 2] + 36.0 * u[n - 3] - 16.0 * u[n - 4] + 3.0 * u[n - 5])
        / (12.0 * h)
}

/// Steady profile with unit data on the excited side: the g(t)-carrying part
/// of the solution split U = g(t) h + W.
struct SteadyPart {
    grid: GlobalGrid,
    h: Vec<f64>,
    dh_left: f64,
    dh_right: f64,
}

fn steady_part(spec: &ProblemSpec) -> Result<SteadyPart> {
    let grid = GlobalGrid::build(spec);
    let zeros = vec![0.0f64; spec.order.values.len()];
    let bc = match spec.excitation.side {
        Side::Left => (1.0, 0.0),
        Side::Right => (0.0, 1.0),
    };
    let h = solve_global(spec, &grid, &zeros, bc)?;
    let h0 = grid.nodes[1] - grid.nodes[0];
    let h1 = grid.nodes[grid.nodes.len() - 1] - grid.nodes[grid.nodes.len() - 2];
    let dh_left = crate::numerics::stencil::d_left(&h[..5], h0);
    let dh_right = crate::numerics::stencil::d_right(&h[h.len() - 5..], h1);
    Ok(SteadyPart {
        grid,
        h,
        dh_left,
        dh_right,
    })
}

/// Contour nodes (p, weight) for the upper half of the contour at time t; the
/// real result is 1/pi * Im(sum w e^{tp} f(p)).
fn contour_nodes(contour: &ContourConfig, t: f64) -> Vec<(Complex64, Complex64)> {
    let delta = contour.delta / t;
    let theta = contour.theta;
    // Truncate where e^{t r cos theta} < 1e-16.
    let r_max = (37.0 / (t * theta.cos().abs())).max(delta * 2.0);
    // Composite Simpson on both segments; panel counts must be even.
    let n_arc = contour.quad_nodes + contour.quad_nodes % 2;
    let n_ray = n_arc;
    let simpson_w = |j: usize, n: usize| -> f64 {
        if j == 0 || j == n {
            1.0 / 3.0
        } else if j % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        }
    };
    let mut nodes = Vec::with_capacity(n_arc + n_ray + 2);
    // Arc phi in [0, theta], p = delta e^{i phi}, dp = i p dphi.
    let dphi = theta / n_arc as f64;
    for j in 0..=n_arc {
        let phi = j as f64 * dphi;
        let p = Complex64::from_polar(delta, phi);
        let w = Complex64::new(0.0, 1.0) * p * dphi;
        nodes.push((p, w * simpson_w(j, n_arc)));
    }
    // Ray r in [delta, r_max] geometric, p = r e^{i theta}, dp = e^{i theta} dr
    // with dr = r ds on the log scale.
    let smax = (r_max / delta).ln();
    let ds = smax / n_ray as f64;
    let eitheta = Complex64::from_polar(1.0, theta);
    for j in 0..=n_ray {
        let r = delta * (j as f64 * ds).exp();
        let p = r * eitheta;
        let w = eitheta * r * ds;
        nodes.push((p, w * simpson_w(j, n_ray)));
    }
    nodes
}

/// Boundary fluxes at one time, plus solution values at requested node
/// indices of the global grid.
fn flux_at_time(
    spec: &ProblemSpec,
    steady: &SteadyPart,
    contour: &ContourConfig,
    t: f64,
    probes: &[usize],
) -> Result<(f64, f64, Vec<f64>)> {
    let grid = &steady.grid;
    let gt = spec.excitation.eval(t);
    let mut acc_left = Complex64::new(0.0, 0.0);
    let mut acc_right = Complex64::new(0.0, 0.0);
    let mut acc_probe = vec![Complex64::new(0.0, 0.0); probes.len()];
    let h_first = grid.nodes[1] - grid.nodes[0];
    let h_last = grid.nodes[grid.nodes.len() - 1] - grid.nodes[grid.nodes.len() - 2];
    for (p, w) in contour_nodes(contour, t) {
        let g = complex_ghat(&spec.excitation, p);
        let bc = match spec.excitation.side {
            Side::Left => (g, Complex64::new(0.0, 0.0)),
            Side::Right => (Complex64::new(0.0, 0.0), g),
        };
        let pa: Vec<Complex64> = spec.order.values.iter().map(|&a| p.powf(a)).collect();
        let u = solve_global(spec, grid, &pa, bc)?;
        // W-hat = U-hat - ghat * h removes the polynomial pole up to the
        // fractional corrections.
        let etp = (p * t).exp() * w;
        let dwl = d_left_c(&u[..5], h_first) - g * steady.dh_left;
        let dwr = d_right_c(&u[u.len() - 5..], h_last) - g * steady.dh_right;
        acc_left += etp * dwl;
        acc_right += etp * dwr;
        for (slot, &idx) in acc_probe.iter_mut().zip(probes) {
            *slot += etp * (u[idx] - g * steady.h[idx]);
        }
    }
    let inv_pi = 1.0 / std::f64::consts::PI;
    let flux_left = gt * steady.dh_left + inv_pi * acc_left.im;
    let flux_right = gt * steady.dh_right + inv_pi * acc_right.im;
    let probe_vals = acc_probe
        .iter()
        .enumerate()
        .map(|(i, a)| gt * steady.h[probes[i]] + inv_pi * a.im)
        .collect();
    Ok((flux_left, flux_right, probe_vals))
}

/// Boundary fluxes on a time grid: rows (t, flux_left, flux_right).
pub fn forward_flux_time(
    spec: &ProblemSpec,
    contour: &ContourConfig,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    contour.validate()?;
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
        }
    }
    let steady = steady_part(spec)?;
    let rows: Result<Vec<_>> = t_grid
        .par_iter()
        .map(|&t| flux_at_time(spec, &steady, contour, t, &[]).map(|(l, r, _)| (t, l, r)))
        .collect();
    rows
}

/// Reconstructs U(t, x) at the global grid nodes closest to `xs`.
pub fn forward_solution_time(
    spec: &ProblemSpec,
    contour: &ContourConfig,
    t: f64,
    xs: &[f64],
) -> Result<Vec<(f64, f64)>> {
    contour.validate()?;
    let steady = steady_part(spec)?;
    let probes: Vec<usize> = xs
        .iter()
        .map(|&x| {
            steady
                .grid
                .nodes
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (a.1 - x).abs().partial_cmp(&(b.1 - x).abs()).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect();
    let (_, _, vals) = flux_at_time(spec, &steady, contour, t, &probes)?;
    Ok(probes
        .iter()
        .zip(vals)
        .map(|(&i, v)| (steady.grid.nodes[i], v))
        .collect())
}

/// g(t) for the polynomial excitation.
pub fn excitation_eval(excitation: &BoundaryExcitation, t: f64) -> f64 {
    excitation.eval(t)
}

/// Numerical Laplace transform of a time series with power-law head and tail
/// extrapolation. `tail_exponents` are the leading growth powers (typically
/// N and N - min alpha); the head uses the first of them.
pub fn laplace_from_time(
    series: &FluxSeries,
    p_grid: &[f64],
    tail_exponents: &[f64],
) -> Result<FluxSeries> {
    if series.domain != SeriesDomain::Time {
        return Err(Error::InvalidArgument("input series must be in the time domain".into()));
    }
    series.validate()?;
    let samples = &series.samples;
    if samples.len() < 8 {
        return Err(Error::InvalidArgument("need at least 8 time samples".into()));
    }
    if tail_exponents.is_empty() {
        return Err(Error::InvalidArgument("need at least one tail exponent".into()));
    }
    let t_max = samples.last().unwrap().0;
    let t_min = samples[0].0;
    // Fit the tail powers on the last decade.
    let cut = t_max / 10.0;
    let tail: Vec<&(f64, f64)> = samples.iter().filter(|(t, _)| *t >= cut).collect();
    if tail.len() < tail_exponents.len() + 2 {
        return Err(Error::InvalidArgument("too few samples in the tail decade".into()));
    }
    let design: Vec<Vec<f64>> = tail
        .iter()
        .map(|(t, _)| tail_exponents.iter().map(|&e| t.powf(e)).collect())
        .collect();
    let rhs: Vec<f64> = tail.iter().map(|(_, f)| *f).collect();
    let tail_coeffs = least_squares(&design, &rhs);
    // Head coefficient from the first sample using the leading power.
    let head_coeff = samples[0].1 / t_min.powf(tail_exponents[0]);

    let mut out = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        if !(p > 0.0) {
            return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
        }
        // Piecewise-quadratic quadrature: on each sample interval integrate
        // the local quadratic interpolant against e^{-pt} by Gauss-Legendre.
        let mut integral = 0.0;
        let gl_x = [
            -0.861136311594053,
            -0.339981043584856,
            0.339981043584856,
            0.861136311594053,
        ];
        let gl_w = [
            0.347854845137454,
            0.652145154862546,
            0.652145154862546,
            0.347854845137454,
        ];
        for i in 0..samples.len() - 1 {
            let (t0, _) = samples[i];
            let (t1, _) = samples[i + 1];
            // Three-point stencil for the quadratic interpolant.
            let j = if i == 0 { 0 } else { i - 1 };
            let (ta, fa) = samples[j];
            let (tb, fb) = samples[j + 1];
            let (tc, fc) = samples[j + 2];
            let quad = |t: f64| {
                fa * (t - tb) * (t - tc) / ((ta - tb) * (ta - tc))
                    + fb * (t - ta) * (t - tc) / ((tb - ta) * (tb - tc))
                    + fc * (t - ta) * (t - tb) / ((tc - ta) * (tc - tb))
            };
            let half = 0.5 * (t1 - t0);
            let mid = 0.5 * (t0 + t1);
            for k in 0..4 {
                let t = mid + half * gl_x[k];
                integral += gl_w[k] * half * quad(t) * (-p * t).exp();
            }
        }
        // Head: f ~ head_coeff t^e0 on (0, t_min).
        let e0 = tail_exponents[0];
        let head = head_coeff * gamma_li(e0 + 1.0, p * t_min) / p.powf(e0 + 1.0);
        // Tail: sum of fitted powers on (t_max, inf).
        let mut tail_val = 0.0;
        for (&e, &c) in tail_exponents.iter().zip(&tail_coeffs) {
            tail_val += c * gamma_ui(e + 1.0, p * t_max) / p.powf(e + 1.0);
        }
        let total = integral + head + tail_val;
        if tail_val.abs() > 0.10 * total.abs().max(1e-300) {
            let needed = 40.0 / p;
            return Err(Error::InvalidArgument(format!(
                "insufficient time coverage at p = {p}: tail contributes {:.1}% of the \
                 integral; extend the series to roughly t_max = {needed:.3e}",
                100.0 * tail_val.abs() / total.abs()
            )));
        }
        out.push((p, total));
    }
    Ok(FluxSeries {
        domain: SeriesDomain::Laplace,
        side: series.side,
        samples: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;
    use crate::model::{
        BoundaryExcitation, Discretization, MediumCoefficients, PiecewiseOrder,
    };
    use approx::assert_relative_eq;

    fn constant_order_spec(grid: usize) -> ProblemSpec {
        ProblemSpec {
            order: PiecewiseOrder {
                breakpoints: vec![0.0, 1.0],
                values: vec![0.5],
            },
            medium: MediumCoefficients::uniform(),
            excitation: BoundaryExcitation {
                coeffs: vec![1.0],
                side: Side::Left,
            },
            discretization: Discretization {
                grid_per_interval: grid,
                eigenpairs: 32,
            },
        }
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn transform_polynomial_oracle() {
        // flux(t) = t^2 exactly -> 2/p^3.
        let ts = log_grid(1e-3, 4000.0, 400);
        let series = FluxSeries {
            domain: SeriesDomain::Time,
            side: Side::Left,
            samples: ts.iter().map(|&t| (t, t * t)).collect(),
        };
        let out = laplace_from_time(&series, &[1e-2, 0.1, 1.0], &[2.0]).unwrap();
        for &(p, v) in &out.samples {
            assert_relative_eq!(v, 2.0 / p.powi(3), max_relative = 1e-6);
        }
    }

    #[test]
    fn transform_fractional_power_oracle() {
        // flux(t) = t^{1.5} -> Gamma(2.5)/p^{2.5}.
        let ts = log_grid(1e-3, 4000.0, 400);
        let series = FluxSeries {
            domain: SeriesDomain::Time,
            side: Side::Left,
            samples: ts.iter().map(|&t| (t, t.powf(1.5))).collect(),
        };
        let out = laplace_from_time(&series, &[1e-2, 0.1, 1.0], &[1.5]).unwrap();
        for &(p, v) in &out.samples {
            assert_relative_eq!(v, gamma(2.5) / p.powf(2.5), max_relative = 1e-6);
        }
    }

    #[test]
    fn insufficient_coverage_rejected() {
        let ts = log_grid(1e-2, 5.0, 60);
        let series = FluxSeries {
            domain: SeriesDomain::Time,
            side: Side::Left,
            samples: ts.iter().map(|&t| (t, t * t)).collect(),
        };
        assert!(laplace_from_time(&series, &[1e-2], &[2.0]).is_err());
    }

    #[test]
    fn early_time_flux_vanishes() {
        let spec = constant_order_spec(256);
        let contour = ContourConfig::default();
        let rows = forward_flux_time(&spec, &contour, &[1e-4, 1e-3]).unwrap();
        // flux ~ C0 g(t) + O(t^{2-alpha}); both tiny at small t.
        for &(t, fl, _) in &rows {
            assert!(fl.abs() < 10.0 * t.powf(1.5), "flux {fl} at t = {t}");
        }
    }

    #[test]
    fn initial_condition_and_boundary_reproduction() {
        let spec = constant_order_spec(128);
        let contour = ContourConfig::default();
        // Near t = 0 the solution is uniformly small.
        let vals = forward_solution_time(&spec, &contour, 1e-6, &[0.25, 0.5, 0.75]).unwrap();
        for &(_, v) in &vals {
            assert!(v.abs() < 1e-8, "U(0+, x) = {v}");
        }
        // U at the excited boundary equals g(t) (exact by the solution split).
        for &t in &[0.1, 1.0, 10.0] {
            let vb = forward_solution_time(&spec, &contour, t, &[0.0]).unwrap();
            assert_relative_eq!(vb[0].1, spec.excitation.eval(t), max_relative = 1e-6);
        }
    }

    #[test]
    fn contour_parameter_independence() {
        let spec = constant_order_spec(256);
        let c1 = ContourConfig {
            theta: 0.6 * std::f64::consts::PI,
            delta: 0.5,
            quad_nodes: 240,
        };
        let c2 = ContourConfig {
            theta: 0.75 * std::f64::consts::PI,
            delta: 2.0,
            quad_nodes: 240,
        };
        let ts = [0.5, 5.0, 50.0];
        let r1 = forward_flux_time(&spec, &c1, &ts).unwrap();
        let r2 = forward_flux_time(&spec, &c2, &ts).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            assert_relative_eq!(a.1, b.1, max_relative = 1e-6);
            assert_relative_eq!(a.2, b.2, max_relative = 1e-6);
        }
    }

    #[test]
    fn round_trip_against_laplace_solver() {
        let spec = constant_order_spec(512);
        let contour = ContourConfig::default();
        let ts = log_grid(1e-3, 6000.0, 360);
        let rows = forward_flux_time(&spec, &contour, &ts).unwrap();
        let series = FluxSeries {
            domain: SeriesDomain::Time,
            side: Side::Left,
            samples: rows.iter().map(|&(t, fl, _)| (t, fl)).collect(),
        };
        let n = spec.excitation.degree() as f64;
        let amin = spec.order.min_alpha();
        let p_grid = [1e-2, 0.1, 1.0];
        let out = laplace_from_time(&series, &p_grid, &[n, n - amin]).unwrap();
        for &(p, v) in &out.samples {
            let sol = crate::laplace_domain::solve_bvp(&spec, p).unwrap();
            assert_relative_eq!(v, sol.flux_left, max_relative = 1e-3);
        }
    }

    #[test]
    fn long_time_tauberian_limit() {
        use crate::asymptotics::{expansion_coefficients, time_asymptote_for_excitation, FluxSide};
        let spec = constant_order_spec(512);
        let contour = ContourConfig::default();
        let expansion = expansion_coefficients(&spec, FluxSide::LeftFlux).unwrap();
        let ts = [1e3, 1e4];
        let rows = forward_flux_time(&spec, &contour, &ts).unwrap();
        let asym = time_asymptote_for_excitation(&expansion, &spec.excitation, &ts).unwrap();
        for (row, (_, a)) in rows.iter().zip(asym) {
            assert_relative_eq!(row.1, a, max_relative = 1e-3);
        }
    }
}

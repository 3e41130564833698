//! Per-subinterval elliptic machinery: fundamental solutions, Dirichlet
//! eigenpairs of the weighted operator, and the starred constants that drive
//! the small-p asymptotics.

use crate::error::{Error, Result};
use crate::model::MediumCoefficients;
use crate::numerics::eig::smallest_eigenpairs;
use crate::numerics::quad::simpson;
use crate::numerics::stencil::{d_left, d_right, derivative_array};
use crate::numerics::tridiag::solve_tridiagonal;

/// Fundamental solutions v (boundary data 1, 0) and w (boundary data 0, 1) of
/// -(sigma u')' + q u = 0 on one subinterval, with nodal values, nodal
/// derivatives, and the endpoint derivatives.
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub dv: Vec<f64>,
    pub dw: Vec<f64>,
    pub dv_left: f64,
    pub dv_right: f64,
    pub dw_left: f64,
    pub dw_right: f64,
}

/// Harmonic average of sigma at a cell face; preserves the flux form of the
/// operator discretely.
fn face_sigma(s0: f64, s1: f64) -> f64 {
    2.0 * s0 * s1 / (s0 + s1)
}

/// Solves -(sigma u')' + (q + mass) u = 0 with Dirichlet data (u(a), u(b)) on
/// a uniform grid of `m` cells; `mass` is an optional extra zero-order
/// coefficient sampled at the nodes.
fn solve_interval(
    medium: &MediumCoefficients,
    a: f64,
    b: f64,
    m: usize,
    bc: (f64, f64),
    mass: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let h = (b - a) / m as f64;
    let x: Vec<f64> = (0..=m).map(|i| a + h * i as f64).collect();
    let sig: Vec<f64> = x.iter().map(|&xi| medium.sigma.eval(xi)).collect();
    let qv: Vec<f64> = x.iter().map(|&xi| medium.q.eval(xi)).collect();
    let sf: Vec<f64> = (0..m).map(|i| face_sigma(sig[i], sig[i + 1])).collect();
    let n = m - 1;
    let mut diag = vec![0.0; n];
    let mut lower = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    let mut rhs = vec![0.0; n];
    for i in 1..m {
        let row = i - 1;
        let extra = mass.map_or(0.0, |ms| ms[i]);
        diag[row] = (sf[i - 1] + sf[i]) / (h * h) + qv[i] + extra;
        if row > 0 {
            lower[row - 1] = -sf[i - 1] / (h * h);
        } else {
            rhs[row] += bc.0 * sf[i - 1] / (h * h);
        }
        if row < n - 1 {
            upper[row] = -sf[i] / (h * h);
        } else {
            rhs[row] += bc.1 * sf[i] / (h * h);
        }
    }
    let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs).map_err(Error::Solver)?;
    let mut u = Vec::with_capacity(m + 1);
    u.push(bc.0);
    u.extend(interior);
    u.push(bc.1);
    Ok((x, u, h))
}

/// Computes the fundamental pair on `interval` with `grid_n` cells.
pub fn fundamental_solutions(
    medium: &MediumCoefficients,
    interval: (f64, f64),
    grid_n: usize,
) -> Result<FundamentalPair> {
    let (a, b) = interval;
    if grid_n < 16 {
        return Err(Error::InvalidArgument(format!(
            "grid_n = {grid_n} below solver floor 16"
        )));
    }
    let m = grid_n + grid_n % 2;
    let (x, v, h) = solve_interval(medium, a, b, m, (1.0, 0.0), None)?;
    let (_, w, _) = solve_interval(medium, a, b, m, (0.0, 1.0), None)?;
    let dv = derivative_array(&v, h);
    let dw = derivative_array(&w, h);
    Ok(FundamentalPair {
        a,
        b,
        h,
        dv_left: dv[0],
        dv_right: *dv.last().unwrap(),
        dw_left: dw[0],
        dw_right: *dw.last().unwrap(),
        x,
        v,
        w,
        dv,
        dw,
    })
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub phi: Vec<f64>,
    pub dphi_left: f64,
    pub dphi_right: f64,
}

/// Dirichlet eigenpairs of rho^{-1}(-(sigma f')' + q f) on one subinterval,
/// ascending, rho-normalized, with the sign convention phi'(left) > 0.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub pairs: Vec<EigenPair>,
}

pub fn eigenpairs(
    medium: &MediumCoefficients,
    interval: (f64, f64),
    k: usize,
    grid_n: usize,
) -> Result<EigenSystem> {
    let (a, b) = interval;
    if k < 1 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let m = grid_n + grid_n % 2;
    if k > m / 4 {
        return Err(Error::InvalidArgument(format!(
            "K = {k} exceeds grid_n/4 = {}; high modes are unresolved",
            m / 4
        )));
    }
    let h = (b - a) / m as f64;
    let x: Vec<f64> = (0..=m).map(|i| a + h * i as f64).collect();
    let sig: Vec<f64> = x.iter().map(|&xi| medium.sigma.eval(xi)).collect();
    let qv: Vec<f64> = x.iter().map(|&xi| medium.q.eval(xi)).collect();
    let rho: Vec<f64> = x.iter().map(|&xi| medium.rho.eval(xi)).collect();
    let sf: Vec<f64> = (0..m).map(|i| face_sigma(sig[i], sig[i + 1])).collect();
    let n = m - 1;
    // Symmetrized generalized problem: S = D^{-1/2} A D^{-1/2}, D = diag(rho).
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 1..m {
        let row = i - 1;
        diag[row] = ((sf[i - 1] + sf[i]) / (h * h) + qv[i]) / rho[i];
        if row < n - 1 {
            off[row] = -sf[i] / (h * h) / (rho[i] * rho[i + 1]).sqrt();
        }
    }
    let (lambdas, vectors) = smallest_eigenpairs(&diag, &off, k);
    let mut pairs = Vec::with_capacity(k);
    for (lam, vec_k) in lambdas.into_iter().zip(vectors) {
        let mut phi = Vec::with_capacity(m + 1);
        phi.push(0.0);
        for (i, vi) in vec_k.iter().enumerate() {
            phi.push(vi / rho[i + 1].sqrt());
        }
        phi.push(0.0);
        let weighted: Vec<f64> = phi.iter().zip(&rho).map(|(p, r)| p * p * r).collect();
        let nrm = simpson(&weighted, h).sqrt();
        for p in phi.iter_mut() {
            *p /= nrm;
        }
        let mut dl = d_left(&phi, h);
        if dl < 0.0 {
            for p in phi.iter_mut() {
                *p = -*p;
            }
            dl = -dl;
        }
        let dr = d_right(&phi, h);
        pairs.push(EigenPair {
            lambda: lam,
            phi,
            dphi_left: dl,
            dphi_right: dr,
        });
    }
    Ok(EigenSystem { a, b, h, x, pairs })
}

/// Parseval constants of one subinterval: E* = ||v||^2_rho,
/// F* = -(v, w)_rho, G* = ||w||^2_rho.
#[derive(Debug, Clone, Copy)]
pub struct StarredConstants {
    pub e_star: f64,
    pub f_star: f64,
    pub g_star: f64,
}

pub fn starred_constants(pair: &FundamentalPair, medium: &MediumCoefficients) -> StarredConstants {
    let rho: Vec<f64> = pair.x.iter().map(|&xi| medium.rho.eval(xi)).collect();
    let vv: Vec<f64> = pair.v.iter().zip(&rho).map(|(v, r)| v * v * r).collect();
    let vw: Vec<f64> = pair
        .v
        .iter()
        .zip(&pair.w)
        .zip(&rho)
        .map(|((v, w), r)| v * w * r)
        .collect();
    let ww: Vec<f64> = pair.w.iter().zip(&rho).map(|(w, r)| w * w * r).collect();
    StarredConstants {
        e_star: simpson(&vv, pair.h),
        f_star: -simpson(&vw, pair.h),
        g_star: simpson(&ww, pair.h),
    }
}

/// Auxiliary series values at one p, with tail accounting.
///
/// The truncated eigen-sums are completed to first order in p^alpha using the
/// residual Parseval mass (exact up to O(p^{2 alpha})); `tail_*` carries the
/// certified envelope p^alpha * (star - partial Parseval mass) that bounds
/// the discarded tail.
#[derive(Debug, Clone, Copy)]
pub struct AuxSeries {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub tail_e: f64,
    pub tail_f: f64,
    pub tail_g: f64,
}

pub fn auxiliary_series(
    eigs: &EigenSystem,
    sigma_endpoints: (f64, f64),
    p: f64,
    alpha: f64,
    stars: &StarredConstants,
) -> Result<AuxSeries> {
    if p <= 0.0 {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    if eigs.pairs.is_empty() {
        return Err(Error::InvalidArgument("empty eigen system".into()));
    }
    let (sa, sb) = sigma_endpoints;
    let pa = p.powf(alpha);
    let (mut e, mut f, mut g) = (0.0, 0.0, 0.0);
    let (mut pe, mut pf, mut pg) = (0.0, 0.0, 0.0);
    for pair in &eigs.pairs {
        let lam = pair.lambda;
        let fac = pa / (pa + lam);
        let el = sa * pair.dphi_left;
        let gr = sb * pair.dphi_right;
        e += el * el / lam * fac;
        f += el * gr / lam * fac;
        g += gr * gr / lam * fac;
        pe += el * el / (lam * lam);
        pf += el * gr / (lam * lam);
        pg += gr * gr / (lam * lam);
    }
    let tail_e = pa * (stars.e_star - pe).max(0.0);
    let tail_g = pa * (stars.g_star - pg).max(0.0);
    let tail_f = (tail_e * tail_g).sqrt();
    Ok(AuxSeries {
        e: e + pa * (stars.e_star - pe),
        f: f + pa * (stars.f_star - pf),
        g: g + pa * (stars.g_star - pg),
        tail_e,
        tail_f,
        tail_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefficientFn;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn uniform() -> MediumCoefficients {
        MediumCoefficients::uniform()
    }

    #[test]
    fn straight_line_fundamentals() {
        let pair = fundamental_solutions(&uniform(), (0.0, 1.0), 64).unwrap();
        for (i, &xi) in pair.x.iter().enumerate() {
            assert_relative_eq!(pair.v[i], 1.0 - xi, epsilon = 1e-12);
            assert_relative_eq!(pair.w[i], xi, epsilon = 1e-12);
        }
        assert_relative_eq!(pair.dv_left, -1.0, epsilon = 1e-10);
        assert_relative_eq!(pair.dw_right, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn half_interval_slopes() {
        let pair = fundamental_solutions(&uniform(), (0.0, 0.5), 64).unwrap();
        assert_relative_eq!(pair.dv_right, -2.0, epsilon = 1e-10);
        assert_relative_eq!(pair.dw_left, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn sinh_case_and_grid_convergence() {
        let mut med = uniform();
        med.q = CoefficientFn::constant(1.0);
        let exact = -1.0f64.cosh() / 1.0f64.sinh();
        let err = |n: usize| {
            let pair = fundamental_solutions(&med, (0.0, 1.0), n).unwrap();
            (pair.dv_left - exact).abs()
        };
        let e1 = err(256);
        let e2 = err(512);
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "second-order ratio {ratio}");
        assert_relative_eq!(
            fundamental_solutions(&med, (0.0, 1.0), 2048).unwrap().dv_left,
            exact,
            max_relative = 1e-7
        );
    }

    #[test]
    fn wronskian_constant_and_interface_identity() {
        let med = MediumCoefficients {
            rho: CoefficientFn::constant(1.0),
            sigma: CoefficientFn::PiecewisePoly {
                mesh: vec![0.0, 1.0],
                poly_coeffs: vec![vec![1.0, 0.3, 0.2]],
            },
            q: CoefficientFn::PiecewisePoly {
                mesh: vec![0.0, 1.0],
                poly_coeffs: vec![vec![0.5, 0.3]],
            },
        };
        let pair = fundamental_solutions(&med, (0.0, 1.0), 2048).unwrap();
        let wr: Vec<f64> = pair
            .x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                med.sigma.eval(xi) * (pair.dv[i] * pair.w[i] - pair.v[i] * pair.dw[i])
            })
            .collect();
        let w0 = wr[0];
        for wi in &wr {
            assert!(((wi - w0) / w0).abs() < 1e-6, "wronskian drift {}", (wi - w0) / w0);
        }
        // -sigma(a) w'(a) = sigma(b) v'(b)
        let lhs = -med.sigma.eval(0.0) * pair.dw_left;
        let rhs = med.sigma.eval(1.0) * pair.dv_right;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-7);
        // Monotone slope ordering along the grid.
        let sig_dv: Vec<f64> = pair
            .x
            .iter()
            .enumerate()
            .map(|(i, &xi)| med.sigma.eval(xi) * pair.dv[i])
            .collect();
        for i in 1..sig_dv.len() {
            assert!(sig_dv[i] >= sig_dv[i - 1] - 1e-9);
            assert!(sig_dv[i] < 0.0);
        }
    }

    #[test]
    fn laplacian_eigenpairs() {
        let sys = eigenpairs(&uniform(), (0.0, 1.0), 3, 512).unwrap();
        for (k, pair) in sys.pairs.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI).powi(2);
            assert_relative_eq!(pair.lambda, exact, max_relative = 1e-4);
        }
        // phi_1 = sqrt(2) sin(pi x)
        let p1 = &sys.pairs[0];
        assert_relative_eq!(p1.dphi_left, 2.0f64.sqrt() * PI, max_relative = 1e-4);
        let mid = sys.x.len() / 2;
        assert_relative_eq!(p1.phi[mid], 2.0f64.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn weighted_spectrum_scaling() {
        let med = MediumCoefficients {
            rho: CoefficientFn::constant(2.0),
            sigma: CoefficientFn::constant(1.0),
            q: CoefficientFn::constant(0.0),
        };
        let sys = eigenpairs(&med, (0.0, 1.0), 1, 512).unwrap();
        assert_relative_eq!(sys.pairs[0].lambda, PI * PI / 2.0, max_relative = 1e-4);
    }

    #[test]
    fn eigen_k_cap() {
        assert!(eigenpairs(&uniform(), (0.0, 1.0), 100, 128).is_err());
    }

    #[test]
    fn starred_constant_values() {
        let pair = fundamental_solutions(&uniform(), (0.0, 1.0), 256).unwrap();
        let s = starred_constants(&pair, &uniform());
        assert_relative_eq!(s.e_star, 1.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(s.f_star, -1.0 / 6.0, max_relative = 1e-10);
        assert_relative_eq!(s.g_star, 1.0 / 3.0, max_relative = 1e-10);
        let pair2 = fundamental_solutions(&uniform(), (0.0, 0.5), 256).unwrap();
        let s2 = starred_constants(&pair2, &uniform());
        assert_relative_eq!(s2.e_star, 1.0 / 6.0, max_relative = 1e-10);
        assert_relative_eq!(s2.f_star, -1.0 / 12.0, max_relative = 1e-10);
        assert_relative_eq!(s2.g_star, 1.0 / 6.0, max_relative = 1e-10);
    }

    #[test]
    fn starred_signs_for_nonuniform_medium() {
        let med = MediumCoefficients {
            rho: CoefficientFn::PiecewisePoly {
                mesh: vec![0.0, 1.0],
                poly_coeffs: vec![vec![1.2, 0.4]],
            },
            sigma: CoefficientFn::PiecewisePoly {
                mesh: vec![0.0, 1.0],
                poly_coeffs: vec![vec![0.8, 0.1, 0.3]],
            },
            q: CoefficientFn::constant(0.7),
        };
        let pair = fundamental_solutions(&med, (0.0, 1.0), 512).unwrap();
        let s = starred_constants(&pair, &med);
        assert!(s.e_star > 0.0 && s.g_star > 0.0 && s.f_star < 0.0);
    }

    #[test]
    fn eigen_coefficient_identity() {
        // (v, phi_k)_rho = sigma(a) phi_k'(a) / lambda_k and the mirrored
        // identity for w, for k up to K/2.
        let med = MediumCoefficients {
            rho: CoefficientFn::constant(1.0),
            sigma: CoefficientFn::PiecewisePoly {
                mesh: vec![0.0, 1.0],
                poly_coeffs: vec![vec![1.0, 0.2]],
            },
            q: CoefficientFn::constant(0.3),
        };
        let grid = 8192;
        let pair = fundamental_solutions(&med, (0.0, 1.0), grid).unwrap();
        let sys = eigenpairs(&med, (0.0, 1.0), 16, grid).unwrap();
        let rho: Vec<f64> = pair.x.iter().map(|&x| med.rho.eval(x)).collect();
        let vnorm = {
            let vv: Vec<f64> = pair.v.iter().zip(&rho).map(|(v, r)| v * v * r).collect();
            simpson(&vv, pair.h).sqrt()
        };
        for pk in sys.pairs.iter().take(8) {
            let integ_v: Vec<f64> = pair
                .v
                .iter()
                .zip(&pk.phi)
                .zip(&rho)
                .map(|((v, p), r)| v * p * r)
                .collect();
            let lhs = simpson(&integ_v, pair.h);
            let rhs = med.sigma.eval(0.0) * pk.dphi_left / pk.lambda;
            assert!((lhs - rhs).abs() < 1e-6 * vnorm, "v identity {} vs {}", lhs, rhs);
            let integ_w: Vec<f64> = pair
                .w
                .iter()
                .zip(&pk.phi)
                .zip(&rho)
                .map(|((w, p), r)| w * p * r)
                .collect();
            let lhs_w = simpson(&integ_w, pair.h);
            let rhs_w = -med.sigma.eval(1.0) * pk.dphi_right / pk.lambda;
            assert!((lhs_w - rhs_w).abs() < 1e-6 * vnorm);
        }
    }

    #[test]
    fn auxiliary_series_limits_and_bounds() {
        let med = uniform();
        let grid = 1024;
        let pair = fundamental_solutions(&med, (0.0, 1.0), grid).unwrap();
        let stars = starred_constants(&pair, &med);
        let sys = eigenpairs(&med, (0.0, 1.0), 64, grid).unwrap();
        let alpha = 0.5;
        // Small-p limit E(p)/p^alpha -> E*.
        let p = 1e-4;
        let aux = auxiliary_series(&sys, (1.0, 1.0), p, alpha, &stars).unwrap();
        let pa = p.powf(alpha);
        assert_relative_eq!(aux.e, pa / 3.0, max_relative = 0.02);
        // Envelope 0 <= E <= p^alpha E* and the second-order remainder bound.
        for &pp in &[1e-6, 1e-4, 1e-2, 0.5] {
            let ax = auxiliary_series(&sys, (1.0, 1.0), pp, alpha, &stars).unwrap();
            let ppa = pp.powf(alpha);
            assert!(ax.e >= 0.0 && ax.e <= ppa * stars.e_star * (1.0 + 1e-10));
            assert!(ax.g >= 0.0 && ax.g <= ppa * stars.g_star * (1.0 + 1e-10));
            let lam1 = sys.pairs[0].lambda;
            if pp < (lam1 / 2.0).powf(1.0 / alpha) {
                let rem = (ax.e - ppa * stars.e_star).abs();
                assert!(rem <= 2.0 * stars.e_star / lam1 * pp.powf(2.0 * alpha) * (1.0 + 1e-8));
            }
        }
    }
}

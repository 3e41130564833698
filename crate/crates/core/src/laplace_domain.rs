//! Global Laplace-domain boundary value solves, interface traces, boundary
//! fluxes, and the interface recursion coupling them.

use crate::error::{Error, Result};
use crate::model::{ghat, ProblemSpec, Side};
use crate::numerics::quad::simpson;
use crate::numerics::tridiag::{solve_tridiagonal, Scalar};
use crate::sturm_liouville::{AuxSeries, EigenSystem, FundamentalPair};
use num_complex::Complex64;

/// Union of per-interval uniform grids; every breakpoint is an exact node.
#[derive(Debug, Clone)]
pub struct GlobalGrid {
    pub nodes: Vec<f64>,
    /// Piece index owning cell i (between nodes i and i+1).
    pub piece_of_cell: Vec<usize>,
    /// Node index of each breakpoint x_0..x_{n+1}.
    pub breakpoint_nodes: Vec<usize>,
    pub cells_per_interval: usize,
}

impl GlobalGrid {
    pub fn build(spec: &ProblemSpec) -> Self {
        let m = spec.discretization.resolved_grid();
        let bp = &spec.order.breakpoints;
        let mut nodes = Vec::new();
        let mut piece_of_cell = Vec::new();
        let mut breakpoint_nodes = vec![0usize];
        for j in 0..bp.len() - 1 {
            let (a, b) = (bp[j], bp[j + 1]);
            for i in 0..m {
                nodes.push(a + (b - a) * i as f64 / m as f64);
                piece_of_cell.push(j);
            }
            breakpoint_nodes.push((j + 1) * m);
        }
        nodes.push(*bp.last().unwrap());
        GlobalGrid {
            nodes,
            piece_of_cell,
            breakpoint_nodes,
            cells_per_interval: m,
        }
    }
}

fn face_sigma(s0: f64, s1: f64) -> f64 {
    2.0 * s0 * s1 / (s0 + s1)
}

/// One-sided 4th-order derivative at the start of a uniformly spaced prefix.
fn d_left_generic<T: Scalar>(u: &[T], h: f64) -> T {
    (T::from_f64(-25.0) * u[0] + T::from_f64(48.0) * u[1] + T::from_f64(-36.0) * u[2]
        + T::from_f64(16.0) * u[3]
        + T::from_f64(-3.0) * u[4])
        / T::from_f64(12.0 * h)
}

fn d_right_generic<T: Scalar>(u: &[T], h: f64) -> T {
    let n = u.len();
    (T::from_f64(25.0) * u[n - 1] + T::from_f64(-48.0) * u[n - 2] + T::from_f64(36.0) * u[n - 3]
        + T::from_f64(-16.0) * u[n - 4]
        + T::from_f64(3.0) * u[n - 5])
        / T::from_f64(12.0 * h)
}

/// Solves the global BVP -(sigma U')' + (rho p^alpha + q) U = 0 with Dirichlet
/// data `bc` on the union grid; `pa_by_piece[j]` carries p^{alpha_j} (real or
/// complex). At breakpoints the control-volume mass term is split per side
/// with the respective order.
pub fn solve_global<T: Scalar>(
    spec: &ProblemSpec,
    grid: &GlobalGrid,
    pa_by_piece: &[T],
    bc: (T, T),
) -> Result<Vec<T>> {
    let nodes = &grid.nodes;
    let np = nodes.len();
    let sig: Vec<f64> = nodes.iter().map(|&x| spec.medium.sigma.eval(x)).collect();
    let qv: Vec<f64> = nodes.iter().map(|&x| spec.medium.q.eval(x)).collect();
    let rho: Vec<f64> = nodes.iter().map(|&x| spec.medium.rho.eval(x)).collect();
    let n = np - 2;
    let mut lower = vec![T::zero(); n - 1];
    let mut diag = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n - 1];
    let mut rhs = vec![T::zero(); n];
    for i in 1..np - 1 {
        let row = i - 1;
        let hm = nodes[i] - nodes[i - 1];
        let hp = nodes[i + 1] - nodes[i];
        let sfm = face_sigma(sig[i - 1], sig[i]) / hm;
        let sfp = face_sigma(sig[i], sig[i + 1]) / hp;
        let pa_m = pa_by_piece[grid.piece_of_cell[i - 1]];
        let pa_p = pa_by_piece[grid.piece_of_cell[i]];
        let mass = T::from_f64(0.5 * hm) * (pa_m * T::from_f64(rho[i]) + T::from_f64(qv[i]))
            + T::from_f64(0.5 * hp) * (pa_p * T::from_f64(rho[i]) + T::from_f64(qv[i]));
        diag[row] = T::from_f64(sfm + sfp) + mass;
        if row > 0 {
            lower[row - 1] = T::from_f64(-sfm);
        } else {
            rhs[row] = rhs[row] + bc.0 * T::from_f64(sfm);
        }
        if row < n - 1 {
            upper[row] = T::from_f64(-sfp);
        } else {
            rhs[row] = rhs[row] + bc.1 * T::from_f64(sfp);
        }
    }
    let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs).map_err(Error::Solver)?;
    let mut u = Vec::with_capacity(np);
    u.push(bc.0);
    u.extend(interior);
    u.push(bc.1);
    Ok(u)
}

/// Laplace-domain solution at one p with traces and boundary fluxes.
#[derive(Debug, Clone)]
pub struct LaplaceSolution {
    pub p: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// h_0..h_{n+1}: solution values at the breakpoints (h at the excited end
    /// equals ghat(p)).
    pub traces: Vec<f64>,
    pub flux_left: f64,
    pub flux_right: f64,
}

pub fn solve_bvp(spec: &ProblemSpec, p: f64) -> Result<LaplaceSolution> {
    if p <= 0.0 {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    let grid = GlobalGrid::build(spec);
    let g = ghat(&spec.excitation, p)?;
    let bc = match spec.excitation.side {
        Side::Left => (g, 0.0),
        Side::Right => (0.0, g),
    };
    let pa: Vec<f64> = spec.order.values.iter().map(|&a| p.powf(a)).collect();
    let u = solve_global(spec, &grid, &pa, bc)?;
    let m = grid.cells_per_interval;
    let h_first = grid.nodes[1] - grid.nodes[0];
    let h_last = grid.nodes[grid.nodes.len() - 1] - grid.nodes[grid.nodes.len() - 2];
    let flux_left = d_left_generic(&u[..5.min(u.len())], h_first);
    let flux_right = d_right_generic(&u[u.len().saturating_sub(5)..], h_last);
    let traces = grid.breakpoint_nodes.iter().map(|&i| u[i]).collect();
    let _ = m;
    Ok(LaplaceSolution {
        p,
        x: grid.nodes,
        values: u,
        traces,
        flux_left,
        flux_right,
    })
}

/// Boundary fluxes for complex p (contour quadrature); returns
/// (flux_left, flux_right) of the solution with data ghat(p) on the excited
/// side.
pub fn complex_flux(spec: &ProblemSpec, p: Complex64) -> Result<(Complex64, Complex64)> {
    let grid = GlobalGrid::build(spec);
    let mut g = Complex64::new(0.0, 0.0);
    for (i, &gk) in spec.excitation.coeffs.iter().enumerate() {
        let k = (i + 2) as f64;
        let fact: f64 = (1..=(i + 2)).map(|v| v as f64).product();
        g += Complex64::new(gk * fact, 0.0) * p.powf(-k - 1.0);
    }
    let bc = match spec.excitation.side {
        Side::Left => (g, Complex64::new(0.0, 0.0)),
        Side::Right => (Complex64::new(0.0, 0.0), g),
    };
    let pa: Vec<Complex64> = spec
        .order
        .values
        .iter()
        .map(|&a| p.powf(a))
        .collect();
    let u = solve_global(spec, &grid, &pa, bc)?;
    let h_first = grid.nodes[1] - grid.nodes[0];
    let h_last = grid.nodes[grid.nodes.len() - 1] - grid.nodes[grid.nodes.len() - 2];
    Ok((
        d_left_generic(&u[..5], h_first),
        d_right_generic(&u[u.len() - 5..], h_last),
    ))
}

/// p-dependent interface factors c_m(p), d_m(p) built from endpoint
/// derivatives of the fundamental pairs and the auxiliary series.
pub fn cd_factors(
    spec: &ProblemSpec,
    pairs: &[FundamentalPair],
    aux: &[AuxSeries],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = spec.order.n_interfaces();
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for m in 1..=n {
        let s_m = spec.medium.sigma.eval(spec.order.breakpoints[m]);
        let num_c = aux[m].e + aux[m - 1].g - s_m * pairs[m].dv_left + s_m * pairs[m - 1].dw_right;
        let den = aux[m - 1].f - s_m * pairs[m - 1].dv_right;
        // The denominator must keep the sign of -sigma v' (positive); losing
        // it means the auxiliary series has left the small-p regime.
        if den <= 0.0 || (-s_m * pairs[m - 1].dv_right) <= 0.0 {
            return Err(Error::Solver(
                "p outside small-p regime (p_0 exceeded): interface denominator sign flip".into(),
            ));
        }
        c.push(num_c / den);
        d.push(-(aux[m].f + s_m * pairs[m].dw_left) / den);
    }
    Ok((c, d))
}

/// State of the two interface recursions. Indexing: `r[m]`, `s[m]` for
/// m = 0..n; `r_tilde[m]`, `s_tilde[m]` for m = 1..n (index 0 unused, NaN).
#[derive(Debug, Clone)]
pub struct RecursionState {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub r_tilde: Vec<f64>,
    pub s_tilde: Vec<f64>,
}

pub fn interface_recursion(c: &[f64], d: &[f64]) -> RecursionState {
    assert_eq!(c.len(), d.len());
    let n = c.len();
    assert!(n >= 1, "recursion needs at least one interface");
    let mut r = vec![1.0];
    let mut s = vec![0.0];
    for m in 1..=n {
        r.push(c[m - 1] * r[m - 1] + s[m - 1]);
        s.push(d[m - 1] * r[m - 1]);
    }
    let mut rt = vec![f64::NAN, 1.0];
    let mut st = vec![f64::NAN, 0.0];
    for m in 2..=n {
        rt.push(c[m - 1] * rt[m - 1] + st[m - 1]);
        st.push(d[m - 1] * rt[m - 1]);
    }
    RecursionState {
        c: c.to_vec(),
        d: d.to_vec(),
        r,
        s,
        r_tilde: rt,
        s_tilde: st,
    }
}

/// Residuals of the trace-coupling identities, all relative to |h_0|.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// |r_n h_n - h_0| / |h_0|
    pub res_r: f64,
    /// |r_tilde_n h_n - h_1| / |h_0|
    pub res_r_tilde: f64,
    /// Rows of the explicit tridiagonal trace system
    /// c_m h_m + d_m h_{m+1} - h_{m-1}, m = 1..n.
    pub tridiag_residuals: Vec<f64>,
}

pub fn verify_coefficient_identities(
    sol: &LaplaceSolution,
    state: &RecursionState,
) -> IdentityReport {
    let n = state.c.len();
    let h = &sol.traces;
    let h0 = h[0].abs();
    let res_r = (state.r[n] * h[n] - h[0]).abs() / h0;
    let res_rt = (state.r_tilde[n] * h[n] - h[1]).abs() / h0;
    let mut rows = Vec::with_capacity(n);
    for m in 1..=n {
        rows.push((state.c[m - 1] * h[m] + state.d[m - 1] * h[m + 1] - h[m - 1]).abs() / h0);
    }
    IdentityReport {
        res_r,
        res_r_tilde: res_rt,
        tridiag_residuals: rows,
    }
}

/// Evaluates the per-interval eigenfunction representation of the solution at
/// point `x` inside interval `j`, given the traces; returns the value and the
/// certified truncation envelope.
pub fn eigenexpansion_at(
    spec: &ProblemSpec,
    p: f64,
    j: usize,
    x: f64,
    pair: &FundamentalPair,
    eigs: &EigenSystem,
    traces: &[f64],
) -> (f64, f64) {
    let alpha = spec.order.values[j];
    let pa = p.powf(alpha);
    let sa = spec.medium.sigma.eval(pair.a);
    let sb = spec.medium.sigma.eval(pair.b);
    let hj = traces[j];
    let hj1 = traces[j + 1];
    // Linear interpolation of grid functions at x (grid is fine; the h^2
    // interpolation error is far below the truncation envelope).
    let interp = |g: &[f64]| -> f64 {
        let t = (x - pair.a) / pair.h;
        let i = (t.floor() as usize).min(g.len() - 2);
        let frac = t - i as f64;
        g[i] * (1.0 - frac) + g[i + 1] * frac
    };
    let mut val = hj * interp(&pair.v) + hj1 * interp(&pair.w);
    let mut mass_e = 0.0;
    let mut mass_g = 0.0;
    for ep in &eigs.pairs {
        let lam = ep.lambda;
        let coef = (hj * sa * ep.dphi_left - hj1 * sb * ep.dphi_right) / lam;
        val -= pa / (pa + lam) * coef * interp(&ep.phi);
        mass_e += (sa * ep.dphi_left).powi(2) / (lam * lam);
        mass_g += (sb * ep.dphi_right).powi(2) / (lam * lam);
    }
    // Envelope: Cauchy-Schwarz over the discarded modes. The phi-side factor
    // sum_k phi_k(x)^2 / lam_k^2 equals the rho-weighted square integral of
    // the interval Green's function at x, computable from v and w.
    let stars = crate::sturm_liouville::starred_constants(pair, &spec.medium);
    let tail_coef =
        (2.0 * hj * hj * (stars.e_star - mass_e).max(0.0)
            + 2.0 * hj1 * hj1 * (stars.g_star - mass_g).max(0.0))
        .sqrt();
    let wronskian = sa * pair.dw_left; // sigma(a) w'(a) > 0
    let rho: Vec<f64> = pair.x.iter().map(|&t| spec.medium.rho.eval(t)).collect();
    let vx = interp(&pair.v);
    let wx = interp(&pair.w);
    let green_sq: Vec<f64> = pair
        .x
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let gxy = if y <= x {
                pair.w[i] * vx / wronskian
            } else {
                wx * pair.v[i] / wronskian
            };
            gxy * gxy * rho[i]
        })
        .collect();
    let green_norm = simpson(&green_sq, pair.h).sqrt();
    let envelope = pa * tail_coef * green_norm;
    (val, envelope)
}

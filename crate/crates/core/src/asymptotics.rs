//! p-independent objects of the small-p theory: starred interface factors,
//! the X table, the canonical profiles u / ubar / utilde, the M factors, and
//! the first-order expansion coefficients of the boundary fluxes.

use crate::error::{Error, Result};
use crate::model::{ghat, ProblemSpec, Side};
use crate::numerics::optimize::slope_fit;
use crate::numerics::quad::simpson;
use crate::sturm_liouville::{
    fundamental_solutions, starred_constants, FundamentalPair, StarredConstants,
};
use serde::Serialize;
use statrs::function::gamma::gamma;

/// Leading-order interface factors at one interface m: the limits c*, d* of
/// the p-dependent factors and the coefficients of their p^{alpha_m}
/// (`c0`, `d0`) and p^{alpha_{m-1}} (`cminus`, `dminus`) corrections.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FactorSet {
    pub c_star: f64,
    pub d_star: f64,
    pub c0_star: f64,
    pub cminus_star: f64,
    pub d0_star: f64,
    pub dminus_star: f64,
}

/// Evaluates the six starred-factor formulas at every interface.
pub fn interface_factors(
    spec: &ProblemSpec,
    pairs: &[FundamentalPair],
    stars: &[StarredConstants],
) -> Result<Vec<FactorSet>> {
    let n = spec.order.n_interfaces();
    if n < 1 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(n);
    for m in 1..=n {
        let sm = spec.medium.sigma.eval(spec.order.breakpoints[m]);
        let dv_prev = pairs[m - 1].dv_right; // v_{m-1}'(x_m) < 0
        let denom = sm * dv_prev;
        let c_star = (pairs[m].dv_left - pairs[m - 1].dw_right) / dv_prev;
        let d_star = pairs[m].dw_left / dv_prev;
        let set = FactorSet {
            c_star,
            d_star,
            c0_star: -stars[m].e_star / denom,
            cminus_star: -(stars[m - 1].g_star - c_star * stars[m - 1].f_star) / denom,
            d0_star: stars[m].f_star / denom,
            dminus_star: d_star * stars[m - 1].f_star / denom,
        };
        if !(set.d_star < 0.0) {
            return Err(Error::Solver(format!("interface {m}: d* = {} not negative", set.d_star)));
        }
        // Equality holds for locally uniform media, so allow rounding slack.
        let slack = 1e-9 * (1.0 - set.d_star);
        if !(set.c_star >= 1.0 - set.d_star - slack) {
            return Err(Error::Solver(format!(
                "interface {m}: c* = {} below 1 - d* = {}",
                set.c_star,
                1.0 - set.d_star
            )));
        }
        out.push(set);
    }
    Ok(out)
}

/// The double sequence X_l^m generated by the starred factors, with the
/// conventions X_l^{l} = c_l*, X_l^{l-1} = 1, X_l^{l-i} = 0 for i >= 2.
#[derive(Debug, Clone, Serialize)]
pub struct XTable {
    pub n: usize,
    /// rows[l-1][m] = X_l^m for l = 1..n+2, m = 0..n.
    pub rows: Vec<Vec<f64>>,
}

impl XTable {
    /// X_l^m including the conventions for m < 0.
    pub fn get(&self, l: usize, m: isize) -> f64 {
        if m < 0 {
            return if l as isize == m + 1 { 1.0 } else { 0.0 };
        }
        self.rows[l - 1][m as usize]
    }

    /// X_1^n, the denominator of all profile coefficients.
    pub fn x1n(&self) -> f64 {
        self.get(1, self.n as isize)
    }
}

/// Fills the table and validates positivity plus the descent and determinant
/// identities (these are theorems; violation signals numerical corruption).
pub fn x_table(factors: &[FactorSet], n: usize) -> Result<XTable> {
    assert_eq!(factors.len(), n);
    let mut rows = vec![vec![0.0; n + 1]; n + 2];
    for l in 1..=n + 2 {
        for m in 0..=n as isize {
            let val = if m < l as isize - 1 {
                0.0
            } else if m == l as isize - 1 {
                1.0
            } else {
                // recursion; conventions cover m-2 < 0
                let xm1 = if m - 1 < 0 {
                    if l as isize == m { 1.0 } else { 0.0 }
                } else {
                    rows[l - 1][(m - 1) as usize]
                };
                let xm2 = if m - 2 < 0 {
                    if l as isize == m - 1 { 1.0 } else { 0.0 }
                } else {
                    rows[l - 1][(m - 2) as usize]
                };
                factors[(m - 1) as usize].c_star * xm1
                    + if m >= 2 {
                        factors[(m - 2) as usize].d_star * xm2
                    } else {
                        0.0
                    }
            };
            rows[l - 1][m as usize] = val;
        }
    }
    let table = XTable { n, rows };
    // Positivity of the last column.
    for m in 1..=n {
        if !(table.get(m, n as isize) > 0.0) {
            return Err(Error::Solver(format!(
                "admissibility breach: X_{m}^{n} = {} not positive",
                table.get(m, n as isize)
            )));
        }
    }
    // Descent identity.
    for m in 1..=n {
        let lhs = factors[m - 1].c_star * table.get(m + 1, n as isize)
            + factors[m - 1].d_star * table.get(m + 2, n as isize);
        let rhs = table.get(m, n as isize);
        if (lhs - rhs).abs() > 1e-8 * rhs.abs().max(1.0) {
            return Err(Error::Solver(format!(
                "descent identity failed at m = {m}: {lhs} vs {rhs}"
            )));
        }
    }
    // Determinant identity.
    for m in 1..=n {
        let lhs = table.get(2, m as isize) * table.get(1, n as isize)
            - table.get(1, m as isize) * table.get(2, n as isize);
        let prod: f64 = factors[..m].iter().map(|f| f.d_star).product();
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        let rhs = sign * table.get(m + 2, n as isize) * prod;
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        if (lhs - rhs).abs() > 1e-8 * scale.max(1.0) {
            return Err(Error::Solver(format!(
                "determinant identity failed at m = {m}: {lhs} vs {rhs}"
            )));
        }
    }
    Ok(table)
}

/// The canonical global profiles assembled piecewise from the fundamental
/// pairs and the X table, with the M factors and gluing diagnostics.
#[derive(Debug, Clone)]
pub struct CanonicalProfiles {
    /// Per-interval coefficient pairs (a, b) so that profile = a v_i + b w_i.
    pub u_coeffs: Vec<(f64, f64)>,
    pub ubar_coeffs: Vec<(f64, f64)>,
    pub utilde_coeffs: Vec<(f64, f64)>,
    /// M_0..M_n (M_{-1} = 1 implicit).
    pub m_factors: Vec<f64>,
    pub max_u_value_jump: f64,
    pub max_u_deriv_jump: f64,
    pub max_ubar_value_jump: f64,
    pub max_ubar_deriv_jump: f64,
}

impl CanonicalProfiles {
    /// Nodal values of a profile on interval i from its fundamental pair.
    pub fn values_on(&self, coeffs: &[(f64, f64)], i: usize, pair: &FundamentalPair) -> Vec<f64> {
        let (a, b) = coeffs[i];
        pair.v
            .iter()
            .zip(&pair.w)
            .map(|(v, w)| a * v + b * w)
            .collect()
    }
}

pub fn canonical_profiles(
    spec: &ProblemSpec,
    pairs: &[FundamentalPair],
    table: &XTable,
) -> Result<CanonicalProfiles> {
    let n = spec.order.n_interfaces();
    let x1n = table.x1n();
    let sigma = &spec.medium.sigma;
    let length = spec.order.domain_length();
    let s_l = sigma.eval(length);
    let dv_nl = pairs[n].dv_right; // v_n'(L)
    let mut m_factors = Vec::with_capacity(n + 1);
    let mut running = 1.0;
    for j in 0..=n {
        running *= pairs[j].dw_left / (-pairs[j].dv_right);
        let mj = sigma.eval(0.0) / sigma.eval(spec.order.breakpoints[j + 1]) * running;
        m_factors.push(mj);
    }
    let mut u_coeffs = Vec::with_capacity(n + 1);
    let mut ubar_coeffs = Vec::with_capacity(n + 1);
    let mut utilde_coeffs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let a_u = table.get(i + 1, n as isize) / x1n;
        let b_u = table.get(i + 2, n as isize) / x1n;
        u_coeffs.push((a_u, b_u));
        let a_bar = if i == 0 {
            0.0
        } else {
            table.get(1, i as isize - 1) / x1n * dv_nl / pairs[i - 1].dv_right * s_l
                / sigma.eval(spec.order.breakpoints[i])
        };
        let b_bar = table.get(1, i as isize) / x1n * dv_nl / pairs[i].dv_right * s_l
            / sigma.eval(spec.order.breakpoints[i + 1]);
        ubar_coeffs.push((a_bar, b_bar));
        let m_prev = if i == 0 { 1.0 } else { m_factors[i - 1] };
        utilde_coeffs.push((a_u * m_prev, b_u * m_factors[i]));
    }
    // Gluing diagnostics at interior breakpoints.
    let mut jumps = [0.0f64; 4];
    for i in 1..=n {
        let (al, bl) = u_coeffs[i - 1];
        let (ar, br) = u_coeffs[i];
        // left interval evaluated at its right end: v = 0, w = 1
        let val_jump = (ar - (al * 0.0 + bl * 1.0)).abs();
        let d_left_lim = al * pairs[i - 1].dv_right + bl * pairs[i - 1].dw_right;
        let d_right_lim = ar * pairs[i].dv_left + br * pairs[i].dw_left;
        jumps[0] = jumps[0].max(val_jump);
        jumps[1] = jumps[1].max((d_left_lim - d_right_lim).abs());
        let (cl, dl) = ubar_coeffs[i - 1];
        let (cr, dr) = ubar_coeffs[i];
        jumps[2] = jumps[2].max((cr - dl).abs());
        let bd_left = cl * pairs[i - 1].dv_right + dl * pairs[i - 1].dw_right;
        let bd_right = cr * pairs[i].dv_left + dr * pairs[i].dw_left;
        jumps[3] = jumps[3].max((bd_left - bd_right).abs());
    }
    let profiles = CanonicalProfiles {
        u_coeffs,
        ubar_coeffs,
        utilde_coeffs,
        m_factors,
        max_u_value_jump: jumps[0],
        max_u_deriv_jump: jumps[1],
        max_ubar_value_jump: jumps[2],
        max_ubar_deriv_jump: jumps[3],
    };
    // Boundary data and interior positivity of u.
    let u0 = profiles.u_coeffs[0].0;
    if (u0 - 1.0).abs() > 1e-12 {
        return Err(Error::Solver(format!("u(0) = {u0} != 1")));
    }
    for i in 0..=n {
        let vals = profiles.values_on(&profiles.u_coeffs, i, &pairs[i]);
        for (k, v) in vals.iter().enumerate() {
            let at_right_boundary = i == n && k == vals.len() - 1;
            if !at_right_boundary && *v <= 0.0 {
                return Err(Error::Solver(format!(
                    "u not strictly positive inside (0, L): u = {v} on interval {i}"
                )));
            }
        }
    }
    Ok(profiles)
}

/// Everything p-independent derived from one problem specification.
pub struct Analysis {
    pub pairs: Vec<FundamentalPair>,
    pub stars: Vec<StarredConstants>,
    pub factors: Vec<FactorSet>,
    pub xtable: XTable,
    pub profiles: CanonicalProfiles,
}

pub fn analyze(spec: &ProblemSpec) -> Result<Analysis> {
    analyze_with_grid(spec, spec.discretization.resolved_grid())
}

pub fn analyze_with_grid(spec: &ProblemSpec, grid_n: usize) -> Result<Analysis> {
    let n = spec.order.n_interfaces();
    let mut pairs = Vec::with_capacity(n + 1);
    let mut stars = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let iv = (spec.order.breakpoints[j], spec.order.breakpoints[j + 1]);
        let pair = fundamental_solutions(&spec.medium, iv, grid_n)?;
        stars.push(starred_constants(&pair, &spec.medium));
        pairs.push(pair);
    }
    let factors = interface_factors(spec, &pairs, &stars)?;
    let xtable = x_table(&factors, n)?;
    let profiles = canonical_profiles(spec, &pairs, &xtable)?;
    Ok(Analysis {
        pairs,
        stars,
        factors,
        xtable,
        profiles,
    })
}

/// Which boundary flux the expansion describes. The excitation is applied at
/// the left endpoint; `Left` is the excited side, `Right` the opposite one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxSide {
    LeftFlux,
    RightFlux,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionTerm {
    pub alpha: f64,
    pub coeff: f64,
}

/// First-order small-p expansion flux(p)/ghat(p) = C0 + sum coeff p^alpha
/// + O(p^residual_order).
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticExpansion {
    pub side: FluxSide,
    pub c0: f64,
    pub terms: Vec<ExpansionTerm>,
    pub residual_order: f64,
}

impl AsymptoticExpansion {
    pub fn eval(&self, p: f64) -> f64 {
        self.c0
            + self
                .terms
                .iter()
                .map(|t| t.coeff * p.powf(t.alpha))
                .sum::<f64>()
    }
}

pub fn expansion_coefficients(spec: &ProblemSpec, side: FluxSide) -> Result<AsymptoticExpansion> {
    let analysis = analyze(spec)?;
    expansion_from_analysis(spec, &analysis, side)
}

pub fn expansion_from_analysis(
    spec: &ProblemSpec,
    analysis: &Analysis,
    side: FluxSide,
) -> Result<AsymptoticExpansion> {
    if spec.excitation.side != Side::Left {
        return Err(Error::InvalidArgument(
            "asymptotic expansions assume the excitation on the left endpoint; \
             mirror the problem description for right-side excitation"
                .into(),
        ));
    }
    let n = spec.order.n_interfaces();
    let table = &analysis.xtable;
    let profiles = &analysis.profiles;
    let pairs = &analysis.pairs;
    let sigma0 = spec.medium.sigma.eval(0.0);
    let length = spec.order.domain_length();
    let sigma_l = spec.medium.sigma.eval(length);
    let mut terms = Vec::with_capacity(n + 1);
    let c0 = match side {
        FluxSide::LeftFlux => {
            pairs[0].dv_left + table.get(2, n as isize) / table.x1n() * pairs[0].dw_left
        }
        FluxSide::RightFlux => pairs[n].dv_right / table.x1n(),
    };
    for i in 0..=n {
        let pair = &pairs[i];
        let rho: Vec<f64> = pair.x.iter().map(|&x| spec.medium.rho.eval(x)).collect();
        let u_vals = profiles.values_on(&profiles.u_coeffs, i, pair);
        let coeff = match side {
            FluxSide::LeftFlux => {
                let ut_vals = profiles.values_on(&profiles.utilde_coeffs, i, pair);
                let integrand: Vec<f64> = u_vals
                    .iter()
                    .zip(&ut_vals)
                    .zip(&rho)
                    .map(|((u, ut), r)| u * ut * r)
                    .collect();
                -simpson(&integrand, pair.h) / sigma0
            }
            FluxSide::RightFlux => {
                let ub_vals = profiles.values_on(&profiles.ubar_coeffs, i, pair);
                let integrand: Vec<f64> = u_vals
                    .iter()
                    .zip(&ub_vals)
                    .zip(&rho)
                    .map(|((u, ub), r)| u * ub * r)
                    .collect();
                simpson(&integrand, pair.h) / sigma_l
            }
        };
        terms.push(ExpansionTerm {
            alpha: spec.order.values[i],
            coeff,
        });
    }
    Ok(AsymptoticExpansion {
        side,
        c0,
        terms,
        residual_order: 2.0 * spec.order.min_alpha(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub slope: f64,
    pub residuals: Vec<(f64, f64)>,
    pub threshold: f64,
    pub pass: bool,
}

/// Computes the expansion residual R(p) = flux(p)/ghat(p) - expansion(p) on a
/// p grid and fits the log-log slope over the middle 60% of the range.
pub fn verify_expansion(
    spec: &ProblemSpec,
    side: FluxSide,
    p_grid: &[f64],
    expansion: &AsymptoticExpansion,
) -> Result<VerifyReport> {
    if p_grid.len() < 8 {
        return Err(Error::InvalidArgument(
            "need at least 8 p samples for a slope fit".into(),
        ));
    }
    let mut residuals = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let sol = crate::laplace_domain::solve_bvp(spec, p)?;
        let flux = match side {
            FluxSide::LeftFlux => sol.flux_left,
            FluxSide::RightFlux => sol.flux_right,
        };
        let g = ghat(&spec.excitation, p)?;
        residuals.push((p, flux / g - expansion.eval(p)));
    }
    let lp: Vec<f64> = residuals.iter().map(|(p, _)| p.ln()).collect();
    let lr: Vec<f64> = residuals
        .iter()
        .map(|(_, r)| r.abs().max(1e-300).ln())
        .collect();
    let lo = lp.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (wl, wh) = (lo + 0.2 * (hi - lo), lo + 0.8 * (hi - lo));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (x, y) in lp.iter().zip(&lr) {
        if *x >= wl && *x <= wh {
            xs.push(*x);
            ys.push(*y);
        }
    }
    let slope = slope_fit(&xs, &ys);
    let threshold = expansion.residual_order - 0.05;
    Ok(VerifyReport {
        slope,
        residuals,
        threshold,
        pass: slope >= threshold,
    })
}

/// Time-domain asymptote from the Laplace expansion for data ghat = p^{s-1}:
/// C0 t^{-s}/Gamma(1-s) + sum C_{i+1} t^{-s-alpha_i}/Gamma(1-s-alpha_i).
pub fn tauberian_time_asymptote(
    expansion: &AsymptoticExpansion,
    s: f64,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    for t in &expansion.terms {
        let arg = 1.0 - s - t.alpha;
        if arg <= 0.0 && (arg - arg.round()).abs() < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "gamma pole at 1 - s - alpha = {arg}"
            )));
        }
    }
    if 1.0 - s <= 0.0 && ((1.0 - s) - (1.0 - s).round()).abs() < 1e-12 {
        return Err(Error::InvalidArgument("gamma pole at 1 - s".into()));
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let mut v = expansion.c0 * t.powf(-s) / gamma(1.0 - s);
            for term in &expansion.terms {
                v += term.coeff * t.powf(-s - term.alpha) / gamma(1.0 - s - term.alpha);
            }
            (t, v)
        })
        .collect())
}

/// Time asymptote for a polynomial excitation: each monomial g_k t^k maps to
/// s = -k with weight g_k k!.
pub fn time_asymptote_for_excitation(
    expansion: &AsymptoticExpansion,
    excitation: &crate::model::BoundaryExcitation,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let mut out: Vec<(f64, f64)> = t_grid.iter().map(|&t| (t, 0.0)).collect();
    for (i, &gk) in excitation.coeffs.iter().enumerate() {
        if gk == 0.0 {
            continue;
        }
        let k = (i + 2) as f64;
        let fact: f64 = (1..=(i + 2)).map(|v| v as f64).product();
        let partial = tauberian_time_asymptote(expansion, -k, t_grid)?;
        for (slot, (_, v)) in out.iter_mut().zip(partial) {
            slot.1 += gk * fact * v;
        }
    }
    Ok(out)
}

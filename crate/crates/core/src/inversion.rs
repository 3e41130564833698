//! Recovery of the variable order from small-p boundary flux data: exponent
//! fitting by separable least squares, then breakpoint placement through the
//! weighted mass of the steady profile.

use crate::error::{Error, Result};
use crate::model::{BoundaryExcitation, MediumCoefficients, Side};
use crate::numerics::optimize::{least_squares_rss, nelder_mead, slope_fit};
use crate::time_domain::{FluxSeries, SeriesDomain};
use serde::{Deserialize, Serialize};

/// Requested monotonicity of the recovered order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    /// Window of p values used for the fit; data outside is dropped.
    pub p_window: Option<(f64, f64)>,
    /// Exponents closer than this are merged into one term.
    pub merge_tol: f64,
    /// Maximum number of fractional-power terms to consider.
    pub max_terms: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            p_window: None,
            merge_tol: 0.02,
            max_terms: 3,
            seed: 0,
        }
    }
}

/// Result of fitting flux/ghat ~ C0 + sum C_i p^{a_i} (+ remainder term).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub c0_hat: f64,
    /// (alpha_hat, coefficient) sorted by exponent.
    pub terms: Vec<(f64, f64)>,
    pub residual_norm: f64,
    pub p_window: (f64, f64),
    /// True when the data was normalized by an estimated p^{-(N+1)} rather
    /// than a known excitation; coefficients then carry an unknown scale.
    pub scale_unknown: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveredOrder {
    pub breakpoints_hat: Vec<f64>,
    pub values_hat: Vec<f64>,
    pub range_hat: Vec<f64>,
    pub l_hat: f64,
    pub residual_norm: f64,
}

fn ghat_real(excitation: &BoundaryExcitation, p: f64) -> f64 {
    crate::model::ghat(excitation, p).unwrap_or(f64::NAN)
}

/// Residual sum of squares for a fixed exponent vector, with linear
/// coefficients eliminated. Columns: 1, p^{a_j}, and one tied remainder
/// column p^{2 min a}. Columns are scaled to unit norm for conditioning.
fn varpro_rss(ps: &[f64], ys: &[f64], alphas: &[f64]) -> (f64, Vec<f64>) {
    let amin = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let ncols = alphas.len() + 2;
    let mut design: Vec<Vec<f64>> = Vec::with_capacity(ps.len());
    for &p in ps {
        let mut row = Vec::with_capacity(ncols);
        row.push(1.0);
        for &a in alphas {
            row.push(p.powf(a));
        }
        row.push(p.powf(2.0 * amin));
        design.push(row);
    }
    let (coeffs, rss) = least_squares_rss(&design, ys);
    (rss, coeffs)
}

fn clamp_sort(alphas: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = alphas.iter().map(|&a| a.clamp(0.02, 0.98)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn fit_m_terms(ps: &[f64], ys: &[f64], m: usize, seed_slope: f64) -> (Vec<f64>, f64, Vec<f64>) {
    let obj = |x: &[f64]| {
        let alphas = clamp_sort(x);
        let (rss, _) = varpro_rss(ps, ys, &alphas);
        rss.max(1e-300).ln()
    };
    let base = seed_slope.clamp(0.05, 0.95);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for &scale in &[0.8, 1.0, 1.2] {
        let a0 = (base * scale).clamp(0.05, 0.95);
        let mut s = vec![a0];
        for j in 1..m {
            s.push((a0 + 0.12 * j as f64).clamp(0.05, 0.95));
        }
        starts.push(s);
    }
    if m >= 2 {
        for &gap in &[0.25, 0.4] {
            let mut s = vec![(base - gap / 2.0).clamp(0.05, 0.95)];
            for j in 1..m {
                s.push((s[0] + gap * j as f64).clamp(0.05, 0.95));
            }
            starts.push(s);
        }
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let (x, f) = nelder_mead(&obj, &s, 0.06, 400, 1e-14);
        // Restart from the found point to escape simplex collapse.
        let (x, f) = {
            let (x2, f2) = nelder_mead(&obj, &x, 0.02, 400, 1e-14);
            if f2 < f { (x2, f2) } else { (x, f) }
        };
        if best.as_ref().map_or(true, |(_, bf)| f < *bf) {
            best = Some((x, f));
        }
    }
    let (x, _) = best.unwrap();
    let alphas = clamp_sort(&x);
    let (rss, coeffs) = varpro_rss(ps, ys, &alphas);
    (alphas, rss, coeffs)
}

/// Fits the small-p expansion of the boundary flux. With a known excitation
/// the data is normalized by ghat; otherwise the polynomial degree is
/// estimated from the local log-log slope and the fitted coefficients carry
/// an unknown common scale (exponents are unaffected).
pub fn fit_exponents(
    series: &FluxSeries,
    excitation: Option<&BoundaryExcitation>,
    opts: &FitOptions,
) -> Result<ExponentFit> {
    if series.domain != SeriesDomain::Laplace {
        return Err(Error::InvalidArgument(
            "exponent fitting expects Laplace-domain data; transform time data first".into(),
        ));
    }
    series.validate()?;
    if opts.max_terms == 0 {
        return Err(Error::InvalidArgument("max_terms must be at least 1".into()));
    }
    let (wlo, whi) = opts
        .p_window
        .unwrap_or((series.samples[0].0, series.samples.last().unwrap().0.min(1e-3)));
    if !(wlo > 0.0 && whi > wlo) {
        return Err(Error::InvalidArgument(format!("bad p window ({wlo}, {whi})")));
    }
    let pts: Vec<(f64, f64)> = series
        .samples
        .iter()
        .cloned()
        .filter(|(p, _)| *p >= wlo && *p <= whi)
        .collect();
    if pts.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "only {} samples inside the p window; need at least 8",
            pts.len()
        )));
    }
    let ps: Vec<f64> = pts.iter().map(|(p, _)| *p).collect();
    let mut scale_unknown = false;
    let ys: Vec<f64> = match excitation {
        Some(exc) => pts.iter().map(|(p, f)| f / ghat_real(exc, *p)).collect(),
        None => {
            // Leading behavior flux ~ C0 ghat ~ const p^{-(N+1)}.
            let lx: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
            let ly: Vec<f64> = pts.iter().map(|(_, f)| f.abs().max(1e-300).ln()).collect();
            let slope = slope_fit(&lx, &ly);
            let n_hat = (-slope - 1.0).round().max(2.0);
            scale_unknown = true;
            pts.iter().map(|(p, f)| f * p.powf(n_hat + 1.0)).collect()
        }
    };
    // Peeling seed: constant from the smallest p, slope of the remainder
    // excluding the first point where the subtraction degenerates.
    let c0_seed = ys[0];
    let lx: Vec<f64> = ps[1..].iter().map(|p| p.ln()).collect();
    let ly: Vec<f64> = ys[1..]
        .iter()
        .map(|y| (y - c0_seed).abs().max(1e-300).ln())
        .collect();
    let seed_slope = slope_fit(&lx, &ly);

    // Model selection: an extra term must buy a decisive residual drop,
    // otherwise it only chases the expansion remainder.
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    for m in 1..=opts.max_terms {
        let (alphas, rss, coeffs) = fit_m_terms(&ps, &ys, m, seed_slope);
        let accept = match &best {
            None => true,
            Some((_, best_rss, _)) => rss < 1e-4 * best_rss.max(1e-300),
        };
        if accept {
            best = Some((alphas, rss, coeffs));
        }
    }
    let (mut alphas, mut rss, mut coeffs) = best.unwrap();

    // Merge exponents closer than merge_tol and refit the linear part.
    loop {
        let mut merged = false;
        for i in 0..alphas.len().saturating_sub(1) {
            if alphas[i + 1] - alphas[i] < opts.merge_tol {
                let a = 0.5 * (alphas[i] + alphas[i + 1]);
                alphas.remove(i + 1);
                alphas[i] = a;
                merged = true;
                break;
            }
        }
        if !merged {
            break;
        }
        let (r, c) = varpro_rss(&ps, &ys, &alphas);
        rss = r;
        coeffs = c;
    }

    let terms: Vec<(f64, f64)> = alphas
        .iter()
        .enumerate()
        .map(|(j, &a)| (a, coeffs[j + 1]))
        .collect();
    Ok(ExponentFit {
        c0_hat: coeffs[0],
        terms,
        residual_norm: rss.sqrt(),
        p_window: (wlo, whi),
        scale_unknown,
    })
}

/// Sorted recovered exponents; valid even when the coefficient scale is
/// unknown.
pub fn recover_range(fit: &ExponentFit) -> Vec<f64> {
    fit.terms.iter().map(|(a, _)| *a).collect()
}

/// Steady profile u on the excited side: -(sigma u')' + q u = 0, u(0) = 1,
/// sigma(0) u'(0) = sigma(0) C0. Integrated as a first-order system in
/// (u, F = sigma u') by classical RK4 on a fine grid up to `x_max`.
fn steady_profile_ivp(
    medium: &MediumCoefficients,
    c0: f64,
    x_max: f64,
    n_steps: usize,
) -> (Vec<f64>, Vec<f64>) {
    let h = x_max / n_steps as f64;
    let mut xs = Vec::with_capacity(n_steps + 1);
    let mut us = Vec::with_capacity(n_steps + 1);
    let mut u = 1.0;
    let mut f = medium.sigma.eval(0.0) * c0;
    xs.push(0.0);
    us.push(u);
    let rhs = |x: f64, u: f64, f: f64| (f / medium.sigma.eval(x), medium.q.eval(x) * u);
    for i in 0..n_steps {
        let x = i as f64 * h;
        let (k1u, k1f) = rhs(x, u, f);
        let (k2u, k2f) = rhs(x + 0.5 * h, u + 0.5 * h * k1u, f + 0.5 * h * k1f);
        let (k3u, k3f) = rhs(x + 0.5 * h, u + 0.5 * h * k2u, f + 0.5 * h * k2f);
        let (k4u, k4f) = rhs(x + h, u + h * k3u, f + h * k3f);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        xs.push(x + h);
        us.push(u);
    }
    (xs, us)
}

fn first_zero(xs: &[f64], us: &[f64]) -> Option<f64> {
    for i in 0..us.len() - 1 {
        if us[i] > 0.0 && us[i + 1] <= 0.0 {
            let frac = us[i] / (us[i] - us[i + 1]);
            return Some(xs[i] + frac * (xs[i + 1] - xs[i]));
        }
    }
    None
}

/// Places the interfaces of the recovered order from the fitted coefficients
/// and the known medium. Works from excited-side (left) data.
pub fn recover_breakpoints(
    fit: &ExponentFit,
    medium: &MediumCoefficients,
    side: Side,
    monotone: Monotonicity,
) -> Result<RecoveredOrder> {
    if side != Side::Left {
        return Err(Error::InvalidArgument(
            "breakpoint recovery needs data from the excited (left) boundary".into(),
        ));
    }
    if fit.scale_unknown {
        return Err(Error::InvalidArgument(
            "breakpoint recovery needs coefficients on an absolute scale; \
             supply the excitation when fitting"
                .into(),
        ));
    }
    if monotone == Monotonicity::None && fit.terms.len() > 1 {
        return Err(Error::InvalidArgument(
            "coefficient ordering determines interfaces only for monotone \
             orders; pass the monotonicity"
                .into(),
        ));
    }
    let sigma0 = medium.sigma.eval(0.0);
    // Masses -sigma(0) C_{i+1} must be positive for excited-side data.
    let mut masses: Vec<f64> = Vec::new();
    for &(a, c) in &fit.terms {
        let m = -sigma0 * c;
        if m <= 0.0 {
            return Err(Error::NonConvergence(format!(
                "coefficient for exponent {a:.4} has the wrong sign; cannot place interfaces"
            )));
        }
        masses.push(m);
    }
    // Integrate far enough to find the zero of u; the declared mesh extent
    // bounds the physically meaningful range.
    let x_decl = medium
        .sigma
        .mesh_extent()
        .max(medium.rho.mesh_extent())
        .max(medium.q.mesh_extent())
        .max(1.0);
    let n_steps = 400_000;
    let (xs, us) = steady_profile_ivp(medium, fit.c0_hat, 2.0 * x_decl, n_steps);
    let l_hat = first_zero(&xs, &us).ok_or_else(|| {
        Error::NonConvergence("steady profile has no zero; C0 estimate is inconsistent".into())
    })?;
    // Cumulative rho-weighted mass of u^2 up to each node.
    let mut cum = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        let h = xs[i] - xs[i - 1];
        let f0 = medium.rho.eval(xs[i - 1]) * us[i - 1] * us[i - 1];
        let f1 = medium.rho.eval(xs[i]) * us[i] * us[i];
        cum[i] = cum[i - 1] + 0.5 * h * (f0 + f1);
    }
    let total_at = |x: f64| {
        let idx = xs.partition_point(|&v| v <= x).min(xs.len() - 1).max(1);
        let frac = (x - xs[idx - 1]) / (xs[idx] - xs[idx - 1]);
        cum[idx - 1] + frac * (cum[idx] - cum[idx - 1])
    };
    let total_l = total_at(l_hat);
    // Interface order along x matches the exponent order under the declared
    // monotonicity: increasing orders appear left to right as fitted,
    // decreasing orders in reverse.
    let ordered: Vec<f64> = match monotone {
        Monotonicity::Decreasing => masses.iter().rev().cloned().collect(),
        _ => masses.clone(),
    };
    let mut bps = vec![0.0];
    let mut acc = 0.0;
    for (k, &m) in ordered.iter().enumerate() {
        acc += m;
        if k == ordered.len() - 1 {
            break;
        }
        if acc >= total_l {
            return Err(Error::NonConvergence(format!(
                "cumulative mass {acc:.6} exceeds the profile mass {total_l:.6} \
                 before the last interface"
            )));
        }
        // Invert the monotone cumulative mass by bisection.
        let (mut lo, mut hi) = (0.0, l_hat);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total_at(mid) < acc {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        bps.push(0.5 * (lo + hi));
    }
    bps.push(l_hat);
    let range: Vec<f64> = fit.terms.iter().map(|(a, _)| *a).collect();
    let values: Vec<f64> = match monotone {
        Monotonicity::Decreasing => range.iter().rev().cloned().collect(),
        _ => range.clone(),
    };
    Ok(RecoveredOrder {
        breakpoints_hat: bps,
        values_hat: values,
        range_hat: range,
        l_hat,
        residual_norm: fit.residual_norm,
    })
}

/// Recovers a constant density and the domain length when sigma and q are
/// known but rho is an unknown constant. Uses excited-side data: the IVP for
/// u does not involve rho, and the coefficient sum identity gives
/// rho = -sigma(0) sum C_{i+1} / integral of u^2.
pub fn recover_constant_rho(
    fit: &ExponentFit,
    sigma: &crate::model::CoefficientFn,
    q: &crate::model::CoefficientFn,
    side: Side,
) -> Result<(f64, f64)> {
    if side != Side::Left {
        return Err(Error::InvalidArgument(
            "density recovery needs data from the excited (left) boundary".into(),
        ));
    }
    if fit.scale_unknown {
        return Err(Error::InvalidArgument(
            "density recovery needs coefficients on an absolute scale".into(),
        ));
    }
    let medium = MediumCoefficients {
        rho: crate::model::CoefficientFn::constant(1.0),
        sigma: sigma.clone(),
        q: q.clone(),
    };
    let x_decl = sigma.mesh_extent().max(q.mesh_extent()).max(1.0);
    let (xs, us) = steady_profile_ivp(&medium, fit.c0_hat, 2.0 * x_decl, 400_000);
    let l_hat = first_zero(&xs, &us).ok_or_else(|| {
        Error::NonConvergence("steady profile has no zero; C0 estimate is inconsistent".into())
    })?;
    let mut integral = 0.0;
    for i in 1..xs.len() {
        if xs[i] > l_hat {
            let frac = (l_hat - xs[i - 1]) / (xs[i] - xs[i - 1]);
            let um = us[i - 1] + frac * (us[i] - us[i - 1]);
            integral += 0.5 * (l_hat - xs[i - 1]) * (us[i - 1] * us[i - 1] + um * um);
            break;
        }
        let h = xs[i] - xs[i - 1];
        integral += 0.5 * h * (us[i - 1] * us[i - 1] + us[i] * us[i]);
    }
    let csum: f64 = fit.terms.iter().map(|(_, c)| c).sum();
    let sigma0 = sigma.eval(0.0);
    let rho_hat = -sigma0 * csum / integral;
    if !(rho_hat > 0.0) {
        return Err(Error::NonConvergence(format!(
            "recovered density {rho_hat} is not positive"
        )));
    }
    Ok((l_hat, rho_hat))
}

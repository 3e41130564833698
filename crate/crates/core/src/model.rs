//! Problem description: piecewise-constant order, medium coefficients,
//! boundary excitation, and validation / file handling.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Piecewise-constant fractional order alpha(x) on a breakpoint partition
/// 0 = x_0 < x_1 < ... < x_{n+1} = L, with value `values[i]` active on
/// (x_i, x_{i+1}).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PiecewiseOrder {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseOrder {
    /// Number of interior breakpoints n (pieces = n + 1).
    pub fn n_interfaces(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn domain_length(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }

    /// Order value at a point (pieces are half-open on the right; the last
    /// piece includes L).
    pub fn value_at(&self, x: f64) -> f64 {
        for i in 0..self.values.len() {
            if x < self.breakpoints[i + 1] {
                return self.values[i];
            }
        }
        *self.values.last().expect("nonempty order")
    }

    pub fn min_alpha(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_alpha(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A scalar coefficient function on [0, L]: either a constant or a piecewise
/// polynomial on a declared mesh. On mesh cell i the polynomial is given in
/// ascending powers of the local variable (x - mesh[i]).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CoefficientFn {
    Const {
        #[serde(rename = "const")]
        value: f64,
    },
    PiecewisePoly {
        mesh: Vec<f64>,
        poly_coeffs: Vec<Vec<f64>>,
    },
}

impl CoefficientFn {
    pub fn constant(v: f64) -> Self {
        CoefficientFn::Const { value: v }
    }

    fn cell_index(mesh: &[f64], x: f64) -> usize {
        // Clamp outside-the-mesh evaluation to the end cells.
        if x <= mesh[0] {
            return 0;
        }
        for i in 0..mesh.len() - 1 {
            if x < mesh[i + 1] {
                return i;
            }
        }
        mesh.len() - 2
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CoefficientFn::Const { value } => *value,
            CoefficientFn::PiecewisePoly { mesh, poly_coeffs } => {
                let i = Self::cell_index(mesh, x);
                let t = x - mesh[i];
                let mut acc = 0.0;
                for &c in poly_coeffs[i].iter().rev() {
                    acc = acc * t + c;
                }
                acc
            }
        }
    }

    /// Upper end of the declared mesh, or 0 for a constant coefficient.
    pub fn mesh_extent(&self) -> f64 {
        match self {
            CoefficientFn::Const { .. } => 0.0,
            CoefficientFn::PiecewisePoly { mesh, .. } => *mesh.last().unwrap_or(&0.0),
        }
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        match self {
            CoefficientFn::Const { .. } => 0.0,
            CoefficientFn::PiecewisePoly { mesh, poly_coeffs } => {
                let i = Self::cell_index(mesh, x);
                let t = x - mesh[i];
                let cs = &poly_coeffs[i];
                let mut acc = 0.0;
                for k in (1..cs.len()).rev() {
                    acc = acc * t + k as f64 * cs[k];
                }
                acc
            }
        }
    }
}

fn default_q() -> CoefficientFn {
    CoefficientFn::constant(0.0)
}

/// Medium coefficients rho (weight), sigma (diffusivity, C^1), q (potential).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MediumCoefficients {
    pub rho: CoefficientFn,
    pub sigma: CoefficientFn,
    #[serde(default = "default_q")]
    pub q: CoefficientFn,
}

impl MediumCoefficients {
    pub fn uniform() -> Self {
        MediumCoefficients {
            rho: CoefficientFn::constant(1.0),
            sigma: CoefficientFn::constant(1.0),
            q: CoefficientFn::constant(0.0),
        }
    }

    /// (min, max) of a coefficient over a dense sample of [0, L].
    pub fn sampled_bounds(f: &CoefficientFn, length: f64) -> (f64, f64) {
        let m = 4096;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=m {
            let v = f.eval(length * i as f64 / m as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Polynomial boundary excitation g(t) = sum_{k=2}^{N} g_k t^k applied on one
/// endpoint (the other is homogeneous). `coeffs[0]` is g_2.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundaryExcitation {
    pub coeffs: Vec<f64>,
    pub side: Side,
}

impl BoundaryExcitation {
    /// Highest time power N.
    pub fn degree(&self) -> usize {
        self.coeffs.len() + 1
    }

    /// g(t).
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &g in self.coeffs.iter().rev() {
            acc = (acc + g) * t;
        }
        acc * t
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Laplace transform of the excitation: sum_k g_k k! p^{-k-1}.
pub fn ghat(excitation: &BoundaryExcitation, p: f64) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ghat requires p > 0, got {p}"
        )));
    }
    let mut s = 0.0;
    for (i, &g) in excitation.coeffs.iter().enumerate() {
        let k = i + 2;
        s += g * factorial(k) * p.powi(-(k as i32) - 1);
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Discretization {
    pub grid_per_interval: usize,
    pub eigenpairs: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            grid_per_interval: 1024,
            eigenpairs: 64,
        }
    }
}

impl Discretization {
    /// Simpson quadrature needs an even cell count; odd requests are bumped.
    pub fn resolved_grid(&self) -> usize {
        self.grid_per_interval + self.grid_per_interval % 2
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemSpec {
    pub order: PiecewiseOrder,
    pub medium: MediumCoefficients,
    pub excitation: BoundaryExcitation,
    #[serde(default)]
    pub discretization: Discretization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: &str, message: String) {
        self.violations.push(Violation {
            location: location.to_string(),
            message,
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(
                self.violations
                    .into_iter()
                    .map(|v| format!("{}: {}", v.location, v.message))
                    .collect(),
            ))
        }
    }
}

/// Checks every admissibility condition; never aborts, reports all findings.
pub fn validate(spec: &ProblemSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let bp = &spec.order.breakpoints;
    let vals = &spec.order.values;

    if bp.len() < 2 {
        report.push("order.breakpoints", "need at least [0, L]".into());
        return report;
    }
    if bp.len() != vals.len() + 1 {
        report.push(
            "order",
            format!(
                "breakpoint count {} must be values count {} plus one",
                bp.len(),
                vals.len()
            ),
        );
    }
    if bp[0] != 0.0 {
        report.push("order.breakpoints", format!("first breakpoint must be 0, got {}", bp[0]));
    }
    if !bp.iter().all(|v| v.is_finite()) {
        report.push("order.breakpoints", "non-finite breakpoint".into());
    }
    for w in bp.windows(2) {
        if !(w[1] > w[0]) {
            report.push(
                "order.breakpoints",
                format!("breakpoints not strictly increasing at {} -> {}", w[0], w[1]),
            );
        }
    }
    let length = spec.order.domain_length();
    if !(length > 0.0) {
        report.push("order.breakpoints", "domain length must be positive".into());
    }
    if vals.is_empty() {
        report.push("order.values", "need at least one order value".into());
    } else {
        for (i, &a) in vals.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                report.push("order.values", format!("alpha[{i}] = {a} outside (0,1)"));
            }
        }
        let amin = spec.order.min_alpha();
        let amax = spec.order.max_alpha();
        if !(amax < 2.0 * amin) {
            report.push(
                "order.values",
                format!("max alpha {amax} >= 2 * min alpha {}", 2.0 * amin),
            );
        }
    }

    if length > 0.0 {
        let (rlo, _) = MediumCoefficients::sampled_bounds(&spec.medium.rho, length);
        if !(rlo > 0.0) {
            report.push("medium.rho", format!("rho must be positive; sampled min {rlo}"));
        }
        let (slo, _) = MediumCoefficients::sampled_bounds(&spec.medium.sigma, length);
        if !(slo > 0.0) {
            report.push("medium.sigma", format!("sigma must be positive; sampled min {slo}"));
        }
        let (qlo, _) = MediumCoefficients::sampled_bounds(&spec.medium.q, length);
        if qlo < 0.0 {
            report.push("medium.q", format!("q must be nonnegative; sampled min {qlo}"));
        }
        for f in [&spec.medium.rho, &spec.medium.sigma, &spec.medium.q] {
            if let CoefficientFn::PiecewisePoly { mesh, poly_coeffs } = f {
                if mesh.len() < 2 || poly_coeffs.len() + 1 != mesh.len() {
                    report.push("medium", "mesh / poly_coeffs length mismatch".into());
                } else if mesh[0] > 0.0 || *mesh.last().unwrap() < length {
                    report.push("medium", format!("coefficient mesh must cover [0, {length}]"));
                }
            }
        }
    }

    if spec.excitation.coeffs.is_empty() {
        report.push("excitation.coeffs", "need at least g_2 (degree N >= 2)".into());
    } else if *spec.excitation.coeffs.last().unwrap() == 0.0 {
        report.push("excitation.coeffs", "g_N = 0 (leading coefficient must be nonzero)".into());
    }
    if !spec.excitation.coeffs.iter().all(|v| v.is_finite()) {
        report.push("excitation.coeffs", "non-finite coefficient".into());
    }

    if spec.discretization.grid_per_interval < 16 {
        report.push(
            "discretization.grid_per_interval",
            format!("{} below solver floor 16", spec.discretization.grid_per_interval),
        );
    }
    if spec.discretization.eigenpairs < 1 {
        report.push("discretization.eigenpairs", "need at least one eigenpair".into());
    }
    if spec.discretization.eigenpairs > spec.discretization.resolved_grid() / 4 {
        report.push(
            "discretization.eigenpairs",
            format!(
                "K = {} exceeds grid_n/4 = {}; high modes unresolved",
                spec.discretization.eigenpairs,
                spec.discretization.resolved_grid() / 4
            ),
        );
    }
    report
}

pub fn load_problem(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let spec: ProblemSpec =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate(&spec).into_result()?;
    Ok(spec)
}

pub fn save_problem(spec: &ProblemSpec, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(spec).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

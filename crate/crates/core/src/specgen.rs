//! Seeded generation of random admissible problems for stress testing.

use crate::model::{
    validate, BoundaryExcitation, CoefficientFn, Discretization, MediumCoefficients,
    PiecewiseOrder, ProblemSpec, Side,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random positive quadratic on [0, length] declared as a single-cell
/// polynomial mesh. The linear and quadratic parts are kept small against
/// the constant term so positivity holds on the whole interval.
fn random_positive_quadratic(rng: &mut ChaCha8Rng, length: f64, lo: f64, hi: f64) -> CoefficientFn {
    let c0 = rng.gen_range(lo..hi);
    let c1 = rng.gen_range(-0.3..0.3) * c0 / length;
    let c2 = rng.gen_range(-0.2..0.2) * c0 / (length * length);
    CoefficientFn::PiecewisePoly {
        mesh: vec![0.0, length],
        poly_coeffs: vec![vec![c0, c1, c2]],
    }
}

/// Draws an admissible problem with at most `max_pieces` constant pieces of
/// the order. The order range stays well inside the admissibility condition
/// max alpha < 2 min alpha.
pub fn random_admissible_spec(rng: &mut ChaCha8Rng, max_pieces: usize) -> ProblemSpec {
    let pieces = rng.gen_range(1..=max_pieces.max(1));
    let length = rng.gen_range(0.8..1.4);

    // Center and halfwidth chosen so the full range obeys the gap condition
    // with margin: (c + w) < 2 (c - w) whenever w < c / 3.
    let center = rng.gen_range(0.45..0.68);
    let halfwidth = rng.gen_range(0.05..(center / 3.0 - 0.01));
    let mut values: Vec<f64> = (0..pieces)
        .map(|_| center + rng.gen_range(-1.0..1.0) * halfwidth)
        .collect();
    // Force distinct adjacent values so every interface is genuine.
    for i in 1..values.len() {
        if (values[i] - values[i - 1]).abs() < 0.02 {
            values[i] = values[i - 1] + 0.03_f64.copysign(values[i] - values[i - 1] + 1e-9);
            values[i] = values[i].clamp(center - halfwidth, center + halfwidth);
            if (values[i] - values[i - 1]).abs() < 0.02 {
                values[i] = if values[i - 1] - 0.03 > center - halfwidth {
                    values[i - 1] - 0.03
                } else {
                    values[i - 1] + 0.03
                };
            }
        }
    }

    // Interior breakpoints with a minimum relative gap of 8% of the length.
    let mut bps = vec![0.0];
    if pieces > 1 {
        let mut cuts: Vec<f64> = (0..pieces - 1)
            .map(|_| rng.gen_range(0.1..0.9))
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Spread clustered cuts apart.
        for i in 1..cuts.len() {
            if cuts[i] - cuts[i - 1] < 0.08 {
                cuts[i] = (cuts[i - 1] + 0.08).min(0.92);
            }
        }
        bps.extend(cuts.iter().map(|c| c * length));
    }
    bps.push(length);

    let rho = if rng.gen_bool(0.5) {
        CoefficientFn::constant(rng.gen_range(0.5..2.0))
    } else {
        random_positive_quadratic(rng, length, 0.5, 2.0)
    };
    let sigma = random_positive_quadratic(rng, length, 0.5, 2.0);
    let q = if rng.gen_bool(0.5) {
        CoefficientFn::constant(0.0)
    } else {
        random_positive_quadratic(rng, length, 1e-3, 0.8)
    };

    let n_coeffs = rng.gen_range(1..=3);
    let coeffs: Vec<f64> = (0..n_coeffs)
        .map(|i| {
            let v: f64 = rng.gen_range(0.2..2.0);
            if i == n_coeffs - 1 {
                v.max(0.2)
            } else {
                v
            }
        })
        .collect();

    let spec = ProblemSpec {
        order: PiecewiseOrder {
            breakpoints: bps,
            values,
        },
        medium: MediumCoefficients { rho, sigma, q },
        excitation: BoundaryExcitation {
            coeffs,
            side: Side::Left,
        },
        discretization: Discretization {
            grid_per_interval: 1024,
            eigenpairs: 64,
        },
    };
    debug_assert!(validate(&spec).is_empty(), "generator produced an inadmissible spec");
    spec
}

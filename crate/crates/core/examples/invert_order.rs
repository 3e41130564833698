//! Full inversion round trip: synthesize small-p flux data from a two-piece
//! order, fit the fractional exponents, and place the interface from the
//! known medium.

use vosub::inversion::{fit_exponents, recover_breakpoints, FitOptions, Monotonicity};
use vosub::laplace_domain::solve_bvp;
use vosub::model::{
    BoundaryExcitation, Discretization, MediumCoefficients, PiecewiseOrder, ProblemSpec,
};
use vosub::time_domain::{FluxSeries, SeriesDomain};
use vosub::Side;

fn main() {
    let spec = ProblemSpec {
        order: PiecewiseOrder {
            breakpoints: vec![0.0, 0.5, 1.0],
            values: vec![0.5, 0.7],
        },
        medium: MediumCoefficients::uniform(),
        excitation: BoundaryExcitation {
            coeffs: vec![1.0],
            side: Side::Left,
        },
        discretization: Discretization {
            grid_per_interval: 1024,
            eigenpairs: 64,
        },
    };

    // Excited-side flux sampled deep in the small-p regime.
    let ps: Vec<f64> = (0..48)
        .map(|i| 1e-8 * (1e-3f64 / 1e-8).powf(i as f64 / 47.0))
        .collect();
    let samples: Vec<(f64, f64)> = ps
        .iter()
        .map(|&p| (p, solve_bvp(&spec, p).expect("solve").flux_left))
        .collect();
    let series = FluxSeries {
        domain: SeriesDomain::Laplace,
        side: Side::Left,
        samples,
    };

    let opts = FitOptions {
        max_terms: 2,
        ..Default::default()
    };
    let fit = fit_exponents(&series, Some(&spec.excitation), &opts).expect("fit");
    println!("fitted C0 = {:+.6}", fit.c0_hat);
    for (a, c) in &fit.terms {
        println!("fitted term: alpha = {a:.4}, C = {c:+.6}");
    }

    let rec = recover_breakpoints(&fit, &spec.medium, Side::Left, Monotonicity::Increasing)
        .expect("recovery");
    println!("recovered breakpoints: {:?}", rec.breakpoints_hat);
    println!("recovered values:      {:?}", rec.values_hat);
    println!("true breakpoints:      {:?}", spec.order.breakpoints);
    println!("true values:           {:?}", spec.order.values);
}

//! Recovers the set of order values from flux data alone, without knowing
//! the excitation: the coefficient scale stays unknown but the fractional
//! exponents, and hence the range of alpha, are identifiable.

use vosub::inversion::{fit_exponents, recover_range, FitOptions};
use vosub::laplace_domain::solve_bvp;
use vosub::model::{
    BoundaryExcitation, Discretization, MediumCoefficients, PiecewiseOrder, ProblemSpec,
};
use vosub::time_domain::{FluxSeries, SeriesDomain};
use vosub::Side;

fn main() {
    // Two problems with the same order range but different media,
    // breakpoints, and excitations.
    let mut specs = Vec::new();
    for (bps, coeffs) in [
        (vec![0.0, 0.5, 1.0], vec![1.0]),
        (vec![0.0, 0.7, 1.0], vec![0.0, 2.0]),
    ] {
        specs.push(ProblemSpec {
            order: PiecewiseOrder {
                breakpoints: bps,
                values: vec![0.5, 0.7],
            },
            medium: MediumCoefficients::uniform(),
            excitation: BoundaryExcitation {
                coeffs,
                side: Side::Left,
            },
            discretization: Discretization {
                grid_per_interval: 1024,
                eigenpairs: 64,
            },
        });
    }

    for (k, spec) in specs.iter().enumerate() {
        let ps: Vec<f64> = (0..48)
            .map(|i| 1e-8 * (1e-3f64 / 1e-8).powf(i as f64 / 47.0))
            .collect();
        let samples: Vec<(f64, f64)> = ps
            .iter()
            .map(|&p| (p, solve_bvp(spec, p).expect("solve").flux_left))
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
        // No excitation passed: range-only recovery.
        let fit = fit_exponents(&series, None, &opts).expect("fit");
        let range = recover_range(&fit);
        println!("problem {k}: recovered order range {range:?} (true [0.5, 0.7])");
    }
}

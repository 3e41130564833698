//! Solves the Laplace-domain problem for a two-piece order and tabulates the
//! boundary fluxes over a logarithmic grid of the transform variable.

use vosub::laplace_domain::solve_bvp;
use vosub::model::{
    BoundaryExcitation, Discretization, MediumCoefficients, PiecewiseOrder, ProblemSpec,
};
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
    vosub::validate(&spec).into_result().expect("admissible problem");

    println!("{:>12} {:>24} {:>24}", "p", "flux_left", "flux_right");
    for i in 0..13 {
        let p = 1e-6 * 10f64.powf(i as f64 / 2.0);
        let sol = solve_bvp(&spec, p).expect("solve");
        println!("{:>12.4e} {:>24.15e} {:>24.15e}", p, sol.flux_left, sol.flux_right);
    }
}

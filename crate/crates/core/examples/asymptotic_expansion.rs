//! Computes the small-p expansion of the boundary flux on both ends and
//! checks the remainder decay numerically. For the uniform medium with a
//! single order the exact coefficients are (-1, -1/3) on the left and
//! (-1, 1/6) on the right.

use vosub::asymptotics::{expansion_coefficients, verify_expansion, FluxSide};
use vosub::model::{
    BoundaryExcitation, Discretization, MediumCoefficients, PiecewiseOrder, ProblemSpec,
};
use vosub::Side;

fn main() {
    let spec = ProblemSpec {
        order: PiecewiseOrder {
            breakpoints: vec![0.0, 0.4, 1.0],
            values: vec![0.55, 0.65],
        },
        medium: MediumCoefficients::uniform(),
        excitation: BoundaryExcitation {
            coeffs: vec![1.0],
            side: Side::Left,
        },
        discretization: Discretization {
            grid_per_interval: 2048,
            eigenpairs: 64,
        },
    };

    for side in [FluxSide::LeftFlux, FluxSide::RightFlux] {
        let exp = expansion_coefficients(&spec, side).expect("expansion");
        println!("{side:?}: C0 = {:+.12}", exp.c0);
        for t in &exp.terms {
            println!("    alpha = {:.3}   C = {:+.12}", t.alpha, t.coeff);
        }
        let grid: Vec<f64> = (0..24)
            .map(|i| 1e-6 * (1e-3f64 / 1e-6).powf(i as f64 / 23.0))
            .collect();
        let v = verify_expansion(&spec, side, &grid, &exp).expect("verify");
        println!(
            "    remainder slope {:.3} (threshold {:.3}) -> {}",
            v.slope,
            v.threshold,
            if v.pass { "ok" } else { "DECAY TOO SLOW" }
        );
    }
}

//! Time-domain boundary fluxes by contour inversion, compared at late times
//! against the Tauberian asymptote derived from the small-p expansion.

use vosub::asymptotics::{expansion_coefficients, time_asymptote_for_excitation, FluxSide};
use vosub::model::{
    BoundaryExcitation, Discretization, MediumCoefficients, PiecewiseOrder, ProblemSpec,
};
use vosub::time_domain::{forward_flux_time, ContourConfig};
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
            grid_per_interval: 512,
            eigenpairs: 64,
        },
    };

    let contour = ContourConfig::default();
    let ts: Vec<f64> = (0..16).map(|i| 1e-2 * 10f64.powf(i as f64 / 3.0)).collect();
    let rows = forward_flux_time(&spec, &contour, &ts).expect("contour inversion");

    let expansion = expansion_coefficients(&spec, FluxSide::LeftFlux).expect("expansion");
    let asym =
        time_asymptote_for_excitation(&expansion, &spec.excitation, &ts).expect("asymptote");

    println!(
        "{:>12} {:>22} {:>22} {:>22}",
        "t", "flux_left", "flux_right", "late_time_model"
    );
    for ((t, fl, fr), (_, a)) in rows.into_iter().zip(asym) {
        println!("{t:>12.4e} {fl:>22.12e} {fr:>22.12e} {a:>22.12e}");
    }
    println!("(the model column matches flux_left as t grows)");
}

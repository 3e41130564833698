//! Stress-checks the structural lemmas behind the flux expansion on randomly
//! drawn admissible problems: gluing-factor normalization M_i = 1, factor
//! sign laws, positivity of the combinatorial table, and C^{1,1} gluing of
//! the canonical profiles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vosub::asymptotics::analyze;
use vosub::specgen::random_admissible_spec;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_m = 0.0f64;
    let mut worst_jump = 0.0f64;
    for k in 0..10 {
        let spec = random_admissible_spec(&mut rng, 5);
        let a = analyze(&spec).expect("analysis");
        let n = spec.order.n_interfaces();
        let m_err = a
            .profiles
            .m_factors
            .iter()
            .map(|m| (m - 1.0).abs())
            .fold(0.0f64, f64::max);
        let jump = a
            .profiles
            .max_u_value_jump
            .max(a.profiles.max_u_deriv_jump)
            .max(a.profiles.max_ubar_value_jump)
            .max(a.profiles.max_ubar_deriv_jump);
        for f in &a.factors {
            assert!(f.d_star < 0.0, "sign law d* < 0");
            assert!(
                f.c_star >= 1.0 - f.d_star - 1e-9 * (1.0 - f.d_star),
                "bound c* >= 1 - d*"
            );
        }
        worst_m = worst_m.max(m_err);
        worst_jump = worst_jump.max(jump);
        println!(
            "spec {k}: {n} interfaces, max |M_i - 1| = {m_err:.2e}, max gluing jump = {jump:.2e}"
        );
    }
    println!("worst over all draws: |M_i - 1| = {worst_m:.2e}, jump = {worst_jump:.2e}");
}

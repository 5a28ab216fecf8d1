//! Randomized verification of the linear trace estimates behind the bounds.
//!
//! The drift maps of both informed filter covariances satisfy
//! tr(α(q)) ≤ a_α − √λ·b_α·tr(q) on the PSD cone — above the intensity
//! threshold λ₀ for the discrete expert, for every λ > 0 for the continuous
//! expert. The sweep samples random PSD matrices per dimension and reports
//! the smallest margin found.
//!
//! ```bash
//! cargo run --release --example trace_inequality_sweep
//! ```

use driftlab::bounds::{
    default_a_alpha, r_star, sweep_j_margins, sweep_z_margins, z_trace_constants,
    DEFAULT_B_FRACTION,
};
use driftlab::params::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> driftlab::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let delta = 0.5;
    for d in 1..=3usize {
        let params = ModelParams::reference_with_dim(d);
        let a = default_a_alpha(&params, delta)?;
        let constants = z_trace_constants(&params, a, DEFAULT_B_FRACTION)?;
        let lambda0 = constants.lambda0.unwrap();
        let z = sweep_z_margins(&params, &constants, &[lambda0, 10.0 * lambda0], 1000, &mut rng)?;
        println!(
            "d = {d}, discrete expert, lambda in {{{lambda0:.1}, {:.1}}}: {} samples, min margin {:.4e} -> {}",
            10.0 * lambda0,
            z.n_samples,
            z.min_margin,
            if z.all_pass() { "pass" } else { "FAIL" }
        );

        let r = r_star(&params, delta)?;
        let j = sweep_j_margins(&params, &[0.1, 1.0, r], &[1e-3, 1.0, 1e3, 1e6], 1000, &mut rng)?;
        println!(
            "d = {d}, continuous expert, r in {{0.1, 1, {r:.3}}}: {} samples, min margin {:.4e} -> {}",
            j.n_samples,
            j.min_margin,
            if j.all_pass() { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}

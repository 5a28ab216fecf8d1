//! The explicit error-bound constants and the scaled covariance they
//! dominate.
//!
//! For the continuous-expert filter the inequality √λ·tr Q_t ≤ C(δ) on
//! [δ, T] is deterministic and holds for every λ > 0; this example evaluates
//! both sides on a grid of intensities and shows how close the bound sits to
//! the actual stationary level.
//!
//! ```bash
//! cargo run --release --example bound_constants
//! ```

use driftlab::bounds::{
    bound_constant_j, bound_constant_z, default_a_alpha, lambda_gate, r_star, z_trace_constants,
    DEFAULT_B_FRACTION,
};
use driftlab::filters::{default_dt_ode, solve_riccati, StandardRiccati};
use driftlab::market::TimeGrid;
use driftlab::params::ModelParams;

fn main() -> driftlab::Result<()> {
    let params = ModelParams::reference();

    for delta in [0.1, 0.5] {
        let c_z = bound_constant_z(&params, delta)?;
        let c_j = bound_constant_j(&params, delta)?;
        println!("delta = {delta}: c_z = {c_z:.5}, c_j = {c_j:.5} (equal for one asset with matching expert variances)");
    }

    let delta = 0.5;
    let a = default_a_alpha(&params, delta)?;
    let constants = z_trace_constants(&params, a, DEFAULT_B_FRACTION)?;
    let gate = lambda_gate(&params, delta, DEFAULT_B_FRACTION)?;
    println!("\ntrace-estimate constants at delta = {delta}:");
    println!("  a_alpha = {a:.5}");
    println!(
        "  b_alpha = {:.5} (supremum {:.5})",
        constants.b_alpha,
        constants.b_alpha_bar.unwrap()
    );
    println!(
        "  intensity gate: lambda_0 = {:.1}, lambda_star = {:.3}, gate = {:.1}",
        gate.lambda0, gate.lambda_star, gate.lambda_q
    );
    println!("  optimal tangent parameter r_star = {:.4}", r_star(&params, delta)?);

    println!("\nscaled continuous-expert covariance at t = 0.5 versus C(0.5) = {:.5}:", bound_constant_j(&params, delta)?);
    let grid = TimeGrid::build(1.0, 1e-3, &[], &[])?;
    let mid = grid.index_of(0.5).unwrap();
    for lambda in [5.0, 20.0, 200.0, 2000.0] {
        let rhs = StandardRiccati::new(&params, Some(lambda))?;
        let q = solve_riccati(rhs, params.q0.as_sym(), &grid, default_dt_ode(&params, Some(lambda))?)?;
        let scaled = lambda.sqrt() * q[mid].trace();
        println!("  lambda {lambda:>6}: sqrt(lambda) tr Q(0.5) = {scaled:.5}");
    }
    Ok(())
}

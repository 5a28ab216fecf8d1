//! Mechanics of one expert-opinion update: the shrinkage factor, the
//! information-form identity and the consistency between the filter update
//! and the covariance jump map.
//!
//! ```bash
//! cargo run --release --example expert_updates
//! ```

use driftlab::bounds::gamma_jump;
use driftlab::filters::{bayes_update, FilterState};
use driftlab::linalg::{SpdMatrix, SymMatrix};
use driftlab::params::ModelParams;
use nalgebra::DVector;

fn main() -> driftlab::Result<()> {
    let params = ModelParams::reference();
    let z = DVector::from_element(1, 0.3);

    println!("one expert opinion z = {} against prior mean 0.1:", z[0]);
    println!(
        "{:>10} {:>10} {:>10} {:>12} {:>12}",
        "q_minus", "rho", "m_plus", "q_plus", "info form"
    );
    for q_minus in [0.5, 0.166_667, 0.05, 0.005, 0.0] {
        let state = FilterState {
            t: 0.0,
            m: DVector::from_element(1, 0.1),
            q: SymMatrix::from_diagonal(&[q_minus]),
        };
        let updated = bayes_update(&state, &z, &params.gamma)?;
        let gamma = params.gamma.trace();
        let rho = gamma / (q_minus + gamma);
        let info = if q_minus > 0.0 { 1.0 / (1.0 / q_minus + 1.0 / gamma) } else { 0.0 };
        println!(
            "{q_minus:>10.6} {rho:>10.6} {:>10.6} {:>12.8} {info:>12.8}",
            updated.m[0],
            updated.q.entry(0, 0)
        );
    }
    println!("(a sharper prior trusts the expert less; q_minus = 0 ignores it entirely)\n");

    // the jump map of the covariance semimartingale reproduces the update
    let q = SymMatrix::from_diagonal(&[0.1]);
    let jump = gamma_jump(&q, &params.gamma)?;
    let state = FilterState { t: 0.0, m: DVector::zeros(1), q: q.clone() };
    let updated = bayes_update(&state, &DVector::zeros(1), &params.gamma)?;
    println!(
        "jump-map consistency: q + gamma_jump(q) = {:.8}, update gives {:.8}",
        q.entry(0, 0) + jump.entry(0, 0),
        updated.q.entry(0, 0)
    );

    // repeated opinions at the same instant compound multiplicatively
    let mut state = FilterState {
        t: 0.0,
        m: DVector::from_element(1, 0.1),
        q: SpdMatrix::from_diagonal(&[1.0 / 6.0])?.into_sym(),
    };
    print!("five consecutive opinions shrink the variance: {:.5}", state.q.entry(0, 0));
    for _ in 0..5 {
        state = bayes_update(&state, &z, &params.gamma)?;
        print!(" -> {:.5}", state.q.entry(0, 0));
    }
    println!();
    Ok(())
}

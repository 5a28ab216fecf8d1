//! Simulate one market path and run the three filters side by side.
//!
//! The same underlying noise drives every intensity, so the printed
//! covariances are directly comparable: the expert-opinion filter drops at
//! each arrival and relaxes back toward the return-only curve, while the
//! continuous-expert filter tracks a deterministic path below both.
//!
//! ```bash
//! cargo run --release --example single_path_filters
//! ```

use driftlab::filters::{run_j_filter, run_r_filter, run_z_filter};
use driftlab::market::{MarketBundle, SimOptions};
use driftlab::params::ModelParams;

fn main() -> driftlab::Result<()> {
    let params = ModelParams::reference();
    let lambdas = [5.0, 20.0, 2000.0];
    let opts = SimOptions {
        dt_max: 1e-3,
        lambda_max: 2000.0,
        extra_times: vec![],
        continuous_expert: true,
    };
    let bundle = MarketBundle::simulate(&params, &opts, 42, 0)?;

    for lambda in lambdas {
        let path = bundle.realize(lambda)?;
        let r = run_r_filter(&path, &params)?;
        let z = run_z_filter(&path, &params)?;
        let j = run_j_filter(&path, &params, lambda)?;

        println!("lambda = {lambda}: {} expert opinions", path.expert_events.len());
        println!("  {:<6} {:>9} {:>9} {:>9} {:>9} {:>9}", "t", "mu", "m_z", "q_r", "q_z", "q_j");
        for target in [0.1, 0.25, 0.5, 0.75, 1.0] {
            let i = path
                .grid
                .points()
                .iter()
                .position(|&t| t >= target)
                .unwrap_or(path.grid.len() - 1);
            println!(
                "  {:<6.3} {:>9.5} {:>9.5} {:>9.6} {:>9.6} {:>9.6}",
                path.grid.point(i),
                path.mu[i][0],
                z.states[i].m[0],
                r.states[i].q.entry(0, 0),
                z.states[i].q.entry(0, 0),
                j.states[i].q.entry(0, 0),
            );
        }
        let worst_gap = z
            .states
            .iter()
            .zip(&r.states)
            .map(|(zs, rs)| zs.q.entry(0, 0) - rs.q.entry(0, 0))
            .fold(f64::NEG_INFINITY, f64::max);
        println!("  max (q_z - q_r) over the grid: {worst_gap:.3e} (never positive)\n");
    }
    Ok(())
}

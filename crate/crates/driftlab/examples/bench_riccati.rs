use driftlab::filters::{default_dt_ode, solve_riccati, StandardRiccati};
use driftlab::market::TimeGrid;
use driftlab::params::ModelParams;
use std::time::Instant;

fn main() {
    let p = ModelParams::reference();
    let grid = TimeGrid::build(1.0, 1e-3, &[], &[]).unwrap();
    for lambda in [100.0, 1000.0, 10000.0] {
        let t0 = Instant::now();
        let rhs = StandardRiccati::new(&p, Some(lambda)).unwrap();
        let dt = default_dt_ode(&p, Some(lambda)).unwrap();
        let out = solve_riccati(rhs, p.q0.as_sym(), &grid, dt).unwrap();
        println!("lambda {lambda}: dt_ode {dt:.3e}, q(0.5) = {:.6e}, {:?}",
                 out[grid.index_of(0.5).unwrap()].trace(), t0.elapsed());
    }
}

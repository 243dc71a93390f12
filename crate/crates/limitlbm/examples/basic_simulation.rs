//! Minimal end-to-end use of the solver, no harness involved.
//!
//! Initializes a decaying vortex on a periodic box, advances it with the
//! collide-then-stream update under diffusive scaling, and watches the
//! kinetic energy fall against the closed-form decay law.
//!
//! ```bash
//! cargo run --release --example basic_simulation
//! ```

use limitlbm::d2q9;
use limitlbm::grid::make_grid;
use limitlbm::manufactured::{init_from_macro, taylor_green_2d, InitMode};
use limitlbm::moments::macroscopic_moments;
use limitlbm::solver::{run_until, Observer, RunOptions};
use limitlbm::{make_scaling, PopulationField, Stencil};

fn kinetic_energy(field: &PopulationField, stencil: &Stencil, h: f64) -> f64 {
    let params = make_scaling(0.02, h).unwrap();
    let mut pops = vec![0.0; stencil.q];
    let mut e = 0.0;
    for node in 0..field.grid.nodes() {
        field.node_populations(node, &mut pops);
        let (n, u) = macroscopic_moments(&pops, stencil, &params).unwrap();
        e += 0.5 * n * (u[0] * u[0] + u[1] * u[1]);
    }
    e * h * h // cell volume
}

fn main() {
    let n = 64;
    let nu = 0.02;
    let h = 1.0 / n as f64;
    let stencil = d2q9();
    let params = make_scaling(nu, h).unwrap();
    let grid = make_grid(2, n, 1.0).unwrap();

    let flow = taylor_green_2d(0.8, 1.0, nu).expect("valid flow parameters");
    let mut field = init_from_macro(&flow, 0.0, grid, &stencil, &params, InitMode::Equilibrium)
        .expect("initialization succeeds");

    let e0 = kinetic_energy(&field, &stencil, h);
    println!("grid {n}x{n}, dx {h}, dt {:.3e}, omega {:.4}", params.dt(), params.omega);
    println!("{:>8} {:>10} {:>14} {:>14}", "step", "time", "E/E0", "analytic");

    let decay = |t: f64| (-4.0 * nu * flow.wavenumber().powi(2) * t).exp();
    let mut watch = Observer::every(512, |step, t, f| {
        let ratio = kinetic_energy(f, &stencil, h) / e0;
        println!("{step:>8} {t:>10.4} {ratio:>14.8} {:>14.8}", decay(t));
    });

    let t_end = 0.1 / (4.0 * std::f64::consts::PI.powi(2) * nu);
    let stats = run_until(
        &mut field,
        &stencil,
        &params,
        t_end,
        &RunOptions::default(),
        std::slice::from_mut(&mut watch),
    )
    .expect("run completes");
    println!("finished after {} steps at t = {:.4}", stats.steps, stats.final_time);
}

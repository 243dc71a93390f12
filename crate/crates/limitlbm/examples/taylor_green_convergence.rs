//! Grid-refinement study on the decaying Taylor-Green vortex.
//!
//! Runs the same flow at a ladder of resolutions under diffusive scaling
//! (dt = h^2) and prints the velocity-error norms with their observed
//! orders. Second order in h is the expected outcome. The CSV report
//! that the command-line driver would write goes to stdout at the end.
//!
//! ```bash
//! cargo run --release --example taylor_green_convergence
//! ```

use limitlbm::consistency::{convergence_report, convergence_study, Outcome, StudyOptions};
use limitlbm::d2q9;
use limitlbm::manufactured::taylor_green_2d;
use std::f64::consts::PI;

fn main() {
    let nu = 0.02;
    let flow = taylor_green_2d(0.8, 1.0, nu).expect("valid flow parameters");
    // one fifth of the viscous decay time: errors are still dominated by
    // the discretization, not by the vanished signal
    let t_end = 0.2 / (4.0 * PI * PI * nu);
    let stencil = d2q9();

    let results = convergence_study(
        &flow,
        &stencil,
        nu,
        &[16, 32, 64, 128],
        t_end,
        &StudyOptions::default(),
    )
    .expect("study parameters are valid");

    println!("{:>6} {:>10} {:>14} {:>14} {:>8}", "N", "h", "l2 error", "sup error", "eoc");
    let mut prev: Option<(f64, f64)> = None;
    for r in &results {
        match &r.outcome {
            Outcome::Converged(c) => {
                let eoc = match prev {
                    Some((h_prev, e_prev)) => {
                        format!("{:.3}", (e_prev / c.l2_velocity).ln() / (h_prev / r.h).ln())
                    }
                    None => "-".to_string(),
                };
                println!(
                    "{:>6} {:>10.5} {:>14.6e} {:>14.6e} {:>8}",
                    r.n, r.h, c.l2_velocity, c.sup_velocity, eoc
                );
                prev = Some((r.h, c.l2_velocity));
            }
            Outcome::Unstable { message } => println!("{:>6} unstable: {message}", r.n),
        }
    }

    println!("\nreport.csv contents:");
    let report = convergence_report("taylor_green_2d", nu, &results);
    print!("{}", report.to_csv_string().expect("report serializes"));
}

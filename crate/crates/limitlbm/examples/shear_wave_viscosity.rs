//! Measures the effective viscosity of the scheme from shear-wave decay.
//!
//! A transverse sine wave decays like exp(-nu k^2 t); fitting that decay
//! between the half and full horizon yields nu_eff. The relative gap to
//! the target viscosity shrinks at second order in h, which is the
//! sharpest macroscopic check that the collision operator relaxes stress
//! at the advertised rate.
//!
//! ```bash
//! cargo run --release --example shear_wave_viscosity
//! ```

use limitlbm::consistency::{convergence_study, eoc, Outcome, StudyOptions};
use limitlbm::d3q19;
use limitlbm::manufactured::shear_wave;

fn main() {
    let nu = 0.04;
    let flow = shear_wave(0.1, 1.0, nu, 3).expect("valid flow parameters");
    let k = flow.wavenumber();
    // one e-folding of the slowest mode
    let t_end = 1.0 / (nu * k * k);

    let results = convergence_study(
        &flow,
        &d3q19(),
        nu,
        &[8, 16, 32],
        t_end,
        &StudyOptions::default(),
    )
    .expect("study parameters are valid");

    println!("target viscosity {nu}");
    println!("{:>6} {:>14} {:>14}", "N", "nu_eff", "rel error");
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for r in &results {
        match &r.outcome {
            Outcome::Converged(c) => {
                let nu_eff = c.nu_eff.expect("shear runs measure nu_eff");
                let rel = (nu_eff - nu).abs() / nu;
                println!("{:>6} {:>14.8} {:>14.5e}", r.n, nu_eff, rel);
                errs.push(rel);
                hs.push(r.h);
            }
            Outcome::Unstable { message } => println!("{:>6} unstable: {message}", r.n),
        }
    }
    if errs.len() >= 2 {
        let orders = eoc(&errs, &hs).expect("positive errors");
        println!(
            "observed orders: {}",
            orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(", ")
        );
    }
}

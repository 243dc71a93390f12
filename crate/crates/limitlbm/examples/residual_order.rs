//! Probes how fast the update-rule residual vanishes on an exact flow.
//!
//! The solver's update rule is applied to closed-form populations (the
//! first-order expansion of a decaying vortex) and the leftover, the
//! residual, is measured in the sup norm over a resolution ladder. The
//! fitted slope is the consistency order of the scheme: dividing the
//! residual by h^2 stays bounded, dividing by h^3 blows up.
//!
//! ```bash
//! cargo run --release --example residual_order
//! ```

use limitlbm::consistency::{ansatz_residual_sup, limsup_probe, DEFAULT_LIMSUP_SLACK};
use limitlbm::d2q9;
use limitlbm::equilibrium::{fit_order, SlopeFit};
use limitlbm::manufactured::taylor_green_2d;

fn main() {
    let nu = 0.02;
    let flow = taylor_green_2d(0.8, 1.0, nu).expect("valid flow parameters");
    let stencil = d2q9();
    let ns = [16usize, 32, 64, 128];

    println!("{:>6} {:>10} {:>14}", "N", "h", "sup residual");
    let mut hs = Vec::new();
    let mut sups = Vec::new();
    for &n in &ns {
        let sample = ansatz_residual_sup(&flow, &stencil, nu, n).expect("valid probe");
        println!("{:>6} {:>10.5} {:>14.6e}", n, sample.h, sample.sup);
        hs.push(sample.h);
        sups.push(sample.sup);
    }
    match fit_order(&hs, &sups).expect("positive residuals") {
        SlopeFit::Slope(p) => println!("fitted order: {p:.3}"),
        SlopeFit::Exact => println!("residual vanished exactly"),
    }

    for k in [2u32, 3] {
        let probe = limsup_probe(&flow, &stencil, nu, k, &ns, DEFAULT_LIMSUP_SLACK)
            .expect("valid probe");
        println!("\nsup residual / h^{k}:");
        for e in &probe.estimates {
            println!("  N={:<4} estimate {:.6e}  {}", e.n, e.estimate, e.verdict);
        }
        println!(
            "verdict at k={k}: {}",
            if probe.bounded { "bounded" } else { "unbounded" }
        );
    }
}

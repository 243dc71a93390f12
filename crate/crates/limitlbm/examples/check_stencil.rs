//! Verifies the moment identities of both built-in velocity sets.
//!
//! Every identity up to fourth order must hold at machine precision;
//! they are what make the lattice equilibrium conserve mass and momentum
//! and recover the isotropic pressure tensor.
//!
//! ```bash
//! cargo run --release --example check_stencil
//! ```

use limitlbm::lattice::verify_quadrature;
use limitlbm::{d2q9, d3q19};

fn main() {
    for stencil in [d2q9(), d3q19()] {
        let report = verify_quadrature(&stencil);
        println!("{} ({} velocities, {}d):", stencil.name, stencil.q, stencil.d);
        for (order, dev) in report.max_deviation.iter().enumerate() {
            println!("  moment order {order}: max deviation {dev:.3e}");
        }
        println!("  worst overall: {:.3e}\n", report.max_overall());
    }
}

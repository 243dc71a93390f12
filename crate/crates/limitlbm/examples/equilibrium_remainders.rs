//! Measures how fast the truncated equilibrium approaches the full one.
//!
//! Three error families shrink as the lattice spacing h goes to zero:
//! the pointwise gap between the full Maxwellian and its second-order
//! truncation (order d+3), and the density and momentum defects of the
//! stencil quadrature applied to the full Maxwellian (orders >= 3 and
//! >= 2). This is the foundation the solver's consistency rests on.
//!
//! ```bash
//! cargo run --release --example equilibrium_remainders
//! ```

use limitlbm::equilibrium::{remainder_probe, MacroState, SlopeFit};

fn show(label: &str, fit: SlopeFit) {
    match fit {
        SlopeFit::Slope(p) => println!("  {label}: slope {p:.3}"),
        SlopeFit::Exact => println!("  {label}: exact (error identically zero)"),
    }
}

fn main() {
    let h_list = [0.2, 0.1, 0.05, 0.025];
    for d in [2usize, 3] {
        let state = MacroState::new(1.0, [0.3, -0.2, if d == 3 { 0.1 } else { 0.0 }]);
        let slopes =
            remainder_probe(&state, [1.0, -1.0, 0.0], d, &h_list).expect("valid probe");
        println!("{d}d, generic moving state (expected pointwise order {}):", d + 3);
        show("full vs truncated (pointwise)", slopes.full_vs_truncated);
        show("density quadrature defect", slopes.density_quadrature);
        show("momentum quadrature defect", slopes.momentum_quadrature);
    }

    // a state at rest is represented exactly
    let slopes = remainder_probe(&MacroState::at_rest(1.0), [1.0, -1.0, 0.0], 2, &h_list)
        .expect("valid probe");
    println!("2d, rest state:");
    show("full vs truncated (pointwise)", slopes.full_vs_truncated);
}

//! Discrete velocity sets and their quadrature properties.
//!
//! A stencil stores integer template velocities `e_i`; the physical
//! velocities on a lattice of spacing `h` are `v_i = e_i / h`. The weights
//! realize a Gauss-type quadrature that reproduces Maxwellian moments up
//! to fourth order, which is what the solver relies on for hydrodynamics.
//!
//! Velocities are ordered so that each `e_i` is immediately followed by
//! `-e_i`. Odd-moment sums then cancel pairwise in floating point, which
//! keeps the zero moments exactly zero instead of merely tiny.

use crate::error::{Error, Result};

/// A discrete velocity set with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    /// Spatial dimension (2 or 3). Unused velocity components are zero.
    pub d: usize,
    /// Number of discrete velocities.
    pub q: usize,
    /// Template velocities `e_i` with entries in {-1, 0, 1}.
    pub velocities: Vec<[i32; 3]>,
    /// Quadrature weights `t_i`, summing to one.
    pub weights: Vec<f64>,
    /// Index of `-e_i` for each `i`.
    pub opposite: Vec<usize>,
    /// Short name used in reports ("d2q9", "d3q19").
    pub name: &'static str,
}

impl Stencil {
    /// Builds a stencil from raw tables, deriving the opposite map.
    /// Fails if the velocity set is not closed under negation or the
    /// table lengths disagree.
    pub fn new(
        name: &'static str,
        d: usize,
        velocities: Vec<[i32; 3]>,
        weights: Vec<f64>,
    ) -> Result<Stencil> {
        if d != 2 && d != 3 {
            return Err(Error::dims(format!("stencil dimension must be 2 or 3, got {d}")));
        }
        if velocities.len() != weights.len() || velocities.is_empty() {
            return Err(Error::dims(format!(
                "{} velocities but {} weights",
                velocities.len(),
                weights.len()
            )));
        }
        for e in &velocities {
            for a in d..3 {
                if e[a] != 0 {
                    return Err(Error::dims(format!(
                        "velocity {e:?} has a nonzero component beyond dimension {d}"
                    )));
                }
            }
        }
        let q = velocities.len();
        let mut opposite = vec![usize::MAX; q];
        for i in 0..q {
            let neg = [-velocities[i][0], -velocities[i][1], -velocities[i][2]];
            match velocities.iter().position(|e| *e == neg) {
                Some(j) => opposite[i] = j,
                None => {
                    return Err(Error::dims(format!(
                        "velocity set is not closed under negation: missing -{:?}",
                        velocities[i]
                    )))
                }
            }
        }
        Ok(Stencil {
            d,
            q,
            velocities,
            weights,
            opposite,
            name,
        })
    }

    /// Template velocity as floats.
    #[inline]
    pub fn e_f64(&self, i: usize) -> [f64; 3] {
        let e = self.velocities[i];
        [e[0] as f64, e[1] as f64, e[2] as f64]
    }

    /// Physical velocity `v_i = e_i / h`.
    #[inline]
    pub fn velocity(&self, i: usize, h: f64) -> [f64; 3] {
        let e = self.velocities[i];
        [e[0] as f64 / h, e[1] as f64 / h, e[2] as f64 / h]
    }
}

/// The three-dimensional 19-velocity stencil: one rest velocity (weight
/// 1/3), six axis velocities (1/18) and twelve face diagonals (1/36).
pub fn d3q19() -> Stencil {
    let velocities: Vec<[i32; 3]> = vec![
        [0, 0, 0],
        [1, 0, 0],
        [-1, 0, 0],
        [0, 1, 0],
        [0, -1, 0],
        [0, 0, 1],
        [0, 0, -1],
        [1, 1, 0],
        [-1, -1, 0],
        [1, -1, 0],
        [-1, 1, 0],
        [1, 0, 1],
        [-1, 0, -1],
        [1, 0, -1],
        [-1, 0, 1],
        [0, 1, 1],
        [0, -1, -1],
        [0, 1, -1],
        [0, -1, 1],
    ];
    let weights: Vec<f64> = velocities
        .iter()
        .map(|e| match e[0].abs() + e[1].abs() + e[2].abs() {
            0 => 1.0 / 3.0,
            1 => 1.0 / 18.0,
            _ => 1.0 / 36.0,
        })
        .collect();
    Stencil::new("d3q19", 3, velocities, weights).expect("built-in stencil is valid")
}

/// The two-dimensional 9-velocity stencil: rest weight 4/9, axes 1/9,
/// diagonals 1/36.
pub fn d2q9() -> Stencil {
    let velocities: Vec<[i32; 3]> = vec![
        [0, 0, 0],
        [1, 0, 0],
        [-1, 0, 0],
        [0, 1, 0],
        [0, -1, 0],
        [1, 1, 0],
        [-1, -1, 0],
        [1, -1, 0],
        [-1, 1, 0],
    ];
    let weights: Vec<f64> = velocities
        .iter()
        .map(|e| match e[0].abs() + e[1].abs() {
            0 => 4.0 / 9.0,
            1 => 1.0 / 9.0,
            _ => 1.0 / 36.0,
        })
        .collect();
    Stencil::new("d2q9", 2, velocities, weights).expect("built-in stencil is valid")
}

/// Look up a built-in stencil by its report name.
pub fn stencil_by_name(name: &str) -> Option<Stencil> {
    match name {
        "d2q9" => Some(d2q9()),
        "d3q19" => Some(d3q19()),
        _ => None,
    }
}

/// Worst-case deviations of the weighted velocity moments from the
/// Maxwellian reference values, per moment order 0 through 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub max_deviation: [f64; 5],
}

impl QuadratureReport {
    /// Largest deviation over all orders.
    pub fn max_overall(&self) -> f64 {
        self.max_deviation.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_overall() <= tol
    }
}

impl std::fmt::Display for QuadratureReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (order, dev) in self.max_deviation.iter().enumerate() {
            writeln!(f, "order {order}: max deviation {dev:.3e}")?;
        }
        Ok(())
    }
}

fn kronecker(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Checks the moment identities the hydrodynamic limit depends on:
/// sum of weights one, odd moments zero, second moments `delta/3`, and
/// fourth moments `(dd + dd + dd)/9`. Returns the worst deviation per
/// order so a damaged weight table is visible at the order it breaks.
pub fn verify_quadrature(s: &Stencil) -> QuadratureReport {
    let d = s.d;
    let mut dev = [0.0f64; 5];

    let sum0: f64 = s.weights.iter().sum();
    dev[0] = (sum0 - 1.0).abs();

    for a in 0..d {
        let m1: f64 = (0..s.q).map(|i| s.weights[i] * s.e_f64(i)[a]).sum();
        dev[1] = dev[1].max(m1.abs());
        for b in 0..d {
            let m2: f64 = (0..s.q)
                .map(|i| {
                    let e = s.e_f64(i);
                    s.weights[i] * e[a] * e[b]
                })
                .sum();
            dev[2] = dev[2].max((m2 - kronecker(a, b) / 3.0).abs());
            for c in 0..d {
                let m3: f64 = (0..s.q)
                    .map(|i| {
                        let e = s.e_f64(i);
                        s.weights[i] * e[a] * e[b] * e[c]
                    })
                    .sum();
                dev[3] = dev[3].max(m3.abs());
                for g in 0..d {
                    let m4: f64 = (0..s.q)
                        .map(|i| {
                            let e = s.e_f64(i);
                            s.weights[i] * e[a] * e[b] * e[c] * e[g]
                        })
                        .sum();
                    let target = (kronecker(a, b) * kronecker(c, g)
                        + kronecker(a, c) * kronecker(b, g)
                        + kronecker(a, g) * kronecker(b, c))
                        / 9.0;
                    dev[4] = dev[4].max((m4 - target).abs());
                }
            }
        }
    }
    QuadratureReport { max_deviation: dev }
}

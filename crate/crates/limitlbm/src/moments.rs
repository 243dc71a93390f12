//! Velocity moments of population vectors.
//!
//! Populations store the weighted distribution values, so density is the
//! plain sum and momentum the velocity-weighted sum. All sums run in
//! ascending velocity order; combined with the +/- paired stencil layout
//! this keeps odd sums exactly zero at rest and makes every reduction
//! reproducible run to run.

use crate::error::{Error, Result};
use crate::lattice::Stencil;
use crate::scaling::ScalingParams;

/// Density, velocity, stress and pressure of one population vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub n: f64,
    pub u: [f64; 3],
    /// Second central moment `sum_i (v_i - u)(v_i - u) f_i`.
    pub stress: [[f64; 3]; 3],
    /// Kinetic pressure, `trace(stress) / d`.
    pub pressure: f64,
}

/// Density and physical velocity of a population vector:
/// `n = sum f_i`, `u = sum (e_i/h) f_i / n`.
///
/// Fails when the density is not positive, since the velocity is then
/// undefined.
pub fn macroscopic_moments(
    f: &[f64],
    stencil: &Stencil,
    params: &ScalingParams,
) -> Result<(f64, [f64; 3])> {
    if f.len() != stencil.q {
        return Err(Error::dims(format!(
            "population vector has {} entries, stencil {} needs {}",
            f.len(),
            stencil.name,
            stencil.q
        )));
    }
    let mut n = 0.0;
    for fi in f {
        n += fi;
    }
    if !(n > 0.0) {
        return Err(Error::domain(format!("density must be positive, got {n}")));
    }
    let mut mom = [0.0f64; 3];
    for i in 0..stencil.q {
        let e = stencil.e_f64(i);
        for a in 0..stencil.d {
            mom[a] += e[a] * f[i];
        }
    }
    let scale = 1.0 / (n * params.h);
    let mut u = [0.0f64; 3];
    for a in 0..stencil.d {
        u[a] = mom[a] * scale;
    }
    Ok((n, u))
}

/// Second central moment `P_ab = sum_i (v_ia - u_a)(v_ib - u_b) f_i`
/// with `v_i = e_i / h`. At equilibrium this is `n/(3 h^2)` times the
/// identity, so its deviatoric part isolates the viscous stress.
pub fn stress_tensor(
    f: &[f64],
    stencil: &Stencil,
    params: &ScalingParams,
) -> Result<[[f64; 3]; 3]> {
    let (_, u) = macroscopic_moments(f, stencil, params)?;
    let h = params.h;
    let d = stencil.d;
    let mut p = [[0.0f64; 3]; 3];
    for i in 0..stencil.q {
        let e = stencil.e_f64(i);
        let mut c = [0.0f64; 3];
        for a in 0..d {
            c[a] = e[a] / h - u[a];
        }
        for a in 0..d {
            for b in 0..d {
                p[a][b] += c[a] * c[b] * f[i];
            }
        }
    }
    Ok(p)
}

/// All moments of one population vector in a single pass over the data.
pub fn moment_set(f: &[f64], stencil: &Stencil, params: &ScalingParams) -> Result<MomentSet> {
    let (n, u) = macroscopic_moments(f, stencil, params)?;
    let stress = stress_tensor(f, stencil, params)?;
    let pressure = trace(&stress, stencil.d) / stencil.d as f64;
    Ok(MomentSet {
        n,
        u,
        stress,
        pressure,
    })
}

/// The Newtonian stress a fluid with pressure `p`, mass density `rho` and
/// kinematic viscosity `nu` exerts under rate of strain `d_tensor`:
/// `p I - 2 nu rho D`. The strain tensor must be symmetric.
pub fn newtonian_target(
    p: f64,
    rho: f64,
    nu: f64,
    d_tensor: &[[f64; 3]; 3],
    d: usize,
) -> Result<[[f64; 3]; 3]> {
    let mut scale: f64 = 1.0;
    for row in d_tensor.iter().take(d) {
        for v in row.iter().take(d) {
            scale = scale.max(v.abs());
        }
    }
    for a in 0..d {
        for b in (a + 1)..d {
            if (d_tensor[a][b] - d_tensor[b][a]).abs() > 1e-12 * scale {
                return Err(Error::domain(format!(
                    "rate-of-strain tensor is not symmetric at ({a},{b}): {} vs {}",
                    d_tensor[a][b], d_tensor[b][a]
                )));
            }
        }
    }
    let mut t = [[0.0f64; 3]; 3];
    for a in 0..d {
        for b in 0..d {
            t[a][b] = -2.0 * nu * rho * d_tensor[a][b];
        }
        t[a][a] += p;
    }
    Ok(t)
}

/// Trace over the first `d` diagonal entries.
pub fn trace(t: &[[f64; 3]; 3], d: usize) -> f64 {
    (0..d).map(|a| t[a][a]).sum()
}

/// Trace-free part `t - (trace(t)/d) I`.
pub fn deviatoric(t: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    let mean = trace(t, d) / d as f64;
    let mut out = *t;
    for a in 0..d {
        out[a][a] -= mean;
    }
    out
}

/// Largest absolute entry over the leading `d x d` block.
pub fn tensor_sup(t: &[[f64; 3]; 3], d: usize) -> f64 {
    let mut m: f64 = 0.0;
    for row in t.iter().take(d) {
        for v in row.iter().take(d) {
            m = m.max(v.abs());
        }
    }
    m
}

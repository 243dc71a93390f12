//! Diffusive-scaling parameter bundle.
//!
//! The solver works on a family of lattices indexed by the spacing `h`:
//! space resolves as `dx = h`, time as `dt = h^2`, and particle speeds grow
//! as `1/h`. All derived constants (relaxation time, sound speed, specific
//! gas constant) follow from `h` and the target kinematic viscosity `nu`,
//! so they live together in one struct instead of being recomputed ad hoc.

use crate::error::{Error, Result};

/// Scale factors tying one lattice level to the macroscopic target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    /// Lattice spacing; also the velocity scale factor `v = e/h`.
    pub h: f64,
    /// Target kinematic viscosity.
    pub nu: f64,
    /// Relaxation time `3 nu h^2` of the continuous-time model.
    pub tau: f64,
    /// Relaxation rate `1/(3 nu + 1/2)` of the discrete update.
    pub omega: f64,
    /// Isothermal sound speed `1/h`.
    pub c_s: f64,
    /// Specific gas constant times temperature, `1/(3 h^2)`.
    pub rt: f64,
    /// Particle mass; fixed to one.
    pub m: f64,
}

impl ScalingParams {
    /// Time step `dt = h^2` of the diffusive scaling.
    pub fn dt(&self) -> f64 {
        self.h * self.h
    }
}

/// Builds the scale bundle for viscosity `nu` on a lattice of spacing `h`.
pub fn make_scaling(nu: f64, h: f64) -> Result<ScalingParams> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::domain(format!("viscosity must be positive, got {nu}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("lattice spacing must be positive, got {h}")));
    }
    let h2 = h * h;
    Ok(ScalingParams {
        h,
        nu,
        tau: 3.0 * nu * h2,
        omega: 1.0 / (3.0 * nu + 0.5),
        c_s: 1.0 / h,
        rt: 1.0 / (3.0 * h2),
        m: 1.0,
    })
}

/// Dimensionless numbers of a flow with speed scale `u` and length scale `l`,
/// resolved on a lattice of spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowNumbers {
    /// Mach number `u * h` (flow speed over sound speed).
    pub ma: f64,
    /// Knudsen number: mean free path over `l`.
    pub kn: f64,
    /// Reynolds number `u * l / nu`.
    pub re: f64,
    /// Mean free path `sqrt(24/pi) * nu * h`.
    pub mean_free_path: f64,
    /// Mean thermal speed `sqrt(8/(3 pi)) / h`.
    pub mean_speed: f64,
}

/// Evaluates Mach, Knudsen and Reynolds numbers plus the kinetic-theory
/// length and speed scales. The three numbers are tied together:
/// `re * kn / ma = sqrt(24/pi)` independent of all inputs.
pub fn nondimensional_numbers(u: f64, l: f64, nu: f64, h: f64) -> Result<FlowNumbers> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::domain(format!("speed scale must be nonnegative, got {u}")));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::domain(format!("length scale must be positive, got {l}")));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::domain(format!("viscosity must be positive, got {nu}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("lattice spacing must be positive, got {h}")));
    }
    let mean_free_path = (24.0 / std::f64::consts::PI).sqrt() * nu * h;
    Ok(FlowNumbers {
        ma: u * h,
        kn: mean_free_path / l,
        re: u * l / nu,
        mean_free_path,
        mean_speed: (8.0 / (3.0 * std::f64::consts::PI)).sqrt() / h,
    })
}

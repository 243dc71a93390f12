//! Closed-form flows with analytic derivatives, used as references for
//! the consistency studies and to synthesize initial populations.
//!
//! Each flow provides density, velocity and every derivative the
//! first-order expansion of the distribution function needs, so no
//! numerical differentiation enters the harness anywhere. The expansion
//! itself lives in [`ce_populations`]: equilibrium populations times
//! `1 - 3 nu h^2 B_i`, where `B_i` collects the material-derivative
//! terms of [`material_derivative_terms`].

use crate::equilibrium::{lattice_equilibrium_into, MacroState};
use crate::error::{Error, Result};
use crate::grid::{Grid, PopulationField};
use crate::lattice::Stencil;
use crate::scaling::ScalingParams;

/// A reference flow on the periodic box `[0, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFlow {
    /// Counter-rotating vortex array, unit density:
    /// `u = (-U cos(kx) sin(ky), U sin(kx) cos(ky)) exp(-2 nu k^2 t)`.
    TaylorGreen2d { u0: f64, l: f64, nu: f64 },
    /// Axis-aligned decaying shear wave, unit density:
    /// `u_y = A sin(kx) exp(-nu k^2 t)`, other components zero.
    ShearWave { amplitude: f64, l: f64, nu: f64, d: usize },
    /// Constant state.
    Uniform { n: f64, u: [f64; 3], d: usize },
}

pub use AnalyticFlow::*;

/// Taylor-Green vortex with speed scale `u0` on period `l`.
pub fn taylor_green_2d(u0: f64, l: f64, nu: f64) -> Result<AnalyticFlow> {
    check_positive(l, "period")?;
    check_positive(nu, "viscosity")?;
    Ok(TaylorGreen2d { u0, l, nu })
}

/// Decaying shear wave with the given amplitude on period `l`, embedded
/// in dimension `d`.
pub fn shear_wave(amplitude: f64, l: f64, nu: f64, d: usize) -> Result<AnalyticFlow> {
    check_positive(l, "period")?;
    check_positive(nu, "viscosity")?;
    check_dim(d)?;
    Ok(ShearWave {
        amplitude,
        l,
        nu,
        d,
    })
}

/// Constant flow at density `n` and velocity `u`.
pub fn uniform(n: f64, u: [f64; 3], d: usize) -> Result<AnalyticFlow> {
    check_positive(n, "density")?;
    check_dim(d)?;
    Ok(Uniform { n, u, d })
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("{what} must be positive, got {v}")));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d != 2 && d != 3 {
        return Err(Error::dims(format!("dimension must be 2 or 3, got {d}")));
    }
    Ok(())
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

impl AnalyticFlow {
    pub fn dimension(&self) -> usize {
        match self {
            TaylorGreen2d { .. } => 2,
            ShearWave { d, .. } | Uniform { d, .. } => *d,
        }
    }

    /// Box period. Uniform flow has no intrinsic length; it reports 1.
    pub fn length_scale(&self) -> f64 {
        match self {
            TaylorGreen2d { l, .. } | ShearWave { l, .. } => *l,
            Uniform { .. } => 1.0,
        }
    }

    /// Characteristic speed (vortex speed, wave amplitude, or |u|).
    pub fn speed_scale(&self) -> f64 {
        match self {
            TaylorGreen2d { u0, .. } => u0.abs(),
            ShearWave { amplitude, .. } => amplitude.abs(),
            Uniform { u, .. } => (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt(),
        }
    }

    /// Wavenumber `2 pi / L` (zero for the uniform flow).
    pub fn wavenumber(&self) -> f64 {
        match self {
            TaylorGreen2d { l, .. } | ShearWave { l, .. } => TWO_PI / l,
            Uniform { .. } => 0.0,
        }
    }

    /// External body force; all shipped flows are unforced.
    pub fn force(&self, _t: f64, _x: [f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }

    pub fn density(&self, _t: f64, _x: [f64; 3]) -> f64 {
        match self {
            Uniform { n, .. } => *n,
            _ => 1.0,
        }
    }

    pub fn grad_density(&self, _t: f64, _x: [f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }

    pub fn velocity(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        match self {
            TaylorGreen2d { u0, l, nu } => {
                let k = TWO_PI / l;
                let decay = (-2.0 * nu * k * k * t).exp();
                [
                    -u0 * (k * x[0]).cos() * (k * x[1]).sin() * decay,
                    u0 * (k * x[0]).sin() * (k * x[1]).cos() * decay,
                    0.0,
                ]
            }
            ShearWave {
                amplitude, l, nu, ..
            } => {
                let k = TWO_PI / l;
                let decay = (-nu * k * k * t).exp();
                [0.0, amplitude * (k * x[0]).sin() * decay, 0.0]
            }
            Uniform { u, .. } => *u,
        }
    }

    /// Velocity gradient `G[a][b] = d u_a / d x_b`.
    pub fn grad_velocity(&self, t: f64, x: [f64; 3]) -> [[f64; 3]; 3] {
        let mut g = [[0.0f64; 3]; 3];
        match self {
            TaylorGreen2d { u0, l, nu } => {
                let k = TWO_PI / l;
                let decay = (-2.0 * nu * k * k * t).exp();
                // stretch s and rotation-like c share factors so the
                // divergence and the shear strain cancel exactly
                let s = u0 * k * (k * x[0]).sin() * (k * x[1]).sin() * decay;
                let c = u0 * k * (k * x[0]).cos() * (k * x[1]).cos() * decay;
                g[0][0] = s;
                g[0][1] = -c;
                g[1][0] = c;
                g[1][1] = -s;
            }
            ShearWave {
                amplitude, l, nu, ..
            } => {
                let k = TWO_PI / l;
                let decay = (-nu * k * k * t).exp();
                g[1][0] = amplitude * k * (k * x[0]).cos() * decay;
            }
            Uniform { .. } => {}
        }
        g
    }

    /// Eulerian time derivative of the velocity.
    pub fn du_dt(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        match self {
            TaylorGreen2d { l, nu, .. } => {
                let k = TWO_PI / l;
                let u = self.velocity(t, x);
                let r = -2.0 * nu * k * k;
                [r * u[0], r * u[1], 0.0]
            }
            ShearWave { l, nu, .. } => {
                let k = TWO_PI / l;
                let u = self.velocity(t, x);
                [0.0, -nu * k * k * u[1], 0.0]
            }
            Uniform { .. } => [0.0; 3],
        }
    }

    /// Rate-of-strain tensor `D = (G + G^T)/2`.
    pub fn rate_of_strain(&self, t: f64, x: [f64; 3]) -> [[f64; 3]; 3] {
        let g = self.grad_velocity(t, x);
        let mut d = [[0.0f64; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                d[a][b] = 0.5 * (g[a][b] + g[b][a]);
            }
        }
        d
    }

    /// Kinematic pressure `p / rho` (zero mean) that closes the
    /// incompressible momentum balance for this flow. For the vortex
    /// array it balances the advection term; the other flows have none.
    pub fn kinematic_pressure(&self, t: f64, x: [f64; 3]) -> f64 {
        match self {
            TaylorGreen2d { u0, l, nu } => {
                let k = TWO_PI / l;
                let decay = (-2.0 * nu * k * k * t).exp();
                let amp = -0.25 * u0 * u0 * decay * decay;
                amp * ((2.0 * k * x[0]).cos() + (2.0 * k * x[1]).cos())
            }
            _ => 0.0,
        }
    }

    /// Gradient of [`Self::kinematic_pressure`].
    pub fn grad_kinematic_pressure(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        match self {
            TaylorGreen2d { u0, l, nu } => {
                let k = TWO_PI / l;
                let decay = (-2.0 * nu * k * k * t).exp();
                let amp = 0.5 * u0 * u0 * k * decay * decay;
                [
                    amp * (2.0 * k * x[0]).sin(),
                    amp * (2.0 * k * x[1]).sin(),
                    0.0,
                ]
            }
            _ => [0.0; 3],
        }
    }

    /// Macroscopic state at one point.
    pub fn state(&self, t: f64, x: [f64; 3]) -> MacroState {
        MacroState::new(self.density(t, x), self.velocity(t, x))
    }
}

/// The five first-order terms of the expanded material derivative, each
/// evaluated for one particle velocity `v` at one point. The signs are
/// fixed by `bracket = -divergence + density_drift + acceleration +
/// advection + forcing`; the distribution correction is `-3 nu h^2 *
/// bracket` relative to equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialTerms {
    /// `div u`
    pub divergence: f64,
    /// `(c . grad rho) / rho` with peculiar velocity `c = v - u`
    pub density_drift: f64,
    /// `3 h^2 (c . du/dt)`
    pub acceleration: f64,
    /// `3 h^2 (c . (v . grad) u)`
    pub advection: f64,
    /// `3 h^2 (c . F) / m`; zero for the shipped unforced flows
    pub forcing: f64,
}

impl MaterialTerms {
    /// Signed sum entering the expansion.
    pub fn bracket(&self) -> f64 {
        -self.divergence + self.density_drift + self.acceleration + self.advection + self.forcing
    }
}

/// Evaluates the expansion terms for particle velocity `v` (physical
/// units, `v = e/h` at stencil nodes) at `(t, x)`.
pub fn material_derivative_terms(
    flow: &AnalyticFlow,
    t: f64,
    x: [f64; 3],
    v: [f64; 3],
    params: &ScalingParams,
) -> MaterialTerms {
    let d = flow.dimension();
    let u = flow.velocity(t, x);
    let rho = flow.density(t, x);
    let grad_rho = flow.grad_density(t, x);
    let g = flow.grad_velocity(t, x);
    let dudt = flow.du_dt(t, x);
    let force = flow.force(t, x);
    let h2 = params.h * params.h;

    let mut c = [0.0f64; 3];
    for a in 0..d {
        c[a] = v[a] - u[a];
    }
    let mut divergence = 0.0;
    let mut density_drift = 0.0;
    let mut acceleration = 0.0;
    let mut advection = 0.0;
    let mut forcing = 0.0;
    for a in 0..d {
        divergence += g[a][a];
        density_drift += c[a] * grad_rho[a];
        acceleration += c[a] * dudt[a];
        let mut v_grad_u_a = 0.0;
        for b in 0..d {
            v_grad_u_a += v[b] * g[a][b];
        }
        advection += c[a] * v_grad_u_a;
        forcing += c[a] * force[a];
    }
    MaterialTerms {
        divergence,
        density_drift: density_drift / rho,
        acceleration: 3.0 * h2 * acceleration,
        advection: 3.0 * h2 * advection,
        forcing: 3.0 * h2 * forcing / params.m,
    }
}

/// How to turn a macroscopic state into populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Plain lattice equilibrium of the local state.
    Equilibrium,
    /// Equilibrium plus the first-order expansion correction; consistent
    /// with the flow's gradients to one order higher.
    ChapmanEnskog,
}

/// Populations carrying the first-order expansion of the flow at time
/// `t`: `f_i = feq_i (1 - 3 nu h^2 B_i)`.
pub fn ce_populations(
    flow: &AnalyticFlow,
    t: f64,
    grid: Grid,
    stencil: &Stencil,
    params: &ScalingParams,
) -> Result<PopulationField> {
    init_from_macro(flow, t, grid, stencil, params, InitMode::ChapmanEnskog)
}

/// Fills a field from the flow's macroscopic state at time `t`, either
/// at plain equilibrium or with the expansion correction.
pub fn init_from_macro(
    flow: &AnalyticFlow,
    t: f64,
    grid: Grid,
    stencil: &Stencil,
    params: &ScalingParams,
    mode: InitMode,
) -> Result<PopulationField> {
    if flow.dimension() != grid.d {
        return Err(Error::dims(format!(
            "flow dimension {} does not match grid dimension {}",
            flow.dimension(),
            grid.d
        )));
    }
    if stencil.d != grid.d {
        return Err(Error::dims(format!(
            "stencil {} does not match grid dimension {}",
            stencil.name, grid.d
        )));
    }
    let mut field = PopulationField::zeros(grid, stencil.q);
    let nodes = grid.nodes();
    let mut feq = vec![0.0f64; stencil.q];
    let tau = 3.0 * params.nu * params.h * params.h;
    for node in 0..nodes {
        let x = grid.position(node);
        let state = flow.state(t, x);
        lattice_equilibrium_into(&state, stencil, params, &mut feq);
        match mode {
            InitMode::Equilibrium => field.set_node_populations(node, &feq),
            InitMode::ChapmanEnskog => {
                let mut corrected = feq.clone();
                for i in 0..stencil.q {
                    let v = stencil.velocity(i, params.h);
                    let terms = material_derivative_terms(flow, t, x, v, params);
                    corrected[i] = feq[i] * (1.0 - tau * terms.bracket());
                }
                field.set_node_populations(node, &corrected);
            }
        }
    }
    Ok(field)
}

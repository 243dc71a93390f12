//! Maxwellian equilibria and their lattice truncation.
//!
//! Everything here is evaluated in the scaled velocity variable
//! `vtil = h * v`, in which the Maxwellian of the diffusive scaling has
//! unit-order width: `M = n h^d (2 pi / 3)^{-d/2} exp(-3/2 |vtil - h u|^2)`.
//! The lattice equilibrium replaces the exponential's velocity dependence
//! by its second-order expansion in `h u`, which is what the quadrature
//! weights integrate exactly. The [`remainder_probe`] measures how fast
//! the truncation and quadrature errors vanish as `h -> 0`.

use crate::error::{Error, Result};
use crate::lattice::{d2q9, d3q19, Stencil};
use crate::scaling::ScalingParams;

/// Local macroscopic state: number density and flow velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    pub n: f64,
    pub u: [f64; 3],
}

impl MacroState {
    pub fn new(n: f64, u: [f64; 3]) -> Self {
        MacroState { n, u }
    }

    /// Rest state at density `n`.
    pub fn at_rest(n: f64) -> Self {
        MacroState { n, u: [0.0; 3] }
    }
}

fn dot(a: [f64; 3], b: [f64; 3], d: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..d {
        s += a[k] * b[k];
    }
    s
}

/// Normalization constant `(2 pi / 3)^{d/2}`.
fn gauss_norm(d: usize) -> f64 {
    let c = 2.0 * std::f64::consts::PI / 3.0;
    match d {
        2 => c,
        3 => c * c.sqrt(),
        _ => panic!("dimension must be 2 or 3, got {d}"),
    }
}

fn h_pow_d(h: f64, d: usize) -> f64 {
    match d {
        2 => h * h,
        3 => h * h * h,
        _ => panic!("dimension must be 2 or 3, got {d}"),
    }
}

/// Second-order expansion bracket `1 + 3 x + 9/2 x^2 - 3/2 s` with
/// `x = e . (h u)` and `s = |h u|^2`. Shared by the truncated Maxwellian,
/// the lattice equilibrium and the collision kernel so that all three
/// agree bitwise.
#[inline(always)]
pub(crate) fn expansion_bracket(eu: f64, uu: f64) -> f64 {
    1.0 + 3.0 * eu + 4.5 * (eu * eu) - 1.5 * uu
}

/// Full parametrized Maxwellian at physical velocity `v`.
pub fn maxwellian_full(state: &MacroState, v: [f64; 3], params: &ScalingParams, d: usize) -> f64 {
    let h = params.h;
    let vtil = [h * v[0], h * v[1], h * v[2]];
    maxwellian_full_scaled(state, vtil, params, d)
}

/// Full Maxwellian evaluated in the scaled variable `vtil = h v`.
pub(crate) fn maxwellian_full_scaled(
    state: &MacroState,
    vtil: [f64; 3],
    params: &ScalingParams,
    d: usize,
) -> f64 {
    let h = params.h;
    let uhat = [h * state.u[0], h * state.u[1], h * state.u[2]];
    let diff = [vtil[0] - uhat[0], vtil[1] - uhat[1], vtil[2] - uhat[2]];
    let pref = state.n * h_pow_d(h, d) / gauss_norm(d);
    pref * (-1.5 * dot(diff, diff, d)).exp()
}

/// Truncated Maxwellian in the scaled variable: the rest-state Gaussian
/// times the second-order expansion bracket. Differs from the full
/// Maxwellian at matching velocity by `O(h^{d+3})`.
pub fn maxwellian_truncated(
    state: &MacroState,
    vtil: [f64; 3],
    params: &ScalingParams,
    d: usize,
) -> f64 {
    let h = params.h;
    let uhat = [h * state.u[0], h * state.u[1], h * state.u[2]];
    let pref = state.n * h_pow_d(h, d) / gauss_norm(d);
    let gauss = (-1.5 * dot(vtil, vtil, d)).exp();
    pref * gauss * expansion_bracket(dot(vtil, uhat, d), dot(uhat, uhat, d))
}

/// Quadrature weight function `(2 pi / 3)^{d/2} h^{-d} exp(3/2 |vtil|^2)`,
/// the reciprocal of the rest-state Gaussian. Multiplying a Maxwellian by
/// `w` strips the `h`-dependent prefactor: `w(vtil_i) * M` stays bounded
/// as `h -> 0`.
pub fn weight_function(vtil: [f64; 3], params: &ScalingParams, d: usize) -> f64 {
    gauss_norm(d) / h_pow_d(params.h, d) * (1.5 * dot(vtil, vtil, d)).exp()
}

/// Lattice equilibrium populations `t_i n (1 + 3 e.uh + 9/2 (e.uh)^2
/// - 3/2 |uh|^2)` with `uh = h u`, written into `out`.
///
/// These are the weighted truncated Maxwellians at the stencil nodes:
/// `out[i] = t_i w(e_i) Mtrunc(e_i)` up to rounding. Density must be
/// positive for the populations to be meaningful.
pub fn lattice_equilibrium_into(
    state: &MacroState,
    stencil: &Stencil,
    params: &ScalingParams,
    out: &mut [f64],
) {
    assert_eq!(out.len(), stencil.q, "output slice length mismatch");
    let h = params.h;
    let uhat = [h * state.u[0], h * state.u[1], h * state.u[2]];
    let uu = dot(uhat, uhat, stencil.d);
    for i in 0..stencil.q {
        let eu = dot(stencil.e_f64(i), uhat, stencil.d);
        out[i] = stencil.weights[i] * state.n * expansion_bracket(eu, uu);
    }
}

/// Allocating variant of [`lattice_equilibrium_into`].
pub fn lattice_equilibrium(state: &MacroState, stencil: &Stencil, params: &ScalingParams) -> Vec<f64> {
    let mut out = vec![0.0; stencil.q];
    lattice_equilibrium_into(state, stencil, params, &mut out);
    out
}

/// Outcome of a log-log order fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeFit {
    /// Every sampled error was exactly zero; there is no order to fit.
    Exact,
    /// Least-squares slope of `log(error)` against `log(h)`.
    Slope(f64),
}

impl SlopeFit {
    /// The fitted order, or `None` for exact agreement.
    pub fn order(&self) -> Option<f64> {
        match self {
            SlopeFit::Exact => None,
            SlopeFit::Slope(p) => Some(*p),
        }
    }
}

impl std::fmt::Display for SlopeFit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlopeFit::Exact => write!(f, "exact"),
            SlopeFit::Slope(p) => write!(f, "{p:.3}"),
        }
    }
}

/// Fits `error ~ C h^p` by least squares in log-log coordinates.
/// Reports [`SlopeFit::Exact`] if any sampled error is zero (the data is
/// then below floating-point resolution and a fit would be noise).
pub fn fit_order(h_list: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if h_list.len() != errors.len() || h_list.len() < 2 {
        return Err(Error::dims(format!(
            "order fit needs matching lists of at least 2 samples, got {} and {}",
            h_list.len(),
            errors.len()
        )));
    }
    if errors.contains(&0.0) {
        return Ok(SlopeFit::Exact);
    }
    if errors.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::domain("order fit requires positive finite errors"));
    }
    let xs: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    Ok(SlopeFit::Slope(sxy / sxx))
}

/// Measured decay orders of the three equilibrium truncation errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderSlopes {
    /// Pointwise gap `|M_full - M_trunc|` at the probe velocity;
    /// decays like `h^{d+3}`.
    pub full_vs_truncated: SlopeFit,
    /// Relative density defect of the stencil quadrature applied to the
    /// full Maxwellian; decays at least like `h^3`.
    pub density_quadrature: SlopeFit,
    /// Relative momentum defect of the same quadrature; decays at least
    /// like `h^2`.
    pub momentum_quadrature: SlopeFit,
}

/// Samples the equilibrium truncation errors over `h_list` and fits their
/// decay orders. The probe velocity `vtil` is where the pointwise gap is
/// evaluated; the quadrature defects are summed over the built-in stencil
/// for dimension `d`.
///
/// A state at rest makes all three errors vanish identically (the
/// truncation is exact and the quadrature reproduces the rest Gaussian by
/// construction), reported as [`SlopeFit::Exact`].
pub fn remainder_probe(
    state: &MacroState,
    vtil: [f64; 3],
    d: usize,
    h_list: &[f64],
) -> Result<RemainderSlopes> {
    if d != 2 && d != 3 {
        return Err(Error::dims(format!("dimension must be 2 or 3, got {d}")));
    }
    if !(state.n > 0.0) {
        return Err(Error::domain(format!("density must be positive, got {}", state.n)));
    }
    if h_list.len() < 3 {
        return Err(Error::domain(format!(
            "remainder probe needs at least 3 spacings, got {}",
            h_list.len()
        )));
    }
    for w in h_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::domain("spacings must be strictly decreasing"));
        }
    }
    if !(h_list[h_list.len() - 1] > 0.0) {
        return Err(Error::domain("spacings must be positive"));
    }

    let stencil = if d == 2 { d2q9() } else { d3q19() };
    let mut err_point = Vec::with_capacity(h_list.len());
    let mut err_density = Vec::with_capacity(h_list.len());
    let mut err_momentum = Vec::with_capacity(h_list.len());

    for &h in h_list {
        let params = crate::scaling::make_scaling(1.0, h)?;
        let full = maxwellian_full_scaled(state, vtil, &params, d);
        let trunc = maxwellian_truncated(state, vtil, &params, d);
        err_point.push((full - trunc).abs());

        // Quadrature defects, written through exp(x) - 1 so that the
        // exactly-conserved part cancels analytically instead of by
        // floating-point subtraction. With uh = h u,
        //   w(e_i) M_full(e_i/h) = n exp(3 e_i.uh - 3/2 |uh|^2),
        // so the relative density defect is |sum_i t_i (exp(delta_i) - 1)|
        // and the momentum defect is u - sum_i t_i (e_i/h) (exp(delta_i) - 1).
        let uhat = [h * state.u[0], h * state.u[1], h * state.u[2]];
        let uu = dot(uhat, uhat, d);
        let mut density_defect = 0.0;
        let mut momentum_defect = [0.0f64; 3];
        for i in 0..stencil.q {
            let e = stencil.e_f64(i);
            let delta = 3.0 * dot(e, uhat, d) - 1.5 * uu;
            let g = stencil.weights[i] * delta.exp_m1();
            density_defect += g;
            for a in 0..d {
                momentum_defect[a] += g * (e[a] / h);
            }
        }
        err_density.push(density_defect.abs());
        let mut diff2 = 0.0;
        let mut uscale2 = 0.0;
        for a in 0..d {
            let r = state.u[a] - momentum_defect[a];
            diff2 += r * r;
            uscale2 += state.u[a] * state.u[a];
        }
        if uscale2 == 0.0 {
            err_momentum.push(diff2.sqrt());
        } else {
            err_momentum.push(diff2.sqrt() / uscale2.sqrt());
        }
    }

    Ok(RemainderSlopes {
        full_vs_truncated: fit_order(h_list, &err_point)?,
        density_quadrature: fit_order(h_list, &err_density)?,
        momentum_quadrature: fit_order(h_list, &err_momentum)?,
    })
}

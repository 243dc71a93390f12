//! BGK collide-and-stream time stepping.
//!
//! One step relaxes every node toward its local lattice equilibrium,
//! `f_i <- f_i - omega (f_i - feq_i)`, then streams the result one
//! template velocity. The update is organized so that results are
//! bitwise reproducible for any worker count: collision is parallel
//! over disjoint node ranges, streaming over disjoint velocity blocks,
//! every output value is a pure function of the previous field, and all
//! reductions (moments per node, diagnostics) run in a fixed order.

use crate::equilibrium::expansion_bracket;
use crate::error::{Error, Result};
use crate::grid::{stream_into, Grid, PopulationField};
use crate::lattice::Stencil;
use crate::scaling::ScalingParams;
use std::ops::Range;

/// Relaxes one node's populations toward local equilibrium in place.
/// Fails if the node density is not positive; callers that know the node
/// location should attach it (see [`Stepper::step_in_place`]).
pub fn collide(f: &mut [f64], stencil: &Stencil, params: &ScalingParams) -> Result<()> {
    if f.len() != stencil.q {
        return Err(Error::dims(format!(
            "node has {} populations, stencil {} needs {}",
            f.len(),
            stencil.name,
            stencil.q
        )));
    }
    let mut n = 0.0;
    let mut mom = [0.0f64; 3];
    for i in 0..stencil.q {
        n += f[i];
        let e = stencil.e_f64(i);
        mom[0] += e[0] * f[i];
        mom[1] += e[1] * f[i];
        mom[2] += e[2] * f[i];
    }
    if !(n > 0.0) {
        return Err(Error::domain(format!("density must be positive, got {n}")));
    }
    let inv = 1.0 / n;
    let ux = mom[0] * inv;
    let uy = mom[1] * inv;
    let uz = mom[2] * inv;
    let usq = ux * ux + uy * uy + uz * uz;
    let omega = params.omega;
    for i in 0..stencil.q {
        let e = stencil.e_f64(i);
        let eu = e[0] * ux + e[1] * uy + e[2] * uz;
        let feq = stencil.weights[i] * n * expansion_bracket(eu, usq);
        f[i] -= omega * (f[i] - feq);
    }
    Ok(())
}

fn chunk_bounds(len: usize, workers: usize) -> Vec<usize> {
    let w = workers.clamp(1, len.max(1));
    let base = len / w;
    let rem = len % w;
    let mut bounds = Vec::with_capacity(w + 1);
    bounds.push(0);
    let mut acc = 0;
    for i in 0..w {
        acc += base + usize::from(i < rem);
        bounds.push(acc);
    }
    bounds
}

fn split_by_bounds<'a>(mut data: &'a mut [f64], bounds: &[usize]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(bounds.len() - 1);
    let mut prev = 0;
    for &b in &bounds[1..] {
        let (head, tail) = data.split_at_mut(b - prev);
        out.push(head);
        data = tail;
        prev = b;
    }
    out
}

/// Splits a per-velocity-block buffer (`q` blocks of `nodes` values) into
/// per-worker lists of subrange slices, one per velocity block.
fn split_blocks<'a>(
    mut data: &'a mut [f64],
    q: usize,
    bounds: &[usize],
) -> Vec<Vec<&'a mut [f64]>> {
    let workers = bounds.len() - 1;
    let mut out: Vec<Vec<&'a mut [f64]>> = (0..workers).map(|_| Vec::with_capacity(q)).collect();
    for _ in 0..q {
        let mut prev = 0;
        for (w, &b) in bounds[1..].iter().enumerate() {
            let (head, tail) = data.split_at_mut(b - prev);
            out[w].push(head);
            data = tail;
            prev = b;
        }
    }
    out
}

struct MomentJob<'a> {
    range: Range<usize>,
    n: &'a mut [f64],
    ux: &'a mut [f64],
    uy: &'a mut [f64],
    uz: &'a mut [f64],
    usq: &'a mut [f64],
}

/// Accumulates density and template-unit velocity for the job's node
/// range. Returns the first node with non-positive density, if any.
fn moments_kernel(src: &PopulationField, stencil: &Stencil, job: MomentJob<'_>) -> Option<(usize, f64)> {
    let MomentJob {
        range,
        n,
        ux,
        uy,
        uz,
        usq,
    } = job;
    n.fill(0.0);
    ux.fill(0.0);
    uy.fill(0.0);
    uz.fill(0.0);
    for i in 0..stencil.q {
        let e = stencil.e_f64(i);
        let block = &src.pop(i)[range.clone()];
        for (j, &f) in block.iter().enumerate() {
            n[j] += f;
            ux[j] += e[0] * f;
            uy[j] += e[1] * f;
            uz[j] += e[2] * f;
        }
    }
    for j in 0..n.len() {
        if !(n[j] > 0.0) {
            return Some((range.start + j, n[j]));
        }
        let inv = 1.0 / n[j];
        ux[j] *= inv;
        uy[j] *= inv;
        uz[j] *= inv;
        usq[j] = ux[j] * ux[j] + uy[j] * uy[j] + uz[j] * uz[j];
    }
    None
}

struct RelaxJob<'a> {
    range: Range<usize>,
    out: Vec<&'a mut [f64]>,
}

/// Writes post-collision populations for the job's node range, reading
/// the shared moment buffers. Must match [`collide`] expression for
/// expression.
#[allow(clippy::too_many_arguments)]
fn relax_kernel(
    src: &PopulationField,
    stencil: &Stencil,
    omega: f64,
    n: &[f64],
    ux: &[f64],
    uy: &[f64],
    uz: &[f64],
    usq: &[f64],
    job: RelaxJob<'_>,
) {
    let RelaxJob { range, mut out } = job;
    for i in 0..stencil.q {
        let e = stencil.e_f64(i);
        let t = stencil.weights[i];
        let src_block = &src.pop(i)[range.clone()];
        let dst_block = &mut out[i];
        for j in 0..src_block.len() {
            let node = range.start + j;
            let eu = e[0] * ux[node] + e[1] * uy[node] + e[2] * uz[node];
            let feq = t * n[node] * expansion_bracket(eu, usq[node]);
            dst_block[j] = src_block[j] - omega * (src_block[j] - feq);
        }
    }
}

/// Reusable buffers for time stepping one field size.
pub struct Stepper {
    workers: usize,
    scratch: PopulationField,
    n: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
    uz: Vec<f64>,
    usq: Vec<f64>,
}

impl Stepper {
    /// Allocates buffers for fields on `grid` with `q` populations,
    /// using `workers` threads per phase (1 = run inline).
    pub fn new(grid: Grid, q: usize, workers: usize) -> Stepper {
        let nodes = grid.nodes();
        Stepper {
            workers: workers.max(1),
            scratch: PopulationField::zeros(grid, q),
            n: vec![0.0; nodes],
            ux: vec![0.0; nodes],
            uy: vec![0.0; nodes],
            uz: vec![0.0; nodes],
            usq: vec![0.0; nodes],
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Advances the field by one step: collide into scratch, stream
    /// scratch back into the field.
    pub fn step_in_place(
        &mut self,
        field: &mut PopulationField,
        stencil: &Stencil,
        params: &ScalingParams,
    ) -> Result<()> {
        if field.q != stencil.q || field.grid.d != stencil.d {
            return Err(Error::dims(format!(
                "field ({}d, q={}) does not match stencil {}",
                field.grid.d, field.q, stencil.name
            )));
        }
        if field.grid != self.scratch.grid || field.q != self.scratch.q {
            return Err(Error::dims("stepper buffers were built for a different field"));
        }
        let nodes = field.grid.nodes();
        let bounds = chunk_bounds(nodes, self.workers);

        // phase 1: moments per node
        let mut jobs: Vec<MomentJob> = {
            let n_chunks = split_by_bounds(&mut self.n, &bounds);
            let ux_chunks = split_by_bounds(&mut self.ux, &bounds);
            let uy_chunks = split_by_bounds(&mut self.uy, &bounds);
            let uz_chunks = split_by_bounds(&mut self.uz, &bounds);
            let usq_chunks = split_by_bounds(&mut self.usq, &bounds);
            let mut jobs = Vec::new();
            for ((((n, ux), uy), uz), usq) in n_chunks
                .into_iter()
                .zip(ux_chunks)
                .zip(uy_chunks)
                .zip(uz_chunks)
                .zip(usq_chunks)
            {
                let w = jobs.len();
                jobs.push(MomentJob {
                    range: bounds[w]..bounds[w + 1],
                    n,
                    ux,
                    uy,
                    uz,
                    usq,
                });
            }
            jobs
        };
        let bad_node = if self.workers == 1 || jobs.len() == 1 {
            let mut bad = None;
            for job in jobs.drain(..) {
                bad = bad.or(moments_kernel(field, stencil, job));
            }
            bad
        } else {
            let src = &*field;
            std::thread::scope(|scope| {
                let handles: Vec<_> = jobs
                    .drain(..)
                    .map(|job| scope.spawn(move || moments_kernel(src, stencil, job)))
                    .collect();
                let mut bad = None;
                for h in handles {
                    bad = bad.or(h.join().expect("moment worker panicked"));
                }
                bad
            })
        };
        if let Some((node, density)) = bad_node {
            let c = field.grid.node_coords(node);
            return Err(Error::DegenerateDensity {
                density,
                ix: c[0],
                iy: c[1],
                iz: c[2],
            });
        }

        // phase 2: relax into scratch
        {
            let q = field.q;
            let omega = params.omega;
            let (n, ux, uy, uz, usq) = (
                &self.n[..],
                &self.ux[..],
                &self.uy[..],
                &self.uz[..],
                &self.usq[..],
            );
            let mut jobs: Vec<RelaxJob> = split_blocks(self.scratch.as_mut_slice(), q, &bounds)
                .into_iter()
                .enumerate()
                .map(|(w, out)| RelaxJob {
                    range: bounds[w]..bounds[w + 1],
                    out,
                })
                .collect();
            if self.workers == 1 || jobs.len() == 1 {
                for job in jobs.drain(..) {
                    relax_kernel(field, stencil, omega, n, ux, uy, uz, usq, job);
                }
            } else {
                let src = &*field;
                std::thread::scope(|scope| {
                    for job in jobs.drain(..) {
                        scope.spawn(move || {
                            relax_kernel(src, stencil, omega, n, ux, uy, uz, usq, job)
                        });
                    }
                });
            }
        }

        // phase 3: stream scratch back into the field
        if self.workers == 1 {
            stream_into(&self.scratch, stencil, field)?;
        } else {
            stream_parallel(&self.scratch, stencil, field, self.workers)?;
        }
        debug_assert!(field.all_finite(), "populations must stay finite");
        Ok(())
    }
}

/// Streaming with velocity blocks distributed round-robin over workers.
/// Identical output to [`stream_into`]; only the work division differs.
fn stream_parallel(
    src: &PopulationField,
    stencil: &Stencil,
    dst: &mut PopulationField,
    workers: usize,
) -> Result<()> {
    if dst.grid != src.grid || dst.q != src.q || src.q != stencil.q || src.grid.d != stencil.d {
        return Err(Error::dims("stream: fields and stencil do not match"));
    }
    let nodes = src.grid.nodes();
    let blocks: Vec<&mut [f64]> = dst.as_mut_slice().chunks_mut(nodes).collect();
    let mut per_worker: Vec<Vec<(usize, &mut [f64])>> = (0..workers).map(|_| Vec::new()).collect();
    for (i, block) in blocks.into_iter().enumerate() {
        per_worker[i % workers].push((i, block));
    }
    std::thread::scope(|scope| {
        for list in per_worker.drain(..) {
            scope.spawn(move || {
                for (i, block) in list {
                    stream_one_velocity(src, stencil, i, block);
                }
            });
        }
    });
    Ok(())
}

/// Copies one velocity block shifted by its template velocity.
fn stream_one_velocity(src: &PopulationField, stencil: &Stencil, i: usize, dst_block: &mut [f64]) {
    let n = src.grid.n;
    let planes = if src.grid.d == 2 { 1 } else { n };
    let e = stencil.velocities[i];
    let sx = e[0].rem_euclid(n as i32) as usize;
    let src_block = src.pop(i);
    for iz in 0..planes {
        let src_iz = (iz + planes - e[2].rem_euclid(planes as i32) as usize) % planes;
        for iy in 0..n {
            let src_iy = (iy + n - e[1].rem_euclid(n as i32) as usize) % n;
            let dst_row = &mut dst_block[(iz * n + iy) * n..(iz * n + iy) * n + n];
            let src_row = &src_block[(src_iz * n + src_iy) * n..(src_iz * n + src_iy) * n + n];
            if sx == 0 {
                dst_row.copy_from_slice(src_row);
            } else {
                dst_row[sx..].copy_from_slice(&src_row[..n - sx]);
                dst_row[..sx].copy_from_slice(&src_row[n - sx..]);
            }
        }
    }
}

/// One collide-and-stream step as a pure function of the input field.
pub fn step(
    field: &PopulationField,
    stencil: &Stencil,
    params: &ScalingParams,
) -> Result<PopulationField> {
    let mut out = field.clone();
    let mut stepper = Stepper::new(field.grid, field.q, 1);
    stepper.step_in_place(&mut out, stencil, params)?;
    Ok(out)
}

/// A run callback: receives the step index, physical time, and the
/// current field.
pub type ObserverFn<'a> = Box<dyn FnMut(u64, f64, &PopulationField) + 'a>;

/// A callback invoked during a run at a fixed step stride.
pub struct Observer<'a> {
    pub stride: u64,
    pub callback: ObserverFn<'a>,
}

impl<'a> Observer<'a> {
    /// Calls `callback` every `stride` steps (and always at the first and
    /// final step of the run).
    pub fn every(stride: u64, callback: impl FnMut(u64, f64, &PopulationField) + 'a) -> Self {
        Observer {
            stride: stride.max(1),
            callback: Box::new(callback),
        }
    }
}

/// Knobs for [`run_until`].
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Worker threads for the step phases.
    pub workers: usize,
    /// Abort when the sup norm exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// How often (in steps) the blow-up guard samples the field.
    pub check_stride: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            blowup_factor: 1e6,
            check_stride: 32,
        }
    }
}

/// What a completed run did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub steps: u64,
    pub final_time: f64,
}

/// Advances the field to `t_end` in steps of `dt = dx^2`, watching for
/// blow-up and invoking observers at their strides. The step count is
/// `round(t_end / dt)` and must stay below 1e9.
pub fn run_until(
    field: &mut PopulationField,
    stencil: &Stencil,
    params: &ScalingParams,
    t_end: f64,
    opts: &RunOptions,
    observers: &mut [Observer],
) -> Result<RunStats> {
    if field.grid.dx != params.h {
        return Err(Error::dims(format!(
            "grid spacing {} does not match scaling h = {}",
            field.grid.dx, params.h
        )));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::domain(format!("t_end must be nonnegative, got {t_end}")));
    }
    let dt = field.grid.dt;
    let raw_steps = t_end / dt;
    if raw_steps > 1e9 {
        return Err(Error::StepBudget { steps: raw_steps });
    }
    let steps = (raw_steps + 0.5).floor() as u64;

    let initial_sup = field.sup_norm().max(f64::MIN_POSITIVE);
    let limit = opts.blowup_factor * initial_sup;
    let mut stepper = Stepper::new(field.grid, field.q, opts.workers);

    let notify = |k: u64, f: &PopulationField, obs: &mut [Observer]| {
        for o in obs.iter_mut() {
            if k.is_multiple_of(o.stride) || k == steps {
                (o.callback)(k, k as f64 * dt, f);
            }
        }
    };
    notify(0, field, observers);
    for k in 1..=steps {
        stepper.step_in_place(field, stencil, params)?;
        if k % opts.check_stride.max(1) == 0 || k == steps {
            let sup = field.sup_norm();
            if !sup.is_finite() || sup > limit {
                return Err(Error::BlowUp {
                    step: k,
                    norm: sup,
                    limit,
                });
            }
        }
        if k > 0 {
            notify(k, field, observers);
        }
    }
    Ok(RunStats {
        steps,
        final_time: steps as f64 * dt,
    })
}

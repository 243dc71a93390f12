//! Periodic lattice and population storage.
//!
//! Nodes live at `x = idx * dx` in a periodic box of the given extent,
//! with the x index fastest in memory. Populations are stored one
//! contiguous block per velocity, so streaming is a batch of row copies
//! and the collision kernel sweeps each block linearly.

use crate::error::{Error, Result};
use crate::lattice::Stencil;
use std::io::Write;
use std::path::Path;

/// A cubic periodic lattice under diffusive scaling: `dx = extent / n`,
/// `dt = dx^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Spatial dimension, 2 or 3.
    pub d: usize,
    /// Nodes per axis.
    pub n: usize,
    /// Physical box length per axis.
    pub extent: f64,
    /// Lattice spacing.
    pub dx: f64,
    /// Time step.
    pub dt: f64,
}

/// Builds a periodic grid with `n` nodes per axis. At least four nodes
/// per axis are required so every stencil neighborhood is proper.
pub fn make_grid(d: usize, n: usize, extent: f64) -> Result<Grid> {
    if d != 2 && d != 3 {
        return Err(Error::dims(format!("grid dimension must be 2 or 3, got {d}")));
    }
    if n < 4 {
        return Err(Error::domain(format!("need at least 4 nodes per axis, got {n}")));
    }
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::domain(format!("extent must be positive, got {extent}")));
    }
    let dx = extent / n as f64;
    Ok(Grid {
        d,
        n,
        extent,
        dx,
        dt: dx * dx,
    })
}

impl Grid {
    /// Total node count `n^d`.
    pub fn nodes(&self) -> usize {
        match self.d {
            2 => self.n * self.n,
            _ => self.n * self.n * self.n,
        }
    }

    /// Linear index of the node at integer coordinates, x fastest.
    #[inline]
    pub fn node_index(&self, c: [usize; 3]) -> usize {
        match self.d {
            2 => c[1] * self.n + c[0],
            _ => (c[2] * self.n + c[1]) * self.n + c[0],
        }
    }

    /// Integer coordinates of a linear node index.
    #[inline]
    pub fn node_coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        match self.d {
            2 => [idx % n, idx / n, 0],
            _ => [idx % n, (idx / n) % n, idx / (n * n)],
        }
    }

    /// Physical position of a node.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.node_coords(idx);
        [
            c[0] as f64 * self.dx,
            c[1] as f64 * self.dx,
            c[2] as f64 * self.dx,
        ]
    }
}

/// Populations for every node and velocity: block `i` holds `f_i` over
/// all nodes in linear node order.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationField {
    pub grid: Grid,
    pub q: usize,
    data: Vec<f64>,
}

impl PopulationField {
    pub fn zeros(grid: Grid, q: usize) -> Self {
        PopulationField {
            grid,
            q,
            data: vec![0.0; q * grid.nodes()],
        }
    }

    /// All populations of one velocity, in node order.
    #[inline]
    pub fn pop(&self, i: usize) -> &[f64] {
        let nodes = self.grid.nodes();
        &self.data[i * nodes..(i + 1) * nodes]
    }

    #[inline]
    pub fn pop_mut(&mut self, i: usize) -> &mut [f64] {
        let nodes = self.grid.nodes();
        &mut self.data[i * nodes..(i + 1) * nodes]
    }

    /// Gathers the `q` populations of one node into `out`.
    #[inline]
    pub fn node_populations(&self, node: usize, out: &mut [f64]) {
        let nodes = self.grid.nodes();
        for i in 0..self.q {
            out[i] = self.data[i * nodes + node];
        }
    }

    /// Overwrites the `q` populations of one node.
    #[inline]
    pub fn set_node_populations(&mut self, node: usize, values: &[f64]) {
        let nodes = self.grid.nodes();
        for i in 0..self.q {
            self.data[i * nodes + node] = values[i];
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Largest absolute population value.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Global mass `sum_{x,i} f_i(x)`, summed in fixed order.
    pub fn total_mass(&self) -> f64 {
        let mut s = 0.0;
        for v in &self.data {
            s += v;
        }
        s
    }

    /// Global momentum in template units, `sum_{x,i} e_i f_i(x)`.
    /// Multiply by `1/h` for the physical momentum.
    pub fn total_momentum_template(&self, stencil: &Stencil) -> [f64; 3] {
        let nodes = self.grid.nodes();
        let mut mom = [0.0f64; 3];
        for i in 0..self.q {
            let e = stencil.e_f64(i);
            let mut s = 0.0;
            for v in &self.data[i * nodes..(i + 1) * nodes] {
                s += v;
            }
            for a in 0..stencil.d {
                mom[a] += e[a] * s;
            }
        }
        mom
    }
}

fn check_compatible(f: &PopulationField, stencil: &Stencil) -> Result<()> {
    if f.q != stencil.q {
        return Err(Error::dims(format!(
            "field has {} populations, stencil {} has {}",
            f.q, stencil.name, stencil.q
        )));
    }
    if f.grid.d != stencil.d {
        return Err(Error::dims(format!(
            "grid dimension {} does not match stencil {}",
            f.grid.d, stencil.name
        )));
    }
    Ok(())
}

/// Moves every population one template velocity along the grid:
/// `dst_i(x) = src_i(x - e_i)` with periodic wraparound. A pure
/// permutation of values; nothing is created or destroyed.
pub fn stream_into(src: &PopulationField, stencil: &Stencil, dst: &mut PopulationField) -> Result<()> {
    check_compatible(src, stencil)?;
    if dst.grid != src.grid || dst.q != src.q {
        return Err(Error::dims("destination field does not match source"));
    }
    let n = src.grid.n;
    let planes = if src.grid.d == 2 { 1 } else { n };
    for i in 0..stencil.q {
        let e = stencil.velocities[i];
        let sx = e[0].rem_euclid(n as i32) as usize;
        let src_block = src.pop(i);
        let dst_block = dst.pop_mut(i);
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
    Ok(())
}

/// Allocating variant of [`stream_into`].
pub fn stream(src: &PopulationField, stencil: &Stencil) -> Result<PopulationField> {
    let mut dst = PopulationField::zeros(src.grid, src.q);
    stream_into(src, stencil, &mut dst)?;
    Ok(dst)
}

/// Writes all populations to CSV: one row per node in linear node order,
/// integer coordinates first, then `f0..f{q-1}` with 17 significant
/// digits (so values round-trip exactly through parsing).
pub fn write_snapshot_csv(f: &PopulationField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    let mut header = String::from("ix,iy");
    if f.grid.d == 3 {
        header.push_str(",iz");
    }
    for i in 0..f.q {
        header.push_str(&format!(",f{i}"));
    }
    writeln!(out, "{header}")?;
    let nodes = f.grid.nodes();
    let mut row = Vec::with_capacity(f.q);
    for node in 0..nodes {
        let c = f.grid.node_coords(node);
        row.clear();
        for i in 0..f.q {
            row.push(format!("{:.16e}", f.pop(i)[node]));
        }
        if f.grid.d == 3 {
            writeln!(out, "{},{},{},{}", c[0], c[1], c[2], row.join(","))?;
        } else {
            writeln!(out, "{},{},{}", c[0], c[1], row.join(","))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{d2q9, d3q19, Stencil};
    use rand::{Rng, SeedableRng};

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        let scale = a.abs().max(b.abs()).max(1e-300);
        (a - b).abs() <= tol * scale
    }

    fn random_field(grid: Grid, q: usize, seed: u64) -> PopulationField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = PopulationField::zeros(grid, q);
        for i in 0..q {
            for v in f.pop_mut(i) {
                *v = rng.gen_range(0.01..1.0);
            }
        }
        f
    }

    #[test]
    fn grid_reference_values() {
        let g = make_grid(2, 10, 1.0).unwrap();
        assert!(rel_close(g.dx, 0.1, 1e-15));
        assert!(rel_close(g.dt, 0.01, 1e-15));
        assert_eq!(g.nodes(), 100);

        let g = make_grid(3, 16, 2.0 * std::f64::consts::PI).unwrap();
        assert!(rel_close(g.dx, std::f64::consts::PI / 8.0, 1e-15));
        assert_eq!(g.nodes(), 4096);
    }

    #[test]
    fn doubling_resolution_quarters_the_time_step() {
        let coarse = make_grid(2, 12, 1.7).unwrap();
        let fine = make_grid(2, 24, 1.7).unwrap();
        assert_eq!(coarse.dt, 4.0 * fine.dt);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(make_grid(2, 3, 1.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
        assert!(make_grid(1, 8, 1.0).is_err());
        assert!(make_grid(2, 8, 0.0).is_err());
        assert!(make_grid(2, 8, -1.0).is_err());
    }

    #[test]
    fn node_indexing_round_trips() {
        for (d, n) in [(2usize, 5usize), (3, 4)] {
            let g = make_grid(d, n, 1.0).unwrap();
            for idx in 0..g.nodes() {
                let c = g.node_coords(idx);
                assert_eq!(g.node_index(c), idx);
                for a in d..3 {
                    assert_eq!(c[a], 0);
                }
            }
            // x is the fastest index
            assert_eq!(g.node_coords(1), [1, 0, 0]);
            assert_eq!(g.node_coords(n), [0, 1, 0]);
        }
    }

    #[test]
    fn node_positions_scale_with_dx() {
        let g = make_grid(3, 8, 2.0).unwrap();
        let idx = g.node_index([1, 2, 3]);
        let p = g.position(idx);
        assert!(rel_close(p[0], 0.25, 1e-15));
        assert!(rel_close(p[1], 0.5, 1e-15));
        assert!(rel_close(p[2], 0.75, 1e-15));
    }

    #[test]
    fn streaming_moves_a_pulse_and_wraps() {
        let s = d2q9();
        let g = make_grid(2, 8, 1.0).unwrap();
        // velocity 1 is (1, 0, 0)
        let mut f = PopulationField::zeros(g, s.q);
        f.pop_mut(1)[g.node_index([0, 0, 0])] = 1.0;
        f.pop_mut(1)[g.node_index([7, 3, 0])] = 2.0;
        let out = stream(&f, &s).unwrap();
        assert_eq!(out.pop(1)[g.node_index([1, 0, 0])], 1.0);
        assert_eq!(out.pop(1)[g.node_index([0, 3, 0])], 2.0);
        assert_eq!(out.pop(1)[g.node_index([0, 0, 0])], 0.0);

        // velocity 4 is (0, -1, 0): wraps downward
        let mut f = PopulationField::zeros(g, s.q);
        f.pop_mut(4)[g.node_index([5, 0, 0])] = 3.0;
        let out = stream(&f, &s).unwrap();
        assert_eq!(out.pop(4)[g.node_index([5, 7, 0])], 3.0);
    }

    #[test]
    fn streaming_is_a_permutation() {
        for (s, d, n) in [(d2q9(), 2usize, 6usize), (d3q19(), 3, 5)] {
            let g = make_grid(d, n, 1.0).unwrap();
            let f = random_field(g, s.q, 42);
            let out = stream(&f, &s).unwrap();
            for i in 0..s.q {
                let sum_before: f64 = f.pop(i).iter().sum();
                let sum_after: f64 = out.pop(i).iter().sum();
                assert!(rel_close(sum_before, sum_after, 1e-13), "{} i={i}", s.name);
                let mut a: Vec<f64> = f.pop(i).to_vec();
                let mut b: Vec<f64> = out.pop(i).to_vec();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                assert_eq!(a, b, "{} i={i}: not a permutation", s.name);
            }
        }
    }

    #[test]
    fn streaming_against_negated_stencil_is_the_inverse() {
        let s = d3q19();
        let neg = Stencil::new(
            "d3q19-neg",
            3,
            s.velocities.iter().map(|e| [-e[0], -e[1], -e[2]]).collect(),
            s.weights.clone(),
        )
        .unwrap();
        let g = make_grid(3, 6, 1.0).unwrap();
        let f = random_field(g, s.q, 17);
        let there = stream(&f, &s).unwrap();
        let back = stream(&there, &neg).unwrap();
        assert_eq!(back.as_slice(), f.as_slice());
    }

    #[test]
    fn full_cycle_of_streams_returns_the_field() {
        let s = d2q9();
        let g = make_grid(2, s.q, 1.0).unwrap(); // 9 nodes per axis
        let f = random_field(g, s.q, 3);
        let mut cur = f.clone();
        for _ in 0..g.n {
            cur = stream(&cur, &s).unwrap();
        }
        assert_eq!(cur.as_slice(), f.as_slice());
    }

    #[test]
    fn stream_checks_compatibility() {
        let s = d2q9();
        let g3 = make_grid(3, 5, 1.0).unwrap();
        let f = PopulationField::zeros(g3, s.q);
        assert!(stream(&f, &s).is_err());
        let g2 = make_grid(2, 5, 1.0).unwrap();
        let f = PopulationField::zeros(g2, 5);
        assert!(stream(&f, &s).is_err());
    }

    #[test]
    fn snapshot_csv_round_trips() {
        let s = d2q9();
        let g = make_grid(2, 4, 1.0).unwrap();
        let f = random_field(g, s.q, 11);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        write_snapshot_csv(&f, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "ix,iy,f0,f1,f2,f3,f4,f5,f6,f7,f8"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), g.nodes());
        // first two rows are nodes (0,0) and (1,0): x fastest
        assert!(rows[0].starts_with("0,0,"));
        assert!(rows[1].starts_with("1,0,"));
        for (node, row) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells.len(), 2 + s.q);
            let c = g.node_coords(node);
            assert_eq!(cells[0].parse::<usize>().unwrap(), c[0]);
            assert_eq!(cells[1].parse::<usize>().unwrap(), c[1]);
            for i in 0..s.q {
                let parsed: f64 = cells[2 + i].parse().unwrap();
                assert_eq!(parsed, f.pop(i)[node], "value must round-trip exactly");
            }
        }
    }

    #[test]
    fn snapshot_csv_includes_z_for_3d() {
        let s = d3q19();
        let g = make_grid(3, 4, 1.0).unwrap();
        let f = PopulationField::zeros(g, s.q);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap3.csv");
        write_snapshot_csv(&f, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("ix,iy,iz,f0,"));
        assert!(header.ends_with(",f18"));
    }

    #[test]
    fn field_reductions() {
        let s = d2q9();
        let g = make_grid(2, 4, 1.0).unwrap();
        let mut f = PopulationField::zeros(g, s.q);
        f.pop_mut(1)[0] = 2.0; // e = (1,0,0)
        f.pop_mut(3)[5] = 1.5; // e = (0,1,0)
        assert_eq!(f.total_mass(), 3.5);
        let mom = f.total_momentum_template(&s);
        assert_eq!(mom[0], 2.0);
        assert_eq!(mom[1], 1.5);
        assert_eq!(f.sup_norm(), 2.0);
        assert!(f.all_finite());
        f.pop_mut(0)[0] = f64::NAN;
        assert!(!f.all_finite());
    }
}

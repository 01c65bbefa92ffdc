//! Reference implementations: brute-force pair search, a per-particle
//! Verlet list and direct evaluation of pair kernels.
//!
//! They share the distance criterion of the clustered store (`cutoff_sq` and
//! `periodic_delta`), so pair sets can be compared exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{cutoff_sq, periodic_delta, SimulationBox};
use crate::nblist::Mode;
use crate::particles::ParticleSet;
use crate::pass::{combine_into, identities, KernelData, PairKernel, PassConfig, PassOutput, Real};

/// Largest particle count the O(n^2) oracles accept by default.
pub const DEFAULT_ORACLE_CAP: usize = 50_000;

/// Per-particle neighbor list with 4-byte indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FullVerletList {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    mode: Mode,
    scale: f64,
}

impl FullVerletList {
    fn from_rows(rows: Vec<Vec<u32>>, mode: Mode, scale: f64) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut total = 0;
        for r in &rows {
            total += r.len();
            offsets.push(total);
        }
        let mut neighbors = Vec::with_capacity(total);
        for r in rows {
            neighbors.extend(r);
        }
        Self {
            offsets,
            neighbors,
            mode,
            scale,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn build_scale(&self) -> f64 {
        self.scale
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Neighbors of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn total_pairs(&self) -> usize {
        self.neighbors.len()
    }

    /// All `(i, j)` entries, ordered by `i` then `j`.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        (0..self.len())
            .flat_map(|i| self.neighbors(i).iter().map(move |&j| (i as u32, j)))
            .collect()
    }

    /// Bytes held by the index array plus the 8-byte offsets.
    pub fn memory_bytes(&self) -> usize {
        4 * self.neighbors.len() + 8 * self.offsets.len()
    }

    pub fn bytes_per_particle(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.memory_bytes() as f64 / self.len() as f64
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::OracleCap { n, cap });
    }
    Ok(())
}

fn radii_sq(ps: &ParticleSet, scale: f64) -> Result<Vec<f64>> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("invalid radius scale {scale}")));
    }
    Ok(ps.h().iter().map(|&h| cutoff_sq(h, scale)).collect())
}

/// Ordered pairs `(i, j)`, `i != j`, with `d_ij <= scale * h_i` (gather) or
/// `d_ij <= scale * max(h_i, h_j)` (symmetric). Both orientations of a
/// symmetric pair are listed. Fails above [`DEFAULT_ORACLE_CAP`] particles.
pub fn brute_force_pairs(
    ps: &ParticleSet,
    bx: &SimulationBox,
    scale: f64,
    mode: Mode,
) -> Result<Vec<(u32, u32)>> {
    Ok(full_list_brute(ps, bx, scale, mode, DEFAULT_ORACLE_CAP)?.pairs())
}

/// Full list by testing all pairs; `cap` bounds the particle count.
pub fn full_list_brute(
    ps: &ParticleSet,
    bx: &SimulationBox,
    scale: f64,
    mode: Mode,
    cap: usize,
) -> Result<FullVerletList> {
    check_cap(ps.len(), cap)?;
    let r2 = radii_sq(ps, scale)?;
    let n = ps.len();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = ps.pos(i);
            (0..n)
                .filter(|&j| {
                    j != i && periodic_delta(pi, ps.pos(j), bx).1 <= mode.pair_cutoff_sq(r2[i], r2[j])
                })
                .map(|j| j as u32)
                .collect()
        })
        .collect();
    Ok(FullVerletList::from_rows(rows, mode, scale))
}

/// Full list from a uniform cell grid with cell edge at least the largest
/// cutoff.
pub fn full_list_grid(
    ps: &ParticleSet,
    bx: &SimulationBox,
    scale: f64,
    mode: Mode,
) -> Result<FullVerletList> {
    let r2 = radii_sq(ps, scale)?;
    let n = ps.len();
    if n == 0 {
        return Ok(FullVerletList::from_rows(Vec::new(), mode, scale));
    }
    let cutoff = scale * ps.max_h();
    bx.check_cutoff(cutoff)?;
    let len = bx.lengths();
    let lo = bx.lo();
    let periodic = bx.periodic();
    let mut dims = [1usize; 3];
    for d in 0..3 {
        if cutoff > 0.0 {
            // keep the cell count bounded for tiny cutoffs
            let max_cells = (n as f64).cbrt().ceil() as usize * 2 + 1;
            dims[d] = ((len[d] / cutoff).floor() as usize).clamp(1, max_cells);
        }
    }
    let cell_of = |p: [f64; 3]| -> [usize; 3] {
        let mut c = [0; 3];
        for d in 0..3 {
            let f = ((p[d] - lo[d]) / len[d] * dims[d] as f64).floor();
            c[d] = (f.max(0.0) as usize).min(dims[d] - 1);
        }
        c
    };
    let flat = |c: [usize; 3]| (c[0] * dims[1] + c[1]) * dims[2] + c[2];
    let ncells = dims[0] * dims[1] * dims[2];

    // counting sort of particles into cells, ascending index inside a cell
    let cells: Vec<usize> = (0..n).map(|i| flat(cell_of(ps.pos(i)))).collect();
    let mut start = vec![0usize; ncells + 1];
    for &c in &cells {
        start[c + 1] += 1;
    }
    for c in 0..ncells {
        start[c + 1] += start[c];
    }
    let mut fill = start.clone();
    let mut members = vec![0u32; n];
    for (i, &c) in cells.iter().enumerate() {
        members[fill[c]] = i as u32;
        fill[c] += 1;
    }

    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = ps.pos(i);
            let c = cell_of(pi);
            let mut adjacent = Vec::with_capacity(27);
            for ox in -1i64..=1 {
                for oy in -1i64..=1 {
                    for oz in -1i64..=1 {
                        let mut nc = [0usize; 3];
                        let mut ok = true;
                        for (d, o) in [ox, oy, oz].into_iter().enumerate() {
                            let v = c[d] as i64 + o;
                            let m = dims[d] as i64;
                            if periodic[d] {
                                nc[d] = v.rem_euclid(m) as usize;
                            } else if (0..m).contains(&v) {
                                nc[d] = v as usize;
                            } else {
                                ok = false;
                            }
                        }
                        if ok {
                            adjacent.push(flat(nc));
                        }
                    }
                }
            }
            adjacent.sort_unstable();
            adjacent.dedup();
            let mut row: Vec<u32> = adjacent
                .iter()
                .flat_map(|&cell| &members[start[cell]..start[cell + 1]])
                .copied()
                .filter(|&j| {
                    let j = j as usize;
                    j != i && periodic_delta(pi, ps.pos(j), bx).1 <= mode.pair_cutoff_sq(r2[i], r2[j])
                })
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    Ok(FullVerletList::from_rows(rows, mode, scale))
}

/// Full list at `build_scale`: brute force up to the oracle cap, cell grid
/// above it.
pub fn build_full_list(
    ps: &ParticleSet,
    bx: &SimulationBox,
    build_scale: f64,
    mode: Mode,
) -> Result<FullVerletList> {
    if ps.len() <= DEFAULT_ORACLE_CAP {
        full_list_brute(ps, bx, build_scale, mode, DEFAULT_ORACLE_CAP)
    } else {
        full_list_grid(ps, bx, build_scale, mode)
    }
}

fn reduce_rows<T, K, F>(
    ps: &ParticleSet,
    bx: &SimulationBox,
    mode: Mode,
    kernel: &K,
    query_scale: f64,
    candidates: F,
) -> Result<PassOutput<T>>
where
    T: Real,
    K: PairKernel<T> + ?Sized,
    F: Fn(usize) -> Vec<usize> + Sync,
{
    let data = KernelData::<T>::new(ps, kernel, query_scale)?;
    let outputs = kernel.outputs();
    let nout = outputs.len();
    let ident = identities::<T>(outputs);
    let rows = (0..ps.len())
        .into_par_iter()
        .map(|i| -> Result<(Vec<T>, u32)> {
            let pi = data.particle(i);
            let mut acc = ident.clone();
            let mut tmp = vec![T::zero(); nout];
            let mut count = 0u32;
            for j in candidates(i) {
                if j == i {
                    continue;
                }
                if let Some((dx, d2)) = data.neighbor(i, j, bx, mode) {
                    count += 1;
                    kernel.pair(&pi, &data.particle(j), dx, d2, &mut tmp)?;
                    combine_into(outputs, &mut acc, &tmp);
                }
            }
            kernel.postamble(&pi, &mut acc, count as usize);
            Ok((acc, count))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = PassOutput {
        names: outputs.iter().map(|o| o.name.clone()).collect(),
        values: vec![Vec::with_capacity(ps.len()); nout],
        counts: Vec::with_capacity(ps.len()),
    };
    for (acc, count) in rows {
        for k in 0..nout {
            out.values[k].push(acc[k]);
        }
        out.counts.push(count);
    }
    Ok(out)
}

/// Evaluates `kernel` over a full list, visiting neighbors in ascending order.
pub fn reduce_full<T: Real, K: PairKernel<T> + ?Sized>(
    ps: &ParticleSet,
    bx: &SimulationBox,
    list: &FullVerletList,
    kernel: &K,
    cfg: &PassConfig,
) -> Result<PassOutput<T>> {
    if ps.len() != list.len() {
        return Err(Error::StoreMismatch {
            expected: list.len(),
            found: ps.len(),
        });
    }
    if cfg.query_scale > list.scale {
        return Err(Error::QueryExceedsBuild {
            query: cfg.query_scale,
            build: list.scale,
        });
    }
    reduce_rows(ps, bx, list.mode, kernel, cfg.query_scale, |i| {
        list.neighbors(i).iter().map(|&j| j as usize).collect()
    })
}

/// Evaluates `kernel` over all `j != i` directly, in ascending `j`.
pub fn reduce_direct<T: Real, K: PairKernel<T> + ?Sized>(
    ps: &ParticleSet,
    bx: &SimulationBox,
    mode: Mode,
    kernel: &K,
    cfg: &PassConfig,
) -> Result<PassOutput<T>> {
    check_cap(ps.len(), DEFAULT_ORACLE_CAP)?;
    let n = ps.len();
    reduce_rows(ps, bx, mode, kernel, cfg.query_scale, |_| (0..n).collect())
}

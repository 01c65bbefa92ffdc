//! Neighbor reductions over a [`NeighborStore`].
//!
//! A [`PairKernel`] is a pure pair function plus a description of its
//! outputs. The pass walks the store, applies the query cutoff, evaluates the
//! pair function for every neighbor `j != i` and reduces the returned tuple
//! per particle. In symmetric (half-list) mode every unordered pair is
//! evaluated once and the j-side receives the contribution according to the
//! output's [`Symmetry`].
//!
//! Results are deterministic: for a particle `i` contributions are combined
//! in ascending `j` order (i-side), followed by the mirrored j-side
//! contributions of fixed-size chunks of super-clusters in chunk order. The
//! chunking does not depend on the number of worker threads.

use std::fmt::Debug;

use num_traits::Float;
use rayon::prelude::*;

pub use crate::geometry::periodic_delta;

use crate::cluster::{range_unchecked, SUPER_CLUSTER_SIZE};
use crate::error::{Error, KernelError, Result};
use crate::geometry::{cutoff_sq, SimulationBox, Vec3};
use crate::nblist::{Entry, Mode, NeighborStore};
use crate::particles::ParticleSet;

/// Floating-point type the pair function is evaluated in.
pub trait Real: Float + Send + Sync + Debug + 'static {
    fn from_f64(v: f64) -> Self;
    fn into_f64(self) -> f64;
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn into_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn into_f64(self) -> f64 {
        self as f64
    }
}

/// How a pair contribution to `i` maps onto `j` in half-list mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    /// `f(j, i) = f(i, j)`; j receives the same value.
    Even,
    /// `f(j, i) = -f(i, j)`; j receives the negated value.
    Odd,
    /// j receives nothing.
    None,
    /// No symmetry; the pair function is evaluated again with `i` and `j`
    /// swapped for the j-side.
    Recompute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Reduction {
    #[default]
    Sum,
    Min,
    Max,
}

impl Reduction {
    pub fn identity<T: Real>(self) -> T {
        match self {
            Reduction::Sum => T::zero(),
            Reduction::Min => T::infinity(),
            Reduction::Max => T::neg_infinity(),
        }
    }

    #[inline]
    pub fn combine<T: Real>(self, acc: T, v: T) -> T {
        match self {
            Reduction::Sum => acc + v,
            Reduction::Min => acc.min(v),
            Reduction::Max => acc.max(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputField {
    pub name: String,
    pub symmetry: Symmetry,
    pub reduction: Reduction,
}

impl OutputField {
    pub fn new(name: &str, symmetry: Symmetry, reduction: Reduction) -> Self {
        Self {
            name: name.to_owned(),
            symmetry,
            reduction,
        }
    }

    pub fn sum(name: &str, symmetry: Symmetry) -> Self {
        Self::new(name, symmetry, Reduction::Sum)
    }
}

/// Data of one particle as seen by the pair function.
#[derive(Debug, Clone, Copy)]
pub struct PairParticle<'a, T> {
    pub index: usize,
    pub pos: [T; 3],
    pub h: T,
    /// Values of the kernel's input fields, in declaration order.
    pub inputs: &'a [T],
}

pub trait PairKernel<T: Real>: Sync {
    /// Names of per-particle fields passed to the pair function.
    fn inputs(&self) -> &[String];

    fn outputs(&self) -> &[OutputField];

    /// Writes the contribution of `j` to `i` into `out` (one value per
    /// output). `dx` is the minimum-image `x_i - x_j`, `d2` its squared norm.
    fn pair(
        &self,
        i: &PairParticle<'_, T>,
        j: &PairParticle<'_, T>,
        dx: [T; 3],
        d2: T,
        out: &mut [T],
    ) -> std::result::Result<(), KernelError>;

    /// Called once per particle after the reduction with the number of
    /// neighbors inside the query cutoff.
    fn postamble(&self, _i: &PairParticle<'_, T>, _values: &mut [T], _count: usize) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassConfig {
    /// Factor applied to `h` for the interaction cutoff. Must not exceed the
    /// store's build scale.
    pub query_scale: f64,
}

impl Default for PassConfig {
    fn default() -> Self {
        Self { query_scale: 1.0 }
    }
}

/// Per-particle results in the particle order of the input set.
#[derive(Debug, Clone, PartialEq)]
pub struct PassOutput<T> {
    pub names: Vec<String>,
    pub values: Vec<Vec<T>>,
    /// Neighbors inside the query cutoff, `i` itself excluded.
    pub counts: Vec<u32>,
}

impl<T> PassOutput<T> {
    pub fn field(&self, name: &str) -> Option<&[T]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.values[k].as_slice())
    }
}

/// Particle data converted for one kernel and one query cutoff.
pub(crate) struct KernelData<T> {
    pub pos64: Vec<Vec3>,
    pub pos: Vec<[T; 3]>,
    pub h: Vec<T>,
    pub inputs: Vec<T>,
    pub n_in: usize,
    pub r2: Vec<f64>,
}

impl<T: Real> KernelData<T> {
    pub fn new<K: PairKernel<T> + ?Sized>(
        ps: &ParticleSet,
        kernel: &K,
        query_scale: f64,
    ) -> Result<Self> {
        if !(query_scale >= 0.0 && query_scale.is_finite()) {
            return Err(Error::Config(format!("invalid query scale {query_scale}")));
        }
        let fields = kernel
            .inputs()
            .iter()
            .map(|name| ps.field(name))
            .collect::<Result<Vec<_>>>()?;
        let n = ps.len();
        let n_in = fields.len();
        let mut inputs = Vec::with_capacity(n * n_in);
        for i in 0..n {
            inputs.extend(fields.iter().map(|f| T::from_f64(f[i])));
        }
        let pos64: Vec<Vec3> = (0..n).map(|i| ps.pos(i)).collect();
        Ok(Self {
            pos: pos64.iter().map(|p| p.map(T::from_f64)).collect(),
            pos64,
            h: ps.h().iter().map(|&h| T::from_f64(h)).collect(),
            inputs,
            n_in,
            r2: ps.h().iter().map(|&h| cutoff_sq(h, query_scale)).collect(),
        })
    }

    #[inline]
    pub fn particle(&self, i: usize) -> PairParticle<'_, T> {
        PairParticle {
            index: i,
            pos: self.pos[i],
            h: self.h[i],
            inputs: &self.inputs[i * self.n_in..(i + 1) * self.n_in],
        }
    }

    /// Minimum-image delta if `(i, j)` is within the query cutoff.
    #[inline]
    pub fn neighbor(&self, i: usize, j: usize, bx: &SimulationBox, mode: Mode) -> Option<([T; 3], T)> {
        let (dx, d2) = periodic_delta(self.pos64[i], self.pos64[j], bx);
        if d2 <= mode.pair_cutoff_sq(self.r2[i], self.r2[j]) {
            Some((dx.map(T::from_f64), T::from_f64(d2)))
        } else {
            None
        }
    }
}

pub(crate) fn identities<T: Real>(outputs: &[OutputField]) -> Vec<T> {
    outputs.iter().map(|o| o.reduction.identity()).collect()
}

#[inline]
pub(crate) fn combine_into<T: Real>(outputs: &[OutputField], acc: &mut [T], v: &[T]) {
    for (k, o) in outputs.iter().enumerate() {
        acc[k] = o.reduction.combine(acc[k], v[k]);
    }
}

/// Runs `kernel` over all neighbor pairs of the store.
pub fn reduce<T: Real, K: PairKernel<T> + ?Sized>(
    ps: &ParticleSet,
    bx: &SimulationBox,
    store: &NeighborStore,
    kernel: &K,
    cfg: &PassConfig,
) -> Result<PassOutput<T>> {
    if ps.len() != store.num_particles() {
        return Err(Error::StoreMismatch {
            expected: store.num_particles(),
            found: ps.len(),
        });
    }
    let build = store.params().build_scale;
    if cfg.query_scale > build {
        return Err(Error::QueryExceedsBuild {
            query: cfg.query_scale,
            build,
        });
    }
    let data = KernelData::new(ps, kernel, cfg.query_scale)?;
    let (values, counts) = match store.params().mode {
        Mode::Gather => reduce_gather(&data, bx, store, kernel)?,
        Mode::Symmetric => reduce_half(&data, bx, store, kernel)?,
    };
    let mut out = PassOutput {
        names: kernel.outputs().iter().map(|o| o.name.clone()).collect(),
        values: vec![Vec::with_capacity(ps.len()); kernel.outputs().len()],
        counts,
    };
    let nout = kernel.outputs().len();
    for i in 0..ps.len() {
        for k in 0..nout {
            out.values[k].push(values[i * nout + k]);
        }
    }
    Ok(out)
}

fn set_bits(mask: u8) -> impl Iterator<Item = usize> {
    (0..8).filter(move |b| mask >> b & 1 == 1)
}

type Flat<T> = (Vec<T>, Vec<u32>);

fn reduce_gather<T: Real, K: PairKernel<T> + ?Sized>(
    data: &KernelData<T>,
    bx: &SimulationBox,
    store: &NeighborStore,
    kernel: &K,
) -> Result<Flat<T>> {
    let n = store.num_particles();
    let cp = store.params().clusters;
    let (ci, cj) = (cp.ci(), cp.cj());
    let outputs = kernel.outputs();
    let nout = outputs.len();
    let ident = identities::<T>(outputs);

    let per_super = (0..store.num_super_clusters())
        .into_par_iter()
        .map(|s| -> Result<Flat<T>> {
            let srange = range_unchecked(s, SUPER_CLUSTER_SIZE, n);
            let first_i = srange.start / ci;
            let mut acc: Vec<T> = ident.iter().copied().cycle().take(srange.len() * nout).collect();
            let mut counts = vec![0u32; srange.len()];
            let mut tmp = vec![T::zero(); nout];
            for entry in store.neighbor_clusters(s)? {
                let (j, mask) = entry?;
                let jrange = range_unchecked(j as usize, cj, n);
                for b in set_bits(mask) {
                    for i in range_unchecked(first_i + b, ci, n) {
                        let pi = data.particle(i);
                        let li = i - srange.start;
                        for jj in jrange.clone() {
                            if i == jj {
                                continue;
                            }
                            let Some((dx, d2)) = data.neighbor(i, jj, bx, Mode::Gather) else {
                                continue;
                            };
                            counts[li] += 1;
                            kernel.pair(&pi, &data.particle(jj), dx, d2, &mut tmp)?;
                            combine_into(outputs, &mut acc[li * nout..(li + 1) * nout], &tmp);
                        }
                    }
                }
            }
            for i in srange.clone() {
                let li = i - srange.start;
                kernel.postamble(&data.particle(i), &mut acc[li * nout..(li + 1) * nout], counts[li] as usize);
            }
            Ok((acc, counts))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(n * nout);
    let mut counts = Vec::with_capacity(n);
    for (v, c) in per_super {
        values.extend(v);
        counts.extend(c);
    }
    Ok((values, counts))
}

/// Super-clusters per chunk in the half-list pass.
const CHUNK_SUPER: usize = 8;

struct ChunkOut<T> {
    iside: Vec<T>,
    icounts: Vec<u32>,
    jclusters: Vec<u32>,
    jside: Vec<T>,
    jcounts: Vec<u32>,
}

fn reduce_half<T: Real, K: PairKernel<T> + ?Sized>(
    data: &KernelData<T>,
    bx: &SimulationBox,
    store: &NeighborStore,
    kernel: &K,
) -> Result<Flat<T>> {
    let n = store.num_particles();
    let cp = store.params().clusters;
    let (ci, cj) = (cp.ci(), cp.cj());
    let outputs = kernel.outputs();
    let nout = outputs.len();
    let ident = identities::<T>(outputs);
    let recompute = outputs.iter().any(|o| o.symmetry == Symmetry::Recompute);
    let n_super = store.num_super_clusters();
    let n_chunks = n_super.div_ceil(CHUNK_SUPER);

    let chunks = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<ChunkOut<T>> {
            let supers = c * CHUNK_SUPER..((c + 1) * CHUNK_SUPER).min(n_super);
            let entries = supers
                .clone()
                .map(|s| store.entries(s))
                .collect::<Result<Vec<Vec<Entry>>>>()?;
            let mut jclusters: Vec<u32> = entries.iter().flatten().map(|e| e.0).collect();
            jclusters.sort_unstable();
            jclusters.dedup();

            let pstart = supers.start * SUPER_CLUSTER_SIZE;
            let pend = (supers.end * SUPER_CLUSTER_SIZE).min(n);
            let mut iside: Vec<T> = ident.iter().copied().cycle().take((pend - pstart) * nout).collect();
            let mut icounts = vec![0u32; pend - pstart];
            let mut jside: Vec<T> = ident
                .iter()
                .copied()
                .cycle()
                .take(jclusters.len() * cj * nout)
                .collect();
            let mut jcounts = vec![0u32; jclusters.len() * cj];
            let mut tmp = vec![T::zero(); nout];
            let mut rev = vec![T::zero(); nout];

            for (s, list) in supers.zip(&entries) {
                let first_i = s * SUPER_CLUSTER_SIZE / ci;
                for &(j, mask) in list {
                    let slot = jclusters.binary_search(&j).expect("collected above");
                    let jrange = range_unchecked(j as usize, cj, n);
                    for b in set_bits(mask) {
                        for a in range_unchecked(first_i + b, ci, n) {
                            let pa = data.particle(a);
                            let la = a - pstart;
                            for bb in jrange.start.max(a + 1)..jrange.end {
                                let Some((dx, d2)) = data.neighbor(a, bb, bx, Mode::Symmetric) else {
                                    continue;
                                };
                                let pb = data.particle(bb);
                                let lb = slot * cj + (bb - jrange.start);
                                icounts[la] += 1;
                                jcounts[lb] += 1;
                                kernel.pair(&pa, &pb, dx, d2, &mut tmp)?;
                                if recompute {
                                    kernel.pair(&pb, &pa, dx.map(|v| -v), d2, &mut rev)?;
                                }
                                combine_into(outputs, &mut iside[la * nout..(la + 1) * nout], &tmp);
                                let jacc = &mut jside[lb * nout..(lb + 1) * nout];
                                for (k, o) in outputs.iter().enumerate() {
                                    let v = match o.symmetry {
                                        Symmetry::Even => tmp[k],
                                        Symmetry::Odd => -tmp[k],
                                        Symmetry::Recompute => rev[k],
                                        Symmetry::None => continue,
                                    };
                                    jacc[k] = o.reduction.combine(jacc[k], v);
                                }
                            }
                        }
                    }
                }
            }
            Ok(ChunkOut {
                iside,
                icounts,
                jclusters,
                jside,
                jcounts,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(n * nout);
    let mut counts = Vec::with_capacity(n);
    for ch in &chunks {
        values.extend_from_slice(&ch.iside);
        counts.extend_from_slice(&ch.icounts);
    }
    for ch in &chunks {
        for (slot, &j) in ch.jclusters.iter().enumerate() {
            for p in range_unchecked(j as usize, cj, n) {
                let lb = slot * cj + (p - j as usize * cj);
                counts[p] += ch.jcounts[lb];
                combine_into(
                    outputs,
                    &mut values[p * nout..(p + 1) * nout],
                    &ch.jside[lb * nout..(lb + 1) * nout],
                );
            }
        }
    }
    for i in 0..n {
        kernel.postamble(&data.particle(i), &mut values[i * nout..(i + 1) * nout], counts[i] as usize);
    }
    Ok((values, counts))
}

//! Clustered neighbor store built by octree traversal.
//!
//! One entry per super-cluster (64 consecutive particles). An entry is a run
//! of bytes in a shared blob: one interaction mask byte per neighbor
//! j-cluster (bit `b` set iff i-cluster `b` of the super-cluster has at least
//! one particle pair within range of that j-cluster), followed by the
//! ascending j-cluster indices, either as little-endian `u32` or compressed
//! with [`crate::codec`].
//!
//! In [`Mode::Symmetric`] only half of the cluster pairs are kept: i-cluster
//! `I` stores j-cluster `J` only if `J` has a particle at or after the first
//! particle of `I`. Every unordered particle pair `a < b` then lives in the
//! slot of `(cluster of a, cluster of b)`, and the pass evaluates a slot lane
//! only when the i-particle precedes the j-particle.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::cluster::{range_unchecked, ClusterBounds, ClusterParams, I_CLUSTERS_PER_SUPER};
use crate::codec::{self, Decoder};
use crate::error::{Error, Result};
use crate::geometry::{cutoff_sq, periodic_delta, SimulationBox};
use crate::octree::{build_octree, Octree, DEFAULT_BUCKET_SIZE};
use crate::particles::ParticleSet;
use crate::sfc::{sort_by_sfc, SfcOrder, DEFAULT_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Pair `(i, j)` is a neighbor iff `d_ij <= scale * h_i`.
    #[default]
    Gather,
    /// Pair is a neighbor iff `d_ij <= scale * max(h_i, h_j)`; half list.
    Symmetric,
}

impl Mode {
    /// Squared cutoff for the pair given per-particle squared cutoffs.
    #[inline]
    pub fn pair_cutoff_sq(self, ri2: f64, rj2: f64) -> f64 {
        match self {
            Mode::Gather => ri2,
            Mode::Symmetric => ri2.max(rj2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildParams {
    pub clusters: ClusterParams,
    pub mode: Mode,
    pub compress: bool,
    /// Factor applied to `h` when building; values above 1 add a Verlet skin.
    pub build_scale: f64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            clusters: ClusterParams::default(),
            mode: Mode::Gather,
            compress: true,
            build_scale: 1.0,
        }
    }
}

impl BuildParams {
    pub fn new(clusters: ClusterParams, mode: Mode, compress: bool, build_scale: f64) -> Result<Self> {
        let bp = Self {
            clusters,
            mode,
            compress,
            build_scale,
        };
        bp.validate()?;
        Ok(bp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.build_scale >= 1.0 && self.build_scale.is_finite()) {
            return Err(Error::InvalidBuildParams(format!(
                "build radius scale must be >= 1, got {}",
                self.build_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub header_bytes: usize,
    pub blob_bytes: usize,
    pub total_bytes: usize,
    pub bytes_per_particle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborStore {
    n: usize,
    params: BuildParams,
    counts: Vec<u32>,
    /// `offsets[s]..offsets[s + 1]` is the blob range of super-cluster `s`.
    offsets: Vec<u64>,
    blob: Vec<u8>,
}

/// One neighbor j-cluster and the mask of interacting i-clusters.
pub type Entry = (u32, u8);

impl NeighborStore {
    /// Assembles a store from explicit per-super-cluster entry lists.
    pub fn from_entries(n: usize, params: BuildParams, entries: &[Vec<Entry>]) -> Result<Self> {
        params.validate()?;
        let n_super = params.clusters.count(crate::cluster::ClusterKind::Super, n);
        if entries.len() != n_super {
            return Err(Error::InvalidBuildParams(format!(
                "{} entry lists for {n_super} super-clusters",
                entries.len()
            )));
        }
        let n_j = params.clusters.count(crate::cluster::ClusterKind::J, n) as u32;
        for list in entries {
            for (k, &(j, mask)) in list.iter().enumerate() {
                if j >= n_j || mask == 0 || (k > 0 && list[k - 1].0 >= j) {
                    return Err(Error::InvalidBuildParams(format!(
                        "invalid entry ({j}, {mask:#04x}) at position {k}"
                    )));
                }
            }
        }
        let blobs = entries
            .par_iter()
            .map(|list| serialize_entry(list, &params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(n, params, entries.iter().map(|l| l.len() as u32).collect(), blobs))
    }

    fn assemble(n: usize, params: BuildParams, counts: Vec<u32>, blobs: Vec<Vec<u8>>) -> Self {
        let mut offsets = Vec::with_capacity(blobs.len() + 1);
        let mut total = 0u64;
        offsets.push(0);
        for b in &blobs {
            total += b.len() as u64;
            offsets.push(total);
        }
        let mut blob = Vec::with_capacity(total as usize);
        for b in blobs {
            blob.extend_from_slice(&b);
        }
        Self {
            n,
            params,
            counts,
            offsets,
            blob,
        }
    }

    pub fn num_particles(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn num_super_clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn neighbor_count(&self, s: usize) -> usize {
        self.counts[s] as usize
    }

    pub fn blob(&self) -> &[u8] {
        &self.blob
    }

    /// Entries of super-cluster `s` in ascending j-cluster order, decoded lazily.
    pub fn neighbor_clusters(&self, s: usize) -> Result<NeighborIter<'_>> {
        if s >= self.counts.len() {
            return Err(Error::ClusterOutOfRange {
                kind: "super",
                index: s,
                count: self.counts.len(),
            });
        }
        let count = self.counts[s] as usize;
        let start = self.offsets[s] as usize;
        let end = self.offsets[s + 1] as usize;
        let bytes = &self.blob[start..end];
        if bytes.len() < count {
            return Err(codec::CodecError::Truncated { offset: bytes.len() }.into());
        }
        let (masks, rest) = bytes.split_at(count);
        let indices = if self.params.compress {
            Indices::Compressed(Decoder::new(rest, count, self.params.clusters.block_width())?)
        } else {
            if rest.len() != 4 * count {
                return Err(codec::CodecError::Truncated { offset: rest.len() }.into());
            }
            Indices::Raw(rest.chunks_exact(4))
        };
        Ok(NeighborIter {
            masks: masks.iter(),
            indices,
        })
    }

    /// Fully decoded entries of super-cluster `s`.
    pub fn entries(&self, s: usize) -> Result<Vec<Entry>> {
        self.neighbor_clusters(s)?.collect()
    }

    pub fn memory_footprint(&self) -> Footprint {
        let header_bytes = 4 * self.counts.len() + 8 * self.offsets.len();
        let blob_bytes = self.blob.len();
        let total_bytes = header_bytes + blob_bytes;
        Footprint {
            header_bytes,
            blob_bytes,
            total_bytes,
            bytes_per_particle: if self.n == 0 {
                0.0
            } else {
                total_bytes as f64 / self.n as f64
            },
        }
    }

    /// Writes the binary dump described in the module docs of
    /// [`NeighborStore::read_from`].
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.params.clusters;
        let mut flags = 0u8;
        if self.params.compress {
            flags |= 1;
        }
        if self.params.mode == Mode::Symmetric {
            flags |= 2;
        }
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&[c.ci() as u8, c.cj() as u8, c.block_width() as u8, flags])?;
        w.write_all(&self.params.build_scale.to_le_bytes())?;
        w.write_all(&(self.counts.len() as u64).to_le_bytes())?;
        for &c in &self.counts {
            w.write_all(&c.to_le_bytes())?;
        }
        for &o in &self.offsets {
            w.write_all(&o.to_le_bytes())?;
        }
        w.write_all(&self.blob)?;
        Ok(())
    }

    /// Reads a dump:
    ///
    /// ```text
    /// magic      8 bytes  "SFCNBST1"
    /// n          u64      particle count
    /// ci cj w    3 x u8   cluster sizes and codec block width
    /// flags      u8       bit 0 compressed, bit 1 symmetric half list
    /// scale      f64      build radius scale
    /// n_super    u64
    /// counts     n_super x u32     neighbor j-clusters per super-cluster
    /// offsets    (n_super + 1) x u64  blob offsets, last = blob length
    /// blob       masks + index lists per super-cluster
    /// ```
    ///
    /// All integers little endian.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        fn bytes<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        if &bytes::<8>(&mut r)? != DUMP_MAGIC {
            return Err(Error::InvalidDump("bad magic".into()));
        }
        let n = u64::from_le_bytes(bytes(&mut r)?) as usize;
        let [ci, cj, w, flags] = bytes::<4>(&mut r)?;
        let build_scale = f64::from_le_bytes(bytes(&mut r)?);
        let clusters = ClusterParams::new(ci as usize, cj as usize, w as usize)?;
        let mode = if flags & 2 != 0 {
            Mode::Symmetric
        } else {
            Mode::Gather
        };
        let params = BuildParams::new(clusters, mode, flags & 1 != 0, build_scale)?;
        let n_super = u64::from_le_bytes(bytes(&mut r)?) as usize;
        if n_super != clusters.count(crate::cluster::ClusterKind::Super, n) {
            return Err(Error::InvalidDump("super-cluster count mismatch".into()));
        }
        let mut counts = Vec::with_capacity(n_super);
        for _ in 0..n_super {
            counts.push(u32::from_le_bytes(bytes(&mut r)?));
        }
        let mut offsets = Vec::with_capacity(n_super + 1);
        for _ in 0..=n_super {
            offsets.push(u64::from_le_bytes(bytes(&mut r)?));
        }
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidDump("offsets not monotone".into()));
        }
        let mut blob = vec![0u8; *offsets.last().unwrap() as usize];
        r.read_exact(&mut blob)?;
        Ok(Self {
            n,
            params,
            counts,
            offsets,
            blob,
        })
    }
}

const DUMP_MAGIC: &[u8; 8] = b"SFCNBST1";

fn serialize_entry(list: &[Entry], params: &BuildParams) -> Result<Vec<u8>> {
    let mut out: Vec<u8> = list.iter().map(|&(_, m)| m).collect();
    if params.compress {
        let idx: Vec<u32> = list.iter().map(|&(j, _)| j).collect();
        codec::encode_into(&idx, params.clusters.block_width(), &mut out)?;
    } else {
        for &(j, _) in list {
            out.extend_from_slice(&j.to_le_bytes());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
enum Indices<'a> {
    Raw(std::slice::ChunksExact<'a, u8>),
    Compressed(Decoder<'a>),
}

#[derive(Debug, Clone)]
pub struct NeighborIter<'a> {
    masks: std::slice::Iter<'a, u8>,
    indices: Indices<'a>,
}

impl Iterator for NeighborIter<'_> {
    type Item = Result<Entry>;

    fn next(&mut self) -> Option<Self::Item> {
        let mask = *self.masks.next()?;
        let j = match &mut self.indices {
            Indices::Raw(chunks) => {
                let c = chunks.next()?;
                Ok(u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            }
            Indices::Compressed(dec) => match dec.next()? {
                Ok(j) => Ok(j),
                Err(e) => {
                    // stop after the first error
                    self.masks = [].iter();
                    Err(e.into())
                }
            },
        };
        Some(j.map(|j| (j, mask)))
    }
}

/// Builds the clustered neighbor store over curve-sorted particles.
///
/// Every particle pair `(i, j)` within the build radius (including `i == j`)
/// sets the mask bit of `i`'s i-cluster in the entry of `j`'s j-cluster in
/// `i`'s super-cluster; in symmetric mode only pairs with `i <= j` do.
pub fn build(
    ps: &ParticleSet,
    bx: &SimulationBox,
    tree: &Octree,
    bp: &BuildParams,
) -> Result<NeighborStore> {
    bp.validate()?;
    let n = ps.len();
    if tree.num_particles() != n {
        return Err(Error::StoreMismatch {
            expected: tree.num_particles(),
            found: n,
        });
    }
    bx.check_cutoff(bp.build_scale * ps.max_h())?;

    let cp = bp.clusters;
    let (ci, cj, sc) = (cp.ci(), cp.cj(), cp.super_size());
    let geo = tree.geometry(ps);
    let ib = ClusterBounds::new(ps, ci);
    let jb = ClusterBounds::new(ps, cj);
    let sb = ClusterBounds::new(ps, sc);
    let r2: Vec<f64> = ps.h().iter().map(|&h| cutoff_sq(h, bp.build_scale)).collect();
    let len = bx.lengths();
    let abs_slack = 1e-12 * len.iter().copied().fold(0.0, f64::max);
    // bounding-volume tests are conservative by a hair so that rounding in
    // box gaps never prunes a pair the exact test would accept
    let reach = |r: f64| {
        let r = r * (1.0 + 1e-9) + abs_slack;
        r * r
    };
    let n_super = cp.count(crate::cluster::ClusterKind::Super, n);

    let entries: Vec<Vec<Entry>> = (0..n_super)
        .into_par_iter()
        .map(|s| {
            let srange = range_unchecked(s, sc, n);
            let s_aabb = &sb.aabbs[s];
            let s_h = sb.max_h[s];

            // depth-first traversal collecting candidate j-clusters in order
            let mut candidates: Vec<u32> = Vec::new();
            let mut stack = vec![Octree::ROOT];
            while let Some(id) = stack.pop() {
                let node = tree.node(id);
                if node.count() == 0 {
                    continue;
                }
                let h = match bp.mode {
                    Mode::Gather => s_h,
                    Mode::Symmetric => s_h.max(geo.max_h[id]),
                };
                if s_aabb.dist_sq(&geo.aabbs[id], bx) > reach(bp.build_scale * h) {
                    continue;
                }
                match node.children() {
                    Some(ch) => stack.extend(ch.rev()),
                    None => {
                        let first = node.particles.start / cj;
                        let last = (node.particles.end - 1) / cj;
                        for j in first..=last {
                            if bp.mode == Mode::Symmetric && ((j + 1) * cj).min(n) <= srange.start {
                                continue;
                            }
                            if candidates.last() != Some(&(j as u32)) {
                                candidates.push(j as u32);
                            }
                        }
                    }
                }
            }

            let first_i = srange.start / ci;
            let n_i = srange.len().div_ceil(ci);
            let mut list = Vec::with_capacity(candidates.len());
            for &j in &candidates {
                let j = j as usize;
                let jrange = range_unchecked(j, cj, n);
                let mut mask = 0u8;
                for b in 0..n_i.min(I_CLUSTERS_PER_SUPER) {
                    let ic = first_i + b;
                    let irange = range_unchecked(ic, ci, n);
                    if bp.mode == Mode::Symmetric && jrange.end <= irange.start {
                        continue;
                    }
                    let h = match bp.mode {
                        Mode::Gather => ib.max_h[ic],
                        Mode::Symmetric => ib.max_h[ic].max(jb.max_h[j]),
                    };
                    if ib.aabbs[ic].dist_sq(&jb.aabbs[j], bx) > reach(bp.build_scale * h) {
                        continue;
                    }
                    if clusters_interact(ps, bx, &r2, bp.mode, irange, jrange.clone()) {
                        mask |= 1 << b;
                    }
                }
                if mask != 0 {
                    list.push((j as u32, mask));
                }
            }
            list
        })
        .collect();

    let blobs = entries
        .par_iter()
        .map(|list| serialize_entry(list, bp))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborStore::assemble(
        n,
        *bp,
        entries.iter().map(|l| l.len() as u32).collect(),
        blobs,
    ))
}

fn clusters_interact(
    ps: &ParticleSet,
    bx: &SimulationBox,
    r2: &[f64],
    mode: Mode,
    irange: std::ops::Range<usize>,
    jrange: std::ops::Range<usize>,
) -> bool {
    for i in irange {
        let pi = ps.pos(i);
        let lo = match mode {
            Mode::Gather => jrange.start,
            Mode::Symmetric => jrange.start.max(i),
        };
        for j in lo..jrange.end {
            let (_, d2) = periodic_delta(pi, ps.pos(j), bx);
            if d2 <= mode.pair_cutoff_sq(r2[i], r2[j]) {
                return true;
            }
        }
    }
    false
}

/// Curve-sorted particles together with the store built over them.
#[derive(Debug, Clone)]
pub struct SortedStore {
    /// Particles in curve order.
    pub particles: ParticleSet,
    pub order: SfcOrder,
    pub store: NeighborStore,
}

/// Sorts `ps` along the Hilbert curve, builds the octree and the store.
/// Pass results over `particles` map back with `order.unapply`.
pub fn sort_and_build(ps: &ParticleSet, bx: &SimulationBox, bp: &BuildParams) -> Result<SortedStore> {
    let order = sort_by_sfc(ps, bx, DEFAULT_BITS)?;
    let particles = ps.permuted(&order.perm);
    let tree = build_octree(&order, DEFAULT_BUCKET_SIZE)?;
    let store = build(&particles, bx, &tree, bp)?;
    Ok(SortedStore {
        particles,
        order,
        store,
    })
}

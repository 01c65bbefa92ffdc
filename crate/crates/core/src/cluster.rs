//! i-clusters, j-clusters and super-clusters over the curve-sorted particles.
//!
//! Clusters are plain index arithmetic: cluster `k` of size `c` covers
//! particles `[k*c, min((k+1)*c, n))`. The last cluster of each kind may be
//! partial; no padding particles are ever inserted.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::particles::ParticleSet;

/// Particles per super-cluster.
pub const SUPER_CLUSTER_SIZE: usize = 64;
/// i-clusters per super-cluster, which is also the bitmask width.
pub const I_CLUSTERS_PER_SUPER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClusterParams {
    ci: usize,
    cj: usize,
    w: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self { ci: 8, cj: 8, w: 32 }
    }
}

impl ClusterParams {
    /// `ci` must be 8, `cj` 4 or 8, and the codec block width `w` 32 or 64.
    pub fn new(ci: usize, cj: usize, w: usize) -> Result<Self> {
        if ci * I_CLUSTERS_PER_SUPER != SUPER_CLUSTER_SIZE {
            return Err(Error::InvalidClusterParams(format!(
                "i-cluster size must be {}, got {ci}",
                SUPER_CLUSTER_SIZE / I_CLUSTERS_PER_SUPER
            )));
        }
        if cj != 4 && cj != 8 {
            return Err(Error::InvalidClusterParams(format!(
                "j-cluster size must be 4 or 8, got {cj}"
            )));
        }
        if w != 32 && w != 64 {
            return Err(Error::InvalidClusterParams(format!(
                "block width must be 32 or 64, got {w}"
            )));
        }
        Ok(Self { ci, cj, w })
    }

    /// 8x8 clusters.
    pub fn c8x8() -> Self {
        Self::default()
    }

    /// 8x4 clusters.
    pub fn c8x4() -> Self {
        Self { ci: 8, cj: 4, w: 32 }
    }

    pub fn with_block_width(self, w: usize) -> Result<Self> {
        Self::new(self.ci, self.cj, w)
    }

    pub fn ci(&self) -> usize {
        self.ci
    }

    pub fn cj(&self) -> usize {
        self.cj
    }

    pub fn super_size(&self) -> usize {
        SUPER_CLUSTER_SIZE
    }

    pub fn block_width(&self) -> usize {
        self.w
    }

    pub fn size(&self, kind: ClusterKind) -> usize {
        match kind {
            ClusterKind::I => self.ci,
            ClusterKind::J => self.cj,
            ClusterKind::Super => SUPER_CLUSTER_SIZE,
        }
    }

    pub fn count(&self, kind: ClusterKind, n: usize) -> usize {
        n.div_ceil(self.size(kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterKind {
    I,
    J,
    Super,
}

impl ClusterKind {
    fn name(self) -> &'static str {
        match self {
            ClusterKind::I => "i",
            ClusterKind::J => "j",
            ClusterKind::Super => "super",
        }
    }
}

/// Particle range of cluster `k`.
pub fn cluster_range(
    kind: ClusterKind,
    k: usize,
    params: &ClusterParams,
    n: usize,
) -> Result<Range<usize>> {
    let count = params.count(kind, n);
    if k >= count {
        return Err(Error::ClusterOutOfRange {
            kind: kind.name(),
            index: k,
            count,
        });
    }
    let size = params.size(kind);
    Ok(k * size..((k + 1) * size).min(n))
}

pub(crate) fn range_unchecked(k: usize, size: usize, n: usize) -> Range<usize> {
    k * size..((k + 1) * size).min(n)
}

pub fn cluster_aabb(ps: &ParticleSet, range: Range<usize>) -> Result<Aabb> {
    if range.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mut b = Aabb::EMPTY;
    for i in range {
        b.insert(ps.pos(i));
    }
    Ok(b)
}

pub fn cluster_max_radius(ps: &ParticleSet, range: Range<usize>) -> Result<f64> {
    if range.is_empty() {
        return Err(Error::EmptyRange);
    }
    Ok(ps.h()[range].iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Precomputed bounding boxes and maximum radii for all clusters of one size.
#[derive(Debug, Clone)]
pub(crate) struct ClusterBounds {
    pub aabbs: Vec<Aabb>,
    pub max_h: Vec<f64>,
}

impl ClusterBounds {
    pub fn new(ps: &ParticleSet, size: usize) -> Self {
        let n = ps.len();
        let count = n.div_ceil(size);
        let mut aabbs = Vec::with_capacity(count);
        let mut max_h = Vec::with_capacity(count);
        for k in 0..count {
            let r = range_unchecked(k, size, n);
            aabbs.push(cluster_aabb(ps, r.clone()).expect("non-empty cluster"));
            max_h.push(cluster_max_radius(ps, r).expect("non-empty cluster"));
        }
        Self { aabbs, max_h }
    }
}

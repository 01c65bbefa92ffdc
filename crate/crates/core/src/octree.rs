//! Octree over the curve-sorted key range.
//!
//! Every node owns a contiguous slice of the key space and therefore a
//! contiguous slice of the sorted particles. Children of a node are stored
//! next to each other in curve order, so a depth-first walk visits leaves in
//! curve order and yields sorted particle ranges.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::particles::ParticleSet;
use crate::sfc::SfcOrder;

pub const DEFAULT_BUCKET_SIZE: usize = 64;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OctreeNode {
    /// Half-open key range `[start, end)`.
    pub keys: Range<u64>,
    pub particles: Range<usize>,
    pub first_child: Option<NodeId>,
    pub depth: u32,
}

impl OctreeNode {
    pub fn is_leaf(&self) -> bool {
        self.first_child.is_none()
    }

    pub fn children(&self) -> Option<Range<NodeId>> {
        self.first_child.map(|c| c..c + 8)
    }

    pub fn count(&self) -> usize {
        self.particles.len()
    }
}

#[derive(Debug, Clone)]
pub struct Octree {
    nodes: Vec<OctreeNode>,
    bits: u32,
    bucket_size: usize,
}

impl Octree {
    pub const ROOT: NodeId = 0;

    pub fn nodes(&self) -> &[OctreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &OctreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn bucket_size(&self) -> usize {
        self.bucket_size
    }

    pub fn num_particles(&self) -> usize {
        self.nodes[Self::ROOT].particles.end
    }

    /// Leaf ids in depth-first (curve) order.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![Self::ROOT];
        while let Some(id) = stack.pop() {
            match self.nodes[id].children() {
                Some(ch) => stack.extend(ch.rev()),
                None => out.push(id),
            }
        }
        out
    }

    /// Tight bounding boxes and maximum radii of all nodes.
    pub fn geometry(&self, ps: &ParticleSet) -> NodeGeometry {
        let mut aabbs = vec![Aabb::EMPTY; self.nodes.len()];
        let mut max_h = vec![0.0f64; self.nodes.len()];
        // children always have larger ids than their parent
        for id in (0..self.nodes.len()).rev() {
            let node = &self.nodes[id];
            match node.children() {
                Some(ch) => {
                    for c in ch {
                        aabbs[id] = aabbs[id].union(&aabbs[c]);
                        max_h[id] = max_h[id].max(max_h[c]);
                    }
                }
                None => {
                    for i in node.particles.clone() {
                        aabbs[id].insert(ps.pos(i));
                        max_h[id] = max_h[id].max(ps.h()[i]);
                    }
                }
            }
        }
        NodeGeometry { aabbs, max_h }
    }
}

#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub aabbs: Vec<Aabb>,
    pub max_h: Vec<f64>,
}

/// Builds the tree. Leaves hold at most `bucket_size` particles unless they
/// sit at the maximum depth (one grid cell), where duplicates may pile up.
pub fn build_octree(order: &SfcOrder, bucket_size: usize) -> Result<Octree> {
    if bucket_size == 0 {
        return Err(Error::Config("bucket size must be at least 1".into()));
    }
    let bits = order.bits;
    let keys: Vec<u64> = order.keys.iter().map(|k| k.0).collect();
    debug_assert!(keys.windows(2).all(|w| w[0] <= w[1]));

    let mut nodes = vec![OctreeNode {
        keys: 0..1u64 << (3 * bits),
        particles: 0..keys.len(),
        first_child: None,
        depth: 0,
    }];
    let mut queue = vec![Octree::ROOT];
    while let Some(id) = queue.pop() {
        let node = nodes[id].clone();
        if node.count() <= bucket_size || node.depth >= bits {
            continue;
        }
        let first = nodes.len();
        let step = (node.keys.end - node.keys.start) / 8;
        let mut begin = node.particles.start;
        for c in 0..8u64 {
            let kstart = node.keys.start + c * step;
            let kend = kstart + step;
            let end = node.particles.start
                + keys[node.particles.clone()].partition_point(|&k| k < kend);
            nodes.push(OctreeNode {
                keys: kstart..kend,
                particles: begin..end,
                first_child: None,
                depth: node.depth + 1,
            });
            begin = end;
        }
        debug_assert_eq!(begin, node.particles.end);
        nodes[id].first_child = Some(first);
        queue.extend(first..first + 8);
    }
    Ok(Octree {
        nodes,
        bits,
        bucket_size,
    })
}

/// Tight box over the particles of `node`; empty nodes give [`Aabb::EMPTY`].
pub fn node_aabb(tree: &Octree, node: NodeId, ps: &ParticleSet) -> Aabb {
    let mut b = Aabb::EMPTY;
    for i in tree.node(node).particles.clone() {
        b.insert(ps.pos(i));
    }
    b
}

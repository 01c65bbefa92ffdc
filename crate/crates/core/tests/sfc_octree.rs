mod common;

use common::{evrard, uniform};
use sfcnb::octree::{build_octree, node_aabb, Octree};
use sfcnb::sfc::{hilbert_decode, hilbert_encode, sort_by_sfc, HilbertKey};

#[test]
fn consecutive_keys_are_face_neighbors_at_full_depth_samples() {
    for k in [0u64, 1, 12345, 1 << 40, (1 << 63) - 2] {
        let a = hilbert_decode(HilbertKey(k), 21).unwrap();
        let b = hilbert_decode(HilbertKey(k + 1), 21).unwrap();
        let dist: u32 = (0..3).map(|d| a[d].abs_diff(b[d])).sum();
        assert_eq!(dist, 1);
        assert_eq!(hilbert_encode(a[0], a[1], a[2], 21).unwrap(), HilbertKey(k));
    }
}

#[test]
fn octree_over_clustered_particles() {
    for (ps, bx) in [uniform(5000, 50.0, true, 1), evrard(5000, 50.0, false, 2)] {
        let order = sort_by_sfc(&ps, &bx, 21).unwrap();
        let sorted = ps.permuted(&order.perm);
        assert!(order.keys.windows(2).all(|w| w[0] <= w[1]));
        let tree = build_octree(&order, 16).unwrap();
        let leaves = tree.leaves();
        // leaves in depth-first order tile the particles in curve order
        let mut next = 0;
        for &l in &leaves {
            let node = tree.node(l);
            assert_eq!(node.particles.start, next);
            next = node.particles.end;
            assert!(node.count() <= 16 || node.depth == 21);
        }
        assert_eq!(next, ps.len());
        for (id, node) in tree.nodes().iter().enumerate() {
            let b = node_aabb(&tree, id, &sorted);
            for i in node.particles.clone() {
                assert!(b.contains(sorted.pos(i)));
            }
            if let Some(children) = node.children() {
                assert!(children.start > id);
                assert_eq!(tree.node(children.start).keys.start, node.keys.start);
                assert_eq!(tree.node(children.end - 1).keys.end, node.keys.end);
            }
        }
        assert_eq!(tree.node(Octree::ROOT).count(), ps.len());
    }
}

#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfcnb::bench::{generate, BenchConfig, Distribution};
use sfcnb::cluster::SUPER_CLUSTER_SIZE;
use sfcnb::geometry::SimulationBox;
use sfcnb::nblist::{Mode, NeighborStore};
use sfcnb::particles::ParticleSet;
use sfcnb::pass::PassOutput;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points at density 100 with a given mean gather count.
pub fn uniform(n: usize, target: f64, periodic: bool, seed: u64) -> (ParticleSet, SimulationBox) {
    generate(&BenchConfig {
        n,
        target_neighbors: target,
        periodic: [periodic; 3],
        seed,
        ..Default::default()
    })
    .unwrap()
}

pub fn evrard(n: usize, target: f64, periodic: bool, seed: u64) -> (ParticleSet, SimulationBox) {
    generate(&BenchConfig {
        distribution: Distribution::Evrard,
        n,
        target_neighbors: target,
        periodic: [periodic; 3],
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// Multiplies every radius by a random factor in `[lo, hi)`.
pub fn vary_h(ps: &ParticleSet, bx: &SimulationBox, lo: f64, hi: f64, seed: u64) -> ParticleSet {
    let mut r = rng(seed);
    let pos: Vec<_> = (0..ps.len()).map(|i| ps.pos(i)).collect();
    let h: Vec<f64> = ps.h().iter().map(|&h| h * r.random_range(lo..hi)).collect();
    let mut out = ParticleSet::from_positions(&pos, h, bx).unwrap();
    for name in ps.field_names() {
        out.set_field(name, ps.field(name).unwrap().to_vec()).unwrap();
    }
    out
}

/// Ordered candidate pairs `(i, j)` the store lets a pass evaluate.
pub fn candidate_pairs(store: &NeighborStore) -> HashSet<(u32, u32)> {
    let n = store.num_particles();
    let cp = store.params().clusters;
    let mut out = HashSet::new();
    for s in 0..store.num_super_clusters() {
        let first_i = s * SUPER_CLUSTER_SIZE / cp.ci();
        for (j, mask) in store.entries(s).unwrap() {
            let jr = j as usize * cp.cj()..((j as usize + 1) * cp.cj()).min(n);
            for b in 0..8 {
                if mask >> b & 1 == 0 {
                    continue;
                }
                let ic = first_i + b;
                for i in ic * cp.ci()..((ic + 1) * cp.ci()).min(n) {
                    for jj in jr.clone() {
                        out.insert((i as u32, jj as u32));
                    }
                }
            }
        }
    }
    out
}

/// True if every oracle pair is covered by the store's candidates; in
/// symmetric mode a pair may appear in either orientation.
pub fn covers(store: &NeighborStore, oracle: &[(u32, u32)]) -> bool {
    let cand = candidate_pairs(store);
    let sym = store.params().mode == Mode::Symmetric;
    oracle
        .iter()
        .all(|&(i, j)| cand.contains(&(i, j)) || (sym && cand.contains(&(j, i))))
}

/// Normwise relative difference `max|a - b| / max|b|` (0 when both vanish).
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn max_rel_err(a: &PassOutput<f64>, b: &PassOutput<f64>) -> f64 {
    assert_eq!(a.names, b.names);
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| rel_err(x, y))
        .fold(0.0, f64::max)
}

pub fn widen(out: &PassOutput<f32>) -> PassOutput<f64> {
    PassOutput {
        names: out.names.clone(),
        values: out.values.iter().map(|v| v.iter().map(|&x| x as f64).collect()).collect(),
        counts: out.counts.clone(),
    }
}

/// Brings a pass output over curve-sorted particles back to input order.
pub fn unsort(out: &PassOutput<f64>, perm: &[usize]) -> PassOutput<f64> {
    let back = |v: &Vec<f64>| {
        let mut o = vec![0.0; v.len()];
        for (k, &p) in perm.iter().enumerate() {
            o[p] = v[k];
        }
        o
    };
    let mut counts = vec![0; out.counts.len()];
    for (k, &p) in perm.iter().enumerate() {
        counts[p] = out.counts[k];
    }
    PassOutput {
        names: out.names.clone(),
        values: out.values.iter().map(back).collect(),
        counts,
    }
}

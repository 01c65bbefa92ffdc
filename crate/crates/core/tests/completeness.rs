mod common;

use common::{covers, evrard, uniform, vary_h};
use sfcnb::baselines::brute_force_pairs;
use sfcnb::cluster::ClusterParams;
use sfcnb::kernels::NeighborCount;
use sfcnb::nblist::{sort_and_build, BuildParams, Mode};
use sfcnb::pass::{reduce, PassConfig, PassOutput};

fn check(ps: &sfcnb::particles::ParticleSet, bx: &sfcnb::geometry::SimulationBox, mode: Mode, cj: usize, scale: f64) {
    let bp = BuildParams::new(ClusterParams::new(8, cj, 32).unwrap(), mode, true, scale).unwrap();
    let built = sort_and_build(ps, bx, &bp).unwrap();
    let sorted = &built.particles;
    let oracle = brute_force_pairs(sorted, bx, scale, mode).unwrap();
    assert!(covers(&built.store, &oracle), "missing pairs for {mode:?} cj={cj}");

    let out: PassOutput<f64> = reduce(
        sorted,
        bx,
        &built.store,
        &NeighborCount::default(),
        &PassConfig { query_scale: scale },
    )
    .unwrap();
    let mut expected = vec![0u32; ps.len()];
    for (i, _) in &oracle {
        expected[*i as usize] += 1;
    }
    assert_eq!(out.counts, expected);
    let counted: Vec<u32> = out.values[0].iter().map(|&c| c as u32).collect();
    assert_eq!(counted, expected);
}

#[test]
fn uniform_open_constant_h() {
    let (ps, bx) = uniform(3000, 60.0, false, 1);
    for mode in [Mode::Gather, Mode::Symmetric] {
        for cj in [4, 8] {
            check(&ps, &bx, mode, cj, 1.0);
        }
    }
}

#[test]
fn uniform_periodic_variable_h() {
    let (ps, bx) = uniform(3000, 60.0, true, 2);
    let ps = vary_h(&ps, &bx, 0.5, 1.5, 3);
    for mode in [Mode::Gather, Mode::Symmetric] {
        check(&ps, &bx, mode, 4, 1.0);
        check(&ps, &bx, mode, 8, 1.2);
    }
}

#[test]
fn evrard_open_and_periodic() {
    for periodic in [false, true] {
        let (ps, bx) = evrard(3000, 60.0, periodic, 4);
        for mode in [Mode::Gather, Mode::Symmetric] {
            check(&ps, &bx, mode, 8, 1.0);
        }
    }
}

#[test]
fn partial_trailing_clusters() {
    for n in [1, 5, 63, 65, 130] {
        let (ps, bx) = uniform(n, 20.0, false, 5);
        for mode in [Mode::Gather, Mode::Symmetric] {
            check(&ps, &bx, mode, 4, 1.0);
        }
    }
}

#[test]
fn small_periodic_box_is_rejected() {
    let (ps, bx) = uniform(5, 20.0, true, 5);
    let err = sort_and_build(&ps, &bx, &BuildParams::default()).unwrap_err();
    assert!(matches!(err, sfcnb::Error::BoxTooSmall { .. }));
}

#[test]
fn single_periodic_axis() {
    let (ps, _) = uniform(2000, 40.0, false, 6);
    let side = (2000.0f64 / 100.0).cbrt();
    let bx = sfcnb::geometry::SimulationBox::cube(side, [false, true, false]).unwrap();
    for mode in [Mode::Gather, Mode::Symmetric] {
        check(&ps, &bx, mode, 8, 1.0);
    }
}

mod common;

use common::{evrard, max_rel_err, rng, uniform, vary_h, widen};
use rand::Rng;
use sfcnb::baselines::{build_full_list, reduce_direct, reduce_full};
use sfcnb::cluster::ClusterParams;
use sfcnb::geometry::SimulationBox;
use sfcnb::kernels::{FnKernel, LennardJones, NeighborCount, SphDensity};
use sfcnb::nblist::{sort_and_build, BuildParams, Mode};
use sfcnb::particles::ParticleSet;
use sfcnb::pass::{reduce, OutputField, PairKernel, PassConfig, PassOutput, Reduction, Symmetry};
use sfcnb::{Error, KernelError};

fn params(mode: Mode, cj: usize, compress: bool, scale: f64) -> BuildParams {
    BuildParams::new(ClusterParams::new(8, cj, 32).unwrap(), mode, compress, scale).unwrap()
}

fn with_charges(ps: ParticleSet, seed: u64) -> ParticleSet {
    let mut r = rng(seed);
    let q = (0..ps.len()).map(|_| r.random_range(-1.0..1.0)).collect();
    ps.with_field("charge", q).unwrap()
}

/// Store, full list and direct evaluation of `kernel` over curve-sorted particles.
fn three_routes<K: PairKernel<f64>>(
    ps: &ParticleSet,
    bx: &SimulationBox,
    bp: &BuildParams,
    kernel: &K,
) -> (PassOutput<f64>, PassOutput<f64>, PassOutput<f64>) {
    let built = sort_and_build(ps, bx, bp).unwrap();
    let sorted = &built.particles;
    let cfg = PassConfig::default();
    let a = reduce(sorted, bx, &built.store, kernel, &cfg).unwrap();
    let list = build_full_list(sorted, bx, bp.build_scale, bp.mode).unwrap();
    let b = reduce_full(sorted, bx, &list, kernel, &cfg).unwrap();
    let c = reduce_direct(sorted, bx, bp.mode, kernel, &cfg).unwrap();
    (a, b, c)
}

fn lj() -> LennardJones {
    LennardJones::new(1.0, 0.05).with_coulomb(0.5)
}

#[test]
fn lj_and_density_agree_across_routes() {
    let cases = [
        uniform(2500, 80.0, false, 1),
        uniform(2500, 80.0, true, 2),
        evrard(2500, 80.0, false, 3),
    ];
    for (ps, bx) in cases {
        let ps = with_charges(ps, 9);
        for ps in [ps.clone(), vary_h(&ps, &bx, 0.7, 1.3, 4)] {
            for mode in [Mode::Gather, Mode::Symmetric] {
                for cj in [4, 8] {
                    let bp = params(mode, cj, true, 1.0);
                    let (a, b, c) = three_routes(&ps, &bx, &bp, &lj());
                    assert!(max_rel_err(&a, &c) <= 1e-12, "lj store/direct {mode:?}");
                    assert!(max_rel_err(&b, &c) <= 1e-12, "lj full/direct {mode:?}");
                    assert_eq!(a.counts, c.counts);
                    let (a, b, c) = three_routes(&ps, &bx, &bp, &SphDensity::new(true));
                    assert!(max_rel_err(&a, &c) <= 1e-12, "rho store/direct {mode:?}");
                    assert!(max_rel_err(&b, &c) <= 1e-12, "rho full/direct {mode:?}");
                    if mode == Mode::Gather {
                        // same ascending-j summation order
                        assert_eq!(a, c);
                        assert_eq!(b, c);
                    }
                }
            }
        }
    }
}

#[test]
fn newton_third_law_in_symmetric_mode() {
    let (ps, bx) = uniform(4000, 100.0, false, 5);
    let ps = with_charges(ps, 6);
    let built = sort_and_build(&ps, &bx, &params(Mode::Symmetric, 4, true, 1.0)).unwrap();
    let out: PassOutput<f64> = reduce(&built.particles, &bx, &built.store, &lj(), &PassConfig::default()).unwrap();
    for d in 0..3 {
        let f = &out.values[d];
        let sum: f64 = f.iter().sum();
        let abs: f64 = f.iter().map(|x| x.abs()).sum();
        assert!(sum.abs() <= 1e-10 * abs, "axis {d}: {sum} vs {abs}");
    }
}

#[test]
fn gather_and_symmetric_agree_for_constant_h() {
    let (ps, bx) = uniform(3000, 100.0, true, 7);
    let ps = with_charges(ps, 8);
    let g = sort_and_build(&ps, &bx, &params(Mode::Gather, 8, true, 1.0)).unwrap();
    let s = sort_and_build(&ps, &bx, &params(Mode::Symmetric, 8, true, 1.0)).unwrap();
    let cfg = PassConfig::default();
    let k = lj();
    let a: PassOutput<f64> = reduce(&g.particles, &bx, &g.store, &k, &cfg).unwrap();
    let b: PassOutput<f64> = reduce(&s.particles, &bx, &s.store, &k, &cfg).unwrap();
    assert_eq!(a.counts, b.counts);
    assert!(max_rel_err(&b, &a) <= 1e-12);
}

#[test]
fn skin_does_not_change_results() {
    let (ps, bx) = evrard(3000, 80.0, false, 9);
    for mode in [Mode::Gather, Mode::Symmetric] {
        let mut base: Option<PassOutput<f64>> = None;
        for scale in [1.0, 1.1, 1.3] {
            let built = sort_and_build(&ps, &bx, &params(mode, 8, true, scale)).unwrap();
            let out = reduce(&built.particles, &bx, &built.store, &SphDensity::new(true), &PassConfig::default())
                .unwrap();
            let out = common::unsort(&out, &built.order.perm);
            match &base {
                None => base = Some(out),
                Some(b) => {
                    assert_eq!(out.counts, b.counts);
                    assert!(max_rel_err(&out, b) <= 1e-12);
                    if mode == Mode::Gather {
                        assert_eq!(&out, b);
                    }
                }
            }
        }
    }
}

#[test]
fn compressed_and_raw_are_bitwise_identical() {
    let (ps, bx) = uniform(3000, 120.0, true, 10);
    let ps = with_charges(ps, 11);
    for mode in [Mode::Gather, Mode::Symmetric] {
        let a = sort_and_build(&ps, &bx, &params(mode, 4, true, 1.2)).unwrap();
        let b = sort_and_build(&ps, &bx, &params(mode, 4, false, 1.2)).unwrap();
        let cfg = PassConfig::default();
        let x: PassOutput<f64> = reduce(&a.particles, &bx, &a.store, &lj(), &cfg).unwrap();
        let y: PassOutput<f64> = reduce(&b.particles, &bx, &b.store, &lj(), &cfg).unwrap();
        assert_eq!(x, y);
        assert!(a.store.memory_footprint().total_bytes < b.store.memory_footprint().total_bytes);
    }
}

#[test]
fn single_precision_matches_double() {
    let (ps, bx) = uniform(2500, 80.0, true, 12);
    for mode in [Mode::Gather, Mode::Symmetric] {
        let built = sort_and_build(&ps, &bx, &params(mode, 8, true, 1.0)).unwrap();
        let cfg = PassConfig::default();
        let k = SphDensity::new(true);
        let single: PassOutput<f32> = reduce(&built.particles, &bx, &built.store, &k, &cfg).unwrap();
        let double = reduce_direct(&built.particles, &bx, mode, &k, &cfg).unwrap();
        assert!(max_rel_err(&widen(&single), &double) <= 1e-5);
        assert_eq!(single.counts, double.counts);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (ps, bx) = uniform(4000, 100.0, true, 13);
    let ps = with_charges(ps, 14);
    for mode in [Mode::Gather, Mode::Symmetric] {
        let built = sort_and_build(&ps, &bx, &params(mode, 4, true, 1.0)).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| reduce::<f64, _>(&built.particles, &bx, &built.store, &lj(), &PassConfig::default()).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}

#[test]
fn query_radius_below_build_radius() {
    let (ps, bx) = uniform(2000, 60.0, true, 15);
    let built = sort_and_build(&ps, &bx, &params(Mode::Gather, 8, true, 1.3)).unwrap();
    let cfg = PassConfig { query_scale: 0.8 };
    let a: PassOutput<f64> = reduce(&built.particles, &bx, &built.store, &NeighborCount::default(), &cfg).unwrap();
    let b = reduce_direct(&built.particles, &bx, Mode::Gather, &NeighborCount::default(), &cfg).unwrap();
    assert_eq!(a, b);
    let err = reduce::<f64, _>(
        &built.particles,
        &bx,
        &built.store,
        &NeighborCount::default(),
        &PassConfig { query_scale: 1.31 },
    )
    .unwrap_err();
    assert!(matches!(err, Error::QueryExceedsBuild { .. }));
}

#[test]
fn reductions_identities_and_postamble() {
    struct Probe {
        outputs: Vec<OutputField>,
    }
    impl PairKernel<f64> for Probe {
        fn inputs(&self) -> &[String] {
            &[]
        }
        fn outputs(&self) -> &[OutputField] {
            &self.outputs
        }
        fn pair(
            &self,
            _i: &sfcnb::pass::PairParticle<'_, f64>,
            j: &sfcnb::pass::PairParticle<'_, f64>,
            _dx: [f64; 3],
            d2: f64,
            out: &mut [f64],
        ) -> Result<(), KernelError> {
            out[0] = d2;
            out[1] = d2;
            out[2] = j.index as f64;
            Ok(())
        }
        fn postamble(&self, _i: &sfcnb::pass::PairParticle<'_, f64>, values: &mut [f64], count: usize) {
            values[3] = count as f64 + 100.0;
        }
    }
    let probe = Probe {
        outputs: vec![
            OutputField::new("min", Symmetry::Even, Reduction::Min),
            OutputField::new("max", Symmetry::Even, Reduction::Max),
            OutputField::new("jsum", Symmetry::None, Reduction::Sum),
            OutputField::sum("post", Symmetry::None),
        ],
    };
    let bx = SimulationBox::cube(10.0, [false; 3]).unwrap();
    let pos = [[1.0, 1.0, 1.0], [1.5, 1.0, 1.0], [2.0, 1.0, 1.0], [8.0, 8.0, 8.0]];
    let ps = ParticleSet::from_positions(&pos, vec![1.0; 4], &bx).unwrap();
    for mode in [Mode::Gather, Mode::Symmetric] {
        let built = sort_and_build(&ps, &bx, &params(mode, 8, true, 1.0)).unwrap();
        let out = reduce(&built.particles, &bx, &built.store, &probe, &PassConfig::default()).unwrap();
        let out = common::unsort(&out, &built.order.perm);
        assert_eq!(out.counts, vec![2, 2, 2, 0]);
        assert_eq!(out.field("min").unwrap(), &[0.25, 0.25, 0.25, f64::INFINITY]);
        assert_eq!(out.field("max").unwrap(), &[1.0, 0.25, 1.0, f64::NEG_INFINITY]);
        assert_eq!(out.field("post").unwrap(), &[102.0, 102.0, 102.0, 100.0]);
        if mode == Mode::Gather {
            // indices are curve-sorted slots; only their count matters here
            assert_eq!(out.field("jsum").unwrap()[3], 0.0);
        }
    }
}

#[test]
fn closure_kernel_counts_like_builtin() {
    let (ps, bx) = uniform(1500, 50.0, true, 16);
    let built = sort_and_build(&ps, &bx, &params(Mode::Symmetric, 4, true, 1.0)).unwrap();
    let k = FnKernel::<f64>::new(&[], vec![OutputField::sum("n", Symmetry::Even)], |_, _, _, _, out| {
        out[0] = 1.0;
        Ok(())
    });
    let cfg = PassConfig::default();
    let a = reduce(&built.particles, &bx, &built.store, &k, &cfg).unwrap();
    let b = reduce(&built.particles, &bx, &built.store, &NeighborCount::default(), &cfg).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn errors() {
    let bx = SimulationBox::cube(10.0, [false; 3]).unwrap();
    let ps = ParticleSet::from_positions(&[[1.0; 3], [1.0; 3]], vec![1.0; 2], &bx).unwrap();
    let built = sort_and_build(&ps, &bx, &BuildParams::default()).unwrap();
    let cfg = PassConfig::default();
    let err = reduce::<f64, _>(&built.particles, &bx, &built.store, &LennardJones::new(1.0, 1.0), &cfg).unwrap_err();
    assert!(matches!(err, Error::Kernel(KernelError::Coincident { .. })));
    let err = reduce::<f64, _>(&built.particles, &bx, &built.store, &SphDensity::new(true), &cfg).unwrap_err();
    assert!(matches!(err, Error::MissingField(ref f) if f == "mass"));
    let three = ParticleSet::from_positions(&[[1.0; 3]; 3], vec![1.0; 3], &bx).unwrap();
    let err = reduce::<f64, _>(&three, &bx, &built.store, &NeighborCount::default(), &cfg).unwrap_err();
    assert!(matches!(err, Error::StoreMismatch { expected: 2, found: 3 }));
}

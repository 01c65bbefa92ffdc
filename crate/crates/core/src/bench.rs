//! Particle generators, the cluster-overhead metric and a timed benchmark
//! driver producing one CSV row per configuration.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::baselines::{build_full_list, full_list_grid, reduce_full, FullVerletList};
use crate::cluster::{range_unchecked, ClusterParams, SUPER_CLUSTER_SIZE};
use crate::error::{Error, Result};
use crate::geometry::{cutoff_sq, periodic_delta, SimulationBox};
use crate::kernels::{LennardJones, NeighborCount, SphDensity};
use crate::nblist::{sort_and_build, BuildParams, Mode, NeighborStore, SortedStore};
use crate::particles::ParticleSet;
use crate::pass::{reduce, PairKernel, PassConfig, PassOutput, Real};

/// Default number density for uniform runs, in particles per unit volume.
pub const DEFAULT_DENSITY: f64 = 100.0;
/// Half-width of the open box around the unit Evrard sphere.
pub const EVRARD_HALF_WIDTH: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    #[default]
    Uniform,
    /// Unit sphere with density proportional to `1/r`.
    Evrard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterChoice {
    #[default]
    C8x8,
    C8x4,
    /// No clustering: a per-particle Verlet list.
    C1x1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelChoice {
    Lj,
    Density,
    #[default]
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    Single,
}

fn parse_err(what: &str, s: &str) -> Error {
    Error::Config(format!("unknown {what} `{s}`"))
}

impl FromStr for Distribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "evrard" => Ok(Self::Evrard),
            _ => Err(parse_err("distribution", s)),
        }
    }
}

impl FromStr for ClusterChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "8x8" => Ok(Self::C8x8),
            "8x4" => Ok(Self::C8x4),
            "1x1" => Ok(Self::C1x1),
            _ => Err(parse_err("cluster configuration", s)),
        }
    }
}

impl FromStr for KernelChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lj" => Ok(Self::Lj),
            "density" => Ok(Self::Density),
            "count" => Ok(Self::Count),
            _ => Err(parse_err("kernel", s)),
        }
    }
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" | "f64" => Ok(Self::Double),
            "single" | "f32" => Ok(Self::Single),
            _ => Err(parse_err("precision", s)),
        }
    }
}

/// Parses a subset of `xyz` (empty or `none` for an open box).
pub fn parse_periodic(s: &str) -> Result<[bool; 3]> {
    let mut p = [false; 3];
    if s == "none" {
        return Ok(p);
    }
    for c in s.chars() {
        let d = match c {
            'x' => 0,
            'y' => 1,
            'z' => 2,
            _ => return Err(parse_err("periodic axis", &c.to_string())),
        };
        p[d] = true;
    }
    Ok(p)
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Evrard => "evrard",
        })
    }
}

impl fmt::Display for ClusterChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::C8x8 => "8x8",
            Self::C8x4 => "8x4",
            Self::C1x1 => "1x1",
        })
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lj => "lj",
            Self::Density => "density",
            Self::Count => "count",
        })
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Double => "double",
            Self::Single => "single",
        })
    }
}

impl ClusterChoice {
    pub fn params(self, block_width: usize) -> Result<Option<ClusterParams>> {
        match self {
            Self::C8x8 => ClusterParams::new(8, 8, block_width).map(Some),
            Self::C8x4 => ClusterParams::new(8, 4, block_width).map(Some),
            Self::C1x1 => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub distribution: Distribution,
    pub n: usize,
    /// Desired mean neighbor count at query scale 1.
    pub target_neighbors: f64,
    /// Number density of uniform runs.
    pub density: f64,
    /// Build radius scale (Verlet skin); the pass queries at scale 1.
    pub cutoff_scale: f64,
    pub cluster: ClusterChoice,
    pub block_width: usize,
    pub compress: bool,
    pub mode: Mode,
    pub kernel: KernelChoice,
    pub precision: Precision,
    pub periodic: [bool; 3],
    pub seed: u64,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            distribution: Distribution::Uniform,
            n: 100_000,
            target_neighbors: 150.0,
            density: DEFAULT_DENSITY,
            cutoff_scale: 1.0,
            cluster: ClusterChoice::C8x8,
            block_width: 32,
            compress: true,
            mode: Mode::Gather,
            kernel: KernelChoice::Count,
            precision: Precision::Double,
            periodic: [false; 3],
            seed: 1,
            repeats: 3,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.target_neighbors >= 1.0 && self.target_neighbors.is_finite()) {
            return Err(Error::Config(format!(
                "target neighbors must be >= 1, got {}",
                self.target_neighbors
            )));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::Config(format!("invalid density {}", self.density)));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        self.build_params()?;
        Ok(())
    }

    /// Store parameters; `None` for the 1x1 configuration.
    pub fn build_params(&self) -> Result<Option<BuildParams>> {
        match self.cluster.params(self.block_width)? {
            Some(c) => BuildParams::new(c, self.mode, self.compress, self.cutoff_scale).map(Some),
            None => {
                // same validation as the clustered path
                BuildParams::new(ClusterParams::default(), self.mode, self.compress, self.cutoff_scale)?;
                Ok(None)
            }
        }
    }

    /// Stable identifier built from every field that changes the results.
    pub fn id(&self) -> String {
        let per: String = ['x', 'y', 'z']
            .iter()
            .zip(self.periodic)
            .filter(|(_, p)| *p)
            .map(|(c, _)| *c)
            .collect();
        let mode = match self.mode {
            Mode::Gather => "gather",
            Mode::Symmetric => "symmetric",
        };
        format!(
            "{}-n{}-t{}-rho{}-s{}-{}-w{}-{}-{}-{}-{}-p{}-seed{}",
            self.distribution,
            self.n,
            self.target_neighbors,
            self.density,
            self.cutoff_scale,
            self.cluster,
            self.block_width,
            if self.compress { "comp" } else { "raw" },
            mode,
            self.kernel,
            self.precision,
            if per.is_empty() { "none" } else { &per },
            self.seed
        )
    }
}

/// Smoothing length giving `target` neighbors at number density `rho`:
/// `(4/3) pi h^3 rho = target`.
pub fn uniform_radius(target: f64, rho: f64) -> f64 {
    (3.0 * target / (4.0 * PI * rho)).cbrt()
}

/// Generates the particle set of `cfg` and its box. Particles carry a `mass`
/// field (total mass 1 for Evrard, unit masses otherwise).
pub fn generate(cfg: &BenchConfig) -> Result<(ParticleSet, SimulationBox)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.distribution {
        Distribution::Uniform => {
            let side = (cfg.n as f64 / cfg.density).cbrt();
            let bx = SimulationBox::cube(side, cfg.periodic)?;
            let pos: Vec<[f64; 3]> = (0..cfg.n)
                .map(|_| {
                    [
                        rng.random_range(0.0..side),
                        rng.random_range(0.0..side),
                        rng.random_range(0.0..side),
                    ]
                })
                .collect();
            let h = uniform_radius(cfg.target_neighbors, cfg.density);
            ParticleSet::from_positions(&pos, vec![h; cfg.n], &bx)?
                .with_field("mass", vec![1.0; cfg.n])
                .map(|ps| (ps, bx))
        }
        Distribution::Evrard => {
            let w = EVRARD_HALF_WIDTH;
            let bx = SimulationBox::new([-w; 3], [w; 3], cfg.periodic)?;
            let n = cfg.n as f64;
            let mut pos = Vec::with_capacity(cfg.n);
            let mut local = Vec::with_capacity(cfg.n);
            for _ in 0..cfg.n {
                // enclosed mass grows as r^2
                let u: f64 = 1.0 - rng.random::<f64>();
                let r = u.sqrt();
                let cos_t: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                pos.push([r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t]);
                // number density n / (2 pi r)
                local.push(uniform_radius(cfg.target_neighbors, n / (2.0 * PI * r)));
            }
            let ps = ParticleSet::from_positions(&pos, local.clone(), &bx)?;
            let factor = calibrate_radius(&ps, &bx, cfg.target_neighbors, &mut rng)?;
            let h = local.iter().map(|&h| h * factor).collect();
            ParticleSet::from_positions(&pos, h, &bx)?
                .with_field("mass", vec![1.0 / n; cfg.n])
                .map(|ps| (ps, bx))
        }
    }
}

/// Global factor on `h` making the sampled mean gather count hit `target`.
fn calibrate_radius(ps: &ParticleSet, bx: &SimulationBox, target: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = ps.len();
    let samples: Vec<usize> = (0..n.min(256)).map(|_| rng.random_range(0..n)).collect();
    let mut factor = 1.0;
    for _ in 0..4 {
        let total: usize = samples
            .iter()
            .map(|&i| {
                let r2 = cutoff_sq(ps.h()[i], factor);
                (0..n)
                    .filter(|&j| j != i && periodic_delta(ps.pos(i), ps.pos(j), bx).1 <= r2)
                    .count()
            })
            .sum();
        let mean = total as f64 / samples.len() as f64;
        if mean == 0.0 {
            factor *= 2.0;
            continue;
        }
        factor *= (target / mean).cbrt();
    }
    // the radius may not exceed half a periodic box
    let max_r = factor * ps.max_h();
    let len = bx.lengths();
    for d in 0..3 {
        if bx.periodic()[d] && 2.0 * max_r > len[d] {
            factor *= len[d] / (2.0 * max_r);
        }
    }
    Ok(factor)
}

/// Evaluated pair slots: for every stored entry and every set mask bit,
/// (i-cluster size) x (j-cluster size), with partial clusters at their real
/// size.
pub fn slot_count(store: &NeighborStore) -> Result<u64> {
    let n = store.num_particles();
    let cp = store.params().clusters;
    let mut slots = 0u64;
    for s in 0..store.num_super_clusters() {
        let first_i = s * SUPER_CLUSTER_SIZE / cp.ci();
        for e in store.neighbor_clusters(s)? {
            let (j, mask) = e?;
            let nj = range_unchecked(j as usize, cp.cj(), n).len() as u64;
            for b in 0..8 {
                if mask >> b & 1 == 1 {
                    slots += range_unchecked(first_i + b, cp.ci(), n).len() as u64 * nj;
                }
            }
        }
    }
    Ok(slots)
}

/// Pairs evaluated by the store divided by pairs actually inside the build
/// radius: ordered pairs in gather mode, unordered ones in symmetric mode.
/// `ps` must be the curve-sorted set the store was built over. Infinite if
/// slots exist but no pair is in range.
pub fn cluster_overhead(ps: &ParticleSet, bx: &SimulationBox, store: &NeighborStore) -> Result<f64> {
    if ps.len() != store.num_particles() {
        return Err(Error::StoreMismatch {
            expected: store.num_particles(),
            found: ps.len(),
        });
    }
    let bp = store.params();
    let list = full_list_grid(ps, bx, bp.build_scale, bp.mode)?;
    let pairs = match bp.mode {
        Mode::Gather => list.total_pairs(),
        Mode::Symmetric => list.total_pairs() / 2,
    } as f64;
    let slots = slot_count(store)? as f64;
    Ok(if pairs == 0.0 {
        if slots == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        slots / pairs
    })
}

/// Overhead of a per-particle list: every evaluated slot is a real pair.
pub fn full_list_overhead(_list: &FullVerletList) -> f64 {
    1.0
}

/// Column names of [`BenchRow::record`].
pub const CSV_HEADER: [&str; 8] = [
    "config_id",
    "n",
    "mean_neighbors",
    "build_ms",
    "pass_ms",
    "bytes_per_particle",
    "overhead_ratio",
    "output_hash",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub config_id: String,
    pub n: usize,
    pub mean_neighbors: f64,
    /// Minimum over repeats.
    pub build_ms: f64,
    pub pass_ms: f64,
    pub build_ms_median: f64,
    pub pass_ms_median: f64,
    pub bytes_per_particle: f64,
    pub overhead_ratio: f64,
    pub output_hash: String,
}

impl BenchRow {
    pub fn record(&self) -> [String; 8] {
        [
            self.config_id.clone(),
            self.n.to_string(),
            format!("{:.6}", self.mean_neighbors),
            format!("{:.3}", self.build_ms),
            format!("{:.3}", self.pass_ms),
            format!("{:.6}", self.bytes_per_particle),
            format!("{:.6}", self.overhead_ratio),
            self.output_hash.clone(),
        ]
    }
}

/// SHA-256 over the output names, the bit patterns of every value and the
/// neighbor counts, hex encoded.
pub fn output_hash(out: &PassOutput<f64>) -> String {
    let mut h = Sha256::new();
    for (name, vals) in out.names.iter().zip(&out.values) {
        h.update(name.as_bytes());
        h.update([0u8]);
        for v in vals {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    for c in &out.counts {
        h.update(c.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn widen<T: Real>(out: PassOutput<T>) -> PassOutput<f64> {
    PassOutput {
        names: out.names,
        values: out
            .values
            .into_iter()
            .map(|v| v.into_iter().map(T::into_f64).collect())
            .collect(),
        counts: out.counts,
    }
}

fn unsort(out: PassOutput<f64>, sorted: &SortedStore) -> PassOutput<f64> {
    PassOutput {
        names: out.names,
        values: out.values.iter().map(|v| sorted.order.unapply(v)).collect(),
        counts: sorted.order.unapply(&out.counts),
    }
}

#[allow(clippy::large_enum_variant)]
enum Built {
    Clustered(SortedStore),
    Full(FullVerletList),
}

impl Built {
    fn run<T: Real, K: PairKernel<T>>(
        &self,
        ps: &ParticleSet,
        bx: &SimulationBox,
        kernel: &K,
    ) -> Result<PassOutput<f64>> {
        let cfg = PassConfig::default();
        Ok(match self {
            Built::Clustered(s) => unsort(widen(reduce(&s.particles, bx, &s.store, kernel, &cfg)?), s),
            Built::Full(list) => widen(reduce_full(ps, bx, list, kernel, &cfg)?),
        })
    }
}

fn run_kernel(cfg: &BenchConfig, built: &Built, ps: &ParticleSet, bx: &SimulationBox) -> Result<PassOutput<f64>> {
    fn go<T: Real>(cfg: &BenchConfig, built: &Built, ps: &ParticleSet, bx: &SimulationBox) -> Result<PassOutput<f64>> {
        match cfg.kernel {
            KernelChoice::Count => built.run::<T, _>(ps, bx, &NeighborCount::default()),
            KernelChoice::Density => built.run::<T, _>(ps, bx, &SphDensity::new(true)),
            KernelChoice::Lj => {
                // sigma at a fifth of the uniform spacing keeps forces moderate
                let sigma = 0.2 * (1.0 / cfg.density).cbrt();
                built.run::<T, _>(ps, bx, &LennardJones::new(1.0, sigma))
            }
        }
    }
    match cfg.precision {
        Precision::Double => go::<f64>(cfg, built, ps, bx),
        Precision::Single => go::<f32>(cfg, built, ps, bx),
    }
}

fn min_and_median(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    let median = if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    };
    (v[0], median)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Generates the particles of `cfg`, then times `repeats` builds and passes
/// after one untimed warm-up of each.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchRow> {
    let (ps, bx) = generate(cfg)?;
    run_bench_on(cfg, &ps, &bx)
}

/// [`run_bench`] on a given particle set.
pub fn run_bench_on(cfg: &BenchConfig, ps: &ParticleSet, bx: &SimulationBox) -> Result<BenchRow> {
    cfg.validate()?;
    let bp = cfg.build_params()?;
    let build_once = || -> Result<Built> {
        Ok(match bp {
            Some(bp) => Built::Clustered(sort_and_build(ps, bx, &bp)?),
            None => Built::Full(build_full_list(ps, bx, cfg.cutoff_scale, cfg.mode)?),
        })
    };

    let mut built = build_once()?;
    let mut build_times = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let t = Instant::now();
        built = build_once()?;
        build_times.push(ms_since(t));
    }

    let mut out = run_kernel(cfg, &built, ps, bx)?;
    let mut pass_times = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let t = Instant::now();
        out = run_kernel(cfg, &built, ps, bx)?;
        pass_times.push(ms_since(t));
    }

    let (bytes_per_particle, overhead_ratio) = match &built {
        Built::Clustered(s) => (
            s.store.memory_footprint().bytes_per_particle,
            cluster_overhead(&s.particles, bx, &s.store)?,
        ),
        Built::Full(list) => (list.bytes_per_particle(), full_list_overhead(list)),
    };
    let mean_neighbors = out.counts.iter().map(|&c| c as f64).sum::<f64>() / ps.len() as f64;
    let (build_ms, build_ms_median) = min_and_median(build_times);
    let (pass_ms, pass_ms_median) = min_and_median(pass_times);
    Ok(BenchRow {
        config_id: cfg.id(),
        n: ps.len(),
        mean_neighbors,
        build_ms,
        pass_ms,
        build_ms_median,
        pass_ms_median,
        bytes_per_particle,
        overhead_ratio,
        output_hash: output_hash(&out),
    })
}

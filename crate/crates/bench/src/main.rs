//! Benchmark driver: generates particles, builds neighbor lists and runs a
//! pass for every requested configuration, writing one CSV row each.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;
use sfcnb::bench::{parse_periodic, run_bench, BenchConfig, ClusterChoice, CSV_HEADER};
use sfcnb::nblist::Mode;

#[derive(Debug, Parser)]
#[command(name = "sfcnb-bench", about = "Neighbor list build and pass benchmarks", version)]
struct Args {
    /// Plain-text `key = value` file; keys are flag names without dashes.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output file; rows go to stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// uniform | evrard
    #[arg(long)]
    distribution: Option<String>,

    #[arg(long)]
    n: Option<String>,

    /// Mean neighbor count; a comma list sweeps several values.
    #[arg(long)]
    target_neighbors: Option<String>,

    /// Number density of the uniform distribution.
    #[arg(long)]
    density: Option<String>,

    /// Build radius scale (Verlet skin) relative to the query radius.
    #[arg(long)]
    cutoff_scale: Option<String>,

    /// 8x8 | 8x4 | 1x1, or a comma list.
    #[arg(long)]
    cluster: Option<String>,

    /// Codec block width, 32 or 64.
    #[arg(long)]
    block_width: Option<String>,

    /// on | off
    #[arg(long)]
    compress: Option<String>,

    /// gather | symmetric
    #[arg(long)]
    mode: Option<String>,

    /// lj | density | count
    #[arg(long)]
    kernel: Option<String>,

    /// double | single
    #[arg(long)]
    precision: Option<String>,

    /// Periodic axes as a subset of `xyz`, or `none`.
    #[arg(long)]
    periodic: Option<String>,

    #[arg(long)]
    seed: Option<String>,

    #[arg(long)]
    repeats: Option<String>,
}

/// Base configuration plus the swept values.
#[derive(Debug, Clone, PartialEq)]
struct Sweep {
    base: BenchConfig,
    targets: Vec<f64>,
    clusters: Vec<ClusterChoice>,
}

impl Default for Sweep {
    fn default() -> Self {
        let base = BenchConfig::default();
        Self {
            targets: vec![base.target_neighbors],
            clusters: vec![base.cluster],
            base,
        }
    }
}

fn list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let items = value
        .split(',')
        .map(|s| s.trim().parse::<T>().with_context(|| format!("bad list item `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        bail!("empty list");
    }
    Ok(items)
}

impl Sweep {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let b = &mut self.base;
        let v = value.trim();
        let key = key.trim().replace('_', "-");
        match key.as_str() {
            "distribution" => b.distribution = v.parse()?,
            "n" => b.n = v.parse()?,
            "target-neighbors" => self.targets = list(v)?,
            "density" => b.density = v.parse()?,
            "cutoff-scale" => b.cutoff_scale = v.parse()?,
            "cluster" => self.clusters = list(v)?,
            "block-width" => b.block_width = v.parse()?,
            "compress" => {
                b.compress = match v {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    _ => bail!("compress must be on or off, got `{v}`"),
                }
            }
            "mode" => {
                b.mode = match v {
                    "gather" => Mode::Gather,
                    "symmetric" => Mode::Symmetric,
                    _ => bail!("mode must be gather or symmetric, got `{v}`"),
                }
            }
            "kernel" => b.kernel = v.parse()?,
            "precision" => b.precision = v.parse()?,
            "periodic" => b.periodic = parse_periodic(v)?,
            "seed" => b.seed = v.parse()?,
            "repeats" => b.repeats = v.parse()?,
            _ => bail!("unknown key `{key}`"),
        }
        Ok(())
    }

    fn configs(&self) -> Vec<BenchConfig> {
        let mut out = Vec::new();
        for &t in &self.targets {
            for &c in &self.clusters {
                out.push(BenchConfig {
                    target_neighbors: t,
                    cluster: c,
                    ..self.base.clone()
                });
            }
        }
        out
    }
}

fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), k + 1);
        };
        out.push((key.trim().to_owned(), value.trim().to_owned()));
    }
    Ok(out)
}

fn flag_pairs(args: &Args) -> Vec<(&'static str, &str)> {
    let flags = [
        ("distribution", &args.distribution),
        ("n", &args.n),
        ("target-neighbors", &args.target_neighbors),
        ("density", &args.density),
        ("cutoff-scale", &args.cutoff_scale),
        ("cluster", &args.cluster),
        ("block-width", &args.block_width),
        ("compress", &args.compress),
        ("mode", &args.mode),
        ("kernel", &args.kernel),
        ("precision", &args.precision),
        ("periodic", &args.periodic),
        ("seed", &args.seed),
        ("repeats", &args.repeats),
    ];
    flags
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
}

/// Defaults, then the config file, then flags.
fn resolve(args: &Args) -> Result<Sweep> {
    let mut sweep = Sweep::default();
    if let Some(path) = &args.config {
        for (k, v) in read_config(path)? {
            sweep
                .apply(&k, &v)
                .with_context(|| format!("{}: key `{k}`", path.display()))?;
        }
    }
    for (k, v) in flag_pairs(args) {
        sweep.apply(k, v).with_context(|| format!("flag --{k}"))?;
    }
    for cfg in sweep.configs() {
        cfg.validate()?;
    }
    Ok(sweep)
}

fn run(args: &Args) -> Result<()> {
    let sweep = resolve(args)?;
    let sink: Box<dyn Write> = match &args.csv {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for cfg in sweep.configs() {
        let row = run_bench(&cfg).with_context(|| format!("config {}", cfg.id()))?;
        eprintln!(
            "{}: build median {:.3} ms, pass median {:.3} ms",
            row.config_id, row.build_ms_median, row.pass_ms_median
        );
        w.write_record(row.record())?;
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    run(&Args::parse())
}

//! Benchmark harness: random tree SEMs, both learners, SHD and precise
//! recovery rate.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chow_liu::chow_liu;
use crate::error::{Error, Result};
use crate::estimators::sample_covariance;
use crate::graphs::{cpdag_of, random_directed_tree_with, random_polytree_with, shd, Cpdag, Skeleton};
use crate::hard_instances::{agnostic_beta_sampler_with, iid_beta_sampler_with};
use crate::model::{sample, Dag, GaussianSem, NoiseFamily};
use crate::pc_tree::{orient, pc_tree_skeleton, DEFAULT_CUTOFF};
use crate::rng::{self, mix_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ChowLiu,
    PcTree,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::ChowLiu, Algorithm::PcTree];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::ChowLiu => "chow_liu",
            Algorithm::PcTree => "pc_tree",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "chow_liu" => Ok(Algorithm::ChowLiu),
            "pc_tree" => Ok(Algorithm::PcTree),
            other => Err(Error::InvalidParameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// How edge coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BetaMode {
    /// Magnitude uniform on `[0.1, 0.5)`, random sign.
    #[default]
    Iid,
    /// The i.i.d. draw plus one shared shift uniform on `[−z_scale, z_scale]`.
    Agnostic { z_scale: f64 },
}

/// Ground-truth graph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// Uniform labeled tree oriented away from a uniform random root.
    #[default]
    DirectedTree,
    /// Uniform labeled tree with fair-coin edge orientations.
    Polytree,
}

fn default_trials() -> usize {
    50
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub d_list: Vec<usize>,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub noise: NoiseFamily,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default)]
    pub beta_mode: BetaMode,
    #[serde(default)]
    pub graph: GraphKind,
    #[serde(default)]
    pub seed: u64,
    /// Compare CPDAGs instead of skeletons.
    #[serde(default)]
    pub cpdag_shd: bool,
    /// Fill `wall_time_ms`; off by default so output is reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl BenchConfig {
    pub fn new(d_list: Vec<usize>, n_list: Vec<usize>) -> Self {
        BenchConfig {
            d_list,
            n_list,
            noise: NoiseFamily::Gaussian,
            trials: default_trials(),
            algorithms: default_algorithms(),
            cutoff: DEFAULT_CUTOFF,
            beta_mode: BetaMode::Iid,
            graph: GraphKind::DirectedTree,
            seed: 0,
            cpdag_shd: false,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.d_list.is_empty() || self.n_list.is_empty() || self.algorithms.is_empty() {
            return bad("d_list, n_list and algorithms must be nonempty");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.d_list.iter().any(|&d| d < 2) {
            return bad("every d must be at least 2");
        }
        if self.n_list.contains(&0) {
            return bad("every n must be at least 1");
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return bad("cutoff must lie in (0, 1)");
        }
        if let BetaMode::Agnostic { z_scale } = self.beta_mode {
            if !(z_scale >= 0.0 && z_scale.is_finite()) {
                return bad("z_scale must be non-negative");
            }
        }
        Ok(())
    }

    /// Description of the generative choices, for a sidecar file.
    pub fn metadata(&self) -> BenchMetadata {
        BenchMetadata {
            beta_interval: "magnitude uniform on [0.1, 0.5), sign uniform on {-1, +1}".into(),
            beta_mode: self.beta_mode,
            orientation: match self.graph {
                GraphKind::DirectedTree => "uniform labeled tree (Prufer), uniform random root, edges away from root",
                GraphKind::Polytree => "uniform labeled tree (Prufer), each edge oriented by an independent fair coin",
            }
            .into(),
            noise_variance: 1.0,
            noise_draw: format!("raw {} draws (variance {})", self.noise, self.noise.variance()),
            seed_mixing: "trial seed = splitmix64 fold of (master seed, d, n, trial)".into(),
            shd_level: if self.cpdag_shd { "cpdag" } else { "skeleton" }.into(),
            cutoff: self.cutoff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetadata {
    pub beta_interval: String,
    pub beta_mode: BetaMode,
    pub orientation: String,
    pub noise_variance: f64,
    pub noise_draw: String,
    pub seed_mixing: String,
    pub shd_level: String,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub d: usize,
    pub n: usize,
    pub noise: NoiseFamily,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub seed: u64,
    pub shd: usize,
    pub exact: bool,
    pub wall_time_ms: f64,
    /// Error message of a failed run; not part of the CSV.
    #[serde(skip)]
    pub note: Option<String>,
}

/// Seed of trial `trial` at grid point `(d, n)`.
pub fn trial_seed(master: u64, d: usize, n: usize, trial: usize) -> u64 {
    mix_seed(master, &[d as u64, n as u64, trial as u64])
}

/// The ground-truth SEM of one trial: unit noise variances.
pub fn trial_model(config: &BenchConfig, d: usize, seed: u64) -> Result<GaussianSem> {
    let mut rng = rng::seeded(seed);
    let dag: Dag = match config.graph {
        GraphKind::DirectedTree => random_directed_tree_with(&mut rng, d)?.dag().clone(),
        GraphKind::Polytree => random_polytree_with(&mut rng, d)?.into_dag(),
    };
    let beta = match config.beta_mode {
        BetaMode::Iid => iid_beta_sampler_with(&mut rng, d - 1),
        BetaMode::Agnostic { z_scale } => agnostic_beta_sampler_with(&mut rng, d - 1, z_scale)?,
    };
    let edges: Vec<_> = dag.edges().iter().zip(beta).map(|(&(p, c), b)| (p, c, b)).collect();
    GaussianSem::new(d, &edges, vec![1.0; d])
}

enum Learned {
    Skeleton(Skeleton),
    Cpdag(Cpdag),
}

struct Outcome {
    skeleton: Skeleton,
    cpdag: Option<Cpdag>,
    error: Option<Error>,
}

fn run_algorithm(algorithm: Algorithm, data: &crate::model::SampleMatrix, cutoff: f64, d: usize) -> Outcome {
    let failed = |e: Error| Outcome {
        skeleton: Skeleton::empty(d),
        cpdag: None,
        error: Some(e),
    };
    match algorithm {
        Algorithm::ChowLiu => match chow_liu(data) {
            Ok(fit) => Outcome {
                cpdag: Some(cpdag_of(fit.tree.dag())),
                skeleton: fit.skeleton.into_skeleton(),
                error: None,
            },
            Err(e) => failed(e),
        },
        Algorithm::PcTree => match pc_tree_skeleton(&sample_covariance(data), cutoff) {
            Ok((skeleton, sepsets)) => match orient(&skeleton, &sepsets) {
                Ok(c) => Outcome {
                    skeleton,
                    cpdag: Some(c),
                    error: None,
                },
                Err(e) => Outcome {
                    skeleton,
                    cpdag: None,
                    error: Some(e),
                },
            },
            Err(e) => failed(e),
        },
    }
}

fn run_trial(config: &BenchConfig, d: usize, n: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(config.seed, d, n, trial);
    let sem = trial_model(config, d, seed)?;
    let data = sample(&sem, n, config.noise, mix_seed(seed, &[1]))?;
    let truth = if config.cpdag_shd {
        Learned::Cpdag(cpdag_of(sem.graph()))
    } else {
        Learned::Skeleton(sem.graph().skeleton())
    };
    let mut algorithms = config.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    algorithms
        .into_iter()
        .map(|algorithm| {
            let start = Instant::now();
            let out = run_algorithm(algorithm, &data, config.cutoff, d);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let distance = match (&truth, &out.cpdag) {
                (Learned::Cpdag(t), Some(c)) => shd(t, c)?,
                (Learned::Cpdag(t), None) => shd(&t.skeleton(), &out.skeleton)?,
                (Learned::Skeleton(t), _) => shd(t, &out.skeleton)?,
            };
            Ok(TrialRecord {
                d,
                n,
                noise: config.noise,
                algorithm,
                trial,
                seed,
                shd: distance,
                exact: distance == 0 && out.error.is_none(),
                wall_time_ms: if config.record_wall_time { elapsed } else { 0.0 },
                note: out.error.map(|e| e.to_string()),
            })
        })
        .collect()
}

/// Runs every `(d, n, trial)` cell in parallel; records come back sorted by
/// `(d, n, algorithm, trial)`.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let cells: Vec<(usize, usize, usize)> = config
        .d_list
        .iter()
        .flat_map(|&d| config.n_list.iter().flat_map(move |&n| (0..config.trials).map(move |t| (d, n, t))))
        .collect();
    let mut records: Vec<TrialRecord> = cells
        .par_iter()
        .map(|&(d, n, t)| run_trial(config, d, n, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    records.sort_by_key(|r| (r.d, r.n, r.algorithm, r.trial));
    Ok(records)
}

/// Mean SHD and precise recovery rate of one `(d, n, noise, algorithm)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub d: usize,
    pub n: usize,
    pub noise: NoiseFamily,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub mean_shd: f64,
    pub prr: f64,
}

type GroupKey = (usize, usize, NoiseFamily, Algorithm);

pub fn aggregate(records: &[TrialRecord]) -> Vec<SummaryRow> {
    // (trials, shd sum, exact count)
    let mut groups: BTreeMap<GroupKey, (usize, usize, usize)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.d, r.n, r.noise, r.algorithm)).or_default();
        g.0 += 1;
        g.1 += r.shd;
        g.2 += usize::from(r.exact);
    }
    groups
        .into_iter()
        .map(|((d, n, noise, algorithm), (count, shd_sum, exact))| SummaryRow {
            d,
            n,
            noise,
            algorithm,
            trials: count,
            mean_shd: shd_sum as f64 / count as f64,
            prr: exact as f64 / count as f64,
        })
        .collect()
}

pub fn write_records_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(["d", "n", "noise", "algorithm", "trial", "seed", "shd", "exact", "wall_time_ms"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

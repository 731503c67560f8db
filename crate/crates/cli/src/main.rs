//! `gausstree`: generate tree-structured Gaussian models, simulate them, learn
//! structure from samples and run the benchmark grid.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gausstree::bench::{aggregate, run_bench, write_records_csv, write_summary_csv, BenchConfig, BenchMetadata};
use gausstree::chow_liu::chow_liu;
use gausstree::graphs::random_directed_tree_with;
use gausstree::hard_instances::{
    iid_beta_sampler_with, nonrealizable_gadget, realizable_gadget_sems, structure_lb_instance, GadgetPair,
};
use gausstree::io::{
    read_json, read_model, read_samples_file, read_tree, write_json, write_samples, CovarianceJson, CpdagJson,
    ModelJson, TreeJson,
};
use gausstree::kl::kl_decomposition;
use gausstree::model::{sample, sem_to_covariance, GaussianSem, NoiseFamily};
use gausstree::pc_tree::{pc_tree, DEFAULT_CUTOFF};
use gausstree::rng::seeded;

#[derive(Debug, Parser)]
#[command(name = "gausstree", version, about = "Structure learning for tree-structured Gaussian models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a uniform random labeled tree, oriented away from a random root.
    GenTree {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tree JSON destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a model on the tree with random coefficients and unit noise.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Sample from a model and write CSV.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = NoiseFamily::Gaussian)]
        noise: NoiseFamily,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit a `x0,...,x{d-1}` header row.
        #[arg(long)]
        header: bool,
    },
    /// Learn a directed tree with Chow-Liu.
    ChowLiu {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn a CPDAG with PC-Tree.
    PcTree {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// KL divergence from a model to its best approximation on a tree.
    Kl {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tree: PathBuf,
    },
    /// Emit a hard instance.
    GenHard {
        kind: HardKind,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark grid.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Per-trial CSV; metadata goes next to it as `<stem>.meta.json`.
        #[arg(long)]
        out: PathBuf,
        /// Per-cell mean SHD and recovery rate.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HardKind {
    Nonrealizable,
    Realizable,
    StructureLb,
}

#[derive(Serialize)]
struct GadgetJson {
    epsilon: f64,
    sigma1: CovarianceJson,
    sigma2: CovarianceJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    model1: Option<ModelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model2: Option<ModelJson>,
}

impl From<&GadgetPair> for GadgetJson {
    fn from(g: &GadgetPair) -> Self {
        GadgetJson {
            epsilon: g.epsilon,
            sigma1: (&g.sigma1).into(),
            sigma2: (&g.sigma2).into(),
            model1: None,
            model2: None,
        }
    }
}

#[derive(Serialize)]
struct BenchMeta<'a> {
    config: &'a BenchConfig,
    generation: BenchMetadata,
    records: usize,
    failed_trials: Vec<String>,
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    match out {
        Some(path) => write_json(path, value).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
        }
    }
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenTree { d, seed, out, model } => {
            let mut rng = seeded(seed);
            let tree = random_directed_tree_with(&mut rng, d)?;
            emit_json(out.as_deref(), &TreeJson::from(&tree))?;
            if let Some(path) = model {
                let betas = iid_beta_sampler_with(&mut rng, tree.edges().len());
                let edges: Vec<_> = tree.edges().iter().zip(betas).map(|(&(p, c), b)| (p, c, b)).collect();
                let sem = GaussianSem::new(d, &edges, vec![1.0; d])?;
                write_json(&path, &ModelJson::from(&sem))?;
            }
        }
        Command::Simulate {
            model,
            n,
            noise,
            seed,
            out,
            header,
        } => {
            let sem = read_model(&model).with_context(|| format!("reading {}", model.display()))?;
            let data = sample(&sem, n, noise, seed)?;
            match out {
                Some(path) => write_samples(create(&path)?, &data, header)?,
                None => write_samples(io::stdout().lock(), &data, header)?,
            }
        }
        Command::ChowLiu { data, out } => {
            let samples = read_samples_file(&data).with_context(|| format!("reading {}", data.display()))?;
            let fit = chow_liu(&samples)?;
            emit_json(out.as_deref(), &TreeJson::from(&fit.tree))?;
        }
        Command::PcTree { data, cutoff, out } => {
            let samples = read_samples_file(&data).with_context(|| format!("reading {}", data.display()))?;
            let cpdag = pc_tree(&samples, cutoff)?;
            emit_json(out.as_deref(), &CpdagJson::from(&cpdag))?;
        }
        Command::Kl { model, tree } => {
            let sem = read_model(&model).with_context(|| format!("reading {}", model.display()))?;
            let tree = read_tree(&tree).with_context(|| format!("reading {}", tree.display()))?;
            let decomposition = kl_decomposition(&sem_to_covariance(&sem)?, &tree)?;
            emit_json(None, &decomposition)?;
        }
        Command::GenHard {
            kind,
            epsilon,
            c,
            d,
            seed,
            out,
        } => match kind {
            HardKind::Nonrealizable => {
                let Some(eps) = epsilon else { bail!("nonrealizable requires --epsilon") };
                emit_json(out.as_deref(), &GadgetJson::from(&nonrealizable_gadget(eps)?))?;
            }
            HardKind::Realizable => {
                let Some(eps) = epsilon else { bail!("realizable requires --epsilon") };
                let (first, second) = realizable_gadget_sems(eps)?;
                let json = GadgetJson {
                    epsilon: eps,
                    sigma1: (&sem_to_covariance(&first)?).into(),
                    sigma2: (&sem_to_covariance(&second)?).into(),
                    model1: Some((&first).into()),
                    model2: Some((&second).into()),
                };
                emit_json(out.as_deref(), &json)?;
            }
            HardKind::StructureLb => {
                let (Some(c), Some(d)) = (c, d) else { bail!("structure-lb requires --c and --d") };
                let sem = structure_lb_instance(d, c, seed)?;
                emit_json(out.as_deref(), &ModelJson::from(&sem))?;
            }
        },
        Command::Bench { config, out, summary } => {
            let cfg: BenchConfig = read_json(&config).with_context(|| format!("reading {}", config.display()))?;
            cfg.validate()?;
            let records = run_bench(&cfg)?;
            write_records_csv(create(&out)?, &records)?;
            let failed_trials = records
                .iter()
                .filter_map(|r| {
                    r.note
                        .as_ref()
                        .map(|note| format!("d={} n={} {} trial {}: {note}", r.d, r.n, r.algorithm, r.trial))
                })
                .collect();
            let meta = BenchMeta {
                config: &cfg,
                generation: cfg.metadata(),
                records: records.len(),
                failed_trials,
            };
            write_json(out.with_extension("meta.json"), &meta)?;
            if let Some(path) = summary {
                write_summary_csv(create(&path)?, &aggregate(&records))?;
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<gausstree::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn numerical_errors_map_to_exit_code_two() {
        let numerical = anyhow::Error::new(gausstree::Error::NotPositiveDefinite);
        assert_eq!(exit_code(&numerical), 2);
        let wrapped = numerical.context("reading model");
        assert_eq!(exit_code(&wrapped), 2);
        assert_eq!(exit_code(&anyhow::Error::new(gausstree::Error::Cyclic)), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("missing flag")), 1);
    }
}

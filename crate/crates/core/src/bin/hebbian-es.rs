//! `hebbian-es`: train, evaluate, perturb and analyze evolved plasticity rules.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hebbian_es::expcli::{
    cmd_analyze, cmd_evaluate, cmd_perturb, cmd_resume, cmd_train, load_genome, AnalysisKind, ExperimentConfig, PerturbOutput,
    PerturbRequest, TrainOptions,
};

#[derive(Parser)]
#[command(name = "hebbian-es", version, about = "Evolve per-synapse Hebbian rules with evolution strategies")]
struct Cli {
    /// Threads used for episode evaluation. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Named preset, used when no config file is given.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> hebbian_es::Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p),
            (None, Some(name)) => ExperimentConfig::preset(name),
            (None, None) => ExperimentConfig::preset("desk-crawler"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an evolution and write curve, checkpoints and best genome.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        generations: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mean ± std per morphology over fresh rollouts.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Genome (.hbgn) or checkpoint (.hbes).
        genome: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Freeze sweeps, weight zeroing and action saturation.
    Perturb {
        #[command(flatten)]
        cfg: ConfigArgs,
        genome: PathBuf,
        /// Comma list of freeze steps, e.g. 0,10,20. Runs a sweep.
        #[arg(long, value_delimiter = ',')]
        freeze_at: Vec<usize>,
        #[arg(long)]
        zero_fraction: Option<f64>,
        /// Step of the zeroing event.
        #[arg(long, default_value_t = 500)]
        at: usize,
        /// Zero the middle band of each layer instead of random synapses.
        #[arg(long)]
        band: bool,
        /// START:END, end exclusive.
        #[arg(long, value_parser = parse_window)]
        saturate: Option<(usize, usize)>,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Also write every weight snapshot.
        #[arg(long)]
        record_weights: bool,
        #[arg(long, default_value = "perturb")]
        out: PathBuf,
    },
    /// PCA, coefficient histograms and weight grids.
    Analyze {
        #[arg(value_enum)]
        kind: Kind,
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Fit one PCA basis over all trajectories.
        #[arg(long)]
        joint: bool,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Snapshot index for frames from a trajectory.
        #[arg(long)]
        index: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
    },
    /// Continue a run from one of its checkpoints.
    Resume {
        checkpoint: PathBuf,
        /// Override the run's stored config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Pca,
    Histogram,
    Frames,
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let a = a.parse().map_err(|e| format!("{e}"))?;
    let b = b.parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn run(cli: Cli) -> hebbian_es::Result<()> {
    let workers = cli.workers;
    match cli.command {
        Command::Train { cfg, out, resume, generations, seed } => {
            let mut config = cfg.load()?;
            if let Some(g) = generations {
                config.run.generations = g;
            }
            if let Some(s) = seed {
                config.run.master_seed = s;
            }
            let t = cmd_train(&config, &TrainOptions { workers, out_dir: out, resume })?;
            report_train(&t.out_dir, &t.manifest);
        }
        Command::Resume { checkpoint, config } => {
            let config = config.map(ExperimentConfig::load).transpose()?;
            let t = cmd_resume(&checkpoint, config.as_ref(), workers)?;
            report_train(&t.out_dir, &t.manifest);
        }
        Command::Evaluate { cfg, genome, episodes, seed, out } => {
            let config = cfg.load()?;
            let genome = load_genome(&genome, &config)?;
            let report = with_pool(workers, || cmd_evaluate(&config, &genome, episodes, seed, out.as_deref()))?;
            print!("{}", report.table());
        }
        Command::Perturb { cfg, genome, freeze_at, zero_fraction, at, band, saturate, scenario, episodes, seed, record_weights, out } => {
            let config = cfg.load()?;
            let genome = load_genome(&genome, &config)?;
            let req = PerturbRequest { freeze_at, zero: zero_fraction.map(|f| (at, f)), saturate, band, scenario, episodes, seed, record_weights };
            match with_pool(workers, || cmd_perturb(&config, &genome, &req, &out))? {
                PerturbOutput::Sweep(s) => {
                    println!("{}: unperturbed {:.1}", s.scenario, s.unperturbed);
                    for p in &s.points {
                        println!("  freeze at {:>5}  {:>9.1} ± {:.1}", p.freeze_step, p.mean, p.std);
                    }
                    match s.onset {
                        Some(t) => println!("within {:.0}% from step {t}", s.tolerance * 100.0),
                        None => println!("never within {:.0}%", s.tolerance * 100.0),
                    }
                }
                PerturbOutput::Trace(o) => {
                    println!("fitness {:.1} over {} steps; events: {}", o.fitness, o.steps, o.perturbations.len());
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Analyze { kind, inputs, cfg, joint, bins, index, seed, out } => {
            let config = if cfg.config.is_some() || cfg.preset.is_some() { Some(cfg.load()?) } else { None };
            let kind = match kind {
                Kind::Pca => AnalysisKind::Pca { joint },
                Kind::Histogram => AnalysisKind::Histogram { bins },
                Kind::Frames => AnalysisKind::Frames { index, seed },
            };
            for p in cmd_analyze(&kind, &inputs, config.as_ref(), &out)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn report_train(out: &Path, m: &hebbian_es::expcli::RunManifest) {
    let best = m.metrics.best_eval_mean.map_or("-".to_string(), |v| format!("{v:.3}"));
    println!(
        "{} generations in {:.1}s; best eval {best} at generation {}; outputs in {}",
        m.metrics.generations,
        m.wall_seconds,
        m.metrics.best_generation,
        out.display()
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Weight trajectories from many random starts, projected on a shared
//! three-component basis. Evolved rules pull them to the same region.
//!
//! ```text
//! cargo run --release --example pca_attractor -- [genome.hbgn | generations]
//! ```

use std::path::PathBuf;

use hebbian_es::analysis::{pca3_joint, WeightTrajectory};
use hebbian_es::expcli::{cmd_train, ExperimentConfig, TrainOptions};
use hebbian_es::genome::Genome;
use hebbian_es::net::NoHooks;
use hebbian_es::rollout::{run_episode, Agent, SeedBank, Task};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let mut config = ExperimentConfig::preset("desk-crawler")?;
    let genome = match std::env::args().nth(1).map(PathBuf::from) {
        Some(p) if p.exists() => Genome::load(&p, Some(&config.topology))?,
        other => {
            config.run.generations = other.and_then(|p| p.to_str()?.parse().ok()).unwrap_or(100);
            config.output_dir = Some(std::env::temp_dir().join("hebbian-es-pca"));
            let run = cmd_train(&config, &TrainOptions { workers: 4, ..Default::default() })?;
            Genome::load(run.out_dir.join("best.hbgn"), Some(&config.topology))?
        }
    };
    let agent = Agent::new(&genome, &config.topology)?;
    let task = Task::from_config(&config.env)?;
    let mut lifetime = config.lifetime.clone();
    lifetime.record.weight_stride = Some(10);

    let bank = SeedBank::new(21);
    let mut trajectories = Vec::new();
    for i in 0..5 {
        let out = run_episode(&agent, &task.seen[0], bank.episode(i), &lifetime, &mut NoHooks)?;
        println!("start {i}: fitness {:.1}", out.fitness);
        trajectories.push(WeightTrajectory::from_outcome(&out, &config.topology, 10)?);
    }
    let fit = pca3_joint(&trajectories.iter().collect::<Vec<_>>())?;
    println!("explained variance ratio {:?}", fit.explained_ratio.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>());

    let t = trajectories[0].len();
    for (i, chunk) in fit.projection.chunks(t).enumerate() {
        let first = &chunk[0];
        let last = &chunk[t - 1];
        println!(
            "start {i}: ({:>7.2}, {:>7.2}, {:>7.2}) -> ({:>7.2}, {:>7.2}, {:>7.2})",
            first[0], first[1], first[2], last[0], last[1], last[2]
        );
    }
    let spread = |idx: usize| {
        let pts: Vec<&Vec<f64>> = fit.projection.chunks(t).map(|c| &c[idx]).collect();
        let mut worst: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                worst = worst.max(a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt());
            }
        }
        worst
    };
    println!("largest pairwise distance: start {:.2}, end {:.2}", spread(0), spread(t - 1));
    Ok(())
}

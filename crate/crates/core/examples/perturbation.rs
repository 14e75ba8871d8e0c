//! Freeze the rule at different steps, knock out a third of the weights, and
//! jam the actuators, then watch the evolved rule recover.
//!
//! ```text
//! cargo run --release --example perturbation -- [genome.hbgn | generations]
//! ```
//! Without a genome file a desk crawler is trained first.

use std::path::PathBuf;

use hebbian_es::analysis::{convergence_sweep, plateau_onset};
use hebbian_es::expcli::{cmd_train, ExperimentConfig, TrainOptions};
use hebbian_es::genome::Genome;
use hebbian_es::rollout::{evaluate, run_perturbed, Agent, PerturbationEvent, PerturbationSchedule, SeedBank, Task};

fn moving_average(xs: &[f64], end: usize, window: usize) -> f64 {
    let lo = end.saturating_sub(window);
    xs[lo..end].iter().sum::<f64>() / (end - lo).max(1) as f64
}

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let mut config = ExperimentConfig::preset("desk-crawler")?;
    let arg = std::env::args().nth(1);
    let genome = match arg.as_deref().map(PathBuf::from) {
        Some(p) if p.exists() => Genome::load(&p, Some(&config.topology))?,
        other => {
            config.run.generations = other.and_then(|p| p.to_str()?.parse().ok()).unwrap_or(100);
            config.output_dir = Some(std::env::temp_dir().join("hebbian-es-perturbation"));
            let run = cmd_train(&config, &TrainOptions { workers: 4, ..Default::default() })?;
            Genome::load(run.out_dir.join("best.hbgn"), Some(&config.topology))?
        }
    };
    let agent = Agent::new(&genome, &config.topology)?;
    let task = Task::from_config(&config.env)?;
    let healthy = &task.seen[0];
    let bank = SeedBank::new(5);
    let lifetime = &config.lifetime;

    let reference = evaluate(&agent, healthy, 20, bank, lifetime)?.mean;
    let steps: Vec<usize> = (0..=200).step_by(10).collect();
    let sweep = convergence_sweep(&agent, healthy, &steps, 20, bank, lifetime)?;
    println!("freeze sweep on {} (unperturbed {reference:.1})", healthy.name);
    for p in &sweep {
        let bar = "#".repeat((p.mean.max(0.0) / reference.abs().max(1.0) * 40.0) as usize);
        println!("  T={:>4} {:>8.1} {bar}", p.freeze_step, p.mean);
    }
    match plateau_onset(&sweep, reference, 0.05) {
        Some(t) => println!("  within 5% from T={t}"),
        None => println!("  never within 5%"),
    }

    for (label, event) in [("zero 1/3 of weights at 500", PerturbationEvent::zero(500, 1.0 / 3.0)), ("saturate on [300, 400)", PerturbationEvent::saturate(300, 400))] {
        let mut recorded = lifetime.clone();
        recorded.record.steps = true;
        let schedule = PerturbationSchedule::new(vec![event.clone()])?;
        let out = run_perturbed(&agent, healthy, &schedule, bank.episode(0), &recorded)?;
        let rewards: Vec<f64> = out.records.iter().map(|r| r.reward).collect();
        let end = event.at_step + event.duration.unwrap_or(0);
        let before = moving_average(&rewards, event.at_step, 50);
        let back = (end..rewards.len()).find(|&t| t >= end + 10 && (moving_average(&rewards, t, 10) - before).abs() <= 0.2 * before.abs());
        println!("{label}: fitness {:.1}, reward before {before:.3}", out.fitness);
        for t in (event.at_step.saturating_sub(20)..(end + 200).min(rewards.len())).step_by(20) {
            println!("  t={t:>4}  avg reward {:>7.3}", moving_average(&rewards, t + 1, 10));
        }
        match back {
            Some(t) => println!("  back within 20% after {} steps", t - end),
            None => println!("  did not recover"),
        }
    }
    Ok(())
}

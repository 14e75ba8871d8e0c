//! Train Hebbian and static-weight crawlers on two morphologies and test
//! them on a third, held-out one.
//!
//! ```text
//! cargo run --release --example crawler_adaptation -- [generations] [seed]
//! ```

use hebbian_es::envs::EnvConfig;
use hebbian_es::es::{run_evolution, EsConfig, EsState, EvolutionConfig, Progress, Shaping};
use hebbian_es::genome::{init_genome, layout_for, Genome, GenomeMode};
use hebbian_es::net::{LifetimeConfig, NetworkTopology, PlasticityVariant};
use hebbian_es::rollout::{evaluate, Agent, SeedBank, Task, TaskFitness};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let generations: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(300);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let env = EnvConfig::desk_crawler();
    let task = Task::from_config(&env)?;
    let topology = NetworkTopology::desk_crawler(4);
    let lifetime = LifetimeConfig::default();

    for mode in [GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta), GenomeMode::StaticWeights] {
        let layout = layout_for(&topology, mode);
        let fitness = TaskFitness {
            topology: topology.clone(),
            layout: layout.clone(),
            task: task.clone(),
            lifetime: lifetime.clone(),
            train_episodes: 1,
            eval_episodes: 5,
        };
        let es = EsConfig { population: 100, shaping: Shaping::CenteredRank, ..EsConfig::default() };
        let h0 = init_genome(&layout, seed).values;
        let state = EsState::new(h0, &es, seed)?;
        let config = EvolutionConfig { generations, shaping: es.shaping, eval_seed: seed + 1000, ..EvolutionConfig::default() };
        let t0 = std::time::Instant::now();
        let result = run_evolution(Progress::new(state), &config, &fitness, &mut |p| {
            let row = p.curve.last().expect("row per generation");
            if row.generation % 25 == 0 {
                println!("  gen {:>4}  pop mean {:>8.1}  eval {:>8.1}", row.generation, row.pop_mean, row.eval_mean);
            }
            Ok(())
        })?;
        let genome = Genome::new(layout, result.best.clone())?;
        let agent = Agent::new(&genome, &topology)?;
        println!("{} (best at generation {}, {:.0?}):", mode.describe(), result.best_generation, t0.elapsed());
        for s in task.all() {
            let e = evaluate(&agent, s, 100, SeedBank::new(77), &lifetime)?;
            let solved = e.solved_count(s.solved_threshold().unwrap_or(f64::INFINITY));
            println!("  {:<22} {:<6} {:>10}  solved {solved}/100", s.name, if s.seen { "seen" } else { "unseen" }, e.summary());
        }
    }
    Ok(())
}

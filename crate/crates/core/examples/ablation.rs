//! Every rule variant trained the same way on the desk crawler.
//!
//! ```text
//! cargo run --release --example ablation -- [generations] [seed]
//! ```

use hebbian_es::envs::EnvConfig;
use hebbian_es::es::{run_evolution, EsConfig, EsState, EvolutionConfig, Progress, Shaping};
use hebbian_es::genome::{init_genome, layout_for, Genome, GenomeMode};
use hebbian_es::net::{LifetimeConfig, NetworkTopology, PlasticityVariant};
use hebbian_es::rollout::{evaluate, Agent, SeedBank, Task, TaskFitness};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let generations: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let task = Task::from_config(&EnvConfig::desk_crawler())?;
    let topology = NetworkTopology::desk_crawler(4);
    let lifetime = LifetimeConfig::default();
    let synapses = topology.synapse_count();
    println!("{:<14} {:>6} {:>6} {:>10} {:>10}", "variant", "len", "ratio", "healthy", "damaged");
    for variant in PlasticityVariant::ALL {
        let layout = layout_for(&topology, GenomeMode::hebbian(variant));
        let fitness = TaskFitness {
            topology: topology.clone(),
            layout: layout.clone(),
            task: task.clone(),
            lifetime: lifetime.clone(),
            train_episodes: 1,
            eval_episodes: 5,
        };
        let es = EsConfig { population: 100, shaping: Shaping::CenteredRank, ..EsConfig::default() };
        let state = EsState::new(init_genome(&layout, seed).values, &es, seed)?;
        let config = EvolutionConfig { generations, shaping: es.shaping, ..EvolutionConfig::default() };
        let result = run_evolution(Progress::new(state), &config, &fitness, &mut |_| Ok(()))?;
        let agent = Agent::new(&Genome::new(layout.clone(), result.best)?, &topology)?;
        let scores: Vec<String> = task
            .seen
            .iter()
            .map(|s| evaluate(&agent, s, 20, SeedBank::new(9), &lifetime).map(|e| e.summary()))
            .collect::<hebbian_es::Result<_>>()?;
        println!(
            "{:<14} {:>6} {:>5}x {:>10} {:>10}",
            variant.name(),
            layout.total_len,
            layout.total_len / synapses,
            scores[0],
            scores[1]
        );
    }
    Ok(())
}

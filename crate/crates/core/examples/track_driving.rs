//! Driving a procedurally generated loop from pixels.
//!
//! ```text
//! cargo run --release --example track_driving -- [generations] [seed]
//! ```

use hebbian_es::envs::track::{generate_track, tile_fitness};
use hebbian_es::envs::EnvConfig;
use hebbian_es::expcli::{cmd_evaluate, cmd_train, ExperimentConfig, TrainOptions};
use hebbian_es::genome::Genome;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let mut config = ExperimentConfig::preset("desk-track")?;
    config.run.generations = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30);
    config.run.master_seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    config.output_dir = Some(std::env::temp_dir().join("hebbian-es-track"));

    if let EnvConfig::Track { params, .. } = &config.env {
        let track = generate_track(config.run.master_seed, params)?;
        println!("sample track: {} tiles", track.len());
        println!(
            "all tiles in 600 frames would score {:.1}; half of them {:.1}",
            tile_fitness(track.len(), track.len(), 600),
            tile_fitness(track.len() / 2, track.len(), 600)
        );
    }

    let run = cmd_train(&config, &TrainOptions { workers: 4, ..Default::default() })?;
    for row in run.progress.curve.iter().step_by(5) {
        println!("gen {:>3}  pop mean {:>7.1}  max {:>7.1}  eval {:>7.1}", row.generation, row.pop_mean, row.pop_max, row.eval_mean);
    }
    let genome = Genome::load(run.out_dir.join("best.hbgn"), Some(&config.topology))?;
    let report = cmd_evaluate(&config, &genome, Some(10), 3, None)?;
    print!("{}", report.table());
    Ok(())
}

//! Presets, overrides and the canonical form of a run config.

use hebbian_es::expcli::{ExperimentConfig, PRESETS};

const OVERRIDE: &str = r#"
preset = "desk-crawler"
name = "ablation-a-only"

[genome]
mode = "hebbian"
variant = "A_only"

[es]
population = 64

[run]
generations = 150
master_seed = 3
"#;

fn main() -> hebbian_es::Result<()> {
    for name in PRESETS {
        let cfg = ExperimentConfig::preset(name)?;
        let status = match cfg.validate() {
            Ok(()) => "valid".to_string(),
            Err(e) => format!("invalid: {e}"),
        };
        println!("{name:<16} n={:<4} generations={:<5} {status}", cfg.es.population, cfg.run.generations);
    }

    let cfg = ExperimentConfig::from_toml(OVERRIDE)?;
    cfg.validate()?;
    let text = cfg.canonical()?;
    println!("\ncanonical form ({} bytes, sha256 {}):\n{text}", text.len(), cfg.hash()?);
    assert_eq!(ExperimentConfig::from_toml(&text)?, cfg);

    let broken = OVERRIDE.replace("population = 64", "population = 63");
    match ExperimentConfig::from_toml(&broken).and_then(|c| c.validate()) {
        Ok(()) => println!("odd population accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}

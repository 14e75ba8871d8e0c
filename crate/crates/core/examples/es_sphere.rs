//! The optimizer alone, on a 10-dimensional sphere, under each fitness
//! shaping.

use hebbian_es::envs::objective::Sphere;
use hebbian_es::es::{run_evolution, EsConfig, EsState, EvolutionConfig, Progress, Shaping};

fn main() -> hebbian_es::Result<()> {
    let target = vec![1.0; 10];
    let sphere = Sphere::new(target.clone());
    for shaping in [Shaping::Raw, Shaping::CenteredRank, Shaping::ZScore] {
        let es = EsConfig { population: 100, shaping, ..EsConfig::default() };
        let start = EsState::new(vec![0.0; 10], &es, 0)?;
        let config = EvolutionConfig { generations: 300, shaping, ..EvolutionConfig::default() };
        let mut trace = Vec::new();
        let result = run_evolution(Progress::new(start), &config, &sphere, &mut |p| {
            if p.state.generation % 50 == 0 {
                trace.push((p.state.generation, sphere.distance(&p.state.h)));
            }
            Ok(())
        })?;
        println!("{shaping:?}");
        for (g, d) in trace {
            println!("  gen {g:>3}  |h - h*| = {d:.2e}");
        }
        println!("  final alpha {:.4}  sigma {:.4}", result.state.alpha, result.state.sigma);
    }
    Ok(())
}

//! What one application of the rule does to a tiny network.
//!
//! A 3-2 layer is driven by a fixed input. Each variant gets the same
//! coefficient values; inactive classes are simply ignored.

use hebbian_es::envs::Observation;
use hebbian_es::net::{forward, hebbian_step, CoefficientClass, HebbianCoefficients, NetworkTopology, PlasticityVariant, WeightState};

fn main() -> hebbian_es::Result<()> {
    let topology = NetworkTopology::new(3, vec![2])?;
    let obs = Observation::Vector(vec![0.5, -1.0, 0.25]);
    let start = WeightState::init(&topology, 11, Default::default());
    let (_, trace) = forward(&topology, &start, None, &obs)?;
    println!("pre  {:?}", trace.layers[0].pre);
    println!("post {:?}", trace.layers[0].post);

    for variant in PlasticityVariant::ALL {
        let mut coeffs = HebbianCoefficients::zeros(&topology, variant);
        for (class, v) in [(CoefficientClass::A, 1.0), (CoefficientClass::B, 0.1), (CoefficientClass::C, -0.1), (CoefficientClass::D, 0.01)] {
            coeffs.tensor_mut(class)[0].as_mut_slice().fill(v);
        }
        if variant.is_active(CoefficientClass::Eta) {
            coeffs.eta[0].as_mut_slice().fill(0.5);
        }
        let mut w = start.clone();
        hebbian_step(&mut w, &coeffs, &trace)?;
        let dw: Vec<String> = w.layers[0]
            .as_slice()
            .iter()
            .zip(start.layers[0].as_slice())
            .map(|(a, b)| format!("{:+.4}", a - b))
            .collect();
        println!("{:<14} dw = [{}]", variant.name(), dw.join(", "));
    }

    // Repeated updates from random starts: the rule alone moves the weights.
    let quad = NetworkTopology::quadruped();
    let mut coeffs = HebbianCoefficients::zeros(&quad, PlasticityVariant::AOnly);
    for m in &mut coeffs.a {
        m.as_mut_slice().fill(0.01);
    }
    let mut w = WeightState::init(&quad, 0, Default::default());
    let input = Observation::Vector((0..quad.input_dim).map(|i| (i as f64 * 0.3).sin()).collect());
    for step in 0..=50 {
        if step % 10 == 0 {
            let norms: Vec<String> = w.layers.iter().map(|m| format!("{:.3}", m.max_abs())).collect();
            println!("step {step:>3}: max |w| per layer {}", norms.join(" "));
        }
        let (_, trace) = forward(&quad, &w, None, &input)?;
        hebbian_step(&mut w, &coeffs, &trace)?;
    }
    Ok(())
}

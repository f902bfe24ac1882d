//! Noisy IPN estimates at a given interference error ratio: distance to the
//! noise-free equilibrium for IWF and averaged IWF.
//!
//! ```bash
//! cargo run --release --example noisy_ier -- 15
//! ```

use aiwf::algorithms::{run, Algorithm, RunSpec, StepSizeSchedule};
use aiwf::experiments::{noise_free_equilibrium, random_weak_network};
use aiwf::noise::{NoiseKind, NoiseModel};

fn main() -> aiwf::Result<()> {
    let ier_db: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let model = random_weak_network(10, 64, 0)?;
    let reference = noise_free_equilibrium(&model, 1e-13, 100_000)?;
    let noise = NoiseModel::new(NoiseKind::GaussianIer { ier_db }, 1)?;
    println!("IER {ier_db} dB");
    for algorithm in [
        Algorithm::Iwf,
        Algorithm::Aiwf { schedule: StepSizeSchedule::Harmonic },
        Algorithm::Aiwf {
            schedule: StepSizeSchedule::PowerDecay { scale: 1.0, offset: 1.0, gamma: 0.75 },
        },
    ] {
        let spec = RunSpec::new(algorithm.clone())
            .noise(noise.clone())
            .max_iters(2000)
            .reference(reference.clone())
            .decimation(100);
        let trace = run(&model, &spec)?;
        let d = &trace.distance_to_reference;
        let checkpoints: Vec<String> = [0, 10, 100, 1000, 2000]
            .iter()
            .map(|&t| format!("t={t}: {:.2e}", d[t]))
            .collect();
        println!("{:<22} {}", algorithm.label(), checkpoints.join("  "));
    }
    Ok(())
}

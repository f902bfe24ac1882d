//! Noise-free convergence speed on a weak-interference network: IWF
//! contracts geometrically, averaging slows it to a sublinear rate.
//!
//! ```bash
//! cargo run --release --example ideal_speed
//! ```

use aiwf::algorithms::{run, Algorithm, RunSpec, StepSizeSchedule};
use aiwf::experiments::{noise_free_equilibrium, random_weak_network};

fn main() -> aiwf::Result<()> {
    let model = random_weak_network(10, 64, 0)?;
    let reference = noise_free_equilibrium(&model, 1e-13, 100_000)?;
    for algorithm in [
        Algorithm::Iwf,
        Algorithm::Riwf { lambda: 0.5 },
        Algorithm::Aiwf { schedule: StepSizeSchedule::Harmonic },
    ] {
        let trace = run(&model, &RunSpec::new(algorithm.clone()).max_iters(500).reference(reference.clone()))?;
        let first_below = trace.distance_to_reference.iter().position(|d| *d < 1e-6);
        println!(
            "{:<10} {:<14} first t with distance < 1e-6: {:?}",
            algorithm.label(),
            trace.verdict.label(),
            first_below
        );
    }
    Ok(())
}

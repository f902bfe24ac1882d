//! The scalar averaging recursion `w <- (1 - a) w + a xi` with harmonic
//! steps drives `w` to zero under zero-mean noise.
//!
//! ```bash
//! cargo run --release --example lemma4
//! ```

use aiwf::algorithms::StepSizeSchedule;
use aiwf::experiments::lemma4_recursion;

fn main() -> aiwf::Result<()> {
    let schedule = StepSizeSchedule::Harmonic;
    for steps in [10, 1_000, 100_000] {
        let finals: Vec<f64> = (0..20)
            .map(|seed| lemma4_recursion(&schedule, 1.0, 0.0, steps, seed).map(|t| t.last()))
            .collect::<aiwf::Result<_>>()?;
        let worst = finals.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        println!("T={steps:<7} max |w^T| over 20 seeds {worst:.4}");
    }
    let silent = lemma4_recursion(&schedule, 0.0, 1.0, 99, 0)?;
    println!("noise-free from w0 = 1: w^99 = {} (1/100)", silent.last());
    Ok(())
}

//! Distribution of the averaged water-filling bias `M_i(k)` for a few
//! sample counts `L`.
//!
//! ```bash
//! cargo run --release --example bias_study -- 50
//! ```
//! The argument is the number of repetitions (default 20).

use aiwf::experiments::{bias_study, BiasStudyParams};

fn main() -> aiwf::Result<()> {
    let repetitions = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    for l in [10, 100, 1000, 10_000] {
        let r = bias_study(&BiasStudyParams {
            samples_per_estimate: l,
            repetitions,
            bins: 20,
            ..BiasStudyParams::default()
        })?;
        println!(
            "L={l:<6} mean {:+.2e}  std {:.4e}  skewness {:+.3}",
            r.mean(),
            r.std_dev(),
            r.skewness()
        );
        let peak = r.histogram.mass.iter().cloned().fold(0.0, f64::max);
        for (b, mass) in r.histogram.mass.iter().enumerate() {
            let bar = "#".repeat((40.0 * mass / peak).round() as usize);
            println!("  {:+.3e} {bar}", r.histogram.edges[b]);
        }
    }
    Ok(())
}

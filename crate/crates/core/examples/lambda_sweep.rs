//! Relaxed IWF on the second strong-interference network: small relaxation
//! factors converge, large ones oscillate.
//!
//! ```bash
//! cargo run --example lambda_sweep
//! ```

use aiwf::algorithms::{run, Algorithm};
use aiwf::experiments::scenario_strong_interference_b;

fn main() -> aiwf::Result<()> {
    let s = scenario_strong_interference_b();
    for step in 1..=10 {
        let lambda = step as f64 / 10.0;
        let trace = run(&s.network, &s.run_spec(&Algorithm::Riwf { lambda })?)?;
        println!(
            "lambda {lambda:.1}  {:<14} last step {:.3e}",
            trace.verdict.label(),
            trace.residuals.last().unwrap()
        );
    }
    Ok(())
}

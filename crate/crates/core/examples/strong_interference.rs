//! Strong cyclic interference: conventional IWF cycles, averaged IWF
//! settles on the equilibrium with two thirds of each budget on channel 1.
//!
//! ```bash
//! cargo run --example strong_interference
//! ```

use aiwf::experiments::scenario_strong_interference_a;

fn main() -> aiwf::Result<()> {
    let scenario = scenario_strong_interference_a();
    for trace in scenario.run_all()? {
        let p = trace.final_profile();
        println!(
            "{:<5} {:<12} final p(., 1) = [{:.4}, {:.4}, {:.4}]  distance to equilibrium {:.3e}",
            trace.algorithm.label(),
            trace.verdict.label(),
            p.get(0, 0),
            p.get(1, 0),
            p.get(2, 0),
            trace.distance_to_reference.last().copied().unwrap_or(f64::NAN),
        );
    }
    let iwf = aiwf::algorithms::run(
        &scenario.network,
        &aiwf::algorithms::RunSpec::new(aiwf::algorithms::Algorithm::Iwf).max_iters(6),
    )?;
    println!("first IWF iterates, user 1:");
    for (t, p) in &iwf.iterates {
        println!("  t={t} {:?}", p.row(0));
    }
    Ok(())
}

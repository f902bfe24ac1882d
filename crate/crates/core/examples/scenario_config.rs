//! Round-trip a scenario through its TOML form, run it and write a trace.
//!
//! ```bash
//! cargo run --example scenario_config -- crates/core/scenarios/strong_b.toml
//! ```
//! Without an argument the built-in second strong-interference scenario is
//! printed as TOML and used.

use std::path::Path;

use aiwf::config::{format_certificate, write_trace_csv, ScenarioConfig};
use aiwf::experiments::scenario_strong_interference_b;

fn main() -> aiwf::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ScenarioConfig::load(Path::new(&path))?,
        None => {
            let cfg = ScenarioConfig::from_scenario(&scenario_strong_interference_b());
            println!("{}", cfg.to_toml_string()?);
            cfg
        }
    };
    let scenario = cfg.to_scenario()?;
    let traces = scenario.run_all()?;
    print!("{}", format_certificate(&traces[0].certificate));
    for trace in &traces {
        println!("{} {}", trace.algorithm.label(), trace.verdict.label());
    }
    let mut head = Vec::new();
    write_trace_csv(&traces[0], &mut head)?;
    for line in String::from_utf8_lossy(&head).lines().take(4) {
        println!("{line}");
    }
    Ok(())
}

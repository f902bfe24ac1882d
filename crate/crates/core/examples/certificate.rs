//! Contraction certificates: spectral radius of the gain matrix, the
//! certifying weight vector and the contraction factor.
//!
//! ```bash
//! cargo run --example certificate
//! ```

use aiwf::analysis::{build_gain_matrix, ContractionCertificate};
use aiwf::experiments::{random_weak_network, scenario_strong_interference_a, scenario_strong_interference_b};
use aiwf::NetworkModel;

fn report(name: &str, model: &NetworkModel) -> aiwf::Result<()> {
    let cert = ContractionCertificate::compute(model)?;
    println!("{name}: rho = {:.6}, contractive = {}", cert.spectral_radius, cert.contractive);
    if let (Some(w), Some(beta)) = (&cert.weight, cert.beta) {
        let shown: Vec<String> = w.iter().take(5).map(|v| format!("{v:.4}")).collect();
        println!("  weight (first entries) [{}]", shown.join(", "));
        println!("  beta {beta:.6}");
    }
    Ok(())
}

fn main() -> aiwf::Result<()> {
    let a = scenario_strong_interference_a();
    println!("gain matrix of strong-a:\n{}", build_gain_matrix(&a.network).entries);
    report("strong-a", &a.network)?;
    report("strong-b", &scenario_strong_interference_b().network)?;
    report("random weak 10x64", &random_weak_network(10, 64, 0)?)?;
    Ok(())
}

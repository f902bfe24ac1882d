//! Single-user water-filling: the level, the allocation, and what masks do.
//!
//! ```bash
//! cargo run --example waterfill
//! ```

use aiwf::waterfill::water_level_solve;

fn show(label: &str, ipn: &[f64], budget: f64, mask: &[f64]) -> aiwf::Result<()> {
    let r = water_level_solve(ipn, budget, mask)?;
    println!("{label}");
    println!("  ipn       {ipn:?}");
    println!("  mask      {mask:?}");
    println!("  level     {:.6}", r.water_level);
    println!("  power     {:?}", r.power.iter().map(|p| (p * 1e6).round() / 1e6).collect::<Vec<_>>());
    println!("  saturated {}", r.saturated);
    Ok(())
}

fn main() -> aiwf::Result<()> {
    let inf = f64::INFINITY;
    show("two channels", &[0.5, 1.5], 2.0, &[inf, inf])?;
    show("a deep channel stays dark", &[0.1, 0.2, 3.0], 1.0, &[inf; 3])?;
    show("mask caps the best channel", &[0.0, 0.0, 5.0], 4.0, &[1.0, inf, inf])?;
    show("masks exhaust the budget", &[0.0, 10.0], 5.0, &[1.0, 1.0])?;
    show("negative estimate is accepted", &[-0.5, 0.3, 2.0], 1.0, &[inf, 0.2, inf])?;
    Ok(())
}

//! Scenario files and CSV output.
//!
//! A scenario file is TOML with the sections `network`, `noise`,
//! `algorithms`, `run` and `output`. Unknown keys are rejected.
//!
//! ```toml
//! name = "strong-a"
//!
//! [network]
//! users = 3
//! channels = 2
//! # gains[k][i][j] = |H_ij(k)|^2, transmitter i to receiver j on channel k
//! gains = [[[1, 0, 2], [2, 1, 0], [0, 2, 1]],
//!          [[1, 0, 2], [2, 1, 0], [0, 2, 1]]]
//! noise_floor = [[1, 11], [1, 11], [1, 11]]
//! budget = [10, 10, 10]
//! mask = [[inf, inf], [inf, inf], [inf, inf]]   # optional, default unbounded
//!
//! [noise]
//! kind = "gaussian_ier"   # none | gaussian_ier | gaussian_fixed_variance | diminishing | summable
//! ier_db = 20.0
//!
//! [[algorithms]]
//! kind = "iwf"
//!
//! [[algorithms]]
//! kind = "riwf"
//! lambda = 0.5
//!
//! [[algorithms]]
//! kind = "aiwf"
//! schedule = { kind = "harmonic" }
//!
//! [run]
//! max_iters = 5000
//! tol = 1e-8
//! window = 20
//! decimation = 1
//! seed = 0
//! # start = [[...], ...] and reference = [[...], ...] are optional
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Instead of inline data, `[network.generator]` with `kind = "random_weak"`
//! and `seed = <u64>` draws a random weak-interference network of the
//! declared size.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, RunTrace, DEFAULT_MAX_ITERS, DEFAULT_TOL, DEFAULT_WINDOW};
use crate::analysis::ContractionCertificate;
use crate::experiments::{random_weak_network, Scenario};
use crate::network::{NetworkModel, PowerProfile};
use crate::noise::NoiseKind;
use crate::{Error, Result};

/// Header of every trace CSV.
pub const TRACE_HEADER: &str =
    "iteration,user,channel,power,water_level,residual,distance_to_reference";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub network: NetworkSection,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "OutputSection::is_empty")]
    pub output: OutputSection,
}

impl Default for NoiseKind {
    fn default() -> Self {
        NoiseKind::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub users: usize,
    pub channels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSection {
    RandomWeak { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<Vec<f64>>>,
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_decimation() -> usize {
    1
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            window: DEFAULT_WINDOW,
            decimation: 1,
            seed: 0,
            start: None,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl OutputSection {
    fn is_empty(&self) -> bool {
        self.dir.is_none()
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Inline description of a scenario; always writes the network data.
    pub fn from_scenario(s: &Scenario) -> Self {
        let net = &s.network;
        Self {
            name: s.name.clone(),
            network: NetworkSection {
                users: net.num_users(),
                channels: net.num_channels(),
                gains: Some(net.channel_matrices()),
                noise_floor: Some(net.noise_rows()),
                budget: Some(net.budgets().to_vec()),
                mask: Some(net.mask_rows()),
                generator: None,
            },
            noise: s.noise.clone(),
            algorithms: s.algorithms.clone(),
            run: RunSection {
                max_iters: s.max_iters,
                tol: s.tol,
                window: s.window,
                decimation: s.decimation,
                seed: s.seed,
                start: s.start.as_ref().map(PowerProfile::to_rows),
                reference: s.reference_equilibrium.as_ref().map(PowerProfile::to_rows),
            },
            output: OutputSection::default(),
        }
    }

    /// Builds and validates the scenario, including feasibility of the start
    /// and the fixed-point property of the reference.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let network = self.network.build()?;
        let (n, k) = (network.num_users(), network.num_channels());
        self.noise.validate().map_err(as_config)?;
        if let NoiseKind::GaussianFixedVariance { variance } = &self.noise {
            if variance.len() != n || variance.iter().any(|r| r.len() != k) {
                return Err(Error::Config(format!(
                    "noise.variance must be {n}x{k}"
                )));
            }
        }
        for a in &self.algorithms {
            a.validate().map_err(as_config)?;
        }
        let profile = |what: &str, rows: &Option<Vec<Vec<f64>>>| -> Result<Option<PowerProfile>> {
            rows.as_ref()
                .map(|r| {
                    let p = PowerProfile::from_rows(r).map_err(as_config)?;
                    if p.num_users() != n || p.num_channels() != k {
                        return Err(Error::Config(format!("run.{what} must be {n}x{k}")));
                    }
                    network
                        .check_feasible(&p)
                        .map_err(|e| Error::Config(format!("run.{what}: {e}")))?;
                    Ok(p)
                })
                .transpose()
        };
        let start = profile("start", &self.run.start)?;
        let reference = profile("reference", &self.run.reference)?;
        if self.run.max_iters == 0 || self.run.decimation == 0 || self.run.window < 2 {
            return Err(Error::Config(
                "run.max_iters and run.decimation must be positive, run.window at least 2".into(),
            ));
        }
        if !(self.run.tol > 0.0) {
            return Err(Error::Config("run.tol must be positive".into()));
        }
        let scenario = Scenario {
            name: self.name.clone(),
            network,
            noise: self.noise.clone(),
            algorithms: self.algorithms.clone(),
            start,
            reference_equilibrium: reference,
            max_iters: self.run.max_iters,
            seed: self.run.seed,
            tol: self.run.tol,
            window: self.run.window,
            decimation: self.run.decimation,
        };
        scenario.verify_reference()?;
        Ok(scenario)
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl NetworkSection {
    pub fn build(&self) -> Result<NetworkModel> {
        let (n, k) = (self.users, self.channels);
        let model = match &self.generator {
            Some(GeneratorSection::RandomWeak { seed }) => {
                if self.gains.is_some() || self.noise_floor.is_some() {
                    return Err(Error::Config(
                        "network.generator excludes inline gains and noise_floor".into(),
                    ));
                }
                let base = random_weak_network(n, k, *seed).map_err(as_config)?;
                let budget = self.budget.clone().unwrap_or_else(|| base.budgets().to_vec());
                let mask = self.mask.clone().unwrap_or_else(|| base.mask_rows());
                NetworkModel::from_channel_matrices(
                    &base.channel_matrices(),
                    &base.noise_rows(),
                    &budget,
                    &mask,
                )
            }
            None => {
                let gains = self
                    .gains
                    .as_ref()
                    .ok_or_else(|| Error::Config("network.gains is required".into()))?;
                let noise = self
                    .noise_floor
                    .as_ref()
                    .ok_or_else(|| Error::Config("network.noise_floor is required".into()))?;
                let budget = self
                    .budget
                    .as_ref()
                    .ok_or_else(|| Error::Config("network.budget is required".into()))?;
                let mask = self
                    .mask
                    .clone()
                    .unwrap_or_else(|| vec![vec![f64::INFINITY; k]; n]);
                NetworkModel::from_channel_matrices(gains, noise, budget, &mask)
            }
        }
        .map_err(as_config)?;
        if model.num_users() != n || model.num_channels() != k {
            return Err(Error::Config(format!(
                "declared {n} users x {k} channels, data describes {} x {}",
                model.num_users(),
                model.num_channels()
            )));
        }
        Ok(model)
    }
}

/// Fixed 17-significant-digit formatting used for every float in output files.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one row per stored iterate, user and channel.
///
/// `residual` is the distance from the previous iterate (0 at iteration 0);
/// `distance_to_reference` is empty when the run had no reference.
pub fn write_trace_csv<W: Write>(trace: &RunTrace, mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let mut line = String::new();
    for ((t, profile), levels) in trace.iterates.iter().zip(&trace.water_levels) {
        let residual = if *t == 0 { 0.0 } else { trace.residuals[t - 1] };
        let distance = trace
            .distance_to_reference
            .get(*t)
            .map(|d| fmt_f64(*d))
            .unwrap_or_default();
        for i in 0..profile.num_users() {
            for k in 0..profile.num_channels() {
                line.clear();
                let _ = write!(
                    line,
                    "{t},{i},{k},{},{},{},{distance}",
                    fmt_f64(profile.get(i, k)),
                    fmt_f64(levels[i]),
                    fmt_f64(residual)
                );
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}

/// Human-readable certificate block, one `key value` pair per line.
pub fn format_certificate(cert: &ContractionCertificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "spectral_radius {}", fmt_f64(cert.spectral_radius));
    let _ = writeln!(s, "contractive {}", cert.contractive);
    match (&cert.weight, cert.beta) {
        (Some(w), Some(beta)) => {
            let w: Vec<String> = w.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(s, "weight {}", w.join(","));
            let _ = writeln!(s, "beta {}", fmt_f64(beta));
        }
        _ => {
            let _ = writeln!(s, "weight -");
            let _ = writeln!(s, "beta -");
        }
    }
    s
}

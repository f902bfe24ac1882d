//! IPN estimation-error processes.
//!
//! Every random quantity in the crate is drawn from [`SimRng`], a ChaCha8
//! stream cipher generator. ChaCha output is specified independently of the
//! platform, so a seed reproduces the same error stream everywhere. Normal
//! variates come from `rand_distr::StandardNormal` applied to that stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::network::{NetworkModel, PowerProfile};
use crate::{Error, Result};

/// Generator used for every stochastic experiment.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under the same seed, for per-repetition or
/// per-run randomness that does not depend on scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub const DEFAULT_SUMMABLE_EXPONENT: f64 = 0.5;

/// Shape of the error process `epsilon^t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// Exact IPN feedback.
    None,
    /// Zero-mean Gaussian with variance `IPN * 10^(-ier_db / 10)`, refreshed
    /// from the current profile at every iteration.
    GaussianIer { ier_db: f64 },
    /// Zero-mean Gaussian with a fixed per-user, per-channel variance.
    GaussianFixedVariance { variance: Vec<Vec<f64>> },
    /// Random direction per user block, magnitude uniform in
    /// `[0, scale / (t + 1)^decay_exponent]`.
    Diminishing { decay_exponent: f64, scale: f64 },
    /// Random direction per user block, magnitude exactly
    /// `scale / (t + 1)^decay_exponent`. Any positive exponent makes
    /// `sum_t ||eps^t|| / (t + 1)` finite.
    Summable { decay_exponent: f64, scale: f64 },
}

/// Error-process description plus the seed of its stream.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

/// One draw of the error matrix `epsilon_i^t(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSample {
    pub epsilon: PowerProfile,
    pub iteration: usize,
}

impl ErrorSample {
    pub fn zero(num_users: usize, num_channels: usize, iteration: usize) -> Self {
        Self {
            epsilon: PowerProfile::zeros(num_users, num_channels),
            iteration,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.epsilon.as_slice().iter().all(|e| *e == 0.0)
    }
}

/// Variance of an IPN estimate at the given interference error ratio.
pub fn variance_from_ier(ipn_value: f64, ier_db: f64) -> Result<f64> {
    if !(ipn_value > 0.0 && ipn_value.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "IPN must be positive to define an error ratio, got {ipn_value}"
        )));
    }
    if !ier_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "error ratio must be finite, got {ier_db} dB"
        )));
    }
    Ok(ipn_value * 10f64.powf(-ier_db / 10.0))
}

impl NoiseKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseKind::None => Ok(()),
            NoiseKind::GaussianIer { ier_db } => {
                if ier_db.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "ier_db must be finite, got {ier_db}"
                    )))
                }
            }
            NoiseKind::GaussianFixedVariance { variance } => {
                if variance.iter().flatten().all(|v| v.is_finite() && *v >= 0.0) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "variances must be finite and nonnegative".into(),
                    ))
                }
            }
            NoiseKind::Diminishing {
                decay_exponent,
                scale,
            }
            | NoiseKind::Summable {
                decay_exponent,
                scale,
            } => {
                if !(*decay_exponent > 0.0 && decay_exponent.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "decay_exponent must be positive, got {decay_exponent}"
                    )));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "scale must be positive, got {scale}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Bound on the unweighted block-max norm of `epsilon^t` for the
    /// envelope kinds.
    pub fn envelope(&self, t: usize) -> Option<f64> {
        match self {
            NoiseKind::Diminishing {
                decay_exponent,
                scale,
            }
            | NoiseKind::Summable {
                decay_exponent,
                scale,
            } => Some(scale / ((t + 1) as f64).powf(*decay_exponent)),
            _ => None,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseKind::None)
    }
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, seed })
    }

    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            seed: 0,
        }
    }

    /// Draws the error matrix for iteration `t` at `profile`.
    ///
    /// `NoiseKind::None` does not touch `rng`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        network: &NetworkModel,
        profile: &PowerProfile,
        t: usize,
        rng: &mut R,
    ) -> Result<ErrorSample> {
        let (n, k) = (network.num_users(), network.num_channels());
        let mut out = ErrorSample::zero(n, k, t);
        match &self.kind {
            NoiseKind::None => {}
            NoiseKind::GaussianIer { ier_db } => {
                let scale = 10f64.powf(-ier_db / 10.0);
                let mut ipn = vec![0.0; k];
                for i in 0..n {
                    network.ipn_into(profile, i, &mut ipn);
                    let row = out.epsilon.row_mut(i);
                    for (e, v) in row.iter_mut().zip(&ipn) {
                        let z: f64 = rng.sample(StandardNormal);
                        *e = z * (v * scale).sqrt();
                    }
                }
            }
            NoiseKind::GaussianFixedVariance { variance } => {
                if variance.len() != n || variance.iter().any(|r| r.len() != k) {
                    return Err(Error::Dimension(format!(
                        "variance matrix must be {n}x{k}"
                    )));
                }
                for (i, vrow) in variance.iter().enumerate() {
                    for (e, v) in out.epsilon.row_mut(i).iter_mut().zip(vrow) {
                        let z: f64 = rng.sample(StandardNormal);
                        *e = z * v.sqrt();
                    }
                }
            }
            NoiseKind::Diminishing { .. } | NoiseKind::Summable { .. } => {
                let bound = self.kind.envelope(t).expect("envelope kind");
                let random_magnitude = matches!(self.kind, NoiseKind::Diminishing { .. });
                for i in 0..n {
                    let row = out.epsilon.row_mut(i);
                    let mut norm2 = 0.0;
                    for e in row.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *e = z;
                        norm2 += z * z;
                    }
                    let magnitude = if random_magnitude {
                        bound * rng.gen::<f64>()
                    } else {
                        bound
                    };
                    let factor = if norm2 > 0.0 {
                        magnitude / norm2.sqrt()
                    } else {
                        0.0
                    };
                    row.iter_mut().for_each(|e| *e *= factor);
                }
            }
        }
        Ok(out)
    }

    /// A stateful stream over this model's seed.
    pub fn process(&self) -> NoiseProcess<'_> {
        NoiseProcess {
            model: self,
            rng: seeded_rng(self.seed),
        }
    }
}

/// A [`NoiseModel`] paired with the generator state of one run.
pub struct NoiseProcess<'a> {
    model: &'a NoiseModel,
    rng: SimRng,
}

impl NoiseProcess<'_> {
    pub fn sample(
        &mut self,
        network: &NetworkModel,
        profile: &PowerProfile,
        t: usize,
    ) -> Result<ErrorSample> {
        self.model.sample(network, profile, t, &mut self.rng)
    }
}

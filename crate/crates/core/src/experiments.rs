//! Canned scenarios and Monte Carlo studies.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::algorithms::{
    run, Algorithm, RunSpec, RunTrace, StepSizeSchedule, DEFAULT_MAX_ITERS, DEFAULT_TOL,
    DEFAULT_WINDOW,
};
use crate::analysis::{spectral_radius, weighted_block_distance, build_gain_matrix, ContractionCertificate};
use crate::network::{NetworkModel, PowerProfile};
use crate::noise::{seeded_rng, stream_rng, NoiseKind, NoiseModel};
use crate::waterfill::{solve_from, solve_into, stacked_operator, WaterFillResult};
use crate::{Error, Result};

/// Largest spectral radius produced by [`random_weak_network`].
pub const WEAK_TARGET_RHO: f64 = 0.9;
pub const DEFAULT_BUDGET: f64 = 10.0;
/// Reference equilibria must be fixed points to this accuracy.
pub const REFERENCE_TOL: f64 = 1e-6;

/// A network together with everything needed to reproduce a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub network: NetworkModel,
    pub noise: NoiseKind,
    pub algorithms: Vec<Algorithm>,
    /// `None` uses the uniform allocation.
    pub start: Option<PowerProfile>,
    pub reference_equilibrium: Option<PowerProfile>,
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
    pub window: usize,
    pub decimation: usize,
}

impl Scenario {
    pub fn new(name: impl Into<String>, network: NetworkModel) -> Self {
        Self {
            name: name.into(),
            network,
            noise: NoiseKind::None,
            algorithms: vec![
                Algorithm::Iwf,
                Algorithm::Aiwf {
                    schedule: StepSizeSchedule::Harmonic,
                },
            ],
            start: None,
            reference_equilibrium: None,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            tol: DEFAULT_TOL,
            window: DEFAULT_WINDOW,
            decimation: 1,
        }
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise.clone(), self.seed)
    }

    /// Checks the reference profile is a fixed point of the exact operator.
    pub fn verify_reference(&self) -> Result<()> {
        let Some(reference) = &self.reference_equilibrium else {
            return Ok(());
        };
        self.network.check_feasible(reference)?;
        let cert = ContractionCertificate::compute(&self.network)?;
        let w = cert.norm_weight(self.network.num_users());
        let image = stacked_operator(&self.network, reference, None)?;
        let residual = weighted_block_distance(&image, reference, &w)?;
        if residual >= REFERENCE_TOL {
            return Err(Error::Config(format!(
                "reference equilibrium of '{}' is not a fixed point (residual {residual:e})",
                self.name
            )));
        }
        Ok(())
    }

    pub fn run_spec(&self, algorithm: &Algorithm) -> Result<RunSpec> {
        let mut spec = RunSpec::new(algorithm.clone())
            .noise(self.noise_model()?)
            .max_iters(self.max_iters)
            .tol(self.tol)
            .window(self.window)
            .decimation(self.decimation);
        spec.start = self.start.clone();
        spec.reference = self.reference_equilibrium.clone();
        Ok(spec)
    }

    /// Runs every listed algorithm from the same start with the same noise seed.
    pub fn run_all(&self) -> Result<Vec<RunTrace>> {
        self.algorithms
            .iter()
            .map(|a| run(&self.network, &self.run_spec(a)?))
            .collect()
    }
}

fn three_user_two_channel(
    h1: [[f64; 3]; 3],
    h2: [[f64; 3]; 3],
    noise: [f64; 2],
) -> NetworkModel {
    let to_vec = |m: [[f64; 3]; 3]| m.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    NetworkModel::from_channel_matrices(
        &[to_vec(h1), to_vec(h2)],
        &vec![noise.to_vec(); 3],
        &[DEFAULT_BUDGET; 3],
        &vec![vec![f64::INFINITY; 2]; 3],
    )
    .expect("canned network is valid")
}

/// Three users, two channels, cyclic strong interference with gain 2.
///
/// Noise is `σ² = 1` on channel 1 and `σ² + 10` on channel 2. The unique
/// equilibrium gives every user two thirds of its budget on channel 1;
/// conventional IWF cycles around it.
pub fn scenario_strong_interference_a() -> Scenario {
    let h = [[1.0, 0.0, 2.0], [2.0, 1.0, 0.0], [0.0, 2.0, 1.0]];
    let sigma2 = 1.0;
    let network = three_user_two_channel(h, h, [sigma2, sigma2 + DEFAULT_BUDGET]);
    let share = DEFAULT_BUDGET / 3.0;
    let reference = PowerProfile::from_rows(&vec![vec![2.0 * share, share]; 3])
        .expect("3x2 profile");
    Scenario {
        reference_equilibrium: Some(reference),
        max_iters: 20_000,
        ..Scenario::new("strong-a", network)
    }
}

/// Three users, two channels, strong asymmetric interference with equal
/// unit noise on both channels. Used for the relaxation-factor sweep.
pub fn scenario_strong_interference_b() -> Scenario {
    let h1 = [[1.0, 2.0, 4.0], [4.0, 1.0, 2.0], [2.0, 4.0, 1.0]];
    let h2 = [[2.0, 3.0, 5.0], [3.0, 2.0, 5.0], [5.0, 3.0, 2.0]];
    let network = three_user_two_channel(h1, h2, [1.0, 1.0]);
    Scenario {
        algorithms: vec![
            Algorithm::Iwf,
            Algorithm::Riwf { lambda: 0.4 },
            Algorithm::Riwf { lambda: 0.7 },
            Algorithm::Aiwf {
                schedule: StepSizeSchedule::Harmonic,
            },
        ],
        ..Scenario::new("strong-b", network)
    }
}

/// Random network with `ρ(Υ) <= 0.9` and unbounded masks, budget 10.
///
/// Direct gains are uniform on `(0.5, 1.5)`, cross gains uniform on
/// `(0, 0.5)`, noise floors uniform on `(0.1, 1.0)`. Cross gains are then
/// scaled by `0.9 / ρ(Υ)` when that is below one.
pub fn random_weak_network(n_users: usize, n_channels: usize, seed: u64) -> Result<NetworkModel> {
    let mut rng = seeded_rng(seed);
    random_weak_network_with(
        n_users,
        n_channels,
        DEFAULT_BUDGET,
        f64::INFINITY,
        &mut rng,
    )
}

/// [`random_weak_network`] with explicit budget, uniform mask and generator.
pub fn random_weak_network_with<R: Rng + ?Sized>(
    n_users: usize,
    n_channels: usize,
    budget: f64,
    mask: f64,
    rng: &mut R,
) -> Result<NetworkModel> {
    if n_users == 0 || n_channels == 0 {
        return Err(Error::InvalidParameter(
            "random network needs at least one user and one channel".into(),
        ));
    }
    let (n, k) = (n_users, n_channels);
    let mut gain = vec![0.0; n * n * k];
    for i in 0..n {
        for j in 0..n {
            for c in 0..k {
                gain[(i * n + j) * k + c] = if i == j {
                    rng.gen_range(0.5..1.5)
                } else {
                    rng.gen_range(0.0..0.5)
                };
            }
        }
    }
    let noise = (0..n * k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let model = NetworkModel::new(n, k, gain, noise, vec![budget; n], vec![mask; n * k])?;
    let rho = spectral_radius(&build_gain_matrix(&model).entries)?;
    if rho > WEAK_TARGET_RHO {
        model.with_scaled_cross_gains(WEAK_TARGET_RHO / rho)
    } else {
        Ok(model)
    }
}

/// Fixed point of the exact operator, found by noise-free IWF from the
/// uniform allocation. Fails unless the network is certified contractive.
pub fn noise_free_equilibrium(model: &NetworkModel, tol: f64, max_iters: usize) -> Result<PowerProfile> {
    let cert = ContractionCertificate::compute(model)?;
    let Some(w) = cert.weight.filter(|_| cert.contractive) else {
        return Err(Error::NotContractive(cert.spectral_radius));
    };
    let mut p = model.uniform_profile();
    for _ in 0..max_iters {
        let next = stacked_operator(model, &p, None)?;
        let step = weighted_block_distance(&next, &p, &w)?;
        p = next;
        if step < tol {
            return Ok(p);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no fixed point within {tol:e} after {max_iters} iterations"
    )))
}

/// [`Scenario`] around a [`random_weak_network`] with Gaussian IER noise.
/// The reference is the noise-free equilibrium.
pub fn scenario_random_weak(n_users: usize, n_channels: usize, seed: u64, ier_db: Option<f64>) -> Result<Scenario> {
    let network = random_weak_network(n_users, n_channels, seed)?;
    let reference = noise_free_equilibrium(&network, 1e-13, 100_000)?;
    Ok(Scenario {
        noise: ier_db.map_or(NoiseKind::None, |ier_db| NoiseKind::GaussianIer { ier_db }),
        reference_equilibrium: Some(reference),
        seed,
        ..Scenario::new("random-weak", network)
    })
}

/// Random feasible profile: uniform weights scaled to the budget, capped by the masks.
pub fn random_feasible_profile<R: Rng + ?Sized>(model: &NetworkModel, rng: &mut R) -> PowerProfile {
    let (n, k) = (model.num_users(), model.num_channels());
    let mut p = PowerProfile::zeros(n, k);
    for i in 0..n {
        let u: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = u.iter().sum();
        let fill = rng.gen::<f64>() * model.budget(i);
        for (c, ui) in u.iter().enumerate() {
            let v = if total > 0.0 { fill * ui / total } else { 0.0 };
            p.set(i, c, v.min(model.mask(i, c)));
        }
    }
    p
}

/// Parameters of [`bias_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct BiasStudyParams {
    pub n_users: usize,
    pub n_channels: usize,
    /// Interference error ratio; `+inf` means zero-variance noise.
    pub ier_db: f64,
    /// Noise draws averaged into each bias estimate (`L`).
    pub samples_per_estimate: usize,
    pub repetitions: usize,
    pub budget: f64,
    pub mask: f64,
    pub bins: usize,
    pub seed: u64,
}

impl Default for BiasStudyParams {
    fn default() -> Self {
        Self {
            n_users: 10,
            n_channels: 32,
            ier_db: 10.0,
            samples_per_estimate: 1000,
            repetitions: 1000,
            budget: DEFAULT_BUDGET,
            mask: 3.0,
            bins: 60,
            seed: 0,
        }
    }
}

/// Equal-width histogram normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
}

impl Histogram {
    /// Symmetric range `[-r, r]` with `r = max |x|` (1 if all zero).
    pub fn symmetric(samples: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 || samples.is_empty() {
            return Err(Error::InvalidParameter(
                "histogram needs samples and at least one bin".into(),
            ));
        }
        let r = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let r = if r > 0.0 { r } else { 1.0 };
        let width = 2.0 * r / bins as f64;
        let edges = (0..=bins).map(|b| -r + width * b as f64).collect();
        let mut counts = vec![0usize; bins];
        for x in samples {
            let b = (((x + r) / width).floor() as usize).min(bins - 1);
            counts[b] += 1;
        }
        let total = samples.len() as f64;
        Ok(Self {
            edges,
            mass: counts.into_iter().map(|c| c as f64 / total).collect(),
        })
    }
}

/// Empirical distribution of the conditional water-filling bias.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasStudyResult {
    /// `M_i(k)` for every repetition, user and channel, in that order.
    pub sample_means: Vec<f64>,
    pub histogram: Histogram,
    pub samples_per_estimate: usize,
    pub repetitions: usize,
}

impl BiasStudyResult {
    pub fn mean(&self) -> f64 {
        self.sample_means.iter().sum::<f64>() / self.sample_means.len() as f64
    }

    /// Population standard deviation of the `M` samples.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self.sample_means.iter().map(|x| (x - m).powi(2)).sum::<f64>()
            / self.sample_means.len() as f64;
        var.sqrt()
    }

    pub fn standard_error(&self) -> f64 {
        self.std_dev() / (self.sample_means.len() as f64).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        let m = self.mean();
        let s = self.std_dev();
        if s == 0.0 {
            return 0.0;
        }
        self.sample_means.iter().map(|x| ((x - m) / s).powi(3)).sum::<f64>()
            / self.sample_means.len() as f64
    }
}

/// Monte Carlo estimate of `E[ξ_i(k) | p]`, the bias of the noisy
/// water-filling response, on random networks and random feasible profiles.
///
/// Each repetition draws a network and a profile, then averages `L` bias
/// samples `ξ = Φ̂_i(p) - Φ_i(p)` with Gaussian IPN error at the given IER.
/// Repetitions use independent generator streams, so the result does not
/// depend on how they are scheduled.
pub fn bias_study(params: &BiasStudyParams) -> Result<BiasStudyResult> {
    if params.samples_per_estimate == 0 || params.repetitions == 0 {
        return Err(Error::InvalidParameter(
            "bias study needs L >= 1 and at least one repetition".into(),
        ));
    }
    if params.ier_db.is_nan() || params.ier_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!(
            "ier_db must be finite or +inf, got {}",
            params.ier_db
        )));
    }
    let per_rep: Vec<Vec<f64>> = (0..params.repetitions)
        .into_par_iter()
        .map(|rep| bias_repetition(params, rep as u64))
        .collect::<Result<_>>()?;
    let sample_means: Vec<f64> = per_rep.into_iter().flatten().collect();
    let histogram = Histogram::symmetric(&sample_means, params.bins)?;
    Ok(BiasStudyResult {
        sample_means,
        histogram,
        samples_per_estimate: params.samples_per_estimate,
        repetitions: params.repetitions,
    })
}

fn bias_repetition(params: &BiasStudyParams, rep: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(params.seed, rep);
    let model = random_weak_network_with(
        params.n_users,
        params.n_channels,
        params.budget,
        params.mask,
        &mut rng,
    )?;
    let profile = random_feasible_profile(&model, &mut rng);
    let var_scale = 10f64.powf(-params.ier_db / 10.0);
    let k = params.n_channels;
    let l = params.samples_per_estimate;

    let mut out = Vec::with_capacity(params.n_users * k);
    let mut ipn = vec![0.0; k];
    let mut noisy_ipn = vec![0.0; k];
    let mut sd = vec![0.0; k];
    let mut sums = vec![0.0; k];
    let mut exact = WaterFillResult {
        power: vec![0.0; k],
        water_level: 0.0,
        saturated: false,
    };
    let mut noisy = exact.clone();
    for i in 0..params.n_users {
        model.ipn_into(&profile, i, &mut ipn);
        solve_into(&ipn, model.budget(i), model.masks(i), &mut exact);
        for (s, v) in sd.iter_mut().zip(&ipn) {
            *s = (v * var_scale).sqrt();
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for _ in 0..l {
            for ((n, v), s) in noisy_ipn.iter_mut().zip(&ipn).zip(&sd) {
                let z: f64 = if *s > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                *n = v + s * z;
            }
            solve_from(&noisy_ipn, model.budget(i), model.masks(i), Some(exact.water_level), &mut noisy);
            for ((acc, a), b) in sums.iter_mut().zip(&noisy.power).zip(&exact.power) {
                *acc += a - b;
            }
        }
        out.extend(sums.iter().map(|s| s / l as f64));
    }
    Ok(out)
}

/// Trajectory of the scalar recursion `w^{t+1} = (1 - a) w^t + a ξ^{t+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTrajectory {
    /// `w^0 ..= w^T`.
    pub values: Vec<f64>,
}

impl RecursionTrajectory {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectory holds w^0")
    }
}

/// Simulates `w^{t+1} = (1 - α_{t+1}) w^t + α_{t+1} ξ^{t+1}` for `T` steps with
/// i.i.d. `ξ ~ N(0, variance)`.
///
/// The step that produces `w^{t+1}` uses `α_{t+1}`. With the harmonic schedule
/// and `ξ ≡ 0` this gives `w^T = w^0 / (T + 1)`.
pub fn lemma4_recursion(
    schedule: &StepSizeSchedule,
    variance: f64,
    w0: f64,
    steps: usize,
    seed: u64,
) -> Result<RecursionTrajectory> {
    if !schedule.is_diminishing() {
        return Err(Error::InvalidParameter(
            "the recursion needs a diminishing stepsize schedule".into(),
        ));
    }
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be finite and nonnegative, got {variance}"
        )));
    }
    let sd = variance.sqrt();
    let mut rng = seeded_rng(seed);
    let mut values = Vec::with_capacity(steps + 1);
    let mut w = w0;
    values.push(w);
    for t in 0..steps {
        let a = schedule.alpha(t + 1);
        let xi = if sd > 0.0 {
            sd * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        w = (1.0 - a) * w + a * xi;
        values.push(w);
    }
    Ok(RecursionTrajectory { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waterfill::best_response;

    #[test]
    fn scenario_a_reference_is_a_fixed_point() {
        let s = scenario_strong_interference_a();
        s.verify_reference().unwrap();
        let ne = s.reference_equilibrium.as_ref().unwrap();
        for i in 0..3 {
            let r = best_response(&s.network, ne, i).unwrap();
            assert!((r.power[0] - 20.0 / 3.0).abs() < 1e-12);
            assert!((r.power[1] - 10.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scenario_a_ipn_at_zero_profile() {
        let s = scenario_strong_interference_a();
        let zero = PowerProfile::zeros(3, 2);
        for i in 0..3 {
            assert_eq!(s.network.true_ipn(&zero, i).unwrap(), vec![1.0, 11.0]);
        }
    }

    #[test]
    fn random_weak_is_contractive_and_deterministic() {
        for seed in 0..5 {
            let m = random_weak_network(4, 8, seed).unwrap();
            let rho = spectral_radius(&build_gain_matrix(&m).entries).unwrap();
            assert!(rho <= WEAK_TARGET_RHO + 1e-9);
            assert_eq!(m, random_weak_network(4, 8, seed).unwrap());
        }
        let big = random_weak_network(10, 64, 1).unwrap();
        assert_eq!((big.num_users(), big.num_channels()), (10, 64));
        assert!(random_weak_network(0, 3, 1).is_err());
    }

    #[test]
    fn random_profiles_are_feasible() {
        let mut rng = seeded_rng(4);
        let m = random_weak_network_with(5, 32, 10.0, 3.0, &mut rng).unwrap();
        for _ in 0..50 {
            assert!(m.is_feasible(&random_feasible_profile(&m, &mut rng)));
        }
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let h = Histogram::symmetric(&[-1.0, 0.0, 0.25, 1.0, 1.0], 4).unwrap();
        assert!((h.mass.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.mass, vec![0.2, 0.0, 0.4, 0.4]);
    }

    #[test]
    fn zero_variance_bias_is_exactly_zero() {
        let params = BiasStudyParams {
            n_users: 3,
            n_channels: 8,
            ier_db: f64::INFINITY,
            samples_per_estimate: 5,
            repetitions: 4,
            ..BiasStudyParams::default()
        };
        let r = bias_study(&params).unwrap();
        assert!(r.sample_means.iter().all(|m| *m == 0.0));
        assert_eq!(r.sample_means.len(), 3 * 8 * 4);
    }

    #[test]
    fn single_sample_bias_matches_direct_draw() {
        let params = BiasStudyParams {
            n_users: 2,
            n_channels: 6,
            samples_per_estimate: 1,
            repetitions: 1,
            seed: 17,
            ..BiasStudyParams::default()
        };
        let r = bias_study(&params).unwrap();

        let mut rng = stream_rng(17, 0);
        let model = random_weak_network_with(2, 6, 10.0, 3.0, &mut rng).unwrap();
        let profile = random_feasible_profile(&model, &mut rng);
        let mut expected = Vec::new();
        for i in 0..2 {
            let ipn = model.true_ipn(&profile, i).unwrap();
            let eps: Vec<f64> = ipn
                .iter()
                .map(|v| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * (v * 0.1).sqrt()
                })
                .collect();
            let exact = best_response(&model, &profile, i).unwrap();
            let noisy = crate::waterfill::noisy_best_response(&model, &profile, i, &eps).unwrap();
            expected.extend(noisy.power.iter().zip(&exact.power).map(|(a, b)| a - b));
        }
        for (a, b) in r.sample_means.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn recursion_without_noise_telescopes() {
        let t = lemma4_recursion(&StepSizeSchedule::Harmonic, 0.0, 1.0, 1000, 0).unwrap();
        for (step, w) in t.values.iter().enumerate() {
            assert!((w - 1.0 / (step as f64 + 1.0)).abs() < 1e-13);
        }
        let zero = lemma4_recursion(&StepSizeSchedule::Harmonic, 0.0, 0.0, 100, 0).unwrap();
        assert!(zero.values.iter().all(|w| *w == 0.0));
        assert!(lemma4_recursion(&StepSizeSchedule::Constant { lambda: 0.5 }, 1.0, 0.0, 10, 0).is_err());
    }
}

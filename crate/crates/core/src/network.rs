//! Static interference network and the quantities derived from it.
//!
//! Gains are stored as squared magnitudes `|H_{i,j}(k)|^2`, indexed
//! transmitter `i`, receiver `j`, channel `k`. Unbounded masks are
//! represented by `f64::INFINITY`.

use crate::{Error, Result};

/// Absolute slack accepted on the per-user budget when checking feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Gains, noise floors, budgets and masks of an `N`-user, `K`-channel network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    num_users: usize,
    num_channels: usize,
    /// Row-major `(i, j, k)`.
    gain: Vec<f64>,
    /// Row-major `(i, k)`.
    noise_floor: Vec<f64>,
    power_budget: Vec<f64>,
    /// Row-major `(i, k)`.
    power_mask: Vec<f64>,
}

impl NetworkModel {
    /// Builds a model from flat row-major buffers, validating every invariant.
    pub fn new(
        num_users: usize,
        num_channels: usize,
        gain: Vec<f64>,
        noise_floor: Vec<f64>,
        power_budget: Vec<f64>,
        power_mask: Vec<f64>,
    ) -> Result<Self> {
        if num_users == 0 || num_channels == 0 {
            return Err(Error::InvalidParameter(
                "network needs at least one user and one channel".into(),
            ));
        }
        let (n, k) = (num_users, num_channels);
        expect_len("gain", gain.len(), n * n * k)?;
        expect_len("noise_floor", noise_floor.len(), n * k)?;
        expect_len("power_budget", power_budget.len(), n)?;
        expect_len("power_mask", power_mask.len(), n * k)?;

        if let Some(g) = gain.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "gains must be finite and nonnegative, got {g}"
            )));
        }
        for i in 0..n {
            for c in 0..k {
                if !(gain[(i * n + i) * k + c] > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "direct gain of user {i} on channel {c} must be positive"
                    )));
                }
            }
        }
        if let Some(v) = noise_floor.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "noise floors must be finite and positive, got {v}"
            )));
        }
        if let Some(v) = power_budget.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "power budgets must be finite and positive, got {v}"
            )));
        }
        // NaN fails `> 0.0`; +inf is the unbounded sentinel.
        if let Some(v) = power_mask.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "power masks must be positive or infinite, got {v}"
            )));
        }
        Ok(Self {
            num_users,
            num_channels,
            gain,
            noise_floor,
            power_budget,
            power_mask,
        })
    }

    /// Builds a model from per-channel gain matrices `h[k][i][j] = |H_{i,j}(k)|^2`
    /// and per-user rows of noise floors and masks.
    pub fn from_channel_matrices(
        h: &[Vec<Vec<f64>>],
        noise_floor: &[Vec<f64>],
        power_budget: &[f64],
        power_mask: &[Vec<f64>],
    ) -> Result<Self> {
        let k = h.len();
        let n = power_budget.len();
        if k == 0 || n == 0 {
            return Err(Error::InvalidParameter(
                "network needs at least one user and one channel".into(),
            ));
        }
        let mut gain = vec![0.0; n * n * k];
        for (c, mat) in h.iter().enumerate() {
            expect_len("gain matrix rows", mat.len(), n)?;
            for (i, row) in mat.iter().enumerate() {
                expect_len("gain matrix columns", row.len(), n)?;
                for (j, &g) in row.iter().enumerate() {
                    gain[(i * n + j) * k + c] = g;
                }
            }
        }
        let noise = flatten_rows("noise_floor", noise_floor, n, k)?;
        let mask = flatten_rows("power_mask", power_mask, n, k)?;
        Self::new(n, k, gain, noise, power_budget.to_vec(), mask)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    /// Squared gain from transmitter `i` to receiver `j` on channel `k`.
    #[inline]
    pub fn gain(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gain[(i * self.num_users + j) * self.num_channels + k]
    }

    #[inline]
    pub fn noise_floor(&self, i: usize, k: usize) -> f64 {
        self.noise_floor[i * self.num_channels + k]
    }

    #[inline]
    pub fn budget(&self, i: usize) -> f64 {
        self.power_budget[i]
    }

    #[inline]
    pub fn mask(&self, i: usize, k: usize) -> f64 {
        self.power_mask[i * self.num_channels + k]
    }

    /// The mask row of user `i`.
    pub fn masks(&self, i: usize) -> &[f64] {
        let k = self.num_channels;
        &self.power_mask[i * k..(i + 1) * k]
    }

    pub fn budgets(&self) -> &[f64] {
        &self.power_budget
    }

    /// Per-channel gain matrices `h[k][i][j]`, the inverse of
    /// [`NetworkModel::from_channel_matrices`].
    pub fn channel_matrices(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.num_users;
        (0..self.num_channels)
            .map(|c| {
                (0..n)
                    .map(|i| (0..n).map(|j| self.gain(i, j, c)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn noise_rows(&self) -> Vec<Vec<f64>> {
        self.noise_floor
            .chunks(self.num_channels)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn mask_rows(&self) -> Vec<Vec<f64>> {
        self.power_mask
            .chunks(self.num_channels)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Returns a copy with every cross gain (`i != j`) multiplied by `factor`.
    pub fn with_scaled_cross_gains(&self, factor: f64) -> Result<Self> {
        let mut out = self.clone();
        let (n, k) = (self.num_users, self.num_channels);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    for c in 0..k {
                        out.gain[(i * n + j) * k + c] *= factor;
                    }
                }
            }
        }
        Self::new(
            n,
            k,
            out.gain,
            out.noise_floor,
            out.power_budget,
            out.power_mask,
        )
    }

    fn check_user(&self, i: usize) -> Result<()> {
        if i >= self.num_users {
            return Err(Error::Index(format!(
                "user {i} out of range for {} users",
                self.num_users
            )));
        }
        Ok(())
    }

    fn check_channel(&self, k: usize) -> Result<()> {
        if k >= self.num_channels {
            return Err(Error::Index(format!(
                "channel {k} out of range for {} channels",
                self.num_channels
            )));
        }
        Ok(())
    }

    fn check_shape(&self, profile: &PowerProfile) -> Result<()> {
        if profile.num_users() != self.num_users || profile.num_channels() != self.num_channels {
            return Err(Error::Dimension(format!(
                "profile is {}x{}, network is {}x{}",
                profile.num_users(),
                profile.num_channels(),
                self.num_users,
                self.num_channels
            )));
        }
        Ok(())
    }

    /// Normalized cross gain `|H_{j,i}(k)|^2 / |H_{i,i}(k)|^2`: interference
    /// from transmitter `j` at receiver `i`.
    pub fn normalized_cross_gain(&self, j: usize, i: usize, k: usize) -> Result<f64> {
        self.check_user(i)?;
        self.check_user(j)?;
        self.check_channel(k)?;
        if i == j {
            return Err(Error::InvalidParameter(format!(
                "normalized cross gain needs distinct users, got {i} twice"
            )));
        }
        Ok(self.gain(j, i, k) / self.gain(i, i, k))
    }

    /// Normalized interference plus noise seen by user `i` on every channel.
    pub fn true_ipn(&self, profile: &PowerProfile, i: usize) -> Result<Vec<f64>> {
        self.check_shape(profile)?;
        self.check_user(i)?;
        let mut out = vec![0.0; self.num_channels];
        self.ipn_into(profile, i, &mut out);
        Ok(out)
    }

    /// Unchecked IPN evaluation into a caller-provided buffer.
    pub(crate) fn ipn_into(&self, profile: &PowerProfile, i: usize, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            let direct = self.gain(i, i, k);
            let mut acc = self.noise_floor(i, k);
            for j in 0..self.num_users {
                if j != i {
                    acc += self.gain(j, i, k) * profile.get(j, k);
                }
            }
            *slot = acc / direct;
        }
    }

    /// Signal to interference plus noise ratio of user `i` on channel `k`.
    pub fn sinr(&self, profile: &PowerProfile, i: usize, k: usize) -> Result<f64> {
        self.check_shape(profile)?;
        self.check_user(i)?;
        self.check_channel(k)?;
        let mut denom = self.noise_floor(i, k);
        for j in 0..self.num_users {
            if j != i {
                denom += self.gain(j, i, k) * profile.get(j, k);
            }
        }
        Ok(self.gain(i, i, k) * profile.get(i, k) / denom)
    }

    /// Achievable rate of user `i` in nats: `sum_k ln(1 + SINR_i(k))`.
    pub fn rate(&self, profile: &PowerProfile, i: usize) -> Result<f64> {
        (0..self.num_channels)
            .map(|k| self.sinr(profile, i, k).map(f64::ln_1p))
            .sum()
    }

    /// Checks the box and budget constraints of every user.
    pub fn check_feasible(&self, profile: &PowerProfile) -> Result<()> {
        self.check_shape(profile)?;
        for i in 0..self.num_users {
            let row = profile.row(i);
            for (k, &p) in row.iter().enumerate() {
                let mask = self.mask(i, k);
                if !p.is_finite() || p < 0.0 || p > mask + FEASIBILITY_TOL {
                    return Err(Error::Infeasible(format!(
                        "user {i} channel {k}: power {p} outside [0, {mask}]"
                    )));
                }
            }
            let total: f64 = row.iter().sum();
            if total > self.budget(i) + FEASIBILITY_TOL {
                return Err(Error::Infeasible(format!(
                    "user {i}: total power {total} exceeds budget {}",
                    self.budget(i)
                )));
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, profile: &PowerProfile) -> bool {
        self.check_feasible(profile).is_ok()
    }

    /// Uniform allocation `min(budget_i / K, mask_i(k))` for every user.
    pub fn uniform_profile(&self) -> PowerProfile {
        let k = self.num_channels;
        let mut out = PowerProfile::zeros(self.num_users, k);
        for i in 0..self.num_users {
            let share = self.budget(i) / k as f64;
            for c in 0..k {
                out.set(i, c, share.min(self.mask(i, c)));
            }
        }
        out
    }
}

fn expect_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!(
            "{what}: expected {want} entries, got {got}"
        )));
    }
    Ok(())
}

fn flatten_rows(what: &str, rows: &[Vec<f64>], n: usize, k: usize) -> Result<Vec<f64>> {
    expect_len(what, rows.len(), n)?;
    let mut out = Vec::with_capacity(n * k);
    for row in rows {
        expect_len(what, row.len(), k)?;
        out.extend_from_slice(row);
    }
    Ok(out)
}

/// Stacked per-user, per-channel values `p_i(k)`.
///
/// The type carries no feasibility invariant of its own: it also holds
/// differences of profiles and error matrices. Use
/// [`NetworkModel::check_feasible`] to validate an iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    num_users: usize,
    num_channels: usize,
    values: Vec<f64>,
}

impl PowerProfile {
    pub fn zeros(num_users: usize, num_channels: usize) -> Self {
        Self {
            num_users,
            num_channels,
            values: vec![0.0; num_users * num_channels],
        }
    }

    pub fn from_vec(num_users: usize, num_channels: usize, values: Vec<f64>) -> Result<Self> {
        expect_len("profile", values.len(), num_users * num_channels)?;
        Ok(Self {
            num_users,
            num_channels,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let values = flatten_rows("profile", rows, n, k)?;
        Ok(Self {
            num_users: n,
            num_channels: k,
            values,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.num_channels + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        self.values[i * self.num_channels + k] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.num_channels;
        &self.values[i * k..(i + 1) * k]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let k = self.num_channels;
        &mut self.values[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.num_channels.max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &PowerProfile) -> Result<PowerProfile> {
        if self.num_users != other.num_users || self.num_channels != other.num_channels {
            return Err(Error::Dimension("profile shapes differ".into()));
        }
        Ok(PowerProfile {
            num_users: self.num_users,
            num_channels: self.num_channels,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `(1 - weight) * self + weight * other`, in place.
    pub(crate) fn blend_toward(&mut self, other: &PowerProfile, weight: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = (1.0 - weight) * *a + weight * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_user(gains: [[f64; 2]; 2], noise: f64) -> NetworkModel {
        let h = vec![gains.iter().map(|r| r.to_vec()).collect()];
        NetworkModel::from_channel_matrices(
            &h,
            &[vec![noise], vec![noise]],
            &[10.0, 10.0],
            &[vec![f64::INFINITY], vec![f64::INFINITY]],
        )
        .unwrap()
    }

    #[test]
    fn normalized_cross_gain_divides_by_direct_link() {
        let m = two_user([[1.0, 0.0], [2.0, 1.0]], 1.0);
        assert_eq!(m.normalized_cross_gain(1, 0, 0).unwrap(), 2.0);
        assert_eq!(m.normalized_cross_gain(0, 1, 0).unwrap(), 0.0);
        let m = two_user([[2.0, 0.0], [3.0, 1.0]], 1.0);
        assert_eq!(m.normalized_cross_gain(1, 0, 0).unwrap(), 1.5);
    }

    #[test]
    fn normalized_cross_gain_rejects_bad_indices() {
        let m = two_user([[1.0, 1.0], [1.0, 1.0]], 1.0);
        assert!(matches!(
            m.normalized_cross_gain(0, 0, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            m.normalized_cross_gain(2, 0, 0),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            m.normalized_cross_gain(1, 0, 1),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn sinr_matches_hand_values() {
        let m = two_user([[1.0, 1.0], [1.0, 1.0]], 1.0);
        let p = PowerProfile::from_rows(&[vec![4.0], vec![1.0]]).unwrap();
        assert_eq!(m.sinr(&p, 0, 0).unwrap(), 2.0);
        let p0 = PowerProfile::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(m.sinr(&p0, 0, 0).unwrap(), 0.0);

        let single = NetworkModel::from_channel_matrices(
            &[vec![vec![1.0]]],
            &[vec![1.0]],
            &[10.0],
            &[vec![f64::INFINITY]],
        )
        .unwrap();
        let p = PowerProfile::from_rows(&[vec![3.0]]).unwrap();
        assert_eq!(single.sinr(&p, 0, 0).unwrap(), 3.0);
        assert_eq!(single.true_ipn(&p, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn rate_is_log_sum() {
        let single = NetworkModel::from_channel_matrices(
            &[vec![vec![1.0]], vec![vec![1.0]]],
            &[vec![1.0, 1.0]],
            &[10.0],
            &[vec![f64::INFINITY; 2]],
        )
        .unwrap();
        let p = PowerProfile::from_rows(&[vec![1.0, 3.0]]).unwrap();
        let r = single.rate(&p, 0).unwrap();
        assert!((r - (2f64.ln() + 4f64.ln())).abs() < 1e-15);

        let p = PowerProfile::from_rows(&[vec![std::f64::consts::E - 1.0, 0.0]]).unwrap();
        assert!((single.rate(&p, 0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(single.rate(&PowerProfile::zeros(1, 2), 0).unwrap(), 0.0);
    }

    #[test]
    fn ipn_ignores_profile_without_cross_gains() {
        let m = two_user([[2.0, 0.0], [0.0, 4.0]], 1.0);
        let a = PowerProfile::from_rows(&[vec![1.0], vec![7.0]]).unwrap();
        assert_eq!(m.true_ipn(&a, 0).unwrap(), vec![0.5]);
        assert_eq!(m.true_ipn(&a, 1).unwrap(), vec![0.25]);
    }

    #[test]
    fn constructor_rejects_invalid_data() {
        let zero_direct = NetworkModel::from_channel_matrices(
            &[vec![vec![0.0]]],
            &[vec![1.0]],
            &[1.0],
            &[vec![1.0]],
        );
        assert!(zero_direct.is_err());
        let bad_noise = NetworkModel::from_channel_matrices(
            &[vec![vec![1.0]]],
            &[vec![0.0]],
            &[1.0],
            &[vec![1.0]],
        );
        assert!(bad_noise.is_err());
        let bad_mask = NetworkModel::from_channel_matrices(
            &[vec![vec![1.0]]],
            &[vec![1.0]],
            &[1.0],
            &[vec![f64::NAN]],
        );
        assert!(bad_mask.is_err());
        let bad_shape =
            NetworkModel::new(2, 1, vec![1.0; 3], vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]);
        assert!(matches!(bad_shape, Err(Error::Dimension(_))));
    }

    #[test]
    fn feasibility_check() {
        let m = NetworkModel::from_channel_matrices(
            &[vec![vec![1.0]], vec![vec![1.0]]],
            &[vec![1.0, 1.0]],
            &[2.0],
            &[vec![1.5, f64::INFINITY]],
        )
        .unwrap();
        let ok = PowerProfile::from_rows(&[vec![1.5, 0.5]]).unwrap();
        assert!(m.is_feasible(&ok));
        let over_mask = PowerProfile::from_rows(&[vec![1.6, 0.0]]).unwrap();
        assert!(!m.is_feasible(&over_mask));
        let over_budget = PowerProfile::from_rows(&[vec![1.0, 1.1]]).unwrap();
        assert!(!m.is_feasible(&over_budget));
        let within_tol = PowerProfile::from_rows(&[vec![1.0, 1.0 + 5e-10]]).unwrap();
        assert!(m.is_feasible(&within_tol));
        let wrong_shape = PowerProfile::zeros(2, 2);
        assert!(matches!(
            m.check_feasible(&wrong_shape),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn uniform_profile_respects_masks() {
        let m = NetworkModel::from_channel_matrices(
            &[vec![vec![1.0]], vec![vec![1.0]]],
            &[vec![1.0, 1.0]],
            &[4.0],
            &[vec![1.0, f64::INFINITY]],
        )
        .unwrap();
        assert_eq!(m.uniform_profile().row(0), &[1.0, 2.0]);
    }
}

//! Water-filling best responses.
//!
//! A best response allocates `p(k) = clamp(sigma - ipn(k), 0, mask(k))`,
//! where the water level `sigma` exhausts the power budget. The noisy
//! variant solves the same problem against a perturbed IPN vector and
//! recomputes its own water level.

use crate::network::{NetworkModel, PowerProfile};
use crate::{Error, Result};

const BUDGET_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 200;

/// One user's water-filling solution.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFillResult {
    pub power: Vec<f64>,
    pub water_level: f64,
    /// The masks cap total power at or below the budget.
    pub saturated: bool,
}

#[inline]
fn clamp_level(level: f64, ipn: f64, mask: f64) -> f64 {
    (level - ipn).max(0.0).min(mask)
}

#[cfg(test)]
fn allocated(level: f64, ipn: &[f64], mask: &[f64]) -> f64 {
    ipn.iter()
        .zip(mask)
        .map(|(&n, &m)| clamp_level(level, n, m))
        .sum()
}

/// Solves for the water level of one user and returns the allocation.
///
/// Negative IPN entries are accepted: noisy estimates may fall below zero
/// and the clamp keeps the allocation feasible.
pub fn water_level_solve(ipn: &[f64], budget: f64, mask: &[f64]) -> Result<WaterFillResult> {
    if ipn.is_empty() {
        return Err(Error::InvalidParameter("empty IPN vector".into()));
    }
    if ipn.len() != mask.len() {
        return Err(Error::Dimension(format!(
            "{} IPN entries but {} masks",
            ipn.len(),
            mask.len()
        )));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget must be finite and positive, got {budget}"
        )));
    }
    if let Some(v) = ipn.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite IPN entry {v}")));
    }
    if let Some(v) = mask.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "masks must be positive or infinite, got {v}"
        )));
    }

    let mut out = WaterFillResult {
        power: vec![0.0; ipn.len()],
        water_level: 0.0,
        saturated: false,
    };
    solve_into(ipn, budget, mask, &mut out);
    Ok(out)
}

/// Unchecked core of [`water_level_solve`], reusing `out.power`.
pub(crate) fn solve_into(ipn: &[f64], budget: f64, mask: &[f64], out: &mut WaterFillResult) {
    solve_from(ipn, budget, mask, None, out);
}

/// [`solve_into`] starting the level search at `guess`.
///
/// The allocated power is piecewise linear and nondecreasing in the level,
/// so a Newton step is exact once it lands in the right piece. Steps that
/// leave the current bracket fall back to bisection.
pub(crate) fn solve_from(
    ipn: &[f64],
    budget: f64,
    mask: &[f64],
    guess: Option<f64>,
    out: &mut WaterFillResult,
) {
    out.power.resize(ipn.len(), 0.0);

    let mask_total: f64 = mask.iter().sum();
    if mask_total <= budget {
        // Every mask is finite here. Any level at or above max(ipn + mask)
        // fills all channels; report the smallest one.
        out.saturated = true;
        out.water_level = ipn
            .iter()
            .zip(mask)
            .map(|(n, m)| n + m)
            .fold(f64::NEG_INFINITY, f64::max);
        out.power.copy_from_slice(mask);
        return;
    }

    let mut lo = ipn.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = ipn.iter().copied().fold(f64::NEG_INFINITY, f64::max) + budget;
    let tol = BUDGET_TOL * budget.max(1.0);
    let mut level = guess.unwrap_or_else(|| (budget + ipn.iter().sum::<f64>()) / ipn.len() as f64);
    if !(level > lo && level < hi) {
        level = 0.5 * (lo + hi);
    }
    for _ in 0..MAX_STEPS {
        let mut total = 0.0;
        let mut free = 0usize;
        for (&n, &m) in ipn.iter().zip(mask) {
            let p = level - n;
            if p <= 0.0 {
                continue;
            }
            if p < m {
                total += p;
                free += 1;
            } else {
                total += m;
            }
        }
        let residual = total - budget;
        if residual.abs() <= tol {
            break;
        }
        if residual < 0.0 {
            lo = level;
        } else {
            hi = level;
        }
        let newton = if free > 0 {
            level - residual / free as f64
        } else {
            f64::NAN
        };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next <= lo || next >= hi {
            level = hi;
            break;
        }
        level = next;
    }

    out.saturated = false;
    out.water_level = level;
    for ((p, &n), &m) in out.power.iter_mut().zip(ipn).zip(mask) {
        *p = clamp_level(level, n, m);
    }
}

/// Exact best response of user `i` against the rest of `profile`.
pub fn best_response(model: &NetworkModel, profile: &PowerProfile, i: usize) -> Result<WaterFillResult> {
    let ipn = model.true_ipn(profile, i)?;
    water_level_solve(&ipn, model.budget(i), model.masks(i))
}

/// Best response of user `i` against `true_ipn + epsilon_i`.
pub fn noisy_best_response(
    model: &NetworkModel,
    profile: &PowerProfile,
    i: usize,
    epsilon_i: &[f64],
) -> Result<WaterFillResult> {
    let mut ipn = model.true_ipn(profile, i)?;
    if epsilon_i.len() != ipn.len() {
        return Err(Error::Dimension(format!(
            "error vector has {} entries, expected {}",
            epsilon_i.len(),
            ipn.len()
        )));
    }
    for (v, e) in ipn.iter_mut().zip(epsilon_i) {
        *v += e;
    }
    water_level_solve(&ipn, model.budget(i), model.masks(i))
}

/// Every user's (noisy) best response to the same input profile.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedResponse {
    pub profile: PowerProfile,
    pub water_levels: Vec<f64>,
    pub saturated: Vec<bool>,
}

/// Synchronous water-filling operator: all users respond to `profile`.
/// `epsilon = None` gives the exact operator.
pub fn stacked_operator(
    model: &NetworkModel,
    profile: &PowerProfile,
    epsilon: Option<&PowerProfile>,
) -> Result<PowerProfile> {
    Ok(stacked_response(model, profile, epsilon)?.profile)
}

/// [`stacked_operator`] together with each user's water level.
pub fn stacked_response(
    model: &NetworkModel,
    profile: &PowerProfile,
    epsilon: Option<&PowerProfile>,
) -> Result<StackedResponse> {
    let (n, k) = (model.num_users(), model.num_channels());
    if profile.num_users() != n || profile.num_channels() != k {
        return Err(Error::Dimension(format!(
            "profile is {}x{}, network is {n}x{k}",
            profile.num_users(),
            profile.num_channels()
        )));
    }
    if let Some(eps) = epsilon {
        if eps.num_users() != n || eps.num_channels() != k {
            return Err(Error::Dimension(format!(
                "error matrix is {}x{}, network is {n}x{k}",
                eps.num_users(),
                eps.num_channels()
            )));
        }
        if let Some(v) = eps.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite error entry {v}")));
        }
    }

    let mut next = PowerProfile::zeros(n, k);
    let mut water_levels = Vec::with_capacity(n);
    let mut saturated = Vec::with_capacity(n);
    let mut ipn = vec![0.0; k];
    let mut result = WaterFillResult {
        power: vec![0.0; k],
        water_level: 0.0,
        saturated: false,
    };
    for i in 0..n {
        model.ipn_into(profile, i, &mut ipn);
        if let Some(eps) = epsilon {
            for (v, e) in ipn.iter_mut().zip(eps.row(i)) {
                *v += e;
            }
        }
        solve_into(&ipn, model.budget(i), model.masks(i), &mut result);
        next.row_mut(i).copy_from_slice(&result.power);
        water_levels.push(result.water_level);
        saturated.push(result.saturated);
    }
    Ok(StackedResponse {
        profile: next,
        water_levels,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    /// Scans the water level on a fine grid; the oracle for the closed forms.
    fn grid_level(ipn: &[f64], budget: f64, mask: &[f64]) -> f64 {
        let lo = ipn.iter().copied().fold(INF, f64::min);
        let hi = ipn.iter().copied().fold(-INF, f64::max) + budget;
        let steps = 2_000_000;
        (0..=steps)
            .map(|s| lo + (hi - lo) * s as f64 / steps as f64)
            .min_by(|a, b| {
                let ra = (allocated(*a, ipn, mask) - budget).abs();
                let rb = (allocated(*b, ipn, mask) - budget).abs();
                ra.total_cmp(&rb)
            })
            .unwrap()
    }

    #[test]
    fn two_channel_closed_form() {
        let r = water_level_solve(&[0.5, 1.5], 2.0, &[INF, INF]).unwrap();
        assert!((grid_level(&[0.5, 1.5], 2.0, &[INF, INF]) - 2.0).abs() < 1e-5);
        assert!((r.water_level - 2.0).abs() < 1e-12);
        assert!((r.power[0] - 1.5).abs() < 1e-12);
        assert!((r.power[1] - 0.5).abs() < 1e-12);
        assert!(!r.saturated);
    }

    #[test]
    fn saturation_when_masks_exhaust_budget() {
        let r = water_level_solve(&[0.0, 10.0], 2.0, &[1.0, 1.0]).unwrap();
        assert!(r.saturated);
        assert_eq!(r.power, vec![1.0, 1.0]);
        // Brute force: any level above 11 fills both masks.
        assert_eq!(allocated(r.water_level, &[0.0, 10.0], &[1.0, 1.0]), 2.0);
    }

    #[test]
    fn flat_ipn_gives_uniform_split() {
        let r = water_level_solve(&[0.7; 5], 3.0, &[INF; 5]).unwrap();
        for p in r.power {
            assert!((p - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_offsets_match_closed_form() {
        let ipn: Vec<f64> = [1.0, 1.0].iter().zip([0.5, -0.5]).map(|(a, b)| a + b).collect();
        let r = water_level_solve(&ipn, 2.0, &[INF, INF]).unwrap();
        assert!((grid_level(&ipn, 2.0, &[INF, INF]) - 2.0).abs() < 1e-5);
        assert!((r.water_level - 2.0).abs() < 1e-12);
        assert!((r.power[0] - 0.5).abs() < 1e-12);
        assert!((r.power[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn negative_ipn_entries_are_accepted() {
        let r = water_level_solve(&[-0.5, 0.3, 2.0], 1.0, &[INF, 0.2, INF]).unwrap();
        assert!((r.power.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.power.iter().all(|p| *p >= 0.0));
        assert!(r.power[1] <= 0.2);
    }

    #[test]
    fn masks_bind_partially() {
        let r = water_level_solve(&[0.0, 0.0, 5.0], 4.0, &[1.0, INF, INF]).unwrap();
        assert!((r.power[0] - 1.0).abs() < 1e-12);
        assert!((r.power[1] - 3.0).abs() < 1e-12);
        assert_eq!(r.power[2], 0.0);
        assert!((r.water_level - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(water_level_solve(&[], 1.0, &[]).is_err());
        assert!(water_level_solve(&[1.0], f64::NAN, &[INF]).is_err());
        assert!(water_level_solve(&[1.0], INF, &[INF]).is_err());
        assert!(water_level_solve(&[1.0], 0.0, &[INF]).is_err());
        assert!(water_level_solve(&[INF], 1.0, &[INF]).is_err());
        assert!(water_level_solve(&[1.0], 1.0, &[0.0]).is_err());
        assert!(water_level_solve(&[1.0, 2.0], 1.0, &[1.0]).is_err());
    }

    #[test]
    fn constant_error_shifts_level_only() {
        let ipn = [0.3, 0.9, 1.4, 0.2];
        let exact = water_level_solve(&ipn, 2.0, &[INF; 4]).unwrap();
        let shifted: Vec<f64> = ipn.iter().map(|v| v + 0.25).collect();
        let noisy = water_level_solve(&shifted, 2.0, &[INF; 4]).unwrap();
        assert!((noisy.water_level - exact.water_level - 0.25).abs() < 1e-12);
        for (a, b) in noisy.power.iter().zip(&exact.power) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stacked_operator_checks_shapes() {
        let model = NetworkModel::from_channel_matrices(
            &[vec![vec![1.0]]],
            &[vec![1.0]],
            &[1.0],
            &[vec![INF]],
        )
        .unwrap();
        let bad = PowerProfile::zeros(2, 1);
        assert!(matches!(
            stacked_operator(&model, &bad, None),
            Err(Error::Dimension(_))
        ));
        let eps = PowerProfile::zeros(1, 2);
        assert!(matches!(
            stacked_operator(&model, &PowerProfile::zeros(1, 1), Some(&eps)),
            Err(Error::Dimension(_))
        ));
    }
}

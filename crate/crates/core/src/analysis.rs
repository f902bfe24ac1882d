//! Convergence-condition machinery.
//!
//! The worst-case normalized cross-gain matrix `Υ` certifies that the
//! water-filling operator is a contraction in a weighted block-maximum norm
//! whenever its spectral radius is below one. The certificate is built
//! constructively: `w = (I - Υ)^{-1} 1` makes `Υ w = w - 1 < w`, so the
//! induced weighted max norm of `Υ` (the contraction coefficient `β`) is
//! below one.

use nalgebra::{DMatrix, DVector};

use crate::algorithms::RunTrace;
use crate::network::{NetworkModel, PowerProfile};
use crate::{Error, Result};

const POWER_ITER_RTOL: f64 = 1e-10;
const POWER_ITER_CAP: usize = 100_000;

/// Oscillation requires the final-window mean residual above this multiple of `tol`.
pub const OSCILLATION_MEAN_FACTOR: f64 = 10.0;
/// Oscillation requires the log-residual slope per iteration at or above this.
pub const OSCILLATION_MIN_LOG_SLOPE: f64 = -1e-3;
/// Oscillation is judged on at least this fraction of the residual history.
pub const OSCILLATION_TAIL_FRACTION: f64 = 0.2;

/// `Υ[i][j] = max_k |H_{j,i}(k)|^2 / |H_{i,i}(k)|^2` off the diagonal, zero on it.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub entries: DMatrix<f64>,
}

pub fn build_gain_matrix(model: &NetworkModel) -> GainMatrix {
    let n = model.num_users();
    let k = model.num_channels();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (0..k)
                .map(|c| model.gain(j, i, c) / model.gain(i, i, c))
                .fold(0.0, f64::max)
        }
    });
    GainMatrix { entries }
}

/// Spectral radius of a nonnegative square matrix.
///
/// Power iteration on `m + δI` from the all-ones vector. The shift is the
/// largest row sum, which keeps the Perron root strictly dominant even for
/// periodic matrices (e.g. `[[0, a], [b, 0]]`), and the Collatz-Wielandt
/// ratios `min_i (Ax)_i / x_i <= ρ <= max_i (Ax)_i / x_i` give the stopping
/// bracket.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "spectral radius expects a finite nonnegative matrix".into(),
        ));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let max_row_sum = m.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    if max_row_sum == 0.0 {
        return Ok(0.0);
    }
    let shift = max_row_sum.max(1e-12);
    let mut x = DVector::from_element(n, 1.0);
    let mut estimate = max_row_sum;
    for _ in 0..POWER_ITER_CAP {
        let y = m * &x + &x * shift;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(x.iter()) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        estimate = 0.5 * (lo + hi) - shift;
        if hi - lo <= POWER_ITER_RTOL * hi {
            break;
        }
        let scale = y.max();
        x = y / scale;
    }
    Ok(estimate.max(0.0))
}

/// Certifying weight `w = (I - Υ)^{-1} 1`.
pub fn weight_vector(m: &GainMatrix) -> Result<Vec<f64>> {
    let rho = spectral_radius(&m.entries)?;
    if rho >= 1.0 {
        return Err(Error::NotContractive(rho));
    }
    let n = m.entries.nrows();
    let system = DMatrix::identity(n, n) - &m.entries;
    let ones = DVector::from_element(n, 1.0);
    let w = system
        .lu()
        .solve(&ones)
        .ok_or(Error::NotContractive(rho))?;
    if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NotContractive(rho));
    }
    Ok(w.iter().copied().collect())
}

fn check_weights(w: &[f64]) -> Result<()> {
    if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "weights must be positive, got {v}"
        )));
    }
    Ok(())
}

/// `max_i ||x_i||_2 / w_i` over the user blocks of `x`.
pub fn weighted_block_max_norm(x: &PowerProfile, w: &[f64]) -> Result<f64> {
    if x.num_users() != w.len() {
        return Err(Error::Dimension(format!(
            "{} blocks but {} weights",
            x.num_users(),
            w.len()
        )));
    }
    check_weights(w)?;
    Ok(x.rows()
        .zip(w)
        .map(|(row, wi)| row.iter().map(|v| v * v).sum::<f64>().sqrt() / wi)
        .fold(0.0, f64::max))
}

/// Weighted block-max distance between two profiles.
pub fn weighted_block_distance(a: &PowerProfile, b: &PowerProfile, w: &[f64]) -> Result<f64> {
    weighted_block_max_norm(&a.sub(b)?, w)
}

/// `max_i (1 / w_i) sum_j |m_ij| w_j`.
pub fn weighted_max_matrix_norm(m: &DMatrix<f64>, w: &[f64]) -> Result<f64> {
    if !m.is_square() || m.nrows() != w.len() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, weight has {} entries",
            m.nrows(),
            m.ncols(),
            w.len()
        )));
    }
    check_weights(w)?;
    Ok(m.row_iter()
        .zip(w)
        .map(|(row, wi)| row.iter().zip(w).map(|(a, wj)| a.abs() * wj).sum::<f64>() / wi)
        .fold(0.0, f64::max))
}

/// Which convergence regime a network is in.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCertificate {
    pub spectral_radius: f64,
    /// Present only when contractive.
    pub weight: Option<Vec<f64>>,
    /// Present only when contractive.
    pub beta: Option<f64>,
    pub contractive: bool,
}

impl ContractionCertificate {
    pub fn compute(model: &NetworkModel) -> Result<Self> {
        Self::from_gain_matrix(&build_gain_matrix(model))
    }

    pub fn from_gain_matrix(gm: &GainMatrix) -> Result<Self> {
        let rho = spectral_radius(&gm.entries)?;
        match weight_vector(gm) {
            Ok(w) => {
                let beta = weighted_max_matrix_norm(&gm.entries, &w)?;
                Ok(Self {
                    spectral_radius: rho,
                    weight: Some(w),
                    beta: Some(beta),
                    contractive: beta < 1.0,
                })
            }
            Err(Error::NotContractive(_)) => Ok(Self {
                spectral_radius: rho,
                weight: None,
                beta: None,
                contractive: false,
            }),
            Err(e) => Err(e),
        }
    }

    /// Weights for distance reporting: `w̄` when certified, all-ones otherwise.
    pub fn norm_weight(&self, num_users: usize) -> Vec<f64> {
        self.weight
            .clone()
            .unwrap_or_else(|| vec![1.0; num_users])
    }
}

/// Outcome of [`detect_convergence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ConvergedAt(usize),
    Oscillating,
    Undecided,
}

impl Verdict {
    pub fn is_converged(&self) -> bool {
        matches!(self, Verdict::ConvergedAt(_))
    }

    pub fn label(&self) -> String {
        match self {
            Verdict::ConvergedAt(t) => format!("converged@{t}"),
            Verdict::Oscillating => "oscillating".into(),
            Verdict::Undecided => "undecided".into(),
        }
    }
}

/// Classifies the successive-step residuals of a run.
pub fn detect_convergence(trace: &RunTrace, window: usize, tol: f64) -> Result<Verdict> {
    classify_residuals(&trace.residuals, window, tol)
}

/// `residuals[t]` is the distance between iterates `t` and `t + 1`.
///
/// Converged at `t` when `window` consecutive residuals starting at `t` are
/// below `tol`. Oscillating when, over the final
/// `max(window, 20% of the run)` residuals, the mean exceeds `10 * tol` and
/// the least-squares slope of the log-residuals is at least `-1e-3` per
/// iteration.
pub fn classify_residuals(residuals: &[f64], window: usize, tol: f64) -> Result<Verdict> {
    if window < 2 {
        return Err(Error::InvalidParameter(format!(
            "window must be at least 2, got {window}"
        )));
    }
    if window > residuals.len() {
        return Err(Error::InvalidParameter(format!(
            "window {window} longer than the {} recorded steps",
            residuals.len()
        )));
    }
    let mut run = 0usize;
    for (t, r) in residuals.iter().enumerate() {
        if *r < tol {
            run += 1;
            if run == window {
                return Ok(Verdict::ConvergedAt(t + 1 - window));
            }
        } else {
            run = 0;
        }
    }

    let tail_len = window.max((residuals.len() as f64 * OSCILLATION_TAIL_FRACTION).ceil() as usize);
    let tail = &residuals[residuals.len() - tail_len.min(residuals.len())..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    if mean > OSCILLATION_MEAN_FACTOR * tol && log_slope(tail) >= OSCILLATION_MIN_LOG_SLOPE {
        return Ok(Verdict::Oscillating);
    }
    Ok(Verdict::Undecided)
}

fn log_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let logs: Vec<f64> = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let ym = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in logs.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        let n = rows.len();
        DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn spectral_radius_small_cases() {
        assert_eq!(spectral_radius(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
        let half = mat(&[&[0.0, 0.5], &[0.5, 0.0]]);
        assert!((spectral_radius(&half).unwrap() - 0.5).abs() < 1e-10);
        let cyc = mat(&[&[0.0, 2.0, 0.0], &[0.0, 0.0, 2.0], &[2.0, 0.0, 0.0]]);
        assert!((spectral_radius(&cyc).unwrap() - 2.0).abs() < 1e-12);
        let asym = mat(&[&[0.0, 4.0], &[1.0, 0.0]]);
        assert!((spectral_radius(&asym).unwrap() - 2.0).abs() < 1e-9);
        assert!(spectral_radius(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn weight_vector_by_hand() {
        let gm = GainMatrix {
            entries: mat(&[&[0.0, 0.5], &[0.5, 0.0]]),
        };
        let w = weight_vector(&gm).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-12 && (w[1] - 2.0).abs() < 1e-12);
        let beta = weighted_max_matrix_norm(&gm.entries, &w).unwrap();
        assert!((beta - 0.5).abs() < 1e-12);

        let zero = GainMatrix {
            entries: DMatrix::zeros(3, 3),
        };
        assert_eq!(weight_vector(&zero).unwrap(), vec![1.0; 3]);

        let strong = GainMatrix {
            entries: mat(&[&[0.0, 2.0], &[2.0, 0.0]]),
        };
        assert!(matches!(weight_vector(&strong), Err(Error::NotContractive(_))));
    }

    #[test]
    fn matrix_norm_cases() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(weighted_max_matrix_norm(&id, &[1.0, 2.0, 7.0]).unwrap(), 1.0);
        assert_eq!(
            weighted_max_matrix_norm(&DMatrix::zeros(2, 2), &[1.0, 1.0]).unwrap(),
            0.0
        );
        assert!(weighted_max_matrix_norm(&id, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn block_norm_cases() {
        let x = PowerProfile::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(weighted_block_max_norm(&x, &[1.0, 2.0]).unwrap(), 5.0);
        assert_eq!(weighted_block_max_norm(&x, &[2.0, 4.0]).unwrap(), 2.5);
        let single = PowerProfile::from_rows(&[vec![1.0, 2.0, 2.0]]).unwrap();
        assert_eq!(weighted_block_max_norm(&single, &[1.0]).unwrap(), 3.0);
        assert!(weighted_block_max_norm(&x, &[1.0, -1.0]).is_err());
        assert!(weighted_block_max_norm(&x, &[1.0]).is_err());
    }

    #[test]
    fn verdicts() {
        assert_eq!(
            classify_residuals(&[0.0; 30], 5, 1e-8).unwrap(),
            Verdict::ConvergedAt(0)
        );
        let period_two = vec![1.0; 100];
        assert_eq!(
            classify_residuals(&period_two, 5, 1e-8).unwrap(),
            Verdict::Oscillating
        );
        let geometric: Vec<f64> = (0..100).map(|t| 0.5f64.powi(t)).collect();
        assert_eq!(
            classify_residuals(&geometric, 5, 1e-8).unwrap(),
            Verdict::ConvergedAt(27)
        );
        let short: Vec<f64> = (0..20).map(|t| 0.5f64.powi(t)).collect();
        assert_eq!(
            classify_residuals(&short, 5, 1e-8).unwrap(),
            Verdict::Undecided
        );
        assert!(classify_residuals(&[0.0; 3], 5, 1e-8).is_err());
        assert!(classify_residuals(&[0.0; 3], 1, 1e-8).is_err());
    }
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use aiwf::network::{NetworkModel, PowerProfile};
use num_complex::Complex64;
use rand::Rng;

/// Projection of `-ipn` onto `{p : sum p = budget, 0 <= p <= mask}` by
/// enumerating every assignment of channels to {off, free, capped} and
/// keeping the feasible candidate closest to `-ipn`.
pub fn projection_oracle(ipn: &[f64], budget: f64, mask: &[f64]) -> Vec<f64> {
    if mask.iter().sum::<f64>() <= budget {
        return mask.to_vec();
    }
    let k = ipn.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(k as u32) {
        let mut state = vec![0u8; k];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        if state.iter().zip(mask).any(|(&s, m)| s == 2 && m.is_infinite()) {
            continue;
        }
        let capped: f64 = state.iter().zip(mask).filter(|(s, _)| **s == 2).map(|(_, m)| m).sum();
        let free: Vec<usize> = (0..k).filter(|&c| state[c] == 1).collect();
        let mut p = vec![0.0; k];
        for c in 0..k {
            if state[c] == 2 {
                p[c] = mask[c];
            }
        }
        if free.is_empty() {
            if (capped - budget).abs() > 1e-12 {
                continue;
            }
        } else {
            let level = (budget - capped + free.iter().map(|&c| ipn[c]).sum::<f64>()) / free.len() as f64;
            for &c in &free {
                p[c] = level - ipn[c];
            }
        }
        let feasible = p.iter().zip(mask).all(|(v, m)| *v >= -1e-12 && *v <= m + 1e-12)
            && (p.iter().sum::<f64>() - budget).abs() <= 1e-9;
        if !feasible {
            continue;
        }
        let cost: f64 = p.iter().zip(ipn).map(|(v, n)| (v + n).powi(2)).sum();
        if best.as_ref().map_or(true, |(b, _)| cost < *b) {
            best = Some((cost, p));
        }
    }
    best.expect("the feasible set is nonempty").1
}

/// Characteristic polynomial coefficients `c[0..=n]` (monic, `c[n] = 1`)
/// by the Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum::<f64>();
            }
            next[i][i] += c[n - k + 1];
        }
        m = next;
        let trace: f64 = (0..n)
            .map(|i| (0..n).map(|l| a[i][l] * m[l][i]).sum::<f64>())
            .sum();
        c[n - k] = -trace / k as f64;
    }
    c
}

fn eval(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &coef in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + coef;
    }
    (p, dp)
}

/// All roots of a monic polynomial by Durand-Kerner, Newton-polished.
pub fn polynomial_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32 + 1)).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let (p, _) = eval(c, z[i]);
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            let step = p / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..5 {
            let (p, dp) = eval(c, *zi);
            if dp.norm() > 0.0 {
                *zi -= p / dp;
            }
        }
    }
    z
}

/// Largest eigenvalue modulus from the roots of the characteristic polynomial.
pub fn spectral_radius_oracle(a: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    polynomial_roots(&characteristic_polynomial(a))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Unconstrained random network: gains uniform on the given ranges.
pub fn random_network<R: Rng>(
    rng: &mut R,
    n: usize,
    k: usize,
    cross_max: f64,
    mask: f64,
) -> NetworkModel {
    let mut gain = vec![0.0; n * n * k];
    for i in 0..n {
        for j in 0..n {
            for c in 0..k {
                gain[(i * n + j) * k + c] = if i == j {
                    rng.gen_range(0.5..1.5)
                } else {
                    rng.gen_range(0.0..cross_max)
                };
            }
        }
    }
    let noise = (0..n * k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let budgets = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
    NetworkModel::new(n, k, gain, noise, budgets, vec![mask; n * k]).unwrap()
}

/// Feasible profile using the full budget, with random shares capped by the masks.
pub fn full_budget_profile<R: Rng>(rng: &mut R, model: &NetworkModel) -> PowerProfile {
    let (n, k) = (model.num_users(), model.num_channels());
    let mut p = PowerProfile::zeros(n, k);
    for i in 0..n {
        let ipn: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = aiwf::waterfill::water_level_solve(&ipn, model.budget(i), model.masks(i)).unwrap();
        p.row_mut(i).copy_from_slice(&r.power);
    }
    p
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

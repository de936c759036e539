//! Small numerical helpers shared by the engines.

use num_complex::Complex64;

use crate::units::HBAR;

/// Pairwise (cascade) summation in index order.
///
/// The split points depend only on the slice length, so the result is
/// bit-identical no matter how the terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Normalized Lorentzian with half width `eta`, evaluated at energy `x`.
#[inline]
pub fn lorentzian(x: f64, eta: f64) -> f64 {
    eta / (std::f64::consts::PI * (x * x + eta * eta))
}

/// First-order time factor `(e^{iEτ/ħ} − 1)/E` for an energy difference `E`.
///
/// Below `|Eτ/ħ| < 1e-6` the series `iτ/ħ·(1 + iEτ/(2ħ))` replaces the
/// quotient.
#[inline]
pub fn first_order_factor(energy: f64, tau: f64) -> Complex64 {
    let phase = energy * tau / HBAR;
    if phase.abs() < 1e-6 {
        Complex64::new(0.0, tau / HBAR) * Complex64::new(1.0, 0.5 * phase)
    } else {
        (Complex64::from_polar(1.0, phase) - 1.0) / energy
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Natural logarithms of `0!, 1!, …, n!`.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_exact_values() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn lorentzian_is_normalized() {
        let eta = 0.3;
        let h = 1e-3;
        let integral: f64 = (-200_000..=200_000)
            .map(|i| lorentzian(i as f64 * h, eta) * h)
            .sum();
        // tails beyond |x| = 200 carry 2η/(π·200) of the mass
        assert!((integral - 1.0).abs() < 2e-3);
    }

    #[test]
    fn series_branch_is_continuous() {
        let tau = 1e-7;
        let e_switch = 1e-6 * HBAR / tau;
        let below = first_order_factor(e_switch * 0.999_999, tau);
        let above = first_order_factor(e_switch * 1.000_001, tau);
        assert!((below - above).norm() / above.norm() < 1e-9);
        let zero = first_order_factor(0.0, tau);
        assert_eq!(zero, Complex64::new(0.0, tau / HBAR));
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0, 1.0, 5);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }
}

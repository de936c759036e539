//! Invariants of the perturbative observables.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use holstein_core::numerics::linspace;
use holstein_core::params::{ModelParams, PhononCutoff};
use holstein_core::perturbation::{
    conversion_coefficients, first_order_amplitude, max_over_time, reaction_probability, reaction_probability_levels,
    reaction_rate, triplet_to_singlet_series, EnergyOrder, FinalSector, InitialSpin,
};
use holstein_core::spin::{rotate_y_full, PreparedSpinState, SpinLabel};
use holstein_core::units::HBAR;
use holstein_core::vibronic::VibronicModel;

fn params(n: usize) -> ModelParams {
    ModelParams { phonon_cutoff: PhononCutoff::Fixed(n), ..ModelParams::paper() }
}

fn model(p: &ModelParams) -> VibronicModel {
    VibronicModel::new(p).unwrap()
}

fn pt(p: &ModelParams, initial: InitialSpin, tau: f64, sector: FinalSector) -> f64 {
    reaction_probability(&model(p), initial, tau, sector).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reaction_probability_even_about_right_angle(theta in 0.0..PI, tau_w in 0.05f64..5.0) {
        let p = params(16);
        let tau = tau_w / p.omega;
        let a = pt(&p.with_theta(theta), InitialSpin::Triplet, tau, FinalSector::Acceptor);
        let b = pt(&p.with_theta(PI - theta), InitialSpin::Triplet, tau, FinalSector::Acceptor);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn singlet_ignores_inclination(theta in 0.0..PI) {
        let p = params(16);
        let tau = 0.5 / p.omega;
        let a = pt(&p, InitialSpin::Singlet, tau, FinalSector::Acceptor);
        let b = pt(&p.with_theta(theta), InitialSpin::Singlet, tau, FinalSector::Acceptor);
        prop_assert!((a - b).abs() <= 1e-10 * a);
        let ka = reaction_rate(&model(&p), InitialSpin::Singlet).unwrap().rate;
        let kb = reaction_rate(&model(&p.with_theta(theta)), InitialSpin::Singlet).unwrap().rate;
        prop_assert!((ka - kb).abs() <= 1e-10 * ka);
    }

    #[test]
    fn probability_scales_as_j_squared(scale in 0.1f64..10.0, theta in 0.0..PI) {
        let p = params(12).with_theta(theta);
        let q = ModelParams { tunneling_j: scale * p.tunneling_j, ..p.clone() };
        let tau = 0.5 / p.omega;
        let a = pt(&p, InitialSpin::Triplet, tau, FinalSector::Acceptor);
        let b = pt(&q, InitialSpin::Triplet, tau, FinalSector::Acceptor);
        prop_assert!((b / a / (scale * scale) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn more_final_rows_never_lower_probability(theta in 0.0..PI, tau_w in 0.05f64..5.0) {
        let p = params(12).with_theta(theta);
        let m = model(&p);
        let tau = tau_w / p.omega;
        for initial in [InitialSpin::Triplet, InitialSpin::Singlet] {
            let acc = reaction_probability_levels(&m, initial, tau, FinalSector::Acceptor).unwrap();
            let all = reaction_probability_levels(&m, initial, tau, FinalSector::All).unwrap();
            for (a, b) in acc.iter().zip(&all) {
                prop_assert!(*a >= 0.0 && b >= a);
            }
        }
    }

    #[test]
    fn conversion_probability_is_a_probability(theta in 0.0..PI, b0 in 0.0f64..2e-4) {
        let p = ModelParams { b0, ..params(8) }.with_theta(theta);
        let times = linspace(0.0, 20.0 / p.omega, 101);
        let series = triplet_to_singlet_series(&model(&p), &times, EnergyOrder::Second).unwrap();
        prop_assert!(series[0].abs() <= 1e-30);
        for v in series {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    /// Rotating the nuclear basis along with the electrons leaves the
    /// nuclear-averaged probability unchanged.
    #[test]
    fn co_rotated_nuclei_give_the_same_average(theta in 0.0..PI, m_level in 0usize..6) {
        let p = params(6).with_theta(theta);
        let md = model(&p);
        let tau = 0.5 / p.omega;
        let triplet = PreparedSpinState::new(SpinLabel::Triplet);
        let mut total = 0.0;
        for j in 0..4 {
            let rotated = rotate_y_full(&triplet.with_nuclear(j), theta);
            let coeffs: Vec<f64> = md.spin.expand(&rotated).iter().copied().collect();
            for n in 0..md.cutoff {
                for row in 20..24 {
                    total += first_order_amplitude(&md, &coeffs, m_level, n, row, tau).norm_sqr();
                }
            }
        }
        let engine = reaction_probability_levels(&md, InitialSpin::Triplet, tau, FinalSector::Acceptor).unwrap();
        let direct = 0.25 * total;
        prop_assert!((engine[m_level] - direct).abs() <= 1e-10 * direct);
    }
}

#[test]
fn hyperfine_switch_off_silences_everything() {
    let p = ModelParams { g1: 0.0, g2: 0.0, ..params(32) };
    let times = linspace(0.0, 20.0 / p.omega, 201);
    for theta in linspace(0.0, PI, 7) {
        let m = model(&p.with_theta(theta));
        for tau in [0.1 / p.omega, 0.5 / p.omega, 3.0 / p.omega] {
            assert!(reaction_probability(&m, InitialSpin::Triplet, tau, FinalSector::All).unwrap().value.abs() <= 1e-20);
        }
        assert!(reaction_rate(&m, InitialSpin::Triplet).unwrap().rate.abs() <= 1e-20);
        for order in [EnergyOrder::Zeroth, EnergyOrder::Second] {
            let series = triplet_to_singlet_series(&m, &times, order).unwrap();
            assert!(series.iter().all(|v| v.abs() <= 1e-20), "{order:?} Θ={theta}");
        }
    }
}

/// Without a field there is no preferred axis. At second order the row-wise
/// shifts split the zero-field degenerate subspaces in a fixed basis, which
/// leaves a residual Θ dependence of order (J²/gap)·t.
#[test]
fn conversion_maximum_is_theta_independent_at_zero_field() {
    let p = ModelParams { b0: 0.0, ..params(8) };
    let times = linspace(0.0, 20.0 / p.omega, 401);
    for (order, tol) in [(EnergyOrder::Zeroth, 1e-14), (EnergyOrder::Second, 1e-9)] {
        let maxima: Vec<f64> = linspace(0.0, PI, 7)
            .into_iter()
            .map(|th| {
                let s = triplet_to_singlet_series(&model(&p.with_theta(th)), &times, order).unwrap();
                max_over_time(&s, &times).0
            })
            .collect();
        for v in &maxima {
            assert!((v - maxima[0]).abs() <= tol, "{order:?}: {maxima:?}");
        }
    }
}

#[test]
fn doubling_time_density_moves_maxima_below_one_percent() {
    let p = params(16);
    for theta in [0.0, 0.1 * PI, 0.3 * PI, 0.5 * PI] {
        let m = model(&p.with_theta(theta));
        let coarse = linspace(0.0, 20.0 / p.omega, 4001);
        let fine = linspace(0.0, 20.0 / p.omega, 8001);
        let a = max_over_time(&triplet_to_singlet_series(&m, &coarse, EnergyOrder::Second).unwrap(), &coarse).0;
        let b = max_over_time(&triplet_to_singlet_series(&m, &fine, EnergyOrder::Second).unwrap(), &fine).0;
        assert!((a - b).abs() / b < 0.01, "Θ={theta}: {a} vs {b}");
    }
}

/// The strongest line of the zeroth-order P_{t→s} spectrum, read off a
/// discrete transform of the time series, sits at the spin-energy gap
/// with the largest cosine weight.
#[test]
fn dominant_conversion_frequency_is_a_hyperfine_gap() {
    let p = params(4).with_theta(0.2);
    let m = model(&p);
    let energies = &m.spin.energies[..16];
    let coeffs = conversion_coefficients(&m);

    // predicted weights: P(t) = Σ_{q,q'} W_qq' cos((E_q − E_q')t/ħ) / 4
    let mut lines: Vec<(f64, f64)> = Vec::new();
    for q in 0..16 {
        for r in (q + 1)..16 {
            let w: f64 = (0..4).flat_map(|j| (0..4).map(move |k| (j, k))).map(|(j, k)| coeffs[j][k][q] * coeffs[j][k][r]).sum();
            let freq = (energies[q] - energies[r]).abs() / HBAR;
            if w.abs() < 1e-14 || freq < 1.0 {
                continue;
            }
            match lines.iter_mut().find(|(f, _)| (f - freq).abs() <= 1e-9 * freq) {
                Some(line) => line.1 += 2.0 * w,
                None => lines.push((freq, 2.0 * w)),
            }
        }
    }
    let predicted = lines.iter().max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap()).unwrap().0;

    let highest = lines.iter().fold(0.0f64, |a, l| a.max(l.0));
    let dt = 0.25 * PI / highest;
    let n = 8192;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let series = triplet_to_singlet_series(&m, &times, EnergyOrder::Zeroth).unwrap();
    let mean = series.iter().sum::<f64>() / n as f64;
    // Hann window against leakage from neighboring lines
    let windowed: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(i, v)| (v - mean) * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()))
        .collect();
    let nyquist = PI / dt;
    let grid = linspace(0.02 * nyquist, nyquist, 20_000);
    let power = |w: f64| -> f64 {
        windowed.iter().zip(&times).map(|(v, t)| Complex64::from_polar(*v, -w * t)).sum::<Complex64>().norm_sqr()
    };
    let observed = grid.iter().copied().max_by(|a, b| power(*a).partial_cmp(&power(*b)).unwrap()).unwrap();
    assert!((observed / predicted - 1.0).abs() < 0.01, "observed {observed:e} rad/s, predicted {predicted:e}");
}

#[test]
#[ignore = "unattainable with published parameters: no channel is within η of a phonon resonance, so k_t ∝ η"]
fn rate_is_robust_to_broadening() {
    let p = ModelParams { phonon_cutoff: PhononCutoff::Auto, max_cutoff: 256, ..ModelParams::paper() };
    let m = model(&p);
    let eta0 = p.hbar_omega() * 1e-2;
    let rates: Vec<f64> = [10f64.powf(-0.5), 1.0, 10f64.powf(0.5)]
        .iter()
        .map(|f| holstein_core::perturbation::reaction_rate_with_broadening(&m, InitialSpin::Triplet, f * eta0).unwrap().rate)
        .collect();
    for k in &rates {
        assert!((k / rates[1] - 1.0).abs() < 0.05, "{rates:?}");
    }
}

#[test]
fn rate_channels_add_up() {
    let p = params(64).with_theta(0.7);
    let r = reaction_rate(&model(&p), InitialSpin::Triplet).unwrap();
    assert_eq!(r.channels.len(), 16);
    let sum: f64 = r.channels.iter().map(|c| c.rate).sum();
    assert!((sum - r.rate).abs() <= 1e-12 * r.rate);
    assert!(r.channels.iter().all(|c| c.rate >= 0.0 && (21..=24).contains(&c.p) && (1..=4).contains(&c.j)));
}

#[test]
fn reaction_probability_is_stable_across_pools() {
    let p = params(64).with_theta(0.4);
    let m = model(&p);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| reaction_probability(&m, InitialSpin::Triplet, 0.5 / p.omega, FinalSector::Acceptor).unwrap().value)
    };
    let one = run(1);
    for t in [2, 8] {
        assert_eq!(run(t).to_bits(), one.to_bits());
    }
}

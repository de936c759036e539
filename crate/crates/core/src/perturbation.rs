//! First-order reaction probabilities, golden-rule rates and the
//! triplet-to-singlet conversion probability.
//!
//! Every thermal sum runs over the retained phonon levels with weights
//! renormalized to one (see [`crate::params::ThermalEnsemble`]). Per-level
//! terms are computed in parallel, gathered in index order and reduced by
//! [`pairwise_sum`], so results do not depend on the worker count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{first_order_factor, lorentzian, pairwise_sum};
use crate::params::ModelParams;
use crate::spin::PreparedSpinState;
use crate::units::HBAR;
use crate::vibronic::VibronicModel;

/// Probabilities above this value are flagged as outside first-order
/// validity.
pub const UNRELIABLE_PROBABILITY: f64 = 0.5;

/// Rate times observation time above this value is flagged.
pub const UNRELIABLE_RATE_TIME: f64 = 0.3;

const N_SPLIT: usize = 16;
const N_NUCLEAR: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialSpin {
    Singlet,
    Triplet,
}

/// Final rows included in the reaction probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FinalSector {
    /// Rows 21–24.
    #[default]
    Acceptor,
    /// Rows 17–24.
    All,
}

impl FinalSector {
    pub fn rows(self) -> std::ops::Range<usize> {
        match self {
            FinalSector::Acceptor => 20..24,
            FinalSector::All => 16..24,
        }
    }
}

/// Energies entering the conversion phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EnergyOrder {
    Zeroth,
    /// Zeroth order plus the second-order shift from H̃⁽¹⁾.
    #[default]
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probability {
    pub value: f64,
    pub unreliable: bool,
}

impl Probability {
    fn new(value: f64) -> Self {
        Self { value, unreliable: value > UNRELIABLE_PROBABILITY }
    }
}

/// The prepared electron-spin state for `initial` at inclination `theta`.
pub fn initial_state(initial: InitialSpin, theta: f64) -> PreparedSpinState {
    match initial {
        InitialSpin::Singlet => PreparedSpinState::singlet(),
        InitialSpin::Triplet => PreparedSpinState::rotated_triplet(theta),
    }
}

/// Coefficients c_jmq = ⟨φ_q|state⟩|χ_j⟩ over all 24 rows. They do not
/// depend on the phonon level m.
pub fn initial_expansion(model: &VibronicModel, state: &PreparedSpinState, j: usize) -> Vec<f64> {
    model.expansion(state, j)
}

/// −Σ_q c_q H̃⁽¹⁾_{np,mq} (e^{iω τ} − 1)/(ħω) for one target (n, p) and the
/// source set {(m, q)} with coefficients `coeffs`.
pub fn first_order_amplitude(
    model: &VibronicModel,
    coeffs: &[f64],
    m: usize,
    n: usize,
    p: usize,
    tau: f64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (q, c) in coeffs.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let h = model.h1_matrix_element(n, p, m, q);
        if h == 0.0 {
            continue;
        }
        acc -= first_order_factor(model.energy_gap(n, p, m, q), tau) * (c * h);
    }
    acc
}

/// c_jq · ⟨φ_p|hop|φ_q⟩ for the split rows, per nuclear state j.
fn hop_weights(model: &VibronicModel, state: &PreparedSpinState, p: usize) -> Vec<[f64; N_SPLIT]> {
    (0..N_NUCLEAR)
        .map(|j| {
            let c = model.expansion(state, j);
            let mut a = [0.0; N_SPLIT];
            for (q, aq) in a.iter_mut().enumerate() {
                *aq = c[q] * model.coupling(p, q).0;
            }
            a
        })
        .collect()
}

/// Spin-orbital part of E⁰_p − E⁰_q (phonon term excluded).
fn static_gap(model: &VibronicModel, p: usize, q: usize) -> f64 {
    model.energy_gap(0, p, 0, q)
}

/// Per-level reaction probabilities Σ_{j,n,p} |c_np|² / 4 for each initial
/// phonon level m.
pub fn reaction_probability_levels(
    model: &VibronicModel,
    initial: InitialSpin,
    tau: f64,
    sector: FinalSector,
) -> Result<Vec<f64>> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::NegativeTime(tau));
    }
    let n_cut = model.cutoff;
    let hw = model.hbar_omega;
    let j2 = model.params.tunneling_j * model.params.tunneling_j;
    let state = initial_state(initial, model.params.theta);
    // S[(j, p)][k + N − 1] = Σ_q a_jpq G(gap_pq + kħω)
    let mut channels = Vec::new();
    for p in sector.rows() {
        let weights = hop_weights(model, &state, p);
        for a in weights {
            if a.iter().all(|v| *v == 0.0) {
                continue;
            }
            let gaps: Vec<f64> = (0..N_SPLIT).map(|q| static_gap(model, p, q)).collect();
            let s: Vec<f64> = (0..2 * n_cut - 1)
                .map(|idx| {
                    let k = idx as f64 - (n_cut as f64 - 1.0);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for q in 0..N_SPLIT {
                        if a[q] != 0.0 {
                            acc += first_order_factor(gaps[q] + k * hw, tau) * a[q];
                        }
                    }
                    acc.norm_sqr()
                })
                .collect();
            channels.push((p, s));
        }
    }
    let levels = (0..n_cut)
        .into_par_iter()
        .map(|m| {
            let mut total = 0.0;
            for (p, s) in &channels {
                let f = model.coupling(*p, 0).1;
                for n in 0..n_cut {
                    let fnm = f.get(n, m);
                    total += fnm * fnm * s[n + n_cut - 1 - m];
                }
            }
            0.25 * j2 * total
        })
        .collect();
    Ok(levels)
}

/// Thermally and nuclear-averaged first-order reaction probability at τ.
pub fn reaction_probability(
    model: &VibronicModel,
    initial: InitialSpin,
    tau: f64,
    sector: FinalSector,
) -> Result<Probability> {
    let levels = reaction_probability_levels(model, initial, tau, sector)?;
    Ok(Probability::new(model.ensemble.average(&levels)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateChannel {
    /// Nuclear state index, 1..=4.
    pub j: usize,
    /// Final table row, 21..=24.
    pub p: usize,
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct RateResult {
    /// 1/s.
    pub rate: f64,
    pub eta: f64,
    /// Contributions per (j, p); they add up to `rate`.
    pub channels: Vec<RateChannel>,
}

impl RateResult {
    pub fn unreliable_for(&self, observation_time: f64) -> bool {
        self.rate * observation_time > UNRELIABLE_RATE_TIME
    }
}

/// Groups split rows with identical spin energy (relative tolerance
/// 1e-12 of the spin energy scale).
fn degenerate_classes(model: &VibronicModel, a: &[f64; N_SPLIT]) -> Vec<(f64, f64)> {
    let scale = model.spin.energies.iter().fold(0.0f64, |acc, e| acc.max(e.abs())).max(f64::MIN_POSITIVE);
    let mut classes: Vec<(f64, f64)> = Vec::new();
    for q in 0..N_SPLIT {
        if a[q] == 0.0 {
            continue;
        }
        let e = model.spin.energies[q];
        match classes.iter_mut().find(|(rep, _)| (rep - e).abs() <= 1e-12 * scale) {
            Some((_, amp)) => *amp += a[q],
            None => classes.push((e, a[q])),
        }
    }
    classes
}

/// Golden-rule rate with the model's broadening.
pub fn reaction_rate(model: &VibronicModel, initial: InitialSpin) -> Result<RateResult> {
    reaction_rate_with_broadening(model, initial, model.params.broadening_eta)
}

/// k = (πJ²/ħ)(1/4) Σ_m w_m Σ_{j,n,p=21..24} |⟨n|D(−2φ)|m⟩|² R_jp(n−m)
/// with R_jp(k) = Σ_c 2|Σ_{q∈c} c_jq hop_pq|² L_η(E⁰_p − E_c + kħω),
/// where c runs over classes of degenerate split rows. Cross terms between
/// distinct energies are dropped.
pub fn reaction_rate_with_broadening(model: &VibronicModel, initial: InitialSpin, eta: f64) -> Result<RateResult> {
    if !(eta > 0.0) {
        return Err(Error::NonPositiveBroadening(eta));
    }
    let n_cut = model.cutoff;
    let hw = model.hbar_omega;
    let prefactor = std::f64::consts::PI * model.params.tunneling_j.powi(2) / HBAR * 0.25;
    let state = initial_state(initial, model.params.theta);
    let mut channels = Vec::new();
    for j in 0..N_NUCLEAR {
        for p in 20..24 {
            let a = hop_weights(model, &state, p)[j];
            let classes = degenerate_classes(model, &a);
            let orbital_gap = model.orbital[p] - model.orbital[0];
            let r: Vec<f64> = (0..2 * n_cut - 1)
                .map(|idx| {
                    let k = idx as f64 - (n_cut as f64 - 1.0);
                    classes
                        .iter()
                        .map(|(e, amp)| {
                            let gap = orbital_gap + (model.spin.energies[p] - e) + k * hw;
                            2.0 * amp * amp * lorentzian(gap, eta)
                        })
                        .sum()
                })
                .collect();
            let f = &model.d_minus;
            let levels: Vec<f64> = (0..n_cut)
                .into_par_iter()
                .map(|m| {
                    let mut total = 0.0;
                    for n in 0..n_cut {
                        let fnm = f.get(n, m);
                        total += fnm * fnm * r[n + n_cut - 1 - m];
                    }
                    total
                })
                .collect();
            channels.push(RateChannel { j: j + 1, p: p + 1, rate: prefactor * model.ensemble.average(&levels) });
        }
    }
    let rate = pairwise_sum(&channels.iter().map(|c| c.rate).collect::<Vec<_>>());
    Ok(RateResult { rate, eta, channels })
}

/// Second-order shifts J² Σ_{n,p} |hop_pq|² |F_nm|² / (E⁰_mq − E⁰_np) for
/// every level m and split row q.
pub fn energy_shifts(model: &VibronicModel) -> Result<Vec<[f64; N_SPLIT]>> {
    let n_cut = model.cutoff;
    let j2 = model.params.tunneling_j.powi(2);
    (0..n_cut)
        .into_par_iter()
        .map(|m| {
            let mut shifts = [0.0; N_SPLIT];
            for (q, shift) in shifts.iter_mut().enumerate() {
                let mut acc = 0.0;
                for p in 16..24 {
                    let (hop, f) = model.coupling(p, q);
                    if hop == 0.0 {
                        continue;
                    }
                    for n in 0..n_cut {
                        let fnm = f.get(n, m);
                        let num = hop * hop * fnm * fnm;
                        if num == 0.0 {
                            continue;
                        }
                        let den = -model.energy_gap(n, p, m, q);
                        if den == 0.0 {
                            return Err(Error::DegenerateDenominator(format!(
                                "(m={m}, q={}) and (n={n}, p={})",
                                q + 1,
                                p + 1
                            )));
                        }
                        acc += num / den;
                    }
                }
                *shift = j2 * acc;
            }
            Ok(shifts)
        })
        .collect()
}

/// Overlap products ⟨t̃χ_k|φ_q⟩⟨φ_q|χ_j s⟩ indexed `[j][k][q]`.
pub fn conversion_coefficients(model: &VibronicModel) -> [[[f64; N_SPLIT]; N_NUCLEAR]; N_NUCLEAR] {
    let t = PreparedSpinState::rotated_triplet(model.params.theta);
    let s = PreparedSpinState::singlet();
    let a: Vec<Vec<f64>> = (0..N_NUCLEAR).map(|k| model.expansion(&t, k)).collect();
    let b: Vec<Vec<f64>> = (0..N_NUCLEAR).map(|j| model.expansion(&s, j)).collect();
    let mut out = [[[0.0; N_SPLIT]; N_NUCLEAR]; N_NUCLEAR];
    for j in 0..N_NUCLEAR {
        for k in 0..N_NUCLEAR {
            for q in 0..N_SPLIT {
                out[j][k][q] = a[k][q] * b[j][q];
            }
        }
    }
    out
}

/// D_mjk(t) for one level, given that level's phase energies.
pub fn conversion_amplitudes(
    coeffs: &[[[f64; N_SPLIT]; N_NUCLEAR]; N_NUCLEAR],
    energies: &[f64; N_SPLIT],
    t: f64,
) -> [[Complex64; N_NUCLEAR]; N_NUCLEAR] {
    let phases: Vec<Complex64> = energies.iter().map(|e| Complex64::from_polar(1.0, -e * t / HBAR)).collect();
    let mut d = [[Complex64::new(0.0, 0.0); N_NUCLEAR]; N_NUCLEAR];
    for j in 0..N_NUCLEAR {
        for k in 0..N_NUCLEAR {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..N_SPLIT {
                acc += phases[q] * coeffs[j][k][q];
            }
            d[j][k] = acc;
        }
    }
    d
}

/// Per-level phase energies E_sq (+ shift), the common mħω and orbital
/// energy removed.
pub fn conversion_energies(model: &VibronicModel, order: EnergyOrder) -> Result<Vec<[f64; N_SPLIT]>> {
    let mut base = [0.0; N_SPLIT];
    base.copy_from_slice(&model.spin.energies[..N_SPLIT]);
    match order {
        EnergyOrder::Zeroth => Ok(vec![base; model.cutoff]),
        EnergyOrder::Second => Ok(energy_shifts(model)?
            .into_iter()
            .map(|shift| {
                let mut e = base;
                for (eq, s) in e.iter_mut().zip(shift) {
                    *eq += s;
                }
                e
            })
            .collect()),
    }
}

/// P_{t→s} on a time grid.
pub fn triplet_to_singlet_series(model: &VibronicModel, times: &[f64], order: EnergyOrder) -> Result<Vec<f64>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTime(*t));
    }
    let coeffs = conversion_coefficients(model);
    let energies = conversion_energies(model, order)?;
    let uniform = order == EnergyOrder::Zeroth;
    let out = times
        .par_iter()
        .map(|&t| {
            let level = |e: &[f64; N_SPLIT]| -> f64 {
                let d = conversion_amplitudes(&coeffs, e, t);
                d.iter().flatten().map(|z| z.norm_sqr()).sum()
            };
            if uniform {
                let v = level(&energies[0]);
                0.25 * model.ensemble.average(&vec![v; energies.len()])
            } else {
                let levels: Vec<f64> = energies.iter().map(level).collect();
                0.25 * model.ensemble.average(&levels)
            }
        })
        .collect();
    Ok(out)
}

pub fn triplet_to_singlet_probability(model: &VibronicModel, t: f64, order: EnergyOrder) -> Result<Probability> {
    let v = triplet_to_singlet_series(model, &[t], order)?;
    Ok(Probability::new(v[0]))
}

/// Grid maximum and the time where it occurs (first occurrence).
pub fn max_over_time(values: &[f64], times: &[f64]) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for (v, t) in values.iter().zip(times) {
        if *v > best.0 {
            best = (*v, *t);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    pub b0: f64,
    pub max: f64,
    pub argmax_time: f64,
}

/// max_t P_{t→s} for each field magnitude, at inclination `theta`.
pub fn field_magnitude_scan(
    p: &ModelParams,
    theta: f64,
    b0_grid: &[f64],
    times: &[f64],
    order: EnergyOrder,
) -> Result<Vec<ScanPoint>> {
    if b0_grid.is_empty() || times.is_empty() {
        return Err(Error::InvalidSpec("field scan needs non-empty B0 and time grids".into()));
    }
    b0_grid
        .iter()
        .map(|&b0| {
            let model = VibronicModel::new(&ModelParams { b0, theta, ..p.clone() })?;
            let series = triplet_to_singlet_series(&model, times, order)?;
            let (max, argmax_time) = max_over_time(&series, times);
            Ok(ScanPoint { b0, max, argmax_time })
        })
        .collect()
}

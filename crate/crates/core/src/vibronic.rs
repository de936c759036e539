//! Displacement operators, unperturbed energies and tunneling matrix
//! elements of the polaron-transformed Hamiltonian.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::basis::{self, N_SPIN};
use crate::error::{Error, Result};
use crate::fermion;
use crate::numerics::log_factorials;
use crate::params::{validate_params, ModelParams, ThermalEnsemble};
use crate::spin::{table1_eigensystem, SpinEigensystem};

/// Truncated matrix ⟨n|e^{λ(b†−b)}|m⟩, n, m < N.
#[derive(Clone, Debug)]
pub struct DisplacementMatrix {
    pub lambda: f64,
    pub data: DMatrix<f64>,
}

impl DisplacementMatrix {
    pub fn cutoff(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.data[(n, m)]
    }
}

/// Closed form via associated Laguerre polynomials:
/// for n ≥ m, e^{−λ²/2} λ^{n−m} √(m!/n!) L_m^{n−m}(λ²); for n < m the
/// same with n, m exchanged and λ → −λ.
pub fn displacement_matrix(lambda: f64, n: usize) -> DisplacementMatrix {
    let mut data = DMatrix::zeros(n, n);
    if lambda == 0.0 {
        data.fill_with_identity();
        return DisplacementMatrix { lambda, data };
    }
    let x = lambda * lambda;
    let lf = log_factorials(n);
    let ln_abs = lambda.abs().ln();
    let lower_sign = lambda.signum();
    for k in 0..n {
        // L_i^k(x) for i = 0..n-k by the three-term recurrence
        let len = n - k;
        let mut lag = Vec::with_capacity(len);
        lag.push(1.0);
        if len > 1 {
            lag.push(1.0 + k as f64 - x);
        }
        for i in 1..len.saturating_sub(1) {
            let fi = i as f64;
            let next = ((2.0 * fi + 1.0 + k as f64 - x) * lag[i] - (fi + k as f64) * lag[i - 1]) / (fi + 1.0);
            lag.push(next);
        }
        let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
        let sign_lower = if k % 2 == 0 { 1.0 } else { lower_sign };
        for (i, l) in lag.iter().enumerate() {
            let mag = (-0.5 * x + k as f64 * ln_abs + 0.5 * (lf[i] - lf[i + k])).exp() * l;
            data[(i + k, i)] = sign_lower * mag;
            if k > 0 {
                data[(i, i + k)] = sign_lower * parity * mag;
            }
        }
    }
    DisplacementMatrix { lambda, data }
}

/// exp of the truncated generator λ(b† − b), by scaling and squaring of a
/// Taylor series. Used as an independent check of the closed form.
pub fn displacement_expm(lambda: f64, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        let s = ((i + 1) as f64).sqrt() * lambda;
        a[(i + 1, i)] = s;
        a[(i, i + 1)] = -s;
    }
    let norm = a.abs().column_sum().max();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    a *= scale;
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &a / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Max |closed form − expm| over indices `< block`.
pub fn cross_validate(lambda: f64, n: usize, block: usize) -> Result<f64> {
    if block == 0 || block > n {
        return Err(Error::CutoffTooSmall { cutoff: n, block });
    }
    let closed = displacement_matrix(lambda, n);
    let oracle = displacement_expm(lambda, n);
    let diff = closed.data.view((0, 0), (block, block)) - oracle.view((0, 0), (block, block));
    Ok(diff.amax())
}

type CacheKey = (u64, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<DisplacementMatrix>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<DisplacementMatrix>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared immutable displacement matrix, computed once per (λ, N).
pub fn cached_displacement(lambda: f64, n: usize) -> Arc<DisplacementMatrix> {
    let key = (lambda.to_bits(), n);
    if let Some(d) = cache().lock().unwrap().get(&key) {
        return Arc::clone(d);
    }
    let d = Arc::new(displacement_matrix(lambda, n));
    let mut map = cache().lock().unwrap();
    Arc::clone(map.entry(key).or_insert(d))
}

/// Table row sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    /// Rows 1–16, one electron per site.
    Split,
    /// Rows 17–20, both electrons on the donor.
    Donor,
    /// Rows 21–24, both electrons on the acceptor.
    Acceptor,
}

pub fn sector(q: usize) -> Sector {
    match q {
        0..=15 => Sector::Split,
        16..=19 => Sector::Donor,
        _ => Sector::Acceptor,
    }
}

/// Everything the perturbative engines need for one parameter set.
#[derive(Clone, Debug)]
pub struct VibronicModel {
    pub params: ModelParams,
    pub cutoff: usize,
    pub hbar_omega: f64,
    pub spin: SpinEigensystem,
    /// Orbital energy of each table row, polaron shift included.
    pub orbital: [f64; N_SPIN],
    /// ⟨φ_p| Σ_α c†_{2α}c_{1α} |φ_q⟩.
    pub hop12: DMatrix<f64>,
    /// ⟨φ_p| Σ_α c†_{1α}c_{2α} |φ_q⟩.
    pub hop21: DMatrix<f64>,
    /// D(−2φ), dressing hops from site 1 to site 2.
    pub d_minus: Arc<DisplacementMatrix>,
    /// D(+2φ), dressing hops from site 2 to site 1.
    pub d_plus: Arc<DisplacementMatrix>,
    pub ensemble: ThermalEnsemble,
}

impl VibronicModel {
    /// Validates `p` and builds the model at its resolved cutoff.
    pub fn new(p: &ModelParams) -> Result<Self> {
        let params = validate_params(p.clone())?;
        let cutoff = params.cutoff();
        let hbar_omega = params.hbar_omega();
        let spin = table1_eigensystem(&params);
        let per_orbital = fermion::orbital_energies(params.epsilon1, params.epsilon2, params.phi, hbar_omega);
        let mut orbital = [0.0; N_SPIN];
        for (q, e) in orbital.iter_mut().enumerate() {
            *e = match sector(q) {
                Sector::Split => per_orbital[1],
                Sector::Donor => per_orbital[basis::DONOR_PAIR],
                Sector::Acceptor => per_orbital[basis::ACCEPTOR_PAIR],
            };
        }
        let lift = |m: &nalgebra::Matrix6<f64>| fermion::lift_orbital(m);
        let hop12 = spin.states.tr_mul(&(lift(&fermion::hop_1_to_2()) * &spin.states));
        let hop21 = hop12.transpose();
        let d_minus = cached_displacement(-2.0 * params.phi, cutoff);
        let d_plus = cached_displacement(2.0 * params.phi, cutoff);
        let ensemble = ThermalEnsemble::with_cutoff(&params, cutoff);
        Ok(Self {
            params,
            cutoff,
            hbar_omega,
            spin,
            orbital,
            hop12,
            hop21,
            d_minus,
            d_plus,
            ensemble,
        })
    }

    /// E⁰_mq = mħω + E_sq + orbital energy of row q.
    pub fn h0_energy(&self, m: usize, q: usize) -> f64 {
        m as f64 * self.hbar_omega + self.spin.energies[q] + self.orbital[q]
    }

    /// E⁰_np − E⁰_mq evaluated term by term, so that the large orbital
    /// energies cancel before the small spin and phonon terms are added.
    pub fn energy_gap(&self, n: usize, p: usize, m: usize, q: usize) -> f64 {
        (self.orbital[p] - self.orbital[q])
            + (self.spin.energies[p] - self.spin.energies[q])
            + (n as f64 - m as f64) * self.hbar_omega
    }

    /// ⟨n, φ_p| H̃⁽¹⁾ |m, φ_q⟩
    /// = −J [⟨φ_p|hop21|φ_q⟩ D(2φ)_nm + ⟨φ_p|hop12|φ_q⟩ D(−2φ)_nm].
    pub fn h1_matrix_element(&self, n: usize, p: usize, m: usize, q: usize) -> f64 {
        -self.params.tunneling_j
            * (self.hop21[(p, q)] * self.d_plus.get(n, m) + self.hop12[(p, q)] * self.d_minus.get(n, m))
    }

    /// Spin-orbital factor and displacement matrix coupling split row `q`
    /// to doubly occupied row `p`.
    pub fn coupling(&self, p: usize, q: usize) -> (f64, &DisplacementMatrix) {
        match sector(p) {
            Sector::Donor => (self.hop21[(p, q)], &self.d_plus),
            Sector::Acceptor => (self.hop12[(p, q)], &self.d_minus),
            Sector::Split => (0.0, &self.d_minus),
        }
    }

    /// Coefficients ⟨φ_q| state ⊗ χ_j⟩.
    pub fn expansion(&self, state: &crate::spin::PreparedSpinState, j: usize) -> Vec<f64> {
        self.spin.expand(&state.with_nuclear(j)).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_lambda_is_identity() {
        let d = displacement_matrix(0.0, 8);
        assert_eq!(d.data, DMatrix::identity(8, 8));
    }

    #[test]
    fn low_order_elements() {
        let d = displacement_matrix(-0.4, 16);
        assert_abs_diff_eq!(d.get(0, 0), (-0.08f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(0, 0), 0.9231163463866358, epsilon = 1e-12);
        assert_abs_diff_eq!(d.get(1, 0), -0.36924653855465434, epsilon = 1e-12);
        assert_abs_diff_eq!(d.get(0, 1), 0.36924653855465434, epsilon = 1e-12);
    }

    #[test]
    fn transpose_is_inverse_displacement() {
        for lam in [0.4, -1.0, 0.73] {
            let a = displacement_matrix(lam, 40);
            let b = displacement_matrix(-lam, 40);
            assert_eq!(a.data.transpose(), b.data);
        }
    }

    #[test]
    fn matches_matrix_exponential() {
        for lam in [0.4, -0.4, 1.0, -1.0] {
            assert!(cross_validate(lam, 64, 32).unwrap() < 1e-8);
        }
        assert!(cross_validate(0.4, 8, 9).is_err());
    }

    #[test]
    fn interior_unitarity() {
        let n = 128;
        let a = displacement_matrix(0.4, n);
        let b = displacement_matrix(-0.4, n);
        let prod = &a.data * &b.data;
        let half = n / 2;
        let block = prod.view((0, 0), (half, half)) - DMatrix::<f64>::identity(half, half);
        assert!(block.amax() < 1e-8);
        for m in 0..half {
            let norm = a.data.column(m).norm();
            assert!((1.0 - 1e-8..=1.0 + 1e-12).contains(&norm));
        }
    }

    #[test]
    fn large_cutoff_stays_finite() {
        let d = displacement_matrix(-0.4, 512);
        assert!(d.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cache_returns_shared_handle() {
        let a = cached_displacement(0.123, 10);
        let b = cached_displacement(0.123, 10);
        assert!(Arc::ptr_eq(&a, &b));
    }

    fn small_model() -> VibronicModel {
        let p = ModelParams {
            phonon_cutoff: crate::params::PhononCutoff::Fixed(6),
            theta: 0.3,
            g2: 0.6e-8,
            ..ModelParams::paper()
        };
        VibronicModel::new(&p).unwrap()
    }

    #[test]
    fn h0_energies() {
        let model = small_model();
        let p = &model.params;
        let hw = model.hbar_omega;
        assert_eq!(model.orbital[0], p.epsilon1 + p.epsilon2);
        assert_abs_diff_eq!(model.h0_energy(0, 20), 2.0 * p.epsilon2 - 4.0 * p.phi * p.phi * hw, epsilon = 1e-20);
        assert_abs_diff_eq!(model.h0_energy(0, 16), 2.0 * p.epsilon1 - 4.0 * p.phi * p.phi * hw, epsilon = 1e-18);
        assert_abs_diff_eq!(model.h0_energy(3, 5) - model.h0_energy(1, 5), 2.0 * hw, epsilon = 1e-17);
        let zero = ModelParams { g1: 0.0, g2: 0.0, b0: 0.0, ..p.clone() };
        let zero = VibronicModel::new(&zero).unwrap();
        assert_eq!(zero.h0_energy(0, 0), p.epsilon1 + p.epsilon2);
    }

    #[test]
    fn h1_is_symmetric_and_off_sector() {
        let model = small_model();
        let n = model.cutoff;
        for a in 0..n {
            for b in 0..n {
                for p in 0..N_SPIN {
                    for q in 0..N_SPIN {
                        let v = model.h1_matrix_element(a, p, b, q);
                        assert_eq!(v, model.h1_matrix_element(b, q, a, p));
                        let same = (sector(p) == Sector::Split) == (sector(q) == Sector::Split);
                        if same {
                            assert_eq!(v, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_tunneling_vanishes() {
        let p = ModelParams { tunneling_j: 0.0, phonon_cutoff: crate::params::PhononCutoff::Fixed(4), ..ModelParams::paper() };
        let model = VibronicModel::new(&p).unwrap();
        for q in 0..16 {
            assert_eq!(model.h1_matrix_element(1, 22, 2, q), 0.0);
        }
    }

    #[test]
    fn triplet_does_not_hop_without_hyperfine() {
        let p = ModelParams { g1: 0.0, g2: 0.0, phonon_cutoff: crate::params::PhononCutoff::Fixed(4), ..ModelParams::paper() };
        let model = VibronicModel::new(&p).unwrap();
        let t = crate::spin::PreparedSpinState::rotated_triplet(0.7);
        for j in 0..4 {
            let c = model.expansion(&t, j);
            for p in 16..24 {
                let amp: f64 = (0..16).map(|q| c[q] * model.coupling(p, q).0).sum();
                assert_abs_diff_eq!(amp, 0.0, epsilon = 1e-15);
            }
        }
    }
}

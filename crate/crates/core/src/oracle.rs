//! Exact evolution of the truncated transformed Hamiltonian.
//!
//! The Hamiltonian is assembled in the product basis (orbital configuration
//! ⊗ nuclear configuration ⊗ phonon level, see [`crate::basis`]) directly
//! from fermion and Pauli operators, so it does not go through the closed
//! form eigensystem used by the perturbative engine. All matrix elements
//! are real, so the matrix is real symmetric.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::basis::{self, BasisState, N_NUCLEAR, N_SPIN};
use crate::error::{Error, Result};
use crate::fermion;
use crate::numerics::pairwise_sum;
use crate::params::{validate_params, ModelParams, PhononCutoff, ThermalEnsemble};
use crate::perturbation::InitialSpin;
use crate::units::{HBAR, K_B};
use crate::vibronic::{displacement_matrix, VibronicModel};

/// Default cap on the Hilbert-space dimension 24·N.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

#[derive(Clone, Debug)]
pub struct FullHamiltonian {
    pub matrix: DMatrix<f64>,
    pub cutoff: usize,
    /// Constant ε₁ + ε₂ subtracted from the diagonal.
    pub reference_energy: f64,
}

impl FullHamiltonian {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn label(&self, index: usize) -> BasisState {
        BasisState::unflatten(index, self.cutoff)
    }
}

/// H̃ = H̃_s ⊗ 1 + orbital energies + ħω b†b − J Σ_α (c†_{2α}c_{1α} D(−2φ) + h.c.)
/// on the truncated space, with ε₁ + ε₂ removed from the diagonal.
pub fn build_full_hamiltonian(p: &ModelParams, cutoff: usize, cap: usize) -> Result<FullHamiltonian> {
    if cutoff < 2 {
        return Err(Error::CutoffTooSmall { cutoff, block: 2 });
    }
    let dim = basis::dimension(cutoff);
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let p = validate_params(ModelParams { phonon_cutoff: PhononCutoff::Fixed(cutoff), ..p.clone() })?;
    let hw = p.hbar_omega();
    let reference = p.epsilon1 + p.epsilon2;
    let hs = fermion::spin_hamiltonian(p.b0, p.g1, p.g2);
    let orbital = fermion::orbital_energies(p.epsilon1, p.epsilon2, p.phi, hw);
    let hop12 = fermion::lift_orbital(&fermion::hop_1_to_2());
    let d_minus = displacement_matrix(-2.0 * p.phi, cutoff);
    let d_plus = displacement_matrix(2.0 * p.phi, cutoff);

    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..N_SPIN {
        for b in 0..N_SPIN {
            let spin = hs[(a, b)];
            let forward = hop12[(a, b)];
            let backward = hop12[(b, a)];
            for m in 0..cutoff {
                if spin != 0.0 {
                    h[(a * cutoff + m, b * cutoff + m)] += spin;
                }
                if forward == 0.0 && backward == 0.0 {
                    continue;
                }
                for n in 0..cutoff {
                    let v = forward * d_minus.get(n, m) + backward * d_plus.get(n, m);
                    if v != 0.0 {
                        h[(a * cutoff + n, b * cutoff + m)] -= p.tunneling_j * v;
                    }
                }
            }
        }
    }
    for i in 0..dim {
        let s = BasisState::unflatten(i, cutoff);
        h[(i, i)] += (orbital[s.orbital] - reference) + s.phonon as f64 * hw;
    }
    let asym = (&h - h.transpose()).amax();
    let scale = h.amax().max(f64::MIN_POSITIVE);
    if asym > 1e-12 * scale {
        return Err(Error::EigensystemMismatch(format!("full Hamiltonian asymmetry {asym:e}")));
    }
    Ok(FullHamiltonian { matrix: h, cutoff, reference_energy: reference })
}

/// Same Hamiltonian assembled in the table ⊗ phonon basis from
/// [`VibronicModel::h0_energy`] and [`VibronicModel::h1_matrix_element`],
/// index `q·N + m`.
pub fn table_basis_hamiltonian(model: &VibronicModel) -> DMatrix<f64> {
    let n_cut = model.cutoff;
    let reference = model.params.epsilon1 + model.params.epsilon2;
    let dim = N_SPIN * n_cut;
    DMatrix::from_fn(dim, dim, |i, j| {
        let (p, n) = (i / n_cut, i % n_cut);
        let (q, m) = (j / n_cut, j % n_cut);
        let mut v = model.h1_matrix_element(n, p, m, q);
        if i == j {
            v += model.h0_energy(m, q) - reference;
        }
        v
    })
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub energies: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn diagonalize(h: &FullHamiltonian) -> Spectrum {
    let eig = SymmetricEigen::new(h.matrix.clone());
    Spectrum { energies: eig.eigenvalues, vectors: eig.eigenvectors }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    AcceptorOccupancy,
    SingletProjector,
}

#[derive(Clone, Debug)]
pub struct OracleSeries {
    pub values: Vec<f64>,
    /// max over branches and times of |‖ψ(t)‖² − 1|.
    pub max_norm_defect: f64,
    /// max over branches and times of |⟨H⟩(t) − ⟨H⟩(0)| relative to ‖H‖_max.
    pub max_energy_drift: f64,
}

fn measure(obs: Observable, re: &DVector<f64>, im: &DVector<f64>, cutoff: usize) -> f64 {
    match obs {
        Observable::AcceptorOccupancy => {
            let start = basis::spin_index(basis::ACCEPTOR_PAIR, 0) * cutoff;
            let end = start + N_NUCLEAR * cutoff;
            (start..end).map(|i| re[i] * re[i] + im[i] * im[i]).sum()
        }
        Observable::SingletProjector => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let ud = basis::singly_occupied(true, false);
            let du = basis::singly_occupied(false, true);
            let mut acc = 0.0;
            for k in 0..N_NUCLEAR {
                for m in 0..cutoff {
                    let i = basis::spin_index(ud, k) * cutoff + m;
                    let j = basis::spin_index(du, k) * cutoff + m;
                    let a_re = r * (re[i] - re[j]);
                    let a_im = r * (im[i] - im[j]);
                    acc += a_re * a_re + a_im * a_im;
                }
            }
            acc
        }
    }
}

/// Exact observable for the mixed initial state ρ_v ⊗ ρ_n ⊗ |ψ⟩⟨ψ|, where
/// ψ is the singlet or the triplet rotated by `p.theta`.
///
/// Every branch (χ_j, m) is evolved by spectral decomposition; thermal
/// weights are normalized over the `cutoff` retained levels.
pub fn evolve_probability(
    p: &ModelParams,
    cutoff: usize,
    initial: InitialSpin,
    obs: Observable,
    times: &[f64],
    cap: usize,
) -> Result<OracleSeries> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTime(*t));
    }
    let h = build_full_hamiltonian(p, cutoff, cap)?;
    let spectrum = diagonalize(&h);
    let ensemble = ThermalEnsemble::with_cutoff(p, cutoff);
    let state = crate::perturbation::initial_state(initial, p.theta);
    let scale = h.matrix.amax().max(f64::MIN_POSITIVE);
    let branches: Vec<(usize, usize)> = (0..N_NUCLEAR).flat_map(|j| (0..cutoff).map(move |m| (j, m))).collect();

    let results: Vec<(Vec<f64>, f64, f64)> = branches
        .par_iter()
        .map(|&(j, m)| {
            let mut v = DVector::zeros(h.dimension());
            for (o, a) in state.amplitudes.iter().enumerate() {
                v[basis::spin_index(o, j) * cutoff + m] = *a;
            }
            let c = spectrum.vectors.tr_mul(&v);
            let e0 = (&v.transpose() * (&h.matrix * &v))[(0, 0)];
            let mut values = Vec::with_capacity(times.len());
            let mut norm_defect = 0.0f64;
            let mut drift = 0.0f64;
            for &t in times {
                let phase = spectrum.energies.map(|e| e * t / HBAR);
                let c_re = c.zip_map(&phase, |ci, ph| ci * ph.cos());
                let c_im = c.zip_map(&phase, |ci, ph| -ci * ph.sin());
                let re = &spectrum.vectors * c_re;
                let im = &spectrum.vectors * c_im;
                norm_defect = norm_defect.max((re.norm_squared() + im.norm_squared() - 1.0).abs());
                let energy = re.dot(&(&h.matrix * &re)) + im.dot(&(&h.matrix * &im));
                drift = drift.max((energy - e0).abs() / scale);
                values.push(measure(obs, &re, &im, cutoff));
            }
            (values, norm_defect, drift)
        })
        .collect();

    let values = (0..times.len())
        .map(|ti| {
            let terms: Vec<f64> = branches
                .iter()
                .zip(&results)
                .map(|(&(_, m), (vals, _, _))| 0.25 * ensemble.weights[m] * vals[ti])
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    let max_norm_defect = results.iter().fold(0.0f64, |a, r| a.max(r.1));
    let max_energy_drift = results.iter().fold(0.0f64, |a, r| a.max(r.2));
    Ok(OracleSeries { values, max_norm_defect, max_energy_drift })
}

/// Smallest |E⁰_np − E⁰_mq| over split rows q and doubly occupied rows p
/// connected by a nonzero hop, for phonon differences |n − m| < N.
pub fn smallest_coupled_gap(model: &VibronicModel) -> f64 {
    let n_cut = model.cutoff as i64;
    let mut gap = f64::INFINITY;
    for p in 16..N_SPIN {
        for q in 0..16 {
            if model.coupling(p, q).0.abs() < 1e-12 {
                continue;
            }
            for k in -(n_cut - 1)..n_cut {
                let e = model.energy_gap(0, p, 0, q) + k as f64 * model.hbar_omega;
                gap = gap.min(e.abs());
            }
        }
    }
    gap
}

/// Smallest nonzero spacing between split-row spin energies.
pub fn smallest_spin_gap(model: &VibronicModel) -> f64 {
    let e = &model.spin.energies[..16];
    let scale = e.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut gap = f64::INFINITY;
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            let d = (a - b).abs();
            if d > 1e-12 * scale {
                gap = gap.min(d);
            }
        }
    }
    gap
}

/// 2πħ / gap.
pub fn recurrence_time(gap: f64) -> f64 {
    2.0 * std::f64::consts::PI * HBAR / gap
}

/// Small instance on which the exact and perturbative results are
/// compared: published couplings with Δ = 3.3ħω, ħω/k_BT = 2, N = 4 and J
/// set to 10⁻³ of the smallest coupled gap.
pub fn small_oracle_instance() -> Result<ModelParams> {
    let base = ModelParams::paper();
    let hw = base.hbar_omega();
    let mut p = ModelParams {
        epsilon1: 3.3 * hw,
        epsilon2: 0.0,
        temperature: hw / (2.0 * K_B),
        phonon_cutoff: PhononCutoff::Fixed(4),
        theta: 0.3,
        ..base
    };
    let model = VibronicModel::new(&p)?;
    p.tunneling_j = 1e-3 * smallest_coupled_gap(&model);
    Ok(p)
}

/// |a − b| / |b| per point, with 0/0 counted as 0.
pub fn relative_errors(approx: &[f64], exact: &[f64]) -> Vec<f64> {
    approx
        .iter()
        .zip(exact)
        .map(|(a, e)| {
            let d = (a - e).abs();
            if d == 0.0 {
                0.0
            } else {
                d / e.abs()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> ModelParams {
        small_oracle_instance().unwrap()
    }

    #[test]
    fn zero_tunneling_is_diagonal_in_table_basis() {
        let p = ModelParams { tunneling_j: 0.0, phonon_cutoff: PhononCutoff::Fixed(3), ..ModelParams::paper() };
        let model = VibronicModel::new(&p).unwrap();
        let h = table_basis_hamiltonian(&model);
        let off = h.clone() - DMatrix::from_diagonal(&h.diagonal());
        assert_eq!(off.amax(), 0.0);
    }

    #[test]
    fn product_and_table_assemblies_agree() {
        let p = ModelParams { g2: 0.4e-8, theta: 0.8, ..instance() };
        let n = 4;
        let model = VibronicModel::new(&p).unwrap();
        let full = build_full_hamiltonian(&p, n, DEFAULT_DIMENSION_CAP).unwrap();
        let table = table_basis_hamiltonian(&model);
        // U maps table ⊗ phonon coordinates to product coordinates
        let dim = full.dimension();
        let u = DMatrix::from_fn(dim, dim, |i, j| {
            let (a, m) = (i / n, i % n);
            let (q, mm) = (j / n, j % n);
            if m == mm {
                model.spin.states[(a, q)]
            } else {
                0.0
            }
        });
        let rotated = u.transpose() * &full.matrix * &u;
        let diff = (rotated - table).amax();
        assert!(diff <= 1e-12 * full.matrix.amax(), "{diff:e}");
    }

    #[test]
    fn dimension_cap_enforced() {
        let err = build_full_hamiltonian(&ModelParams::paper(), 200, 4096).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { dim: 4800, cap: 4096 }));
        assert!(build_full_hamiltonian(&ModelParams::paper(), 1, 4096).is_err());
    }

    #[test]
    fn spectrum_is_real_and_complete() {
        let p = instance();
        let h = build_full_hamiltonian(&p, 4, DEFAULT_DIMENSION_CAP).unwrap();
        let s = diagonalize(&h);
        assert_eq!(s.energies.len(), 96);
        assert!(s.energies.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn singlet_projector_starts_at_zero_for_triplet() {
        let p = instance();
        let out = evolve_probability(&p, 4, InitialSpin::Triplet, Observable::SingletProjector, &[0.0, 1e-7], 4096).unwrap();
        assert!(out.values[0].abs() < 1e-28);
        assert!(out.max_norm_defect < 1e-10);
        assert!(out.max_energy_drift < 1e-10);
    }
}

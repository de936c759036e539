//! Site eigensystems, the 24-state eigensystem of H̃_s, prepared electron
//! spin states and the inclination rotation.
//!
//! A site state lives on the electron ⊗ nucleus space with index
//! `2·e + n` (bit 1 = ↑): |↓↓⟩, |↓↑⟩, |↑↓⟩, |↑↑⟩.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};

use crate::basis::{self, spin_index, ACCEPTOR_PAIR, DONOR_PAIR, N_NUCLEAR, N_ORBITAL, N_SPIN};
use crate::error::{Error, Result};
use crate::fermion::{self, Axis, AXES};
use crate::params::ModelParams;
use crate::units::MU_B;

/// Residual tolerance for eigenpairs, relative to the largest |energy|.
pub const EIGEN_TOL: f64 = 1e-12;

/// Mixing angle θ = atan2(2g, μ_B B₀).
pub fn mixing_angle(g: f64, b0: f64) -> f64 {
    (2.0 * g).atan2(MU_B * b0)
}

/// H̃_s^{(j)} = −μ_B B₀ S_z − g Î·Ŝ on one electron-nucleus pair.
pub fn site_hamiltonian(g: f64, b0: f64) -> Matrix4<f64> {
    // Pauli matrices in the (↓, ↑) order with σ_y = i·M
    let pauli = |axis: Axis| -> nalgebra::Matrix2<f64> {
        match axis {
            Axis::X => nalgebra::Matrix2::new(0.0, 1.0, 1.0, 0.0),
            Axis::Y => nalgebra::Matrix2::new(0.0, 1.0, -1.0, 0.0),
            Axis::Z => nalgebra::Matrix2::new(-1.0, 0.0, 0.0, 1.0),
        }
    };
    let id = nalgebra::Matrix2::identity();
    let b = MU_B * b0;
    let mut h = -pauli(Axis::Z).kronecker(&id) * b;
    for axis in AXES {
        let sign = if axis == Axis::Y { -1.0 } else { 1.0 };
        h -= pauli(axis).kronecker(&pauli(axis)) * (g * sign);
    }
    Matrix4::from_iterator(h.iter().copied())
}

#[derive(Clone, Debug)]
pub struct SiteEigensystem {
    pub theta: f64,
    pub energies: [f64; 4],
    /// `states[k]` is |e_{k+1}⟩ in the site basis.
    pub states: [[f64; 4]; 4],
}

impl SiteEigensystem {
    /// Closed-form eigenpairs without the numerical cross-check.
    pub fn closed_form(g: f64, b0: f64) -> Self {
        let theta = mixing_angle(g, b0);
        let b = MU_B * b0;
        let r = (b * b + 4.0 * g * g).sqrt();
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        Self {
            theta,
            energies: [b - g, g + r, g - r, -b - g],
            states: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, c, -s, 0.0],
                [0.0, s, c, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.energies.iter().fold(0.0f64, |a, e| a.max(e.abs()))
    }
}

/// Relative residual scale: `max|E|`, or 1 when all energies vanish.
fn residual_scale(max_abs: f64) -> f64 {
    if max_abs > 0.0 {
        max_abs
    } else {
        1.0
    }
}

/// Eigensystem of electron-nucleus pair `j` (1 or 2), checked against a
/// direct numerical diagonalization of [`site_hamiltonian`].
pub fn site_eigensystem(j: usize, p: &ModelParams) -> Result<SiteEigensystem> {
    let g = match j {
        1 => p.g1,
        2 => p.g2,
        _ => return Err(Error::InvalidSpec(format!("site index must be 1 or 2, got {j}"))),
    };
    let sys = SiteEigensystem::closed_form(g, p.b0);
    let h = site_hamiltonian(g, p.b0);
    let scale = residual_scale(sys.max_abs_energy());
    for (k, (e, v)) in sys.energies.iter().zip(&sys.states).enumerate() {
        let v = nalgebra::Vector4::from_column_slice(v);
        let res = (h * v - v * *e).norm() / scale;
        if res > EIGEN_TOL {
            return Err(Error::EigensystemMismatch(format!(
                "site {j} state {} residual {res:e}",
                k + 1
            )));
        }
    }
    let mut numeric: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    let mut closed = sys.energies.to_vec();
    numeric.sort_by(f64::total_cmp);
    closed.sort_by(f64::total_cmp);
    for (a, b) in numeric.iter().zip(&closed) {
        if (a - b).abs() / scale > EIGEN_TOL {
            return Err(Error::EigensystemMismatch(format!(
                "site {j} spectrum {numeric:?} vs closed form {closed:?}"
            )));
        }
    }
    Ok(sys)
}

/// The 24 eigenstates of H̃_s in table order.
///
/// Rows 1–16 (`q = 4(a−1) + b`) are |e_a^{(1)}⟩ ⊗ |e_b^{(2)}⟩; rows 17–20
/// are both electrons on site 1 with nuclear state χ_k, rows 21–24 both on
/// site 2.
#[derive(Clone, Debug)]
pub struct SpinEigensystem {
    pub site1: SiteEigensystem,
    pub site2: SiteEigensystem,
    pub energies: [f64; N_SPIN],
    /// Columns are the states on the 24-dimensional orbital ⊗ nuclear space.
    pub states: DMatrix<f64>,
}

impl SpinEigensystem {
    pub fn state(&self, q: usize) -> DVector<f64> {
        self.states.column(q).into_owned()
    }

    /// Coefficients ⟨φ_q|ψ⟩ for all rows.
    pub fn expand(&self, psi: &DVector<f64>) -> DVector<f64> {
        self.states.tr_mul(psi)
    }
}

fn product_state(e1: &[f64; 4], e2: &[f64; 4]) -> DVector<f64> {
    let mut v = DVector::zeros(N_SPIN);
    for (i1, a1) in e1.iter().enumerate() {
        for (i2, a2) in e2.iter().enumerate() {
            let amp = a1 * a2;
            if amp == 0.0 {
                continue;
            }
            let (s1, n1) = (i1 >> 1, i1 & 1);
            let (s2, n2) = (i2 >> 1, i2 & 1);
            let orbital = basis::singly_occupied(s1 == 1, s2 == 1);
            v[spin_index(orbital, (n1 << 1) | n2)] += amp;
        }
    }
    v
}

/// Table-ordered eigensystem from the closed-form site eigensystems.
pub fn table1_eigensystem(p: &ModelParams) -> SpinEigensystem {
    let site1 = SiteEigensystem::closed_form(p.g1, p.b0);
    let site2 = SiteEigensystem::closed_form(p.g2, p.b0);
    let mut states = DMatrix::zeros(N_SPIN, N_SPIN);
    let mut energies = [0.0; N_SPIN];
    for a in 0..4 {
        for b in 0..4 {
            let q = 4 * a + b;
            states.set_column(q, &product_state(&site1.states[a], &site2.states[b]));
            energies[q] = site1.energies[a] + site2.energies[b];
        }
    }
    for (offset, orbital) in [(16, DONOR_PAIR), (20, ACCEPTOR_PAIR)] {
        for k in 0..N_NUCLEAR {
            states[(spin_index(orbital, k), offset + k)] = 1.0;
        }
    }
    SpinEigensystem { site1, site2, energies, states }
}

/// Which electron-spin state is prepared.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpinLabel {
    Singlet,
    Triplet,
    RotatedTriplet(f64),
}

/// Normalized amplitudes on the six orbital configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedSpinState {
    pub label: SpinLabel,
    pub amplitudes: [f64; N_ORBITAL],
}

impl PreparedSpinState {
    pub fn new(label: SpinLabel) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut amplitudes = [0.0; N_ORBITAL];
        let ud = basis::singly_occupied(true, false);
        let du = basis::singly_occupied(false, true);
        match label {
            SpinLabel::Singlet => {
                amplitudes[ud] = r;
                amplitudes[du] = -r;
            }
            SpinLabel::Triplet => {
                amplitudes[ud] = r;
                amplitudes[du] = r;
            }
            SpinLabel::RotatedTriplet(theta) => {
                let t = PreparedSpinState::new(SpinLabel::Triplet);
                amplitudes = rotate_y(&t.amplitudes, theta);
            }
        }
        Self { label, amplitudes }
    }

    pub fn singlet() -> Self {
        Self::new(SpinLabel::Singlet)
    }

    pub fn rotated_triplet(theta: f64) -> Self {
        Self::new(SpinLabel::RotatedTriplet(theta))
    }

    /// |state⟩ ⊗ |χ_k⟩ on the 24-dimensional space.
    pub fn with_nuclear(&self, k: usize) -> DVector<f64> {
        let mut v = DVector::zeros(N_SPIN);
        for (o, a) in self.amplitudes.iter().enumerate() {
            v[spin_index(o, k)] = *a;
        }
        v
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// exp(+iΘσ_y/2) in the (↑, ↓) order: [[c, s], [−s, c]].
fn rotation_up_down(theta: f64) -> [[f64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[c, s], [-s, c]]
}

/// Rotates each electron spin about y by Θ.
///
/// Singly occupied configurations transform as a product of two spin-½
/// rotations; the doubly occupied configurations are site singlets and are
/// left unchanged. With this sense of rotation
/// |t⟩ ↦ cosΘ|t⟩ + sinΘ(|↑↑⟩ − |↓↓⟩)/√2.
pub fn rotate_y(state: &[f64; N_ORBITAL], theta: f64) -> [f64; N_ORBITAL] {
    let r = rotation_up_down(theta);
    let mut out = *state;
    for o in 1..=4 {
        out[o] = 0.0;
    }
    for (i1, up1) in [(0, true), (1, false)] {
        for (i2, up2) in [(0, true), (1, false)] {
            let target = basis::singly_occupied(up1, up2);
            for (j1, src1) in [(0, true), (1, false)] {
                for (j2, src2) in [(0, true), (1, false)] {
                    let source = basis::singly_occupied(src1, src2);
                    out[target] += r[i1][j1] * r[i2][j2] * state[source];
                }
            }
        }
    }
    out
}

/// Rotates electron and nuclear spins together on the 24-dimensional space.
pub fn rotate_y_full(state: &DVector<f64>, theta: f64) -> DVector<f64> {
    let r = rotation_up_down(theta);
    // nuclear basis bit 1 = ↑ maps to row 0 of the (↑, ↓) rotation
    let rn = |out: usize, inp: usize| r[1 - out][1 - inp];
    let mut out = DVector::zeros(N_SPIN);
    for o_in in 0..N_ORBITAL {
        let mut column = [0.0; N_ORBITAL];
        column[o_in] = 1.0;
        let rotated = rotate_y(&column, theta);
        for k_in in 0..N_NUCLEAR {
            let a = state[spin_index(o_in, k_in)];
            if a == 0.0 {
                continue;
            }
            for (o_out, ro) in rotated.iter().enumerate() {
                if *ro == 0.0 {
                    continue;
                }
                for k_out in 0..N_NUCLEAR {
                    let f = rn(k_out >> 1, k_in >> 1) * rn(k_out & 1, k_in & 1);
                    out[spin_index(o_out, k_out)] += ro * f * a;
                }
            }
        }
    }
    out
}

/// Residual report of the table eigensystem against H̃_s built from
/// operator products.
#[derive(Clone, Debug)]
pub struct EigenResiduals {
    /// ‖H̃_s|φ_q⟩ − E_q|φ_q⟩‖ / max|E|, per row.
    pub residuals: [f64; N_SPIN],
    /// max |⟨φ_p|φ_q⟩ − δ_pq|.
    pub orthonormality_defect: f64,
    pub scale: f64,
}

impl EigenResiduals {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |a, &r| a.max(r))
    }
}

pub fn eigen_residuals(sys: &SpinEigensystem, p: &ModelParams) -> EigenResiduals {
    let h = fermion::spin_hamiltonian(p.b0, p.g1, p.g2);
    let scale = residual_scale(sys.energies.iter().fold(0.0f64, |a, e| a.max(e.abs())));
    let mut residuals = [0.0; N_SPIN];
    for (q, r) in residuals.iter_mut().enumerate() {
        let v = sys.state(q);
        *r = (&h * &v - &v * sys.energies[q]).norm() / scale;
    }
    let gram = sys.states.tr_mul(&sys.states);
    let defect = (gram - DMatrix::<f64>::identity(N_SPIN, N_SPIN)).amax();
    EigenResiduals { residuals, orthonormality_defect: defect, scale }
}

//! Second-quantized operators on the four fermion modes, projected onto
//! the six two-electron configurations of [`crate::basis`], plus Pauli
//! operators on the two nuclear spins.
//!
//! The Fock space uses occupation bit masks with Jordan-Wigner signs
//! `(-1)^{#occupied modes below k}`. With this ordering every configuration
//! c†_a c†_b|0⟩ (a < b) is the bare occupation vector with sign +1.
//!
//! σ_y is purely imaginary in a real basis, so y components are returned as
//! the real matrix `M` with σ_y = i·M.

use nalgebra::{DMatrix, Matrix4, Matrix6, SMatrix};

use crate::basis::{self, mode, mode_mask, N_NUCLEAR, N_ORBITAL, N_SPIN};
use crate::units::MU_B;

pub type FockMatrix = SMatrix<f64, 16, 16>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

pub const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Annihilation operator c_k on the 16-dimensional Fock space.
pub fn annihilation(k: usize) -> FockMatrix {
    let mut c = FockMatrix::zeros();
    for s in 0..16usize {
        if s & (1 << k) == 0 {
            continue;
        }
        let below = (s & ((1 << k) - 1)).count_ones();
        let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
        c[(s ^ (1 << k), s)] = sign;
    }
    c
}

pub fn creation(k: usize) -> FockMatrix {
    annihilation(k).transpose()
}

/// Restriction of a Fock-space operator to the two-electron configurations.
pub fn project(op: &FockMatrix) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| op[(mode_mask(i) as usize, mode_mask(j) as usize)])
}

/// c†_x c_y on the two-electron sector.
pub fn one_body(x: usize, y: usize) -> Matrix6<f64> {
    project(&(creation(x) * annihilation(y)))
}

/// Pauli matrix in the (↑, ↓) order, as a real matrix (σ_y = i·M).
fn pauli_up_down(axis: Axis) -> [[f64; 2]; 2] {
    match axis {
        Axis::X => [[0.0, 1.0], [1.0, 0.0]],
        Axis::Y => [[0.0, -1.0], [1.0, 0.0]],
        Axis::Z => [[1.0, 0.0], [0.0, -1.0]],
    }
}

/// Electron spin Σ_{σσ'} c†_{site σ} (σ_axis)_{σσ'} c_{site σ'} on the
/// two-electron sector. It vanishes on a doubly occupied site.
pub fn electron_spin(site: usize, axis: Axis) -> Matrix6<f64> {
    let s = pauli_up_down(axis);
    let mut out = Matrix6::zeros();
    for (a, up_a) in [(0, true), (1, false)] {
        for (b, up_b) in [(0, true), (1, false)] {
            if s[a][b] != 0.0 {
                out += one_body(mode(site, up_a), mode(site, up_b)) * s[a][b];
            }
        }
    }
    out
}

/// Pauli operator of nucleus `site` on the 4-dimensional nuclear space with
/// index `(n1 << 1) | n2`, 1 = ↑.
pub fn nuclear_pauli(site: usize, axis: Axis) -> Matrix4<f64> {
    let s = pauli_up_down(axis);
    // basis bit 1 = ↑ corresponds to row 0 of the (↑, ↓) Pauli matrix
    let elem = |bit_out: usize, bit_in: usize| s[1 - bit_out][1 - bit_in];
    let shift = if site == 0 { 1 } else { 0 };
    Matrix4::from_fn(|i, j| {
        let other = 1 << (1 - shift);
        if (i & other) != (j & other) {
            return 0.0;
        }
        elem((i >> shift) & 1, (j >> shift) & 1)
    })
}

/// Σ_α c†_{2α} c_{1α}: moves one electron from site 1 to site 2.
pub fn hop_1_to_2() -> Matrix6<f64> {
    one_body(mode(1, true), mode(0, true)) + one_body(mode(1, false), mode(0, false))
}

/// Σ_α c†_{1α} c_{2α}.
pub fn hop_2_to_1() -> Matrix6<f64> {
    one_body(mode(0, true), mode(1, true)) + one_body(mode(0, false), mode(1, false))
}

fn kron6x4(a: &Matrix6<f64>, b: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(N_SPIN, N_SPIN, |i, j| {
        a[(i / N_NUCLEAR, j / N_NUCLEAR)] * b[(i % N_NUCLEAR, j % N_NUCLEAR)]
    })
}

/// Lifts an orbital operator to the 24-dimensional orbital ⊗ nuclear space.
pub fn lift_orbital(a: &Matrix6<f64>) -> DMatrix<f64> {
    kron6x4(a, &Matrix4::identity())
}

/// Transformed spin Hamiltonian
/// H̃_s = Σ_j [−μ_B B₀ S_z^{(j)} − g_j Î_j·Ŝ_j]
/// built from operator products on the 24-dimensional space.
pub fn spin_hamiltonian(b0: f64, g1: f64, g2: f64) -> DMatrix<f64> {
    let b = MU_B * b0;
    let mut h = DMatrix::zeros(N_SPIN, N_SPIN);
    for (site, g) in [(0, g1), (1, g2)] {
        h -= lift_orbital(&electron_spin(site, Axis::Z)) * b;
        for axis in AXES {
            let term = kron6x4(&electron_spin(site, axis), &nuclear_pauli(site, axis));
            // (i·M) ⊗ (i·N) = −M ⊗ N
            let sign = if axis == Axis::Y { -1.0 } else { 1.0 };
            h -= term * (g * sign);
        }
    }
    h
}

/// Orbital energy of each configuration including the polaron shift:
/// Σ_j ε_j n_j − ħω(φ n₁ − φ n₂)².
pub fn orbital_energies(epsilon1: f64, epsilon2: f64, phi: f64, hbar_omega: f64) -> [f64; N_ORBITAL] {
    let mut out = [0.0; N_ORBITAL];
    for (o, e) in out.iter_mut().enumerate() {
        let [n1, n2] = basis::occupation(o);
        let (n1, n2) = (n1 as f64, n2 as f64);
        let shift = phi * n1 - phi * n2;
        *e = epsilon1 * n1 + epsilon2 * n2 - hbar_omega * shift * shift;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{singly_occupied, ACCEPTOR_PAIR, DONOR_PAIR};
    use approx::assert_abs_diff_eq;

    #[test]
    fn canonical_anticommutation() {
        for k in 0..4 {
            for l in 0..4 {
                let ac = annihilation(k) * creation(l) + creation(l) * annihilation(k);
                let expected = if k == l { FockMatrix::identity() } else { FockMatrix::zeros() };
                assert_eq!(ac, expected);
                let cc = annihilation(k) * annihilation(l) + annihilation(l) * annihilation(k);
                assert_eq!(cc, FockMatrix::zeros());
            }
        }
    }

    #[test]
    fn configurations_are_positive_occupation_vectors() {
        for (o, &(a, b)) in basis::MODE_PAIRS.iter().enumerate() {
            let mut vac = SMatrix::<f64, 16, 1>::zeros();
            vac[0] = 1.0;
            let state = creation(a) * creation(b) * vac;
            assert_eq!(state[mode_mask(o) as usize], 1.0);
            assert_eq!(state.sum(), 1.0);
        }
    }

    #[test]
    fn spin_vanishes_on_doubly_occupied_site() {
        for axis in AXES {
            let s1 = electron_spin(0, axis);
            let s2 = electron_spin(1, axis);
            for k in 0..6 {
                assert_eq!(s1[(k, DONOR_PAIR)], 0.0);
                assert_eq!(s1[(DONOR_PAIR, k)], 0.0);
                assert_eq!(s2[(k, ACCEPTOR_PAIR)], 0.0);
            }
        }
    }

    #[test]
    fn spin_algebra() {
        // σ_x σ_y = i σ_z becomes X·M = Z on the singly occupied block
        let x = electron_spin(0, Axis::X);
        let m = electron_spin(0, Axis::Y);
        let z = electron_spin(0, Axis::Z);
        let single = |a: Matrix6<f64>| a.fixed_view::<4, 4>(1, 1).into_owned();
        assert_abs_diff_eq!(single(x * m), single(z), epsilon = 1e-15);
        let up = singly_occupied(true, false);
        let down = singly_occupied(false, false);
        assert_eq!(z[(up, up)], 1.0);
        assert_eq!(z[(down, down)], -1.0);
        assert_eq!(x[(up, down)], 1.0);
    }

    #[test]
    fn nuclear_pauli_layout() {
        // χ3 = ↑↓ has nucleus 1 up
        assert_eq!(nuclear_pauli(0, Axis::Z)[(2, 2)], 1.0);
        assert_eq!(nuclear_pauli(1, Axis::Z)[(2, 2)], -1.0);
        // σ_x on nucleus 2 flips χ1 ↔ χ2
        assert_eq!(nuclear_pauli(1, Axis::X)[(1, 0)], 1.0);
        assert_eq!(nuclear_pauli(0, Axis::X)[(2, 0)], 1.0);
        for site in 0..2 {
            let x = nuclear_pauli(site, Axis::X);
            let m = nuclear_pauli(site, Axis::Y);
            assert_abs_diff_eq!(x * m, nuclear_pauli(site, Axis::Z), epsilon = 1e-15);
        }
    }

    #[test]
    fn hopping_maps_singlet_to_pairs() {
        let h = hop_1_to_2();
        let s = 1.0 / 2f64.sqrt();
        let mut singlet = nalgebra::Vector6::zeros();
        singlet[singly_occupied(true, false)] = s;
        singlet[singly_occupied(false, true)] = -s;
        let mut triplet = singlet;
        triplet[singly_occupied(false, true)] = s;
        let out = h * singlet;
        assert_abs_diff_eq!(out[ACCEPTOR_PAIR], 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!((h * triplet).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(hop_2_to_1(), h.transpose());
    }

    #[test]
    fn spin_hamiltonian_is_symmetric_and_traceless() {
        let h = spin_hamiltonian(50e-6, 1e-8, 0.7e-8);
        assert_abs_diff_eq!(h.clone(), h.transpose(), epsilon = 0.0);
        assert_abs_diff_eq!(h.trace(), 0.0, epsilon = 1e-22);
    }

    #[test]
    fn orbital_energy_sectors() {
        let hw = 6.582119569e-9;
        let e = orbital_energies(0.01, 0.0, 0.2, hw);
        assert_eq!(e[1], 0.01);
        assert_abs_diff_eq!(e[DONOR_PAIR], 0.02 - 4.0 * 0.04 * hw, epsilon = 1e-18);
        assert_abs_diff_eq!(e[ACCEPTOR_PAIR], -4.0 * 0.04 * hw, epsilon = 1e-18);
    }
}

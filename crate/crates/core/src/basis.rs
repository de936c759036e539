//! Composite basis labels and their flattened indices.
//!
//! Fermion modes are ordered (1↑, 1↓, 2↑, 2↓) = 0..4 and a two-electron
//! configuration is c†_a c†_b|0⟩ with a < b. The six configurations are
//! numbered in lexicographic order of (a, b):
//!
//! | index | modes | content            |
//! |-------|-------|--------------------|
//! | 0     | (0,1) | both on site 1     |
//! | 1     | (0,2) | 1↑ 2↑              |
//! | 2     | (0,3) | 1↑ 2↓              |
//! | 3     | (1,2) | 1↓ 2↑              |
//! | 4     | (1,3) | 1↓ 2↓              |
//! | 5     | (2,3) | both on site 2     |
//!
//! Nuclear configurations χ₁..χ₄ = ↓↓, ↓↑, ↑↓, ↑↑ use index
//! `(n1 << 1) | n2` with 1 = ↑.

use crate::error::{Error, Result};

pub const N_MODES: usize = 4;
pub const N_ORBITAL: usize = 6;
pub const N_NUCLEAR: usize = 4;
/// Orbital ⊗ nuclear dimension.
pub const N_SPIN: usize = N_ORBITAL * N_NUCLEAR;

pub const MODE_PAIRS: [(usize, usize); N_ORBITAL] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub const DONOR_PAIR: usize = 0;
pub const ACCEPTOR_PAIR: usize = 5;

/// Fermion mode for `site` (0 or 1) and spin (`true` = ↑).
#[inline]
pub fn mode(site: usize, up: bool) -> usize {
    2 * site + usize::from(!up)
}

/// Orbital configuration with one electron per site and the given spins.
#[inline]
pub fn singly_occupied(up1: bool, up2: bool) -> usize {
    match (up1, up2) {
        (true, true) => 1,
        (true, false) => 2,
        (false, true) => 3,
        (false, false) => 4,
    }
}

/// Number of electrons on site 1 and site 2 in an orbital configuration.
pub fn occupation(orbital: usize) -> [u32; 2] {
    let (a, b) = MODE_PAIRS[orbital];
    let mut occ = [0; 2];
    occ[a / 2] += 1;
    occ[b / 2] += 1;
    occ
}

/// Occupation bit mask of an orbital configuration, bit k = mode k.
#[inline]
pub fn mode_mask(orbital: usize) -> u8 {
    let (a, b) = MODE_PAIRS[orbital];
    (1 << a) | (1 << b)
}

pub fn orbital_from_mask(mask: u8) -> Option<usize> {
    (0..N_ORBITAL).find(|&o| mode_mask(o) == mask)
}

/// Spin-sector index `orbital·4 + nuclear` in the 24-dimensional space.
#[inline]
pub fn spin_index(orbital: usize, nuclear: usize) -> usize {
    orbital * N_NUCLEAR + nuclear
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub orbital: usize,
    pub nuclear: usize,
    pub phonon: usize,
}

impl BasisState {
    pub fn new(orbital: usize, nuclear: usize, phonon: usize, cutoff: usize) -> Result<Self> {
        if orbital >= N_ORBITAL || nuclear >= N_NUCLEAR || phonon >= cutoff {
            return Err(Error::InvalidSpec(format!(
                "basis label ({orbital}, {nuclear}, {phonon}) out of range for cutoff {cutoff}"
            )));
        }
        Ok(Self { orbital, nuclear, phonon })
    }

    #[inline]
    pub fn flatten(&self, cutoff: usize) -> usize {
        spin_index(self.orbital, self.nuclear) * cutoff + self.phonon
    }

    #[inline]
    pub fn unflatten(index: usize, cutoff: usize) -> Self {
        let spin = index / cutoff;
        Self {
            orbital: spin / N_NUCLEAR,
            nuclear: spin % N_NUCLEAR,
            phonon: index % cutoff,
        }
    }
}

pub fn dimension(cutoff: usize) -> usize {
    N_SPIN * cutoff
}

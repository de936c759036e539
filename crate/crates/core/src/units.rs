//! Fixed unit system: energies in eV, times in seconds, fields in tesla,
//! temperatures in kelvin.

/// Reduced Planck constant, eV·s.
pub const HBAR: f64 = 6.582119569e-16;

/// Boltzmann constant, eV/K.
pub const K_B: f64 = 8.617333262e-5;

/// Bohr magneton, eV/T.
pub const MU_B: f64 = 5.788381806e-5;

/// Energy quantum of an angular frequency (rad/s), in eV.
#[inline]
pub fn angular_frequency_to_ev(omega: f64) -> f64 {
    HBAR * omega
}

/// Angular frequency (rad/s) of an energy in eV.
#[inline]
pub fn ev_to_angular_frequency(energy: f64) -> f64 {
    energy / HBAR
}

/// Inverse thermal energy 1/(k_B T), 1/eV.
#[inline]
pub fn beta(temperature: f64) -> f64 {
    1.0 / (K_B * temperature)
}

/// Zeeman energy μ_B B₀ in eV.
#[inline]
pub fn zeeman_energy(b0: f64) -> f64 {
    MU_B * b0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn frequency_round_trip(omega in 1.0e-3f64..1.0e16) {
            let back = ev_to_angular_frequency(angular_frequency_to_ev(omega));
            prop_assert!((back - omega).abs() <= 2.0 * f64::EPSILON * omega);
        }
    }

    #[test]
    fn paper_field_zeeman_energy() {
        assert!((zeeman_energy(50e-6) - 2.894190903e-9).abs() < 1e-18);
    }
}

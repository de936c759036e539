//! Model parameters, validation, thermal weights and config ingestion.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;
use crate::units::{self, HBAR};

/// Default hard maximum for the automatic phonon cutoff.
pub const DEFAULT_MAX_CUTOFF: usize = 512;

/// Tail mass left out by the automatic cutoff.
pub const AUTO_TAIL_MASS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhononCutoff {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub tunneling_j: f64,
    /// Angular frequency of the relative vibration, rad/s.
    pub omega: f64,
    pub phi: f64,
    pub b0: f64,
    pub theta: f64,
    pub g1: f64,
    pub g2: f64,
    pub temperature: f64,
    pub phonon_cutoff: PhononCutoff,
    pub broadening_eta: f64,
    /// Hard cap applied when `phonon_cutoff` is `Auto`.
    pub max_cutoff: usize,
    /// Set by [`validate_params`] when the automatic cutoff hit `max_cutoff`.
    pub cutoff_capped: bool,
}

impl ModelParams {
    /// Parameter set of the published figures: Δ = 0.01 eV, J = 0.01Δ,
    /// ω = 10⁷ rad/s, φ = 0.2, B₀ = 50 µT, g₁ = g₂ = 10⁻⁸ eV, T = 10 mK.
    pub fn paper() -> Self {
        let omega = 1e7;
        Self {
            epsilon1: 0.01,
            epsilon2: 0.0,
            tunneling_j: 1e-4,
            omega,
            phi: 0.2,
            b0: 50e-6,
            theta: 0.0,
            g1: 1e-8,
            g2: 1e-8,
            temperature: 0.01,
            phonon_cutoff: PhononCutoff::Auto,
            broadening_eta: default_broadening(omega),
            max_cutoff: DEFAULT_MAX_CUTOFF,
            cutoff_capped: false,
        }
    }

    /// Orbital energy difference Δ = ε₁ − ε₂.
    pub fn delta(&self) -> f64 {
        self.epsilon1 - self.epsilon2
    }

    pub fn hbar_omega(&self) -> f64 {
        units::angular_frequency_to_ev(self.omega)
    }

    pub fn beta(&self) -> f64 {
        units::beta(self.temperature)
    }

    /// ħω/(k_B T).
    pub fn reduced_quantum(&self) -> f64 {
        self.hbar_omega() * self.beta()
    }

    /// Z = 1/[1 − exp(−ħω/k_B T)].
    pub fn partition_function(&self) -> f64 {
        -1.0 / (-self.reduced_quantum()).exp_m1()
    }

    /// Resolved phonon cutoff. `Auto` is evaluated on the fly; parameters
    /// returned by [`validate_params`] always carry a `Fixed` value.
    pub fn cutoff(&self) -> usize {
        match self.phonon_cutoff {
            PhononCutoff::Fixed(n) => n,
            PhononCutoff::Auto => auto_cutoff(self.reduced_quantum(), self.max_cutoff).0,
        }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..self.clone() }
    }

    /// Reads a JSON config file; see [`ModelParams::from_json_str`].
    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Parses a flat JSON object. Recognized keys: `epsilon1_ev`,
    /// `epsilon2_ev`, `J_ev`, `omega_rad_per_s`, `phi`, `B0_tesla`,
    /// `theta_rad`, `g1_ev`, `g2_ev`, `temperature_K`, `phonon_cutoff`
    /// (`"auto"` or an integer) and `broadening_eta_ev`. Missing keys take
    /// the [`ModelParams::paper`] values; unknown keys are rejected. The
    /// result is not validated.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ConfigFile = serde_json::from_str(text)?;
        let mut p = Self::paper();
        macro_rules! take {
            ($field:ident, $key:ident) => {
                if let Some(v) = cfg.$key {
                    p.$field = v;
                }
            };
        }
        take!(epsilon1, epsilon1_ev);
        take!(epsilon2, epsilon2_ev);
        take!(tunneling_j, j_ev);
        take!(phi, phi);
        take!(b0, b0_tesla);
        take!(theta, theta_rad);
        take!(g1, g1_ev);
        take!(g2, g2_ev);
        take!(temperature, temperature_k);
        if let Some(omega) = cfg.omega_rad_per_s {
            p.omega = omega;
            p.broadening_eta = default_broadening(omega);
        }
        take!(broadening_eta, broadening_eta_ev);
        if let Some(cut) = cfg.phonon_cutoff {
            p.phonon_cutoff = parse_cutoff(&cut)?;
        }
        Ok(p)
    }

    /// Config-file representation, with the cutoff as stored.
    pub fn to_json_value(&self) -> Value {
        let cutoff = match self.phonon_cutoff {
            PhononCutoff::Auto => Value::from("auto"),
            PhononCutoff::Fixed(n) => Value::from(n),
        };
        serde_json::json!({
            "epsilon1_ev": self.epsilon1,
            "epsilon2_ev": self.epsilon2,
            "J_ev": self.tunneling_j,
            "omega_rad_per_s": self.omega,
            "phi": self.phi,
            "B0_tesla": self.b0,
            "theta_rad": self.theta,
            "g1_ev": self.g1,
            "g2_ev": self.g2,
            "temperature_K": self.temperature,
            "phonon_cutoff": cutoff,
            "broadening_eta_ev": self.broadening_eta,
        })
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::paper()
    }
}

/// ħω·10⁻².
pub fn default_broadening(omega: f64) -> f64 {
    HBAR * omega * 1e-2
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    epsilon1_ev: Option<f64>,
    epsilon2_ev: Option<f64>,
    #[serde(rename = "J_ev")]
    j_ev: Option<f64>,
    omega_rad_per_s: Option<f64>,
    phi: Option<f64>,
    #[serde(rename = "B0_tesla")]
    b0_tesla: Option<f64>,
    theta_rad: Option<f64>,
    g1_ev: Option<f64>,
    g2_ev: Option<f64>,
    #[serde(rename = "temperature_K")]
    temperature_k: Option<f64>,
    phonon_cutoff: Option<Value>,
    broadening_eta_ev: Option<f64>,
}

fn parse_cutoff(v: &Value) -> Result<PhononCutoff> {
    match v {
        Value::String(s) if s == "auto" => Ok(PhononCutoff::Auto),
        Value::Number(n) => n
            .as_u64()
            .map(|n| PhononCutoff::Fixed(n as usize))
            .ok_or_else(|| Error::Config(format!("phonon_cutoff must be a non-negative integer, got {n}"))),
        other => Err(Error::Config(format!(
            "phonon_cutoff must be \"auto\" or an integer, got {other}"
        ))),
    }
}

/// Smallest `M` whose retained Boltzmann mass `1 − e^{−Mx}` reaches
/// `1 − 10⁻⁸`, with `x = ħω/k_B T`, capped at `max`. The flag reports
/// whether the cap was binding.
pub fn auto_cutoff(x: f64, max: usize) -> (usize, bool) {
    let target = -AUTO_TAIL_MASS.ln();
    let mut m = (target / x).ceil();
    if !m.is_finite() || m > max as f64 {
        return (max, true);
    }
    m = m.max(1.0);
    let mut m = m as usize;
    // correct for rounding in the quotient
    while m > 1 && ((m - 1) as f64) * x >= target {
        m -= 1;
    }
    while (m as f64) * x < target {
        m += 1;
    }
    if m > max {
        (max, true)
    } else {
        (m, false)
    }
}

/// Checks every invariant in a fixed order and returns the parameters with
/// the cutoff canonicalized to `Fixed`. The first violation is reported by
/// parameter name.
pub fn validate_params(p: ModelParams) -> Result<ModelParams> {
    fn bad(name: &'static str, requirement: &'static str) -> Error {
        Error::InvalidParam { name, requirement }
    }
    let finite = [
        ("epsilon1", p.epsilon1),
        ("epsilon2", p.epsilon2),
        ("tunneling_J", p.tunneling_j),
        ("omega", p.omega),
        ("phi", p.phi),
        ("B0", p.b0),
        ("theta", p.theta),
        ("g1", p.g1),
        ("g2", p.g2),
        ("temperature", p.temperature),
        ("broadening_eta", p.broadening_eta),
    ];
    for (name, v) in finite {
        if !v.is_finite() {
            return Err(bad(name, "finite"));
        }
    }
    if p.omega <= 0.0 {
        return Err(bad("omega", "positive"));
    }
    if p.b0 < 0.0 {
        return Err(bad("B0", "non-negative"));
    }
    if p.temperature <= 0.0 {
        return Err(bad("temperature", "positive"));
    }
    if !(0.0..=std::f64::consts::PI).contains(&p.theta) {
        return Err(bad("theta", "in [0, pi]"));
    }
    if p.broadening_eta <= 0.0 {
        return Err(bad("broadening_eta", "positive"));
    }
    if p.max_cutoff < 1 {
        return Err(bad("max_cutoff", "at least 1"));
    }
    let mut p = p;
    match p.phonon_cutoff {
        PhononCutoff::Fixed(n) if n < 1 => return Err(bad("phonon_cutoff", "at least 1")),
        PhononCutoff::Fixed(_) => {}
        PhononCutoff::Auto => {
            let (n, capped) = auto_cutoff(p.reduced_quantum(), p.max_cutoff);
            p.phonon_cutoff = PhononCutoff::Fixed(n);
            p.cutoff_capped = capped;
        }
    }
    Ok(p)
}

/// Boltzmann weight e^{−βmħω}/Z of phonon level `m`.
pub fn thermal_weight(m: usize, p: &ModelParams) -> f64 {
    let x = p.reduced_quantum();
    (-(m as f64) * x).exp() * -(-x).exp_m1()
}

/// Thermal phonon distribution restricted to the retained levels.
///
/// Weights are renormalized over `0..cutoff`; `retained_mass` is the
/// untruncated probability carried by those levels.
#[derive(Clone, Debug)]
pub struct ThermalEnsemble {
    pub weights: Vec<f64>,
    pub retained_mass: f64,
}

impl ThermalEnsemble {
    pub fn new(p: &ModelParams) -> Self {
        Self::with_cutoff(p, p.cutoff())
    }

    pub fn with_cutoff(p: &ModelParams, cutoff: usize) -> Self {
        let raw: Vec<f64> = (0..cutoff).map(|m| thermal_weight(m, p)).collect();
        let x = p.reduced_quantum();
        let retained_mass = -(-(cutoff as f64) * x).exp_m1();
        let weights = raw.iter().map(|w| w / retained_mass).collect();
        Self { weights, retained_mass }
    }

    pub fn tail_mass(&self) -> f64 {
        1.0 - self.retained_mass
    }

    /// Weighted pairwise sum of per-level values.
    pub fn average(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self.weights.iter().zip(values).map(|(w, v)| w * v).collect();
        pairwise_sum(&terms)
    }
}

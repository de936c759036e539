//! Parameter sweeps over (Θ, t, B₀, T) with deterministic CSV/JSON output,
//! and the perturbative-vs-exact comparison table.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::oracle::{self, Observable as OracleObservable};
use crate::params::{validate_params, ModelParams, PhononCutoff};
use crate::perturbation::{
    self, max_over_time, EnergyOrder, FinalSector, InitialSpin, UNRELIABLE_PROBABILITY,
};
use crate::vibronic::VibronicModel;

pub const CSV_HEADER: &str = "observable,theta_rad,time_s,B0_tesla,temperature_K,value,flags";

/// Points in the default time window of the conversion observables.
pub const DEFAULT_CONVERSION_POINTS: usize = 4001;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepObservable {
    /// Triplet reaction probability P_t(τ).
    Pt,
    /// Singlet reaction probability P_s(τ).
    Ps,
    /// Triplet golden-rule rate.
    Kt,
    /// Singlet golden-rule rate.
    Ks,
    /// P_{t→s}(t).
    Pts,
    /// max over the time grid of P_{t→s}.
    PtsMax,
    /// Same as `PtsMax`, with a mandatory B₀ axis.
    B0Scan,
}

impl SweepObservable {
    pub fn name(self) -> &'static str {
        match self {
            SweepObservable::Pt => "pt",
            SweepObservable::Ps => "ps",
            SweepObservable::Kt => "kt",
            SweepObservable::Ks => "ks",
            SweepObservable::Pts => "pts",
            SweepObservable::PtsMax => "pts_max",
            SweepObservable::B0Scan => "b0_scan",
        }
    }

    /// Whether the time axis is reduced by a maximum instead of tabulated.
    fn maximizes(self) -> bool {
        matches!(self, SweepObservable::PtsMax | SweepObservable::B0Scan)
    }
}

impl FromStr for SweepObservable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pt" => SweepObservable::Pt,
            "ps" => SweepObservable::Ps,
            "kt" => SweepObservable::Kt,
            "ks" => SweepObservable::Ks,
            "pts" => SweepObservable::Pts,
            "pts_max" => SweepObservable::PtsMax,
            "b0_scan" => SweepObservable::B0Scan,
            other => return Err(Error::InvalidSpec(format!("unknown observable '{other}'"))),
        })
    }
}

impl FromStr for FinalSector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "acceptor" => Ok(FinalSector::Acceptor),
            "all" => Ok(FinalSector::All),
            other => Err(Error::InvalidSpec(format!("final sector must be 'all' or 'acceptor', got '{other}'"))),
        }
    }
}

/// Linear range with `count` points, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        let axis = Self { start, stop, count };
        axis.validate("axis")?;
        Ok(axis)
    }

    pub fn point(value: f64) -> Self {
        Self { start: value, stop: value, count: 1 }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidSpec(format!("{name}: count must be at least 1")));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidSpec(format!("{name}: bounds must be finite")));
        }
        if self.start > self.stop {
            return Err(Error::InvalidSpec(format!("{name}: start must not exceed stop")));
        }
        if self.count == 1 && self.start != self.stop {
            return Err(Error::InvalidSpec(format!("{name}: a single point needs start == stop")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisName {
    Time,
    Theta,
    B0,
    Temperature,
}

impl FromStr for AxisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" | "time" => Ok(AxisName::Time),
            "theta" => Ok(AxisName::Theta),
            "B0" | "b0" => Ok(AxisName::B0),
            "T" | "temperature" => Ok(AxisName::Temperature),
            other => Err(Error::InvalidSpec(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// Parses `AXIS=START:STOP:COUNT`.
pub fn parse_axis(text: &str) -> Result<(AxisName, GridAxis)> {
    let bad = || Error::InvalidSpec(format!("sweep must look like AXIS=START:STOP:COUNT, got '{text}'"));
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    let axis = GridAxis { start, stop, count };
    axis.validate(name)?;
    Ok((name.trim().parse()?, axis))
}

/// A sweep request. Axes left as `None` take a single point from the
/// model parameters (time: 0.5/ω for probabilities and rates, 4001 points
/// over [0, 20/ω] for the conversion observables).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub observable: SweepObservable,
    /// Seconds, or units of 1/ω when `time_in_inverse_omega` is set.
    pub time: Option<GridAxis>,
    pub theta: Option<GridAxis>,
    pub b0: Option<GridAxis>,
    pub temperature: Option<GridAxis>,
    pub final_sector: FinalSector,
    pub energy_order: EnergyOrder,
    pub time_in_inverse_omega: bool,
}

impl SweepSpec {
    pub fn new(observable: SweepObservable) -> Self {
        Self {
            observable,
            time: None,
            theta: None,
            b0: None,
            temperature: None,
            final_sector: FinalSector::default(),
            energy_order: EnergyOrder::default(),
            time_in_inverse_omega: false,
        }
    }

    pub fn set_axis(&mut self, name: AxisName, axis: GridAxis) {
        match name {
            AxisName::Time => self.time = Some(axis),
            AxisName::Theta => self.theta = Some(axis),
            AxisName::B0 => self.b0 = Some(axis),
            AxisName::Temperature => self.temperature = Some(axis),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("t", &self.time), ("theta", &self.theta), ("B0", &self.b0), ("T", &self.temperature)] {
            if let Some(a) = axis {
                a.validate(name)?;
            }
        }
        if let Some(t) = &self.time {
            if t.start < 0.0 {
                return Err(Error::NegativeTime(t.start));
            }
        }
        if self.observable == SweepObservable::B0Scan && self.b0.is_none() {
            return Err(Error::InvalidSpec("b0_scan needs a B0 axis".into()));
        }
        Ok(())
    }

    /// Time grid in seconds.
    pub fn times(&self, p: &ModelParams) -> Vec<f64> {
        let scale = if self.time_in_inverse_omega { 1.0 / p.omega } else { 1.0 };
        match &self.time {
            Some(axis) => axis.values().into_iter().map(|t| t * scale).collect(),
            None => match self.observable {
                SweepObservable::Pts | SweepObservable::PtsMax | SweepObservable::B0Scan => {
                    linspace(0.0, 20.0 / p.omega, DEFAULT_CONVERSION_POINTS)
                }
                _ => vec![0.5 / p.omega],
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    /// Seconds. For maximized observables this is the argmax time.
    pub time: f64,
    pub b0: f64,
    pub temperature: f64,
    pub value: f64,
    pub flags: Vec<&'static str>,
}

/// Cutoff bookkeeping for one temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffInfo {
    pub temperature: f64,
    pub cutoff: usize,
    pub capped: bool,
    pub tail_mass: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub params: ModelParams,
    pub cutoffs: Vec<CutoffInfo>,
    pub rows: Vec<SweepRow>,
}

fn axis_values(axis: &Option<GridAxis>, fallback: f64) -> Vec<f64> {
    axis.map_or_else(|| vec![fallback], |a| a.values())
}

fn evaluate_point(
    spec: &SweepSpec,
    p: &ModelParams,
    times: &[f64],
    (theta, b0, temperature): (f64, f64, f64),
) -> Result<Vec<SweepRow>> {
    let model = VibronicModel::new(&ModelParams { theta, b0, temperature, ..p.clone() })?;
    let row = |time: f64, value: f64, flags: Vec<&'static str>| SweepRow { theta, time, b0, temperature, value, flags };
    let prob_flags = |v: f64| if v > UNRELIABLE_PROBABILITY { vec!["unreliable"] } else { vec![] };
    let initial = match spec.observable {
        SweepObservable::Ps | SweepObservable::Ks => InitialSpin::Singlet,
        _ => InitialSpin::Triplet,
    };
    match spec.observable {
        SweepObservable::Pt | SweepObservable::Ps => times
            .iter()
            .map(|&t| {
                let pr = perturbation::reaction_probability(&model, initial, t, spec.final_sector)?;
                Ok(row(t, pr.value, prob_flags(pr.value)))
            })
            .collect(),
        SweepObservable::Kt | SweepObservable::Ks => {
            let rate = perturbation::reaction_rate(&model, initial)?;
            Ok(times
                .iter()
                .map(|&t| row(t, rate.rate, if rate.unreliable_for(t) { vec!["unreliable"] } else { vec![] }))
                .collect())
        }
        SweepObservable::Pts => {
            let series = perturbation::triplet_to_singlet_series(&model, times, spec.energy_order)?;
            Ok(times.iter().zip(series).map(|(&t, v)| row(t, v, prob_flags(v))).collect())
        }
        SweepObservable::PtsMax | SweepObservable::B0Scan => {
            let series = perturbation::triplet_to_singlet_series(&model, times, spec.energy_order)?;
            let (max, argmax) = max_over_time(&series, times);
            let mut flags = vec!["argmax_time"];
            flags.extend(prob_flags(max));
            Ok(vec![row(argmax, max, flags)])
        }
    }
}

/// Evaluates the observable on the Cartesian grid. Rows are ordered
/// lexicographically in (Θ, t, B₀, T); grid points run on the current
/// rayon pool and are gathered in that order.
pub fn run_sweep(spec: &SweepSpec, p: &ModelParams) -> Result<SweepResult> {
    spec.validate()?;
    let policy = p.clone();
    let p = validate_params(p.clone())?;
    let thetas = axis_values(&spec.theta, p.theta);
    let b0s = axis_values(&spec.b0, p.b0);
    let temps = axis_values(&spec.temperature, p.temperature);
    let times = spec.times(&p);

    // the configured cutoff policy is re-applied at every temperature
    let cutoffs = temps
        .iter()
        .map(|&temperature| {
            let q = validate_params(ModelParams { temperature, ..policy.clone() })?;
            let ens = crate::params::ThermalEnsemble::new(&q);
            Ok(CutoffInfo { temperature, cutoff: q.cutoff(), capped: q.cutoff_capped, tail_mass: ens.tail_mass() })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(thetas.len() * b0s.len() * temps.len());
    for &th in &thetas {
        for &b in &b0s {
            for &t in &temps {
                points.push((th, b, t));
            }
        }
    }
    let blocks = points
        .par_iter()
        .map(|&pt| evaluate_point(spec, &policy, &times, pt))
        .collect::<Result<Vec<_>>>()?;

    // blocks are (Θ, B₀, T)-major with time inside; reorder to (Θ, t, B₀, T)
    let n_inner = b0s.len() * temps.len();
    let n_time = blocks.first().map_or(0, |b| b.len());
    let mut rows = Vec::with_capacity(blocks.len() * n_time);
    for chunk in blocks.chunks(n_inner) {
        for k in 0..n_time {
            for block in chunk {
                rows.push(block[k].clone());
            }
        }
    }
    Ok(SweepResult { spec: spec.clone(), params: p, cutoffs, rows })
}

/// Runs [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(spec: &SweepSpec, p: &ModelParams, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run_sweep(spec, p))
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepResult {
    fn time_value(&self, t: f64) -> f64 {
        if self.spec.time_in_inverse_omega {
            t * self.params.omega
        } else {
            t
        }
    }

    pub fn unreliable_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.flags.contains(&"unreliable")).count()
    }

    /// Ordered key=value metadata.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut m = vec![
            ("code_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("observable".into(), self.spec.observable.name().into()),
            ("final_sector".into(), match self.spec.final_sector {
                FinalSector::Acceptor => "acceptor".into(),
                FinalSector::All => "all".into(),
            }),
            ("energy_order".into(), match self.spec.energy_order {
                EnergyOrder::Zeroth => "zeroth".into(),
                EnergyOrder::Second => "second".into(),
            }),
            ("time_unit".into(), if self.spec.time_in_inverse_omega { "1/omega".into() } else { "s".into() }),
        ];
        if self.spec.observable.maximizes() {
            let times = self.spec.times(p);
            m.push(("max_window".into(), format!("{}:{}:{}", fmt_f(self.time_value(times[0])), fmt_f(self.time_value(*times.last().unwrap())), times.len())));
        }
        for (k, v) in [
            ("epsilon1_ev", p.epsilon1),
            ("epsilon2_ev", p.epsilon2),
            ("J_ev", p.tunneling_j),
            ("omega_rad_per_s", p.omega),
            ("phi", p.phi),
            ("B0_tesla", p.b0),
            ("theta_rad", p.theta),
            ("g1_ev", p.g1),
            ("g2_ev", p.g2),
            ("temperature_K", p.temperature),
            ("broadening_eta_ev", p.broadening_eta),
        ] {
            m.push((k.into(), fmt_f(v)));
        }
        m.push(("max_cutoff".into(), p.max_cutoff.to_string()));
        for c in &self.cutoffs {
            let key = format!("cutoff[T={}]", fmt_f(c.temperature));
            m.push((key, format!("{} capped={} tail_mass={}", c.cutoff, c.capped, fmt_f(c.tail_mass))));
        }
        m.push(("rows".into(), self.rows.len().to_string()));
        m.push(("unreliable_rows".into(), self.unreliable_rows().to_string()));
        m
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.metadata() {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        let name = self.spec.observable.name();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{},{}",
                fmt_f(r.theta),
                fmt_f(self.time_value(r.time)),
                fmt_f(r.b0),
                fmt_f(r.temperature),
                fmt_f(r.value),
                r.flags.join(";")
            );
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let metadata: serde_json::Map<String, Value> = self.metadata().into_iter().map(|(k, v)| (k, Value::from(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "observable": self.spec.observable.name(),
                    "theta_rad": r.theta,
                    "time_s": self.time_value(r.time),
                    "B0_tesla": r.b0,
                    "temperature_K": r.temperature,
                    "value": r.value,
                    "flags": r.flags,
                })
            })
            .collect();
        json!({ "metadata": metadata, "rows": rows })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub time: f64,
    pub perturbative: f64,
    pub exact: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub observable: SweepObservable,
    pub cutoff: usize,
    pub rows: Vec<ComparisonRow>,
    /// First recurrence time of the compared dynamics.
    pub recurrence_time: f64,
    /// No grid time fell before the recurrence, so the error covers all t > 0.
    pub window_fallback: bool,
    /// Largest relative error with 0 < t ≤ recurrence_time (all t > 0 when
    /// `window_fallback` is set).
    pub max_relative_error: f64,
    /// P_t(J)/P_t(J/2) at the last compared time, perturbative and exact;
    /// `None` for observables that do not depend on J at leading order.
    pub j2_ratio: Option<(f64, f64)>,
    pub max_norm_defect: f64,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# code_version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# observable={}", self.observable.name());
        let _ = writeln!(out, "# oracle_cutoff={}", self.cutoff);
        let _ = writeln!(out, "# recurrence_time_s={}", fmt_f(self.recurrence_time));
        let _ = writeln!(out, "# error_window={}", if self.window_fallback { "all_times" } else { "before_recurrence" });
        let _ = writeln!(out, "# max_relative_error={}", fmt_f(self.max_relative_error));
        let _ = writeln!(out, "# max_norm_defect={}", fmt_f(self.max_norm_defect));
        if let Some((pert, exact)) = self.j2_ratio {
            let _ = writeln!(out, "# j2_ratio_perturbative={}", fmt_f(pert));
            let _ = writeln!(out, "# j2_ratio_exact={}", fmt_f(exact));
        }
        out.push_str("time_s,perturbative,exact,relative_error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", fmt_f(r.time), fmt_f(r.perturbative), fmt_f(r.exact), fmt_f(r.relative_error));
        }
        out
    }
}

fn oracle_series(
    spec: &SweepSpec,
    p: &ModelParams,
    cutoff: usize,
    times: &[f64],
    cap: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let model = VibronicModel::new(&ModelParams { phonon_cutoff: PhononCutoff::Fixed(cutoff), ..p.clone() })?;
    let (initial, obs) = match spec.observable {
        SweepObservable::Pt => (InitialSpin::Triplet, OracleObservable::AcceptorOccupancy),
        SweepObservable::Ps => (InitialSpin::Singlet, OracleObservable::AcceptorOccupancy),
        SweepObservable::Pts => (InitialSpin::Triplet, OracleObservable::SingletProjector),
        other => {
            return Err(Error::InvalidSpec(format!("oracle-compare supports pt, ps and pts, not {}", other.name())));
        }
    };
    let pert = match spec.observable {
        SweepObservable::Pts => perturbation::triplet_to_singlet_series(&model, times, spec.energy_order)?,
        _ => times
            .iter()
            .map(|&t| Ok(perturbation::reaction_probability(&model, initial, t, FinalSector::Acceptor)?.value))
            .collect::<Result<Vec<_>>>()?,
    };
    let exact = oracle::evolve_probability(&model.params, cutoff, initial, obs, times, cap)?;
    Ok((pert, exact.values, exact.max_norm_defect))
}

/// Perturbative vs exact values at the parameters' (Θ, B₀, T) over the
/// spec's time grid. Only the acceptor sector is supported.
pub fn oracle_compare(spec: &SweepSpec, p: &ModelParams, cutoff: usize, cap: usize) -> Result<ComparisonReport> {
    spec.validate()?;
    if spec.final_sector != FinalSector::Acceptor {
        return Err(Error::InvalidSpec("oracle-compare measures acceptor occupancy; use final_sector=acceptor".into()));
    }
    let p = validate_params(ModelParams { phonon_cutoff: PhononCutoff::Fixed(cutoff), ..p.clone() })?;
    let times = spec.times(&p);
    let (pert, exact, norm) = oracle_series(spec, &p, cutoff, &times, cap)?;
    let model = VibronicModel::new(&p)?;
    let gap = match spec.observable {
        SweepObservable::Pts => oracle::smallest_spin_gap(&model),
        _ => oracle::smallest_coupled_gap(&model),
    };
    let recurrence = oracle::recurrence_time(gap);
    let errors = oracle::relative_errors(&pert, &exact);
    let rows: Vec<ComparisonRow> = times
        .iter()
        .zip(pert.iter().zip(&exact))
        .zip(&errors)
        .map(|((&time, (&a, &b)), &e)| ComparisonRow { time, perturbative: a, exact: b, relative_error: e })
        .collect();
    // when the recurrence precedes the whole grid, every positive time counts
    let window_fallback = !rows.iter().any(|r| r.time > 0.0 && r.time <= recurrence);
    let window_end = if window_fallback { f64::INFINITY } else { recurrence };
    let max_relative_error = rows
        .iter()
        .filter(|r| r.time > 0.0 && r.time <= window_end)
        .fold(0.0f64, |a, r| a.max(r.relative_error));
    let j2_ratio = if spec.observable == SweepObservable::Pts {
        None
    } else {
        let t = *times.last().unwrap();
        let half = ModelParams { tunneling_j: 0.5 * p.tunneling_j, ..p.clone() };
        let (pert_half, exact_half, _) = oracle_series(spec, &half, cutoff, &[t], cap)?;
        let ratio = |a: f64, b: f64| if b == 0.0 { f64::NAN } else { a / b };
        Some((ratio(*pert.last().unwrap(), pert_half[0]), ratio(*exact.last().unwrap(), exact_half[0])))
    };
    Ok(ComparisonReport {
        observable: spec.observable,
        cutoff,
        rows,
        recurrence_time: recurrence,
        window_fallback,
        max_relative_error,
        j2_ratio,
        max_norm_defect: norm,
    })
}

//! Entry-by-entry reconciliation of the published eigenstate, rate
//! coefficient and conversion coefficient tables.
//!
//! Numeric values come from operator products and the table eigensystem;
//! the printed closed forms are transcribed verbatim below (including any
//! irregular entries) and treated as hypotheses to be checked.

use num_complex::Complex64;

use crate::numerics::linspace;
use crate::params::{validate_params, ModelParams};
use crate::spin::{eigen_residuals, table1_eigensystem, EIGEN_TOL};
use crate::units::HBAR;
use crate::vibronic::VibronicModel;

/// Deviation above which a Table II/III entry is flagged.
pub const ENTRY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Printed expression disagrees with the numeric value (warning).
    Flagged,
    /// Numeric check failed (error).
    Fail,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Flagged => "flagged",
            Status::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EntryReport {
    pub table: u8,
    pub entry: String,
    pub numeric: f64,
    pub printed: f64,
    pub deviation: f64,
    pub status: Status,
    pub note: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub entries: Vec<EntryReport>,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.status == Status::Fail).count()
    }

    pub fn flagged(&self) -> impl Iterator<Item = &EntryReport> {
        self.entries.iter().filter(|e| e.status == Status::Flagged)
    }

    /// Largest deviation among entries that are not flagged.
    pub fn max_unflagged_deviation(&self, table: u8) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.table == table && e.status == Status::Ok)
            .fold(0.0f64, |a, e| a.max(e.deviation))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,entry,numeric,printed,deviation,status,note\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{},{}\n",
                e.table,
                quote(&e.entry),
                e.numeric,
                e.printed,
                e.deviation,
                e.status.as_str(),
                quote(&e.note)
            ));
        }
        out
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Residual and orthonormality check of the 24 eigenpairs. `numeric` is
/// E_sq from the closed form, `printed` the table expression
/// e_a^{(1)} + e_b^{(2)} (or 0 for rows 17–24), `deviation` the scaled
/// residual ‖H̃_s|φ_q⟩ − E_sq|φ_q⟩‖ / max|E|.
pub fn verify_table1(p: &ModelParams) -> VerificationReport {
    let sys = table1_eigensystem(p);
    let res = eigen_residuals(&sys, p);
    let mut entries = Vec::new();
    for q in 0..24 {
        let printed = if q < 16 { sys.site1.energies[q / 4] + sys.site2.energies[q % 4] } else { 0.0 };
        let pass = res.residuals[q] < EIGEN_TOL && sys.energies[q] == printed;
        entries.push(EntryReport {
            table: 1,
            entry: format!("q={}", q + 1),
            numeric: sys.energies[q],
            printed,
            deviation: res.residuals[q],
            status: if pass { Status::Ok } else { Status::Fail },
            note: String::new(),
        });
    }
    entries.push(EntryReport {
        table: 1,
        entry: "gram".into(),
        numeric: res.orthonormality_defect,
        printed: 0.0,
        deviation: res.orthonormality_defect,
        status: if res.orthonormality_defect < EIGEN_TOL { Status::Ok } else { Status::Fail },
        note: "max |<phi_p|phi_q> - delta_pq|".into(),
    });
    VerificationReport { entries }
}

struct Angles {
    c_t: f64,
    s_t: f64,
    c1: f64,
    s1: f64,
    c2: f64,
    s2: f64,
    st1: f64,
    st2: f64,
}

impl Angles {
    fn new(theta: f64, t1: f64, t2: f64) -> Self {
        Self {
            c_t: theta.cos(),
            s_t: theta.sin(),
            c1: (t1 / 2.0).cos(),
            s1: (t1 / 2.0).sin(),
            c2: (t2 / 2.0).cos(),
            s2: (t2 / 2.0).sin(),
            st1: t1.sin(),
            st2: t2.sin(),
        }
    }
}

/// Printed rate coefficients: `(q, value)` terms of R_{j,mn,p} (1-based).
fn printed_r(j: usize, p: usize, a: &Angles) -> Vec<(usize, f64)> {
    let (c1, s1, c2, s2, st1, st2) = (a.c1, a.s1, a.c2, a.s2, a.st1, a.st2);
    let ct2 = a.c_t * a.c_t;
    let st2_ = a.s_t * a.s_t;
    let sq = |x: f64| x * x;
    let p4 = |x: f64| x.powi(4);
    match (j, p) {
        (1, 21) => vec![
            (2, ct2 * sq(s2) * sq(s2)),
            (3, ct2 * sq(c2) * sq(c2)),
            (5, ct2 * sq(s1) * sq(s1)),
            (9, ct2 * sq(c1) * sq(c1)),
        ],
        (1, 22) => vec![
            (6, st2_ / 4.0 * p4(s1) * sq(st2)),
            (7, st2_ / 4.0 * p4(s1) * sq(st2)),
            (10, st2_ / 4.0 * p4(c1) * sq(st2)),
            (11, st2_ / 4.0 * p4(c1) * sq(st2)),
        ],
        (1, 23) => vec![
            (6, st2_ / 4.0 * sq(st1) * p4(s2)),
            (7, st2_ / 4.0 * sq(st1) * p4(c2)),
            (10, st2_ / 4.0 * sq(st1) * p4(s2)),
            (11, st2_ / 4.0 * sq(st1) * p4(c2)),
        ],
        (1, 24) => vec![],
        (2, 21) => vec![(2, st2_ * sq(c2) * sq(s2)), (3, st2_ * sq(s2) * sq(c2))],
        (2, 22) => vec![
            (4, ct2),
            (6, ct2 * p4(s1) * p4(c2)),
            (7, ct2 * p4(s1) * p4(s2)),
            (10, ct2 * p4(c1) * p4(c2)),
            (11, ct2 * p4(c1) * p4(s2)),
        ],
        (2, 23) => [6, 7, 10, 11].iter().map(|&q| (q, ct2 / 16.0 * sq(st1) * sq(st2))).collect(),
        (2, 24) => vec![(8, st2_ * sq(s1) * sq(c1)), (12, st2_ * sq(c1) * sq(s1))],
        (3, 21) => vec![(5, st2_ * sq(s1) * sq(c1)), (9, st2_ * sq(s1) * sq(c1))],
        (3, 22) => [6, 7, 10, 11].iter().map(|&q| (q, ct2 / 16.0 * sq(st1) * sq(st2))).collect(),
        (3, 23) => vec![
            (11, ct2),
            (6, ct2 * p4(c1) * p4(s2)),
            (7, ct2 * p4(c1) * p4(c2)),
            (10, ct2 * p4(s1) * p4(s2)),
            (11, ct2 * p4(s1) * p4(c2)),
        ],
        (3, 24) => vec![(14, st2_ * sq(s2) * sq(c2)), (15, st2_ * sq(s2) * sq(c2))],
        (4, 21) => vec![],
        (4, 22) => vec![
            (6, st2_ / 4.0 * sq(st1) * p4(c2)),
            (7, st2_ / 4.0 * sq(st1) * p4(s2)),
            (10, st2_ / 4.0 * sq(st1) * p4(c2)),
            (11, st2_ / 4.0 * sq(st1) * sq(c2)),
        ],
        (4, 23) => vec![
            (6, st2_ / 4.0 * p4(c1) * sq(st2)),
            (7, st2_ / 4.0 * p4(c1) * sq(st2)),
            (10, st2_ / 4.0 * p4(s1) * sq(st2)),
            (11, st2_ / 4.0 * p4(s1) * sq(st2)),
        ],
        (4, 24) => vec![(8, ct2 * p4(c1)), (11, ct2 * p4(s1)), (14, ct2 * p4(c2)), (15, ct2 * sq(s2))],
        _ => vec![],
    }
}

/// Printed conversion coefficients: `(q, value)` terms of D_{m,j,k}
/// multiplying e^{−iE_{m,q}t/ħ} (1-based).
fn printed_d(j: usize, k: usize, a: &Angles) -> Vec<(usize, f64)> {
    let (c1, s1, c2, s2, st1, st2, ct, st) = (a.c1, a.s1, a.c2, a.s2, a.st1, a.st2, a.c_t, a.s_t);
    match (j, k) {
        (1, 1) => vec![
            (2, -s2 * s2 * ct / 2.0),
            (3, -c2 * c2 * ct / 2.0),
            (5, s1 * s1 * ct / 2.0),
            (9, c1 * c1 * ct / 2.0),
        ],
        (1, 2) => vec![
            (6, -s1 * s1 * st2 * st / 4.0),
            (7, s1 * s1 * st2 * st / 4.0),
            (10, -c1 * c1 * st2 * st / 4.0),
            (11, c1 * c1 * st2 * st / 4.0),
        ],
        (1, 3) => vec![
            (6, st1 * s2 * s2 * st / 4.0),
            (7, st1 * c2 * c2 * st / 4.0),
            (10, -st1 * s2 * s2 * st / 4.0),
            (11, -st1 * c2 * c2 * st / 4.0),
        ],
        (1, 4) => vec![],
        (2, 1) => vec![(2, -s2 * c2 * st / 2.0), (3, c2 * s2 * st / 2.0)],
        (2, 2) => vec![
            (4, -ct / 2.0),
            (6, s1 * s1 * c2 * c2 * ct / 2.0),
            (7, s1 * s1 * s2 * s2 * ct / 2.0),
            (10, c1 * c1 * c2 * c2 * ct / 2.0),
            (11, c1 * c1 * s2 * s2 * ct / 2.0),
        ],
        (2, 3) => vec![
            (6, -st1 * st2 * ct / 8.0),
            (7, st1 * st2 * ct / 8.0),
            (10, st1 * st2 * ct / 8.0),
            (11, -st1 * st2 * ct / 8.0),
        ],
        (2, 4) => vec![(8, c1 * s1 * st / 2.0), (12, -s1 * c1 * st / 2.0)],
        (3, 1) => vec![(5, s1 * c1 * st / 2.0), (9, -c1 * s1 * st / 2.0)],
        (3, 2) => vec![
            (6, st1 * st2 * ct / 8.0),
            (7, -st1 * st2 * ct / 8.0),
            (10, -st1 * st2 * ct / 8.0),
            (11, st1 * st2 * ct / 8.0),
        ],
        (3, 3) => vec![
            (6, -c1 * c1 * s2 * s2 * ct / 2.0),
            (7, -c1 * c1 * c2 * c2 * ct / 2.0),
            (10, -s1 * s1 * s2 * s2 * ct / 2.0),
            (11, -s1 * s1 * c2 * c2 * ct / 2.0),
            (13, ct / 2.0),
        ],
        (3, 4) => vec![(14, -c2 * s2 * st / 2.0), (15, s2 * c2 * st / 2.0)],
        (4, 1) => vec![],
        (4, 2) => vec![
            (6, st1 * c2 * c2 * st / 4.0),
            (7, st1 * s2 * s2 * st / 4.0),
            (10, -st1 * c2 * c2 * st / 4.0),
            (11, -st1 * s2 * s2 * st / 4.0),
        ],
        (4, 3) => vec![
            (6, -c1 * c1 * st2 * st / 4.0),
            (7, c1 * c1 * st2 * st / 4.0),
            (10, -s1 * s1 * st2 * st / 4.0),
            (11, s1 * s1 * st2 * st / 4.0),
        ],
        (4, 4) => vec![
            (8, -c1 * c1 * ct / 2.0),
            (12, -s1 * s1 * ct / 2.0),
            (14, c2 * c2 * ct / 2.0),
            (15, s2 * s2 * ct / 2.0),
        ],
        _ => vec![],
    }
}

fn per_row(terms: &[(usize, f64)]) -> [f64; 16] {
    let mut out = [0.0; 16];
    for &(q, v) in terms {
        out[q - 1] += v;
    }
    out
}

/// Model at inclination `theta`; the mixing angles come from `p`.
fn model_at(p: &ModelParams, theta: f64) -> VibronicModel {
    let p = ModelParams { theta, phonon_cutoff: crate::params::PhononCutoff::Fixed(1), ..p.clone() };
    VibronicModel::new(&p).expect("parameters validated by caller")
}

/// Numeric 2|c_jq ⟨φ_p|hop|φ_q⟩|² for rows p = 21..24, indexed
/// `[j][p − 21][q]`.
fn numeric_r(model: &VibronicModel) -> [[[f64; 16]; 4]; 4] {
    let t = crate::spin::PreparedSpinState::rotated_triplet(model.params.theta);
    let mut out = [[[0.0; 16]; 4]; 4];
    for j in 0..4 {
        let c = model.expansion(&t, j);
        for (pi, p) in (20..24).enumerate() {
            for q in 0..16 {
                let v = c[q] * model.hop12[(p, q)];
                out[j][pi][q] = 2.0 * v * v;
            }
        }
    }
    out
}

/// Rate coefficients indexed [j][p][q].
type RateCoefficients = [[[f64; 16]; 4]; 4];

/// Compares every (j, p, q) rate coefficient with the printed table over
/// `theta_grid`. Entries with deviation above [`ENTRY_TOL`] are flagged.
pub fn verify_table2(p: &ModelParams, theta_grid: &[f64]) -> crate::Result<VerificationReport> {
    let p = validate_params(ModelParams { phonon_cutoff: crate::params::PhononCutoff::Fixed(1), ..p.clone() })?;
    let grid: Vec<(RateCoefficients, RateCoefficients)> = theta_grid
        .iter()
        .map(|&th| {
            let model = model_at(&p, th);
            let a = Angles::new(th, model.spin.site1.theta, model.spin.site2.theta);
            let mut printed = [[[0.0; 16]; 4]; 4];
            for j in 0..4 {
                for pi in 0..4 {
                    printed[j][pi] = per_row(&printed_r(j + 1, pi + 21, &a));
                }
            }
            (numeric_r(&model), printed)
        })
        .collect();
    let mut entries = Vec::new();
    for j in 0..4 {
        for pi in 0..4 {
            let mut row_entries = Vec::new();
            for q in 0..16 {
                let mut num_max = 0.0f64;
                let mut pr_max = 0.0f64;
                let mut dev = 0.0f64;
                for (num, pr) in &grid {
                    num_max = num_max.max(num[j][pi][q].abs());
                    pr_max = pr_max.max(pr[j][pi][q].abs());
                    dev = dev.max((num[j][pi][q] - pr[j][pi][q]).abs());
                }
                if num_max == 0.0 && pr_max == 0.0 {
                    continue;
                }
                row_entries.push((q, num_max, pr_max, dev));
            }
            let name = format!("R_{{{},mn,{}}}", j + 1, pi + 21);
            if row_entries.is_empty() {
                entries.push(EntryReport {
                    table: 2,
                    entry: name,
                    numeric: 0.0,
                    printed: 0.0,
                    deviation: 0.0,
                    status: Status::Ok,
                    note: "identically zero".into(),
                });
                continue;
            }
            for &(q, num_max, pr_max, dev) in &row_entries {
                let flagged = dev > ENTRY_TOL;
                let mut note = String::new();
                if flagged {
                    note = if num_max == 0.0 {
                        "printed term has no numeric counterpart".into()
                    } else if pr_max == 0.0 {
                        "numeric term missing from the printed expression".into()
                    } else {
                        "suspected transcription discrepancy".into()
                    };
                    // a printed delta index that points at the wrong row: the
                    // surplus at q2 reproduces the numeric term at q (or vice versa)
                    for &(q2, ..) in &row_entries {
                        if q2 == q {
                            continue;
                        }
                        let surplus_here = grid
                            .iter()
                            .all(|(num, pr)| ((pr[j][pi][q2] - num[j][pi][q2]) - (num[j][pi][q] - pr[j][pi][q])).abs() < ENTRY_TOL);
                        if surplus_here {
                            note = if pr_max == 0.0 {
                                format!("numeric term at E_{{m,{}}} printed with E_{{m,{}}}", q + 1, q2 + 1)
                            } else {
                                format!("printed term belongs at E_{{m,{}}}", q2 + 1)
                            };
                        }
                    }
                }
                entries.push(EntryReport {
                    table: 2,
                    entry: format!("{name}[q={}]", q + 1),
                    numeric: num_max,
                    printed: pr_max,
                    deviation: dev,
                    status: if flagged { Status::Flagged } else { Status::Ok },
                    note,
                });
            }
        }
    }
    Ok(VerificationReport { entries })
}

fn numeric_d_coeffs(model: &VibronicModel) -> [[[f64; 16]; 4]; 4] {
    crate::perturbation::conversion_coefficients(model)
}

fn evaluate_d(coeffs: &[f64; 16], energies: &[f64], t: f64) -> Complex64 {
    coeffs
        .iter()
        .zip(energies)
        .map(|(c, e)| Complex64::from_polar(*c, 0.0) * Complex64::from_polar(1.0, -e * t / HBAR))
        .sum()
}

/// Compares D_{m,j,k}(t) with the printed table over the Θ and t grids
/// (zeroth-order energies). Flagged entries are also compared with the
/// numeric D_{m,k,j}; the note records the largest ||D_jk| − |D_kj||.
pub fn verify_table3(p: &ModelParams, theta_grid: &[f64], t_grid: &[f64]) -> crate::Result<VerificationReport> {
    let p = validate_params(ModelParams { phonon_cutoff: crate::params::PhononCutoff::Fixed(1), ..p.clone() })?;
    let mut stats = [[(0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64); 4]; 4];
    for &th in theta_grid {
        let model = model_at(&p, th);
        let a = Angles::new(th, model.spin.site1.theta, model.spin.site2.theta);
        let num = numeric_d_coeffs(&model);
        let energies = &model.spin.energies[..16];
        for j in 0..4 {
            for k in 0..4 {
                let printed = per_row(&printed_d(j + 1, k + 1, &a));
                let s = &mut stats[j][k];
                for &t in t_grid {
                    let dn = evaluate_d(&num[j][k], energies, t);
                    let dt = evaluate_d(&num[k][j], energies, t);
                    let dp = evaluate_d(&printed, energies, t);
                    s.0 = s.0.max(dn.norm());
                    s.1 = s.1.max(dp.norm());
                    s.2 = s.2.max((dn - dp).norm());
                    s.3 = s.3.max((dt - dp).norm());
                    s.4 = s.4.max((dn.norm() - dt.norm()).abs());
                }
            }
        }
    }
    let mut entries = Vec::new();
    for j in 0..4 {
        for k in 0..4 {
            let (num_max, pr_max, dev, dev_t, asym) = stats[j][k];
            let flagged = dev > ENTRY_TOL;
            let mut note = String::new();
            if flagged {
                note = if dev_t <= ENTRY_TOL {
                    "matches numeric D_{m,k,j} (nuclear indices transposed)".into()
                } else {
                    "suspected transcription discrepancy".into()
                };
            }
            note.push_str(&format!("{}max ||D_jk|-|D_kj|| = {:.3e}", if note.is_empty() { "" } else { "; " }, asym));
            entries.push(EntryReport {
                table: 3,
                entry: format!("D_{{m,{},{}}}", j + 1, k + 1),
                numeric: num_max,
                printed: pr_max,
                deviation: dev,
                status: if flagged { Status::Flagged } else { Status::Ok },
                note,
            });
        }
    }
    Ok(VerificationReport { entries })
}

/// Default Θ grid for the table checks.
pub fn default_theta_grid() -> Vec<f64> {
    linspace(0.0, std::f64::consts::PI, 9)
}

/// Default time grid for Table III: 41 points over 20/ω.
pub fn default_time_grid(p: &ModelParams) -> Vec<f64> {
    linspace(0.0, 20.0 / p.omega, 41)
}

/// All three tables at the given parameters.
pub fn verify_all(p: &ModelParams) -> crate::Result<VerificationReport> {
    let theta = default_theta_grid();
    let mut report = verify_table1(p);
    report.entries.extend(verify_table2(p, &theta)?.entries);
    report.entries.extend(verify_table3(p, &theta, &default_time_grid(p))?.entries);
    Ok(report)
}

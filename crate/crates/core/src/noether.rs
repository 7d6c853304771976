//! Noether charges `F(u, t) = α_(u,t)(X)` for the generators `X` in
//! [`crate::group`], their closed forms, drift monitoring along stored
//! trajectories, and the virial identities of the quintic equation.
//!
//! The generic formula and the closed forms differ by a fixed factor for
//! some charges because `α` carries `½ ω`:
//!
//! | charge          | closed form                                 | generic / closed |
//! |-----------------|---------------------------------------------|------------------|
//! | mass            | `∫|u|²`                                     | ½                |
//! | momentum        | `Im ∫ u_x ū`                                | ½                |
//! | energy          | `H(u)`                                      | 1                |
//! | Galilean        | `t Im∫u_x ū − ∫x|u|²`                       | ½                |
//! | virial (p = 5)  | `−½ Im∫x u_x ū + 2tH`                       | 1                |
//! | pseudoconformal | `−¼∫x²|u|² + ½t Im∫x u_x ū − Ht² − H`       | 1                |
//!
//! Along quintic solutions `d/dt Im∫x u_x ū = +4H`, and the variance
//! `∫x²|u|²` is the parabola `V₀ + 2 Im∫x ū u_x|₀ t + 4H t²`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{NlsError, Result};
use crate::grid::{moment, spectral_derivative, ExtTangent, Field};
use crate::group::{group_generator, GroupKind};
use crate::hamiltonian::{alpha, hamiltonian, NonlinearityPower, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChargeKind {
    Mass,
    Momentum,
    Energy,
    Galilean,
    Virial,
    Pseudoconformal,
}

/// How a charge's drift is made relative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftScale {
    /// `|F(t₀)|`.
    InitialValue,
    /// Largest `Σ |term|` over the run, for charges that are a cancellation
    /// of individually growing terms.
    TermMagnitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSpec {
    pub name: String,
    pub kind: ChargeKind,
    pub generator: GroupKind,
    pub requires_p: Option<f64>,
    pub time_dependent: bool,
    /// Generic value `α(X)` divided by the closed form.
    pub generic_factor: f64,
    pub scale: DriftScale,
}

impl ChargeKind {
    pub const ALL: [ChargeKind; 6] = [
        ChargeKind::Mass,
        ChargeKind::Momentum,
        ChargeKind::Energy,
        ChargeKind::Galilean,
        ChargeKind::Virial,
        ChargeKind::Pseudoconformal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChargeKind::Mass => "mass",
            ChargeKind::Momentum => "momentum",
            ChargeKind::Energy => "energy",
            ChargeKind::Galilean => "galilean",
            ChargeKind::Virial => "virial",
            ChargeKind::Pseudoconformal => "pseudoconformal",
        }
    }

    pub fn from_name(name: &str) -> Option<ChargeKind> {
        ChargeKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn generator(self) -> GroupKind {
        match self {
            ChargeKind::Mass => GroupKind::Phase,
            ChargeKind::Momentum => GroupKind::Translation,
            ChargeKind::Energy => GroupKind::TimeShift,
            ChargeKind::Galilean => GroupKind::Galilean,
            ChargeKind::Virial => GroupKind::Scaling,
            ChargeKind::Pseudoconformal => GroupKind::Rotation,
        }
    }

    pub fn spec(self) -> ChargeSpec {
        let (requires_p, time_dependent, generic_factor, scale) = match self {
            ChargeKind::Mass | ChargeKind::Momentum => (None, false, 0.5, DriftScale::InitialValue),
            ChargeKind::Energy => (None, false, 1.0, DriftScale::InitialValue),
            ChargeKind::Galilean => (None, true, 0.5, DriftScale::TermMagnitude),
            ChargeKind::Virial | ChargeKind::Pseudoconformal => {
                (Some(5.0), true, 1.0, DriftScale::TermMagnitude)
            }
        };
        ChargeSpec {
            name: self.name().to_string(),
            kind: self,
            generator: self.generator(),
            requires_p,
            time_dependent,
            generic_factor,
            scale,
        }
    }

    /// The additive terms of the closed form at `(u, t)`.
    pub fn terms(self, u: &Field, t: f64, p: NonlinearityPower) -> Vec<f64> {
        match self {
            ChargeKind::Mass => vec![mass(u)],
            ChargeKind::Momentum => vec![momentum(u)],
            ChargeKind::Energy => vec![energy(u, p)],
            ChargeKind::Galilean => vec![t * momentum(u), -moment(u, 1).value],
            ChargeKind::Virial => {
                let h = hamiltonian(u, p);
                vec![-0.5 * dilation_moment(u), 2.0 * t * h]
            }
            ChargeKind::Pseudoconformal => {
                let h = hamiltonian(u, p);
                vec![
                    -0.25 * moment(u, 2).value,
                    0.5 * t * dilation_moment(u),
                    -h * t * t,
                    -h,
                ]
            }
        }
    }

    pub fn closed_form(self, u: &Field, t: f64, p: NonlinearityPower) -> f64 {
        self.terms(u, t, p).iter().sum()
    }
}

/// `∫ |u|²`.
pub fn mass(u: &Field) -> f64 {
    u.grid().dx() * u.values().iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `Im ∫ u_x ū` with a spectral derivative.
pub fn momentum(u: &Field) -> f64 {
    let ux = spectral_derivative(u, 1);
    u.grid().dx()
        * ux.values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a * b.conj()).im)
            .sum::<f64>()
}

pub fn energy(u: &Field, p: NonlinearityPower) -> f64 {
    hamiltonian(u, p)
}

/// `Im ∫ x u_x ū`.
pub fn dilation_moment(u: &Field) -> f64 {
    let ux = spectral_derivative(u, 1);
    u.grid().dx()
        * u.grid()
            .nodes()
            .iter()
            .zip(ux.values().iter().zip(u.values()))
            .map(|(&x, (a, b))| x * (a * b.conj()).im)
            .sum::<f64>()
}

/// `t Im∫u_x ū − ∫x|u|²`.
pub fn galilean_charge(u: &Field, t: f64) -> f64 {
    let m1 = moment(u, 1);
    if m1.boundary_warning {
        warn!(
            "galilean charge: boundary mass fraction {:.3e}",
            m1.boundary_fraction
        );
    }
    t * momentum(u) - m1.value
}

fn warn_unless_quintic(name: &str, p: NonlinearityPower) {
    if p.value() != 5.0 {
        warn!(
            "{name} charge is only conserved for p = 5 (got p = {})",
            p.value()
        );
    }
}

/// `−½ Im∫x u_x ū + 2tH(u)`; conserved for `p = 5`.
pub fn virial_charge(u: &Field, t: f64, p: NonlinearityPower) -> f64 {
    warn_unless_quintic("virial", p);
    ChargeKind::Virial.closed_form(u, t, p)
}

/// `−¼∫x²|u|² + ½t Im∫x u_x ū − Ht² − H`; conserved for `p = 5`.
pub fn pseudoconformal_charge(u: &Field, t: f64, p: NonlinearityPower) -> f64 {
    warn_unless_quintic("pseudoconformal", p);
    ChargeKind::Pseudoconformal.closed_form(u, t, p)
}

/// `F = α_(u,t)(X)` for a generator `X`.
pub fn noether_from_generator(u: &Field, t: f64, gen: &ExtTangent, p: NonlinearityPower) -> Result<f64> {
    alpha(u, t, gen, p)
}

/// Generic charge for a symmetry kind, built from its analytic generator.
pub fn generic_charge(kind: ChargeKind, u: &Field, t: f64, p: NonlinearityPower) -> Result<f64> {
    let gen = group_generator(kind.generator(), u, t, p);
    noether_from_generator(u, t, &gen, p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub charge: String,
    pub t0_value: f64,
    pub max_abs_drift: f64,
    pub max_rel_drift: f64,
    pub t_at_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
}

impl DriftReport {
    pub fn row(&self, name: &str) -> Option<&DriftRow> {
        self.rows.iter().find(|r| r.charge == name)
    }
}

/// Closed-form charge values along a trajectory, in time order.
pub fn charge_series(traj: &Trajectory, kind: ChargeKind) -> Vec<Vec<f64>> {
    let p = traj.power();
    traj.times()
        .par_iter()
        .zip(traj.states().par_iter())
        .map(|(&t, u)| kind.terms(u, t, p))
        .collect()
}

/// Drift of one charge along `traj`, without checking `requires_p`.
pub fn charge_drift(traj: &Trajectory, spec: &ChargeSpec) -> DriftRow {
    let series = charge_series(traj, spec.kind);
    let values: Vec<f64> = series.iter().map(|t| t.iter().sum()).collect();
    let f0 = values[0];
    let scale = match spec.scale {
        DriftScale::InitialValue => f0.abs(),
        DriftScale::TermMagnitude => series
            .iter()
            .map(|t| t.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
    }
    .max(f64::MIN_POSITIVE);
    let (mut max_abs, mut t_at_max) = (0.0, traj.times()[0]);
    for (&t, &f) in traj.times().iter().zip(&values) {
        let d = (f - f0).abs();
        if d > max_abs {
            max_abs = d;
            t_at_max = t;
        }
    }
    DriftRow {
        charge: spec.name.clone(),
        t0_value: f0,
        max_abs_drift: max_abs,
        max_rel_drift: max_abs / scale,
        t_at_max,
    }
}

pub fn check_compatible(traj: &Trajectory, spec: &ChargeSpec) -> Result<()> {
    match spec.requires_p {
        Some(req) if req != traj.power().value() => Err(NlsError::IncompatibleCharge {
            charge: spec.name.clone(),
            required: req,
            actual: traj.power().value(),
        }),
        _ => Ok(()),
    }
}

/// Per-charge initial value, maximal absolute and relative drift, and the
/// time at which the maximum occurs.
pub fn drift_report(traj: &Trajectory, charges: &[ChargeSpec]) -> Result<DriftReport> {
    for spec in charges {
        check_compatible(traj, spec)?;
    }
    Ok(DriftReport {
        rows: charges.iter().map(|s| charge_drift(traj, s)).collect(),
    })
}

/// `d/dt Im∫x u_x ū − 4H(u₀)` by centered differences at interior records.
pub fn virial_residual_1(traj: &Trajectory) -> Result<Vec<f64>> {
    let h = traj
        .uniform_step()
        .ok_or_else(|| NlsError::param("trajectory", "virial residual needs uniform records"))?;
    if traj.len() < 3 {
        return Err(NlsError::TooFewStates {
            needed: 3,
            got: traj.len(),
        });
    }
    let four_h = 4.0 * hamiltonian(&traj.states()[0], traj.power());
    let w: Vec<f64> = traj.states().par_iter().map(dilation_moment).collect();
    Ok(w.windows(3).map(|s| (s[2] - s[0]) / (2.0 * h) - four_h).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolaFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_fit_residual: f64,
}

/// Least-squares fit `∫x²|u|² ≈ c₀ + c₁ t + c₂ t²` over the records.
pub fn variance_parabola(traj: &Trajectory) -> Result<ParabolaFit> {
    if traj.len() < 3 {
        return Err(NlsError::TooFewStates {
            needed: 3,
            got: traj.len(),
        });
    }
    let v: Vec<f64> = traj.states().par_iter().map(|u| moment(u, 2).value).collect();
    let t = traj.times();
    let a = DMatrix::from_fn(t.len(), 3, |i, j| t[i].powi(j as i32));
    let b = DVector::from_column_slice(&v);
    let svd = a.clone().svd(true, true);
    let c = svd
        .solve(&b, 1e-14)
        .map_err(|e| NlsError::LinearAlgebra(e.to_string()))?;
    let resid = &a * &c - &b;
    Ok(ParabolaFit {
        c0: c[0],
        c1: c[1],
        c2: c[2],
        max_fit_residual: resid.amax(),
    })
}

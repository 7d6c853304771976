//! One-parameter group actions on the extended space `V × ℝ` and their
//! infinitesimal generators.
//!
//! | kind        | action on `(u, t)`                                          |
//! |-------------|-------------------------------------------------------------|
//! | phase       | `(e^{−is} u, t)`                                            |
//! | translation | `(u(· − s), t)`                                             |
//! | time shift  | `(u, t − s)`                                                |
//! | Galilean    | `(e^{−its²/2 + ixs} u(· − st), t)`                          |
//! | scaling     | `(s^{2/(p−1)} u(s ·), s^{−2} t)`                            |
//! | SL(2,ℝ)     | `(D^{−1/2} e^{icx²/(2D)} u(x/D), g^{−1}(t))`, `D = ct' + d` |
//!
//! For SL(2,ℝ) the new time is `t' = g^{−1}(t) = (dt − b)/(a − ct)` and the
//! amplitude, chirp and dilation are evaluated at `t'`, where
//! `D = ct' + d = 1/(a − ct)`. This is the form that maps quintic solutions
//! to quintic solutions, and its diagonal element `diag(s, 1/s)` coincides
//! with the scaling action at `p = 5`.

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::grid::{resample, spectral_derivative, translate, ExtTangent, Field};
use crate::hamiltonian::NonlinearityPower;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2Matrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sl2Matrix {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - 1.0).abs() > 1e-12 {
            return Err(NlsError::param("sl2", format!("ad - bc = {det}, expected 1")));
        }
        Ok(Sl2Matrix { a, b, c, d })
    }

    /// `[[cos s, −sin s], [sin s, cos s]]`.
    pub fn rotation(s: f64) -> Self {
        let (sn, cs) = s.sin_cos();
        Sl2Matrix {
            a: cs,
            b: -sn,
            c: sn,
            d: cs,
        }
    }

    pub fn diagonal(a: f64) -> Result<Self> {
        if a == 0.0 {
            return Err(NlsError::param("sl2", "diagonal entry must be nonzero"));
        }
        Ok(Sl2Matrix {
            a,
            b: 0.0,
            c: 0.0,
            d: 1.0 / a,
        })
    }

    /// Möbius action `g(t) = (at + b)/(ct + d)`.
    pub fn mobius(&self, t: f64) -> f64 {
        (self.a * t + self.b) / (self.c * t + self.d)
    }

    pub fn inverse_mobius(&self, t: f64) -> f64 {
        (self.d * t - self.b) / (self.a - self.c * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupElement {
    Phase(f64),
    Translation(f64),
    TimeShift(f64),
    Galilean(f64),
    /// Scale factor `s > 0`; the identity is `s = 1`.
    Scaling(f64),
    Sl2(Sl2Matrix),
}

/// One-parameter subgroups with a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Phase,
    Translation,
    TimeShift,
    Galilean,
    Scaling,
    /// The rotation subgroup of SL(2,ℝ).
    Rotation,
}

impl GroupKind {
    pub const ALL: [GroupKind; 6] = [
        GroupKind::Phase,
        GroupKind::Translation,
        GroupKind::TimeShift,
        GroupKind::Galilean,
        GroupKind::Scaling,
        GroupKind::Rotation,
    ];

    /// Parameter value of the identity element.
    pub fn identity_parameter(self) -> f64 {
        match self {
            GroupKind::Scaling => 1.0,
            _ => 0.0,
        }
    }

    pub fn element(self, s: f64) -> GroupElement {
        match self {
            GroupKind::Phase => GroupElement::Phase(s),
            GroupKind::Translation => GroupElement::Translation(s),
            GroupKind::TimeShift => GroupElement::TimeShift(s),
            GroupKind::Galilean => GroupElement::Galilean(s),
            GroupKind::Scaling => GroupElement::Scaling(s),
            GroupKind::Rotation => GroupElement::Sl2(Sl2Matrix::rotation(s)),
        }
    }
}

/// Transformed point `(u', t')` plus the localization check on `u'`.
#[derive(Debug, Clone)]
pub struct GroupImage {
    pub field: Field,
    pub time: f64,
    pub boundary_fraction: f64,
    pub support_warning: bool,
}

pub fn apply_group(u: &Field, t: f64, g: &GroupElement, p: NonlinearityPower) -> Result<GroupImage> {
    let (field, time) = match *g {
        GroupElement::Phase(s) => (u.scale(Complex64::from_polar(1.0, -s)), t),
        GroupElement::Translation(s) => (translate(u, s), t),
        GroupElement::TimeShift(s) => (u.clone(), t - s),
        GroupElement::Galilean(s) => {
            let moved = translate(u, s * t);
            let field = moved.map_with_x(|x, z| z * Complex64::from_polar(1.0, -0.5 * t * s * s + x * s));
            (field, t)
        }
        GroupElement::Scaling(s) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(NlsError::param("s", "scaling parameter must be positive"));
            }
            let amp = s.powf(2.0 / (p.value() - 1.0));
            (resample(u, s, 0.0).scale_re(amp), t / (s * s))
        }
        GroupElement::Sl2(m) => {
            let denom = m.a - m.c * t;
            if denom.abs() < 1e-12 {
                return Err(NlsError::Sl2Pole { t });
            }
            let dil = 1.0 / denom;
            let amp = dil.abs().powf(-0.5);
            let chirp = 0.5 * m.c / dil;
            let field =
                resample(u, 1.0 / dil, 0.0).map_with_x(|x, z| z * Complex64::from_polar(amp, chirp * x * x));
            (field, m.inverse_mobius(t))
        }
    };
    let boundary_fraction = field.boundary_mass_fraction();
    Ok(GroupImage {
        field,
        time,
        boundary_fraction,
        support_warning: boundary_fraction >= crate::grid::BOUNDARY_MASS_TOL,
    })
}

/// Analytic infinitesimal generator `(d/ds) A(s)(u, t)` at the identity.
pub fn group_generator(kind: GroupKind, u: &Field, t: f64, p: NonlinearityPower) -> ExtTangent {
    let i = Complex64::new(0.0, 1.0);
    match kind {
        GroupKind::Phase => ExtTangent {
            v: u.scale(-i),
            t: 0.0,
        },
        GroupKind::Translation => ExtTangent {
            v: spectral_derivative(u, 1).scale_re(-1.0),
            t: 0.0,
        },
        GroupKind::TimeShift => ExtTangent {
            v: Field::zeros(u.grid()),
            t: -1.0,
        },
        GroupKind::Galilean => {
            let ux = spectral_derivative(u, 1);
            let v = u.map_with_x(|x, z| i * x * z);
            ExtTangent {
                v: Field::lin_comb(1.0, &v, -t, &ux).expect("same grid"),
                t: 0.0,
            }
        }
        GroupKind::Scaling => {
            let ux = spectral_derivative(u, 1);
            let c = 2.0 / (p.value() - 1.0);
            let xux = ux.map_with_x(|x, z| x * z);
            ExtTangent {
                v: Field::lin_comb(c, u, 1.0, &xux).expect("same grid"),
                t: -2.0 * t,
            }
        }
        GroupKind::Rotation => {
            let ux = spectral_derivative(u, 1);
            let a = u.map_with_x(|x, z| z * Complex64::new(-0.5 * t, 0.5 * x * x));
            let b = ux.map_with_x(|x, z| x * z);
            ExtTangent {
                v: Field::lin_comb(1.0, &a, -t, &b).expect("same grid"),
                t: 1.0 + t * t,
            }
        }
    }
}

/// Central difference `(A(s₀+h) − A(s₀−h)) / (2h)` about the identity.
pub fn finite_difference_generator(
    kind: GroupKind,
    u: &Field,
    t: f64,
    p: NonlinearityPower,
    h: f64,
) -> Result<ExtTangent> {
    let s0 = kind.identity_parameter();
    let plus = apply_group(u, t, &kind.element(s0 + h), p)?;
    let minus = apply_group(u, t, &kind.element(s0 - h), p)?;
    let inv = 0.5 / h;
    Ok(ExtTangent {
        v: Field::lin_comb(inv, &plus.field, -inv, &minus.field)?,
        t: (plus.time - minus.time) * inv,
    })
}

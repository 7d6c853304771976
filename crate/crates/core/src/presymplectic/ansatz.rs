//! Parametrized submanifolds `θ ↦ u(θ)` of field space (or of a canonical
//! `ℝ²ⁿ`), their tangent bases and the restriction of `ω`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::grid::{omega, Field, Grid};
use crate::presymplectic::antisym::AntisymMatrix;

/// A vector space carrying the symplectic form the ansatz is restricted from.
pub trait PhasePoint: Clone + Send + Sync + std::fmt::Debug {
    fn omega(&self, other: &Self) -> Result<f64>;
    /// `a·x + b·y`.
    fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Result<Self>;
}

impl PhasePoint for Field {
    fn omega(&self, other: &Self) -> Result<f64> {
        omega(self, other)
    }

    fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Result<Self> {
        Field::lin_comb(a, x, b, y)
    }
}

/// Point `(x, ξ)` of `ℝ²ⁿ` with `ω = Σ dξ_i ∧ dx_i`, that is
/// `ω(a, b) = Σ (a_ξ b_x − a_x b_ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl CanonicalPoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(NlsError::ShapeMismatch {
                expected: x.len(),
                got: xi.len(),
            });
        }
        Ok(CanonicalPoint { x, xi })
    }
}

impl PhasePoint for CanonicalPoint {
    fn omega(&self, other: &Self) -> Result<f64> {
        if self.x.len() != other.x.len() {
            return Err(NlsError::ShapeMismatch {
                expected: self.x.len(),
                got: other.x.len(),
            });
        }
        let s = (0..self.x.len())
            .map(|i| self.xi[i] * other.x[i] - self.x[i] * other.xi[i])
            .sum();
        Ok(s)
    }

    fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Result<Self> {
        if x.x.len() != y.x.len() {
            return Err(NlsError::ShapeMismatch {
                expected: x.x.len(),
                got: y.x.len(),
            });
        }
        let comb = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| a * p + b * q).collect();
        Ok(CanonicalPoint {
            x: comb(&x.x, &y.x),
            xi: comb(&x.xi, &y.xi),
        })
    }
}

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBound {
    pub lo: f64,
    pub hi: f64,
}

impl ParamBound {
    pub const FREE: ParamBound = ParamBound {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn above(lo: f64) -> Self {
        ParamBound {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

pub trait AnsatzManifold: Send + Sync {
    type Point: PhasePoint;

    fn name(&self) -> String;
    fn param_names(&self) -> Vec<&'static str>;
    fn bounds(&self) -> Vec<ParamBound>;
    /// The embedding without the domain check.
    fn embed_raw(&self, theta: &[f64]) -> Result<Self::Point>;

    /// Exact `∂u/∂θ_i`, when the manifold knows them.
    fn analytic_tangents(&self, _theta: &[f64]) -> Option<Result<Vec<Self::Point>>> {
        None
    }

    fn dim(&self) -> usize {
        self.param_names().len()
    }

    fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names().iter().position(|&n| n == name)
    }

    fn embed(&self, theta: &[f64]) -> Result<Self::Point> {
        check_domain(self, theta, None)?;
        self.embed_raw(theta)
    }
}

/// Errors unless `theta` (and `theta ± h` when steps are given) lies inside
/// the parameter box.
pub fn check_domain<M: AnsatzManifold + ?Sized>(m: &M, theta: &[f64], steps: Option<&[f64]>) -> Result<()> {
    let names = m.param_names();
    if theta.len() != names.len() {
        return Err(NlsError::ShapeMismatch {
            expected: names.len(),
            got: theta.len(),
        });
    }
    for (i, (b, &x)) in m.bounds().iter().zip(theta).enumerate() {
        let h = steps.map_or(0.0, |s| s[i]);
        let reason = if !x.is_finite() {
            Some("not finite".to_string())
        } else if !(b.contains(x - h) && b.contains(x + h)) {
            Some(if h > 0.0 {
                format!("θ ± {h:e} must stay inside ({}, {})", b.lo, b.hi)
            } else {
                format!("must lie inside ({}, {})", b.lo, b.hi)
            })
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(NlsError::Domain {
                param: names[i].to_string(),
                value: x,
                reason,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum TangentMode {
    Analytic,
    /// Central differences; `None` selects `1e−5·max(1, |θ_i|)` per parameter.
    CentralDifference(Option<Vec<f64>>),
}

pub fn default_steps(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|x| 1e-5 * x.abs().max(1.0)).collect()
}

/// Tangent basis, analytic when available.
pub fn tangent_basis<M: AnsatzManifold + ?Sized>(m: &M, theta: &[f64]) -> Result<Vec<M::Point>> {
    check_domain(m, theta, None)?;
    match m.analytic_tangents(theta) {
        Some(t) => t,
        None => tangent_basis_with(m, theta, &TangentMode::CentralDifference(None)),
    }
}

pub fn tangent_basis_with<M: AnsatzManifold + ?Sized>(
    m: &M,
    theta: &[f64],
    mode: &TangentMode,
) -> Result<Vec<M::Point>> {
    match mode {
        TangentMode::Analytic => {
            check_domain(m, theta, None)?;
            m.analytic_tangents(theta).unwrap_or_else(|| {
                Err(NlsError::param(
                    "tangent_mode",
                    format!("{} has no analytic tangents", m.name()),
                ))
            })
        }
        TangentMode::CentralDifference(steps) => {
            let steps = steps.clone().unwrap_or_else(|| default_steps(theta));
            if steps.len() != theta.len() || steps.iter().any(|&h| !(h > 0.0)) {
                return Err(NlsError::param("steps", "one positive step per parameter"));
            }
            check_domain(m, theta, Some(&steps))?;
            (0..theta.len())
                .map(|i| {
                    let mut tp = theta.to_vec();
                    let mut tm = theta.to_vec();
                    tp[i] += steps[i];
                    tm[i] -= steps[i];
                    let up = m.embed_raw(&tp)?;
                    let um = m.embed_raw(&tm)?;
                    let inv = 1.0 / (2.0 * steps[i]);
                    M::Point::lin_comb(inv, &up, -inv, &um)
                })
                .collect()
        }
    }
}

/// `Ω_ij = ω(∂_i u, ∂_j u)` after antisymmetrization, with the relative size
/// of the discarded symmetric part.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedForm {
    pub omega: AntisymMatrix,
    pub symmetrization: f64,
}

pub fn omega_from_tangents<P: PhasePoint>(tangents: &[P]) -> Result<RestrictedForm> {
    let k = tangents.len();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = tangents[i].omega(&tangents[j])?;
        }
    }
    let (omega, symmetrization) = AntisymMatrix::from_assembled(m);
    Ok(RestrictedForm {
        omega,
        symmetrization,
    })
}

pub fn omega_matrix<M: AnsatzManifold + ?Sized>(m: &M, theta: &[f64]) -> Result<RestrictedForm> {
    omega_from_tangents(&tangent_basis(m, theta)?)
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// `η sech(η(x − Z)) e^{i(Vx + φ)}`.
pub fn single_soliton_ansatz(grid: &Arc<Grid>, eta: f64, z: f64, v: f64, phi: f64) -> Result<Field> {
    if !(eta > 0.0) {
        return Err(NlsError::Domain {
            param: "eta".into(),
            value: eta,
            reason: "amplitude must be positive".into(),
        });
    }
    Ok(Field::from_fn(grid, |x| {
        Complex64::from_polar(eta * sech(eta * (x - z)), v * x + phi)
    }))
}

/// Parameters of the soliton plus defect-mode family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhwParams {
    pub eta: f64,
    pub z: f64,
    pub v: f64,
    pub phi: f64,
    pub a: f64,
    pub psi: f64,
}

impl GhwParams {
    pub fn from_slice(t: &[f64]) -> Self {
        GhwParams {
            eta: t[0],
            z: t[1],
            v: t[2],
            phi: t[3],
            a: t[4],
            psi: t[5],
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.eta, self.z, self.v, self.phi, self.a, self.psi]
    }
}

fn ghw_check(a: f64, eta: f64, gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(NlsError::param("gamma", "must be positive"));
    }
    if !(a > gamma) {
        return Err(NlsError::Domain {
            param: "a".into(),
            value: a,
            reason: format!("tanh⁻¹(γ/a) needs a > γ = {gamma}"),
        });
    }
    if !(eta >= 0.0) {
        return Err(NlsError::Domain {
            param: "eta".into(),
            value: eta,
            reason: "amplitude must be nonnegative".into(),
        });
    }
    Ok(())
}

/// Soliton part `η sech(ηx − Z) e^{iVx − iφ}` and defect mode
/// `a sech(ax + tanh⁻¹(γ/a)) e^{−i(φ+ψ)}`, returned separately.
pub fn ghw_components(grid: &Arc<Grid>, q: &GhwParams, gamma: f64) -> Result<(Field, Field)> {
    ghw_check(q.a, q.eta, gamma)?;
    let shift = (gamma / q.a).atanh();
    let us = Field::from_fn(grid, |x| {
        Complex64::from_polar(q.eta * sech(q.eta * x - q.z), q.v * x - q.phi)
    });
    let ud = Field::from_fn(grid, |x| {
        Complex64::from_polar(q.a * sech(q.a * x + shift), -(q.phi + q.psi))
    });
    Ok((us, ud))
}

pub fn ghw_ansatz(grid: &Arc<Grid>, q: &GhwParams, gamma: f64) -> Result<Field> {
    let (us, ud) = ghw_components(grid, q, gamma)?;
    Ok(&us + &ud)
}

/// Analytic tangents of the six-parameter family in the order
/// `(η, Z, V, φ, a, ψ)`.
pub fn ghw_tangents(grid: &Arc<Grid>, q: &GhwParams, gamma: f64) -> Result<Vec<Field>> {
    ghw_check(q.a, q.eta, gamma)?;
    let (us, ud) = ghw_components(grid, q, gamma)?;
    let u = &us + &ud;
    let shift = (gamma / q.a).atanh();
    let dshift = -gamma / (q.a * q.a - gamma * gamma);
    let phase_s = |x: f64| Complex64::from_polar(1.0, q.v * x - q.phi);
    let phase_d = Complex64::from_polar(1.0, -(q.phi + q.psi));
    let d_eta = Field::from_fn(grid, |x| {
        let y = q.eta * x - q.z;
        phase_s(x) * (sech(y) - q.eta * x * sech(y) * y.tanh())
    });
    let d_z = Field::from_fn(grid, |x| {
        let y = q.eta * x - q.z;
        phase_s(x) * (q.eta * sech(y) * y.tanh())
    });
    let d_v = us.map_with_x(|x, z| Complex64::new(0.0, x) * z);
    let minus_i = Complex64::new(0.0, -1.0);
    let d_phi = u.scale(minus_i);
    let d_a = Field::from_fn(grid, |x| {
        let w = q.a * x + shift;
        phase_d * (sech(w) - q.a * sech(w) * w.tanh() * (x + dshift))
    });
    let d_psi = ud.scale(minus_i);
    Ok(vec![d_eta, d_z, d_v, d_phi, d_a, d_psi])
}

/// `(η, Z, V, φ) ↦ η sech(η(x − Z)) e^{i(Vx + φ)}`.
#[derive(Debug, Clone)]
pub struct SingleSoliton {
    pub grid: Arc<Grid>,
}

impl AnsatzManifold for SingleSoliton {
    type Point = Field;

    fn name(&self) -> String {
        "single-soliton".into()
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["eta", "Z", "V", "phi"]
    }

    fn bounds(&self) -> Vec<ParamBound> {
        vec![
            ParamBound::above(0.0),
            ParamBound::FREE,
            ParamBound::FREE,
            ParamBound::FREE,
        ]
    }

    fn embed_raw(&self, t: &[f64]) -> Result<Field> {
        single_soliton_ansatz(&self.grid, t[0], t[1], t[2], t[3])
    }

    fn analytic_tangents(&self, t: &[f64]) -> Option<Result<Vec<Field>>> {
        let (eta, z) = (t[0], t[1]);
        Some(self.embed_raw(t).map(|u| {
            let grid = &self.grid;
            let phase = |x: f64| Complex64::from_polar(1.0, t[2] * x + t[3]);
            let d_eta = Field::from_fn(grid, |x| {
                let s = eta * (x - z);
                phase(x) * (sech(s) - s * sech(s) * s.tanh())
            });
            let d_z = Field::from_fn(grid, |x| {
                let s = eta * (x - z);
                phase(x) * (eta * eta * sech(s) * s.tanh())
            });
            let d_v = u.map_with_x(|x, w| Complex64::new(0.0, x) * w);
            let d_phi = u.mul_i();
            vec![d_eta, d_z, d_v, d_phi]
        }))
    }
}

/// The six-parameter soliton plus defect-mode family at fixed `γ`.
#[derive(Debug, Clone)]
pub struct Ghw {
    pub grid: Arc<Grid>,
    pub gamma: f64,
}

impl Ghw {
    pub fn new(grid: Arc<Grid>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(NlsError::param("gamma", "must be positive"));
        }
        Ok(Ghw { grid, gamma })
    }
}

impl AnsatzManifold for Ghw {
    type Point = Field;

    fn name(&self) -> String {
        "ghw".into()
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["eta", "Z", "V", "phi", "a", "psi"]
    }

    fn bounds(&self) -> Vec<ParamBound> {
        let mut b = vec![ParamBound::FREE; 6];
        b[0] = ParamBound::above(0.0);
        b[4] = ParamBound::above(self.gamma);
        b
    }

    fn embed_raw(&self, t: &[f64]) -> Result<Field> {
        ghw_ansatz(&self.grid, &GhwParams::from_slice(t), self.gamma)
    }

    fn analytic_tangents(&self, t: &[f64]) -> Option<Result<Vec<Field>>> {
        Some(ghw_tangents(&self.grid, &GhwParams::from_slice(t), self.gamma))
    }
}

/// The slice `V = Z = 0` of [`Ghw`], parametrized by `(η, φ, a, ψ)`.
#[derive(Debug, Clone)]
pub struct RestrictedGhw(pub Ghw);

impl RestrictedGhw {
    pub fn new(grid: Arc<Grid>, gamma: f64) -> Result<Self> {
        Ok(RestrictedGhw(Ghw::new(grid, gamma)?))
    }

    fn full(t: &[f64]) -> GhwParams {
        GhwParams {
            eta: t[0],
            z: 0.0,
            v: 0.0,
            phi: t[1],
            a: t[2],
            psi: t[3],
        }
    }
}

impl AnsatzManifold for RestrictedGhw {
    type Point = Field;

    fn name(&self) -> String {
        "ghw-restricted".into()
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["eta", "phi", "a", "psi"]
    }

    fn bounds(&self) -> Vec<ParamBound> {
        vec![
            ParamBound::above(0.0),
            ParamBound::FREE,
            ParamBound::above(self.0.gamma),
            ParamBound::FREE,
        ]
    }

    fn embed_raw(&self, t: &[f64]) -> Result<Field> {
        ghw_ansatz(&self.0.grid, &Self::full(t), self.0.gamma)
    }

    fn analytic_tangents(&self, t: &[f64]) -> Option<Result<Vec<Field>>> {
        Some(
            ghw_tangents(&self.0.grid, &Self::full(t), self.0.gamma)
                .map(|all| vec![all[0].clone(), all[3].clone(), all[4].clone(), all[5].clone()]),
        )
    }
}

/// `M = {(x₁, 0, ξ₂², ξ₂)}` in canonical `ℝ⁴`, where
/// `ω|_M = 2ξ₂ dξ₂ ∧ dx₁` vanishes on `ξ₂ = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FiniteExample;

impl AnsatzManifold for FiniteExample {
    type Point = CanonicalPoint;

    fn name(&self) -> String {
        "finite-example".into()
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["x1", "xi2"]
    }

    fn bounds(&self) -> Vec<ParamBound> {
        vec![ParamBound::FREE; 2]
    }

    fn embed_raw(&self, t: &[f64]) -> Result<CanonicalPoint> {
        CanonicalPoint::new(vec![t[0], 0.0], vec![t[1] * t[1], t[1]])
    }

    fn analytic_tangents(&self, t: &[f64]) -> Option<Result<Vec<CanonicalPoint>>> {
        Some((|| {
            Ok(vec![
                CanonicalPoint::new(vec![1.0, 0.0], vec![0.0, 0.0])?,
                CanonicalPoint::new(vec![0.0, 0.0], vec![2.0 * t[1], 1.0])?,
            ])
        })())
    }
}

/// Nondegenerate linear toy: `(q, p) ↦ (q, p + s·Jq)` in canonical `ℝ^{2n}`
/// with `n ∈ {1, 2}` and `J` swapping the two position slots. `Pf(Ω) = ±1`.
#[derive(Debug, Clone, Copy)]
pub struct ToyCanonical {
    pub dof: usize,
    pub shear: f64,
}

impl ToyCanonical {
    pub fn new(dim: usize, shear: f64) -> Result<Self> {
        match dim {
            2 | 4 => Ok(ToyCanonical { dof: dim / 2, shear }),
            _ => Err(NlsError::param("dim", "toy manifold has dimension 2 or 4")),
        }
    }
}

impl AnsatzManifold for ToyCanonical {
    type Point = CanonicalPoint;

    fn name(&self) -> String {
        format!("toy{}", 2 * self.dof)
    }

    fn param_names(&self) -> Vec<&'static str> {
        if self.dof == 1 {
            vec!["q1", "p1"]
        } else {
            vec!["q1", "p1", "q2", "p2"]
        }
    }

    fn bounds(&self) -> Vec<ParamBound> {
        vec![ParamBound::FREE; 2 * self.dof]
    }

    fn embed_raw(&self, t: &[f64]) -> Result<CanonicalPoint> {
        if self.dof == 1 {
            CanonicalPoint::new(vec![t[0]], vec![t[1] + self.shear * t[0]])
        } else {
            CanonicalPoint::new(
                vec![t[0], t[2]],
                vec![t[1] + self.shear * t[2], t[3] + self.shear * t[0]],
            )
        }
    }
}

/// Reparametrization `θ_i = c·θ'_i` of another manifold.
#[derive(Debug, Clone)]
pub struct Rescaled<M> {
    pub inner: M,
    pub index: usize,
    pub factor: f64,
}

impl<M: AnsatzManifold> Rescaled<M> {
    pub fn new(inner: M, index: usize, factor: f64) -> Result<Self> {
        if index >= inner.dim() {
            return Err(NlsError::param("index", "no such parameter"));
        }
        if !(factor != 0.0 && factor.is_finite()) {
            return Err(NlsError::param("factor", "must be finite and nonzero"));
        }
        Ok(Rescaled { inner, index, factor })
    }

    fn map(&self, t: &[f64]) -> Vec<f64> {
        let mut s = t.to_vec();
        s[self.index] *= self.factor;
        s
    }
}

impl<M: AnsatzManifold> AnsatzManifold for Rescaled<M> {
    type Point = M::Point;

    fn name(&self) -> String {
        format!("{}-rescaled", self.inner.name())
    }

    fn param_names(&self) -> Vec<&'static str> {
        self.inner.param_names()
    }

    fn bounds(&self) -> Vec<ParamBound> {
        let mut b = self.inner.bounds();
        let ParamBound { lo, hi } = b[self.index];
        let (x, y) = (lo / self.factor, hi / self.factor);
        b[self.index] = ParamBound {
            lo: x.min(y),
            hi: x.max(y),
        };
        b
    }

    fn embed_raw(&self, t: &[f64]) -> Result<M::Point> {
        self.inner.embed_raw(&self.map(t))
    }

    fn analytic_tangents(&self, t: &[f64]) -> Option<Result<Vec<M::Point>>> {
        let tangents = self.inner.analytic_tangents(&self.map(t))?;
        Some(tangents.and_then(|mut v| {
            let scaled = M::Point::lin_comb(self.factor, &v[self.index], 0.0, &v[self.index])?;
            v[self.index] = scaled;
            Ok(v)
        }))
    }
}

/// The manifold multiplied by the constant phase `e^{iβ}`.
#[derive(Debug, Clone)]
pub struct PhaseRotated<M> {
    pub inner: M,
    pub angle: f64,
}

impl<M: AnsatzManifold<Point = Field>> AnsatzManifold for PhaseRotated<M> {
    type Point = Field;

    fn name(&self) -> String {
        format!("{}-rotated", self.inner.name())
    }

    fn param_names(&self) -> Vec<&'static str> {
        self.inner.param_names()
    }

    fn bounds(&self) -> Vec<ParamBound> {
        self.inner.bounds()
    }

    fn embed_raw(&self, t: &[f64]) -> Result<Field> {
        let c = Complex64::from_polar(1.0, self.angle);
        self.inner.embed_raw(t).map(|u| u.scale(c))
    }

    fn analytic_tangents(&self, t: &[f64]) -> Option<Result<Vec<Field>>> {
        let c = Complex64::from_polar(1.0, self.angle);
        let tangents = self.inner.analytic_tangents(t)?;
        Some(tangents.map(|v| v.into_iter().map(|f| f.scale(c)).collect()))
    }
}

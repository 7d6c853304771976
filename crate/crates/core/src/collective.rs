//! Collective-coordinate dynamics on an ansatz manifold.
//!
//! Restricting `L = ½ω(u, u_t) − H(u)` to `u = u(θ)` gives
//! `L|_M = ½ Σ_j θ̇_j ω(u(θ), ∂_j u) − H(u(θ))`, whose Euler–Lagrange
//! equations are `Ω(θ) θ̇ = ∇_θ H` with `Ω_ij = ω(∂_i u, ∂_j u)`.
//! Nothing here regularizes a singular `Ω`: near-degenerate points are
//! reported as [`NlsError::Degenerate`].

use nalgebra::{DMatrix, DVector};

use crate::error::{NlsError, Result};
use crate::grid::{inner, interpolate_at, moment, Field};
use crate::hamiltonian::{grad_h, hamiltonian, NonlinearityPower};
use crate::noether::{mass, momentum};
use crate::presymplectic::{
    check_domain, omega_from_tangents, tangent_basis_with, AnsatzManifold, TangentMode,
};
use crate::propagator::{evolve, StepConfig};

/// Condition number of `Ω` at which the solve is refused.
pub const DEGENERACY_CONDITION: f64 = 1e8;
/// Relative step of the central-difference gradient of `H(θ)`.
pub const GRADIENT_FD_STEP: f64 = 1e-6;

pub fn effective_hamiltonian<M>(m: &M, theta: &[f64], p: NonlinearityPower) -> Result<f64>
where
    M: AnsatzManifold<Point = Field> + ?Sized,
{
    Ok(hamiltonian(&m.embed(theta)?, p))
}

fn fd_gradient<M>(m: &M, theta: &[f64], p: NonlinearityPower) -> Result<Vec<f64>>
where
    M: AnsatzManifold<Point = Field> + ?Sized,
{
    let steps: Vec<f64> = theta
        .iter()
        .map(|x| GRADIENT_FD_STEP * x.abs().max(1.0))
        .collect();
    check_domain(m, theta, Some(&steps))?;
    (0..theta.len())
        .map(|i| {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += steps[i];
            tm[i] -= steps[i];
            let hp = hamiltonian(&m.embed_raw(&tp)?, p);
            let hm = hamiltonian(&m.embed_raw(&tm)?, p);
            Ok((hp - hm) / (2.0 * steps[i]))
        })
        .collect()
}

fn chain_rule_gradient(u: &Field, tangents: &[Field], p: NonlinearityPower) -> Result<Vec<f64>> {
    let g = grad_h(u, p);
    tangents.iter().map(|t| inner(&g, t)).collect()
}

/// `∇_θ H(u(θ))`, by the chain rule `⟨grad H, ∂_i u⟩` when the manifold has
/// analytic tangents and by central differences otherwise.
pub fn effective_gradient<M>(m: &M, theta: &[f64], p: NonlinearityPower) -> Result<Vec<f64>>
where
    M: AnsatzManifold<Point = Field> + ?Sized,
{
    check_domain(m, theta, None)?;
    match m.analytic_tangents(theta) {
        Some(t) => chain_rule_gradient(&m.embed_raw(theta)?, &t?, p),
        None => fd_gradient(m, theta, p),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRhs {
    pub theta_dot: Vec<f64>,
    pub grad_h: Vec<f64>,
    pub condition: f64,
    /// `‖Ωθ̇ − ∇H‖ / ‖∇H‖`.
    pub residual: f64,
}

/// Solves `Ω(θ) θ̇ = ∇_θ H`.
pub fn effective_rhs<M>(m: &M, theta: &[f64], p: NonlinearityPower) -> Result<EffectiveRhs>
where
    M: AnsatzManifold<Point = Field> + ?Sized,
{
    check_domain(m, theta, None)?;
    let (tangents, grad) = match m.analytic_tangents(theta) {
        Some(t) => {
            let t = t?;
            let g = chain_rule_gradient(&m.embed_raw(theta)?, &t, p)?;
            (t, g)
        }
        None => (
            tangent_basis_with(m, theta, &TangentMode::CentralDifference(None))?,
            fd_gradient(m, theta, p)?,
        ),
    };
    let form = omega_from_tangents(&tangents)?;
    let condition = form.omega.condition_number();
    if !(condition < DEGENERACY_CONDITION) {
        return Err(NlsError::Degenerate {
            condition,
            kernel: form.omega.kernel_direction(),
        });
    }
    let a: &DMatrix<f64> = form.omega.matrix();
    let b = DVector::from_column_slice(&grad);
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| NlsError::LinearAlgebra("singular restricted form".into()))?;
    // one step of iterative refinement
    if let Some(dx) = lu.solve(&(&b - a * &x)) {
        x += dx;
    }
    let bn = b.norm();
    let residual = if bn > 0.0 { (a * &x - &b).norm() / bn } else { 0.0 };
    Ok(EffectiveRhs {
        theta_dot: x.iter().copied().collect(),
        grad_h: grad,
        condition,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveState {
    pub theta: Vec<f64>,
    pub time: f64,
    pub omega_condition: f64,
}

#[derive(Debug)]
pub struct EffectiveRun {
    pub states: Vec<EffectiveState>,
    /// `H(u(θ))` at each state.
    pub energies: Vec<f64>,
    /// Largest `Ωθ̇ = ∇H` residual over accepted steps.
    pub max_residual: f64,
    /// Why the run stopped early, if it did.
    pub halted: Option<NlsError>,
}

impl EffectiveRun {
    pub fn last(&self) -> &EffectiveState {
        self.states.last().expect("run holds at least its initial state")
    }

    /// `max |H(θ(t)) − H(θ(0))| / |H(θ(0))|`.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.energies[0];
        let d = self.energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max);
        d / h0.abs().max(f64::MIN_POSITIVE)
    }
}

fn axpy(theta: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    theta.iter().zip(k).map(|(t, d)| t + h * d).collect()
}

/// Classical RK4 for `θ̇ = Ω⁻¹∇H` from `times[0]`, recording a state at each
/// requested time; each interval is split into steps no longer than
/// `max_step`. A degenerate or out-of-domain start is an error; failures
/// later on end the run with `halted` set.
pub fn integrate_effective_at<M>(
    m: &M,
    theta0: &[f64],
    p: NonlinearityPower,
    times: &[f64],
    max_step: f64,
) -> Result<EffectiveRun>
where
    M: AnsatzManifold<Point = Field> + ?Sized,
{
    if !(max_step > 0.0) {
        return Err(NlsError::param("dt", "must be positive"));
    }
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(NlsError::param("times", "must be nonempty and increasing"));
    }
    let mut theta = theta0.to_vec();
    let mut rhs = effective_rhs(m, &theta, p)?;
    let mut run = EffectiveRun {
        states: vec![EffectiveState {
            theta: theta.clone(),
            time: times[0],
            omega_condition: rhs.condition,
        }],
        energies: vec![effective_hamiltonian(m, &theta, p)?],
        max_residual: rhs.residual,
        halted: None,
    };
    let f = |th: &[f64]| effective_rhs(m, th, p);
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let nsub = (span / max_step - 1e-9).ceil().max(1.0) as usize;
        let h = span / nsub as f64;
        for _ in 0..nsub {
            let step = (|| -> Result<(Vec<f64>, EffectiveRhs)> {
                let k1 = &rhs.theta_dot;
                let k2 = f(&axpy(&theta, 0.5 * h, k1))?.theta_dot;
                let k3 = f(&axpy(&theta, 0.5 * h, &k2))?.theta_dot;
                let k4 = f(&axpy(&theta, h, &k3))?.theta_dot;
                let next: Vec<f64> = (0..theta.len())
                    .map(|i| theta[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect();
                let r = f(&next)?;
                Ok((next, r))
            })();
            match step {
                Ok((next, r)) => {
                    theta = next;
                    run.max_residual = run.max_residual.max(r.residual);
                    rhs = r;
                }
                Err(e) => {
                    run.halted = Some(e);
                    return Ok(run);
                }
            }
        }
        run.states.push(EffectiveState {
            theta: theta.clone(),
            time: w[1],
            omega_condition: rhs.condition,
        });
        run.energies.push(effective_hamiltonian(m, &theta, p)?);
    }
    Ok(run)
}

/// [`integrate_effective_at`] on `0, dt, 2dt, …, t_final`.
pub fn integrate_effective<M>(
    m: &M,
    theta0: &[f64],
    p: NonlinearityPower,
    dt: f64,
    t_final: f64,
) -> Result<EffectiveRun>
where
    M: AnsatzManifold<Point = Field> + ?Sized,
{
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(NlsError::param("dt", "dt and t_final must be positive"));
    }
    let n = (t_final / dt - 1e-9).ceil() as usize;
    let times: Vec<f64> = (0..=n)
        .map(|i| if i == n { t_final } else { i as f64 * dt })
        .collect();
    integrate_effective_at(m, theta0, p, &times, dt)
}

pub const OBSERVABLES: [&str; 4] = ["mass", "centroid", "momentum", "phase"];

/// Mass, centroid `∫x|u|²/∫|u|²`, momentum and `arg u` at the centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub mass: f64,
    pub centroid: f64,
    pub momentum: f64,
    pub phase: f64,
}

impl Observables {
    pub fn of(u: &Field) -> Self {
        let m = mass(u);
        let centroid = moment(u, 1).value / m;
        Observables {
            mass: m,
            centroid,
            momentum: momentum(u),
            phase: interpolate_at(u, centroid).arg(),
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.mass, self.centroid, self.momentum, self.phase]
    }

    /// Componentwise `|self − other|`, the phase difference wrapped to `[0, π]`.
    pub fn deviation(&self, other: &Observables) -> [f64; 4] {
        let dphi = (self.phase - other.phase + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
            - std::f64::consts::PI;
        [
            (self.mass - other.mass).abs(),
            (self.centroid - other.centroid).abs(),
            (self.momentum - other.momentum).abs(),
            dphi.abs(),
        ]
    }
}

#[derive(Debug)]
pub struct Comparison {
    pub times: Vec<f64>,
    pub pde: Vec<Observables>,
    pub ansatz: Vec<Observables>,
    pub effective: EffectiveRun,
}

impl Comparison {
    /// Largest deviation of each observable over the run, in [`OBSERVABLES`] order.
    pub fn max_deviation(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (a, b) in self.pde.iter().zip(&self.ansatz) {
            for (o, d) in out.iter_mut().zip(a.deviation(b)) {
                *o = f64::max(*o, d);
            }
        }
        out
    }

    pub fn max_deviation_of(&self, name: &str) -> Option<f64> {
        OBSERVABLES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.max_deviation()[i])
    }
}

/// Evolves `u(θ₀)` (plus an optional perturbation) with the PDE and `θ₀`
/// with the effective equations, and compares observables at the PDE's
/// record times. The effective step is `dt · stride`.
pub fn compare_with_pde<M>(
    m: &M,
    theta0: &[f64],
    p: NonlinearityPower,
    cfg: &StepConfig,
    perturbation: Option<&Field>,
) -> Result<Comparison>
where
    M: AnsatzManifold<Point = Field> + ?Sized,
{
    let base = m.embed(theta0)?;
    let u0 = match perturbation {
        Some(d) => &base + d,
        None => base,
    };
    let traj = evolve(&u0, p, cfg)?;
    let times = traj.times().to_vec();
    let mut effective = integrate_effective_at(m, theta0, p, &times, cfg.dt * cfg.observer_stride as f64)?;
    if let Some(e) = effective.halted.take() {
        return Err(e);
    }
    let pde = traj.states().iter().map(Observables::of).collect();
    let ansatz = effective
        .states
        .iter()
        .map(|s| m.embed(&s.theta).map(|u| Observables::of(&u)))
        .collect::<Result<_>>()?;
    Ok(Comparison {
        times,
        pde,
        ansatz,
        effective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::presymplectic::SingleSoliton;

    fn soliton() -> SingleSoliton {
        SingleSoliton {
            grid: Grid::new(512, 40.0).unwrap(),
        }
    }

    #[test]
    fn effective_hamiltonian_of_soliton() {
        let m = soliton();
        let h = effective_hamiltonian(&m, &[1.0, 0.0, 0.5, 0.0], NonlinearityPower::CUBIC).unwrap();
        assert!((h - (-1.0 / 6.0 + 1.0 / 8.0)).abs() < 1e-7);
        let h = effective_hamiltonian(&m, &[0.8, 0.0, 0.0, 0.0], NonlinearityPower::CUBIC).unwrap();
        assert!((h + 0.8f64.powi(3) / 6.0).abs() < 1e-7);
    }

    #[test]
    fn gradient_is_blind_to_position_and_phase() {
        let m = soliton();
        let theta = [1.1, 0.3, 0.4, 0.2];
        let g = effective_gradient(&m, &theta, NonlinearityPower::CUBIC).unwrap();
        let fd = fd_gradient(&m, &theta, NonlinearityPower::CUBIC).unwrap();
        assert!(g[1].abs() < 1e-8 && g[3].abs() < 1e-8);
        assert!(fd[1].abs() < 1e-8 && fd[3].abs() < 1e-8);
        // ∂H/∂η = −η²/2 + V²/2, ∂H/∂V = ηV
        assert!((g[0] - (-0.5 * 1.21 + 0.08)).abs() < 1e-8);
        assert!((g[2] - 0.44).abs() < 1e-8);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn free_soliton_velocity() {
        let m = soliton();
        let r = effective_rhs(&m, &[1.0, 0.0, 0.3, 0.0], NonlinearityPower::CUBIC).unwrap();
        let v = &r.theta_dot;
        assert!(v[0].abs() < 1e-6 && v[2].abs() < 1e-6);
        assert!((v[1] - 0.3).abs() < 1e-6);
        assert!((v[3] - 0.455).abs() < 1e-8);
        assert!(r.residual < 1e-10);

        let r = effective_rhs(&m, &[1.4, 2.0, 0.0, 0.0], NonlinearityPower::CUBIC).unwrap();
        assert!(r.theta_dot[0].abs() < 1e-8 && r.theta_dot[1].abs() < 1e-8);
    }

    #[test]
    fn resting_soliton_only_rotates() {
        let m = soliton();
        let run =
            integrate_effective(&m, &[1.0, 0.5, 0.0, 0.0], NonlinearityPower::CUBIC, 0.05, 1.0).unwrap();
        assert!(run.halted.is_none());
        let last = run.last();
        for i in 0..3 {
            assert!((last.theta[i] - [1.0, 0.5, 0.0][i]).abs() < 1e-8);
        }
        assert!((last.theta[3] - 0.5).abs() < 1e-8);
        assert_eq!(run.states.len(), 21);
    }

    #[test]
    fn observables_of_boosted_soliton() {
        let m = soliton();
        let u = m.embed(&[1.0, 1.5, 0.3, 0.2]).unwrap();
        let o = Observables::of(&u);
        assert!((o.mass - 2.0).abs() < 1e-10);
        assert!((o.centroid - 1.5).abs() < 1e-9);
        assert!((o.momentum - 0.6).abs() < 1e-9);
        assert!((o.phase - (0.3 * 1.5 + 0.2)).abs() < 1e-9);
        let shifted = Observables {
            phase: o.phase + 2.0 * std::f64::consts::PI - 1e-3,
            ..o
        };
        assert!((o.deviation(&shifted)[3] - 1e-3).abs() < 1e-12);
    }
}

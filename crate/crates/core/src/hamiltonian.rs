//! The Hamiltonian of the focusing power-law NLS and the geometric objects
//! built from it on the extended space `V × ℝ`:
//!
//! ```text
//! H(u)            = ∫ ¼|u_x|² − |u|^{p+1}/(p+1)
//! dH_u            = −½ u_xx − |u|^{p−1} u            (L² gradient)
//! Ξ_H(u)          = (1/i) dH_u                       ω(v, Ξ_H) = dH_u(v)
//! α_(u,t)(v, T)   = ½ ω(u, v) − H(u) T
//! ω̃((v₁,T₁),(v₂,T₂)) = ω(v₁,v₂) − dH(v₁) T₂ + dH(v₂) T₁
//! L(u, u̇)         = ½ ω(u, u̇) − H(u)
//! ```

use num_complex::Complex64;
use rand::Rng;

use crate::error::{NlsError, Result};
use crate::grid::{inner, omega, spectral_derivative, ExtTangent, Field};
use crate::samples::random_smooth_field;

/// Exponent `p > 1` of the focusing nonlinearity `|u|^{p−1} u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityPower(f64);

impl NonlinearityPower {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(NlsError::param("p", format!("{p} must be a finite real > 1")));
        }
        Ok(NonlinearityPower(p))
    }

    pub const CUBIC: NonlinearityPower = NonlinearityPower(3.0);
    pub const QUINTIC: NonlinearityPower = NonlinearityPower(5.0);

    pub fn value(self) -> f64 {
        self.0
    }

    /// `|u|^{p−1}` from `|u|²`, computed as `(|u|²)^{(p−1)/2}`.
    #[inline]
    pub fn potential_factor(self, abs2: f64) -> f64 {
        if self.0 == 3.0 {
            abs2
        } else if self.0 == 5.0 {
            abs2 * abs2
        } else {
            abs2.powf(0.5 * (self.0 - 1.0))
        }
    }

    /// `|u|^{p+1}` from `|u|²`.
    #[inline]
    pub fn potential_density(self, abs2: f64) -> f64 {
        abs2 * self.potential_factor(abs2)
    }
}

/// A sampled curve `t ↦ u(t)`; append-only while being built.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Field>,
    power: NonlinearityPower,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Field>, power: NonlinearityPower) -> Result<Self> {
        if times.len() != states.len() {
            return Err(NlsError::ShapeMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        if states.is_empty() {
            return Err(NlsError::TooFewStates { needed: 1, got: 0 });
        }
        let mut traj = Trajectory {
            times: Vec::with_capacity(times.len()),
            states: Vec::with_capacity(states.len()),
            power,
        };
        for (t, u) in times.into_iter().zip(states) {
            traj.push(t, u)?;
        }
        Ok(traj)
    }

    pub(crate) fn empty(power: NonlinearityPower) -> Self {
        Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            power,
        }
    }

    pub fn push(&mut self, t: f64, u: Field) -> Result<()> {
        if !t.is_finite() {
            return Err(NlsError::NonFinite("trajectory time"));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(NlsError::param("times", "must be strictly increasing"));
            }
            if !self.states[0].grid().same_as(u.grid()) {
                return Err(NlsError::GridMismatch);
            }
        }
        self.times.push(t);
        self.states.push(u);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn power(&self) -> NonlinearityPower {
        self.power
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().copied().zip(self.states.last())
    }

    /// Uniform step, if all spacings agree to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
            .then_some(h)
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform_step().is_some()
    }
}

/// Discrete `H(u)`: kinetic part in Fourier space (all modes, including
/// Nyquist, so it matches [`grad_h`] exactly), potential part pointwise.
pub fn hamiltonian(u: &Field, p: NonlinearityPower) -> f64 {
    kinetic_energy(u) - potential_energy(u, p)
}

/// `¼ ∫ |u_x|²` via Parseval.
pub fn kinetic_energy(u: &Field) -> f64 {
    let grid = u.grid();
    let spec = u.spectrum();
    let n = grid.n() as f64;
    let s: f64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .map(|(z, &k)| k * k * z.norm_sqr())
        .sum();
    0.25 * grid.length() / (n * n) * s
}

/// `∫ |u|^{p+1} / (p+1)`.
pub fn potential_energy(u: &Field, p: NonlinearityPower) -> f64 {
    let s: f64 = u.values().iter().map(|z| p.potential_density(z.norm_sqr())).sum();
    u.grid().dx() * s / (p.value() + 1.0)
}

/// L² gradient `−½ u_xx − |u|^{p−1} u`.
pub fn grad_h(u: &Field, p: NonlinearityPower) -> Field {
    let uxx = spectral_derivative(u, 2);
    let values = u
        .values()
        .iter()
        .zip(uxx.values())
        .map(|(&z, &d)| -0.5 * d - z * p.potential_factor(z.norm_sqr()))
        .collect();
    Field::from_raw(u.grid().clone(), values)
}

/// `dH_u(v) = <grad_h(u), v>`.
pub fn dh(u: &Field, p: NonlinearityPower, v: &Field) -> Result<f64> {
    inner(&grad_h(u, p), v)
}

/// Hamiltonian vector field `(1/i) dH_u`.
pub fn hamiltonian_vf(u: &Field, p: NonlinearityPower) -> Field {
    grad_h(u, p).map(|z| z * Complex64::new(0.0, -1.0))
}

/// `α_(u,t)(v, T) = ½ ω(u, v) − H(u) T`; independent of `t` for this flow.
pub fn alpha(u: &Field, _t: f64, xt: &ExtTangent, p: NonlinearityPower) -> Result<f64> {
    Ok(0.5 * omega(u, &xt.v)? - hamiltonian(u, p) * xt.t)
}

/// Exterior derivative of `α` at `u`, antisymmetric in its two arguments.
pub fn omega_ext(u: &Field, p: NonlinearityPower, a: &ExtTangent, b: &ExtTangent) -> Result<f64> {
    let g = grad_h(u, p);
    omega_ext_with_gradient(&g, a, b)
}

fn omega_ext_with_gradient(g: &Field, a: &ExtTangent, b: &ExtTangent) -> Result<f64> {
    Ok(omega(&a.v, &b.v)? - inner(g, &a.v)? * b.t + inner(g, &b.v)? * a.t)
}

/// Largest normalized pairing `|ω̃((Ξ_H, 1), X)| / (|(Ξ_H,1)| |X|)` over
/// `n_samples` random unit directions `X = (v, T)`.
///
/// Zero (up to roundoff) says `(Ξ_H, 1)` spans the kernel of `ω̃`.
pub fn kernel_residual<R: Rng + ?Sized>(
    u: &Field,
    p: NonlinearityPower,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(NlsError::param("n_samples", "must be at least 1"));
    }
    let g = grad_h(u, p);
    let xi = ExtTangent {
        v: g.map(|z| z * Complex64::new(0.0, -1.0)),
        t: 1.0,
    };
    let xi_norm = xi.norm();
    let mut worst: f64 = 0.0;
    for _ in 0..n_samples {
        let v = random_smooth_field(u.grid(), rng, 8);
        let x = ExtTangent {
            v,
            t: rng.gen_range(-1.0..1.0),
        };
        let nrm = x.norm();
        let x = ExtTangent {
            v: x.v.scale_re(1.0 / nrm),
            t: x.t / nrm,
        };
        let val = omega_ext_with_gradient(&g, &xi, &x)?;
        worst = worst.max(val.abs() / (xi_norm * x.norm()));
    }
    Ok(worst)
}

/// `L(u, u̇) = ½ ω(u, u̇) − H(u)`.
pub fn lagrangian(u: &Field, udot: &Field, p: NonlinearityPower) -> Result<f64> {
    Ok(0.5 * omega(u, udot)? - hamiltonian(u, p))
}

/// Time derivatives of a stored curve: centered differences inside,
/// first-order one-sided differences at the two ends.
pub fn time_derivatives(traj: &Trajectory) -> Result<Vec<Field>> {
    let (t, u) = (traj.times(), traj.states());
    let n = t.len();
    if n < 2 {
        return Err(NlsError::TooFewStates { needed: 2, got: n });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        let h = t[hi] - t[lo];
        out.push(Field::lin_comb(1.0 / h, &u[hi], -1.0 / h, &u[lo])?);
    }
    Ok(out)
}

/// Discrete action `∫ L(u, u̇) dt`: trapezoidal rule in time over the stored
/// curve, with `u̇` from [`time_derivatives`].
///
/// With trapezoid weights and one-sided end differences the discrete
/// Euler–Lagrange equations at interior nodes read
/// `(u_{n+1} − u_{n−1}) / (2Δt) = Ξ_H(u_n)`, so flow solutions are
/// stationary up to `O(Δt²)`.
pub fn action(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(NlsError::TooFewStates {
            needed: 3,
            got: traj.len(),
        });
    }
    let p = traj.power();
    let udots = time_derivatives(traj)?;
    let lags = traj
        .states()
        .iter()
        .zip(&udots)
        .map(|(u, ud)| lagrangian(u, ud, p))
        .collect::<Result<Vec<f64>>>()?;
    let t = traj.times();
    Ok(t.windows(2)
        .zip(lags.windows(2))
        .map(|(tw, lw)| 0.5 * (tw[1] - tw[0]) * (lw[0] + lw[1]))
        .sum())
}

/// Centered first variation `(S(γ + ε δ) − S(γ − ε δ)) / (2ε)` for a
/// perturbation `δ` that vanishes at both ends of the time interval.
pub fn first_variation(traj: &Trajectory, pert: &[Field], eps: f64) -> Result<f64> {
    if pert.len() != traj.len() {
        return Err(NlsError::ShapeMismatch {
            expected: traj.len(),
            got: pert.len(),
        });
    }
    let pinned = |f: &Field| f.values().iter().all(|z| z.re == 0.0 && z.im == 0.0);
    if !pinned(&pert[0]) || !pinned(&pert[pert.len() - 1]) {
        return Err(NlsError::PerturbationNotPinned);
    }
    let shifted = |sign: f64| -> Result<Trajectory> {
        let states = traj
            .states()
            .iter()
            .zip(pert)
            .map(|(u, d)| Field::lin_comb(1.0, u, sign * eps, d))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(traj.times().to_vec(), states, traj.power())
    };
    let plus = action(&shifted(1.0)?)?;
    let minus = action(&shifted(-1.0)?)?;
    Ok((plus - minus) / (2.0 * eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    fn sech_field() -> Field {
        Field::from_real_fn(&Grid::new(512, 40.0).unwrap(), sech)
    }

    #[test]
    fn power_validation() {
        assert!(NonlinearityPower::new(1.0).is_err());
        assert!(NonlinearityPower::new(f64::NAN).is_err());
        let p = NonlinearityPower::new(2.5).unwrap();
        assert!((p.potential_factor(4.0) - 4.0f64.powf(0.75)).abs() < 1e-15);
        assert_eq!(p.potential_factor(0.0), 0.0);
    }

    #[test]
    fn hamiltonian_of_solitons() {
        let u = sech_field();
        assert_eq!(
            hamiltonian(&Field::zeros(u.grid()), NonlinearityPower::CUBIC),
            0.0
        );
        assert!((hamiltonian(&u, NonlinearityPower::CUBIC) + 1.0 / 6.0).abs() < 1e-8);
        let eta = 2.0;
        let u2 = Field::from_real_fn(u.grid(), |x| eta * sech(eta * x));
        assert!((hamiltonian(&u2, NonlinearityPower::CUBIC) + 8.0 / 6.0).abs() < 1e-7);
    }

    #[test]
    fn hamiltonian_is_gauge_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::new(256, 40.0).unwrap();
        let u = random_smooth_field(&g, &mut rng, 6);
        let p = NonlinearityPower::new(3.7).unwrap();
        let rotated = u.scale(Complex64::from_polar(1.0, 0.83));
        assert!((hamiltonian(&u, p) - hamiltonian(&rotated, p)).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_plane_wave() {
        let g = Grid::new(64, 2.0 * PI * 3.0).unwrap();
        let k = 2.0 * PI / g.length();
        let u = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k * x));
        let gr = grad_h(&u, NonlinearityPower::CUBIC);
        for (a, b) in gr.values().iter().zip(u.values()) {
            assert!((a - b * (0.5 * k * k - 1.0)).norm() < 1e-10);
        }
        assert!(grad_h(&Field::zeros(&g), NonlinearityPower::CUBIC).max_abs() == 0.0);
    }

    #[test]
    fn hamiltonian_vf_is_term_by_term() {
        let u = sech_field();
        let xi = hamiltonian_vf(&u, NonlinearityPower::CUBIC);
        let uxx = spectral_derivative(&u, 2);
        for ((a, z), d) in xi.values().iter().zip(u.values()).zip(uxx.values()) {
            let manual = Complex64::new(0.0, -1.0) * (-0.5 * d - z * z.norm_sqr());
            assert!((a - manual).norm() < 1e-12);
        }
    }

    #[test]
    fn alpha_examples() {
        let u = sech_field();
        let p = NonlinearityPower::CUBIC;
        let h = hamiltonian(&u, p);
        let a = alpha(&u, 0.3, &ExtTangent::new(Field::zeros(u.grid()), 1.0).unwrap(), p).unwrap();
        assert_eq!(a, -h);
        let a = alpha(&u, 0.0, &ExtTangent::new(u.mul_i(), 0.0).unwrap(), p).unwrap();
        assert!((a + 1.0).abs() < 1e-10);
    }

    #[test]
    fn alpha_is_linear_in_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid::new(256, 40.0).unwrap();
        let p = NonlinearityPower::QUINTIC;
        let u = random_smooth_field(&g, &mut rng, 6);
        let v1 = random_smooth_field(&g, &mut rng, 6);
        let v2 = random_smooth_field(&g, &mut rng, 6);
        let (t1, t2) = (0.4, -1.3);
        let sum = alpha(&u, 0.0, &ExtTangent::new(&v1 + &v2, t1 + t2).unwrap(), p).unwrap();
        let parts = alpha(&u, 0.0, &ExtTangent::new(v1, t1).unwrap(), p).unwrap()
            + alpha(&u, 0.0, &ExtTangent::new(v2, t2).unwrap(), p).unwrap();
        assert!((sum - parts).abs() < 1e-12 * (1.0 + sum.abs()));
    }

    #[test]
    fn omega_ext_is_antisymmetric_and_reduces_to_omega() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Grid::new(256, 40.0).unwrap();
        let p = NonlinearityPower::CUBIC;
        let u = random_smooth_field(&g, &mut rng, 6);
        let a = ExtTangent::new(random_smooth_field(&g, &mut rng, 6), 0.7).unwrap();
        let b = ExtTangent::new(random_smooth_field(&g, &mut rng, 6), -0.2).unwrap();
        let ab = omega_ext(&u, p, &a, &b).unwrap();
        let ba = omega_ext(&u, p, &b, &a).unwrap();
        assert!((ab + ba).abs() < 1e-12 * (1.0 + ab.abs()));
        assert!(omega_ext(&u, p, &a, &a).unwrap().abs() < 1e-12);
        let a0 = ExtTangent::new(a.v.clone(), 0.0).unwrap();
        let b0 = ExtTangent::new(b.v.clone(), 0.0).unwrap();
        assert_eq!(omega_ext(&u, p, &a0, &b0).unwrap(), omega(&a.v, &b.v).unwrap());
    }

    /// The displayed form with `T₂` in both gradient terms is not
    /// antisymmetric and does not annihilate `(Ξ_H, 1)`.
    #[test]
    fn as_printed_two_form_fails_the_kernel_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = sech_field();
        let p = NonlinearityPower::CUBIC;
        let g = grad_h(&u, p);
        let xi = ExtTangent::new(hamiltonian_vf(&u, p), 1.0).unwrap();
        let v = ExtTangent::new(random_smooth_field(u.grid(), &mut rng, 6), 0.5).unwrap();
        let printed =
            omega(&xi.v, &v.v).unwrap() - inner(&g, &xi.v).unwrap() * v.t + inner(&g, &v.v).unwrap() * v.t;
        let ours = omega_ext(&u, p, &xi, &v).unwrap();
        assert!(ours.abs() < 1e-12);
        assert!(printed.abs() > 1e-3);
    }

    #[test]
    fn kernel_residual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = sech_field();
        let zero = Field::zeros(u.grid());
        assert_eq!(
            kernel_residual(&zero, NonlinearityPower::CUBIC, 4, &mut rng).unwrap(),
            0.0
        );
        let r = kernel_residual(&u, NonlinearityPower::CUBIC, 100, &mut rng).unwrap();
        assert!(r < 1e-10, "{r}");
        let w = random_smooth_field(u.grid(), &mut rng, 8);
        let r = kernel_residual(&w, NonlinearityPower::QUINTIC, 100, &mut rng).unwrap();
        assert!(r < 1e-9, "{r}");
        assert!(kernel_residual(&w, NonlinearityPower::QUINTIC, 0, &mut rng).is_err());
    }

    #[test]
    fn lagrangian_forms_agree() {
        let u = sech_field();
        let p = NonlinearityPower::CUBIC;
        let h = hamiltonian(&u, p);
        assert_eq!(lagrangian(&u, &Field::zeros(u.grid()), p).unwrap(), -h);

        let udot = hamiltonian_vf(&u, p);
        let l1 = lagrangian(&u, &udot, p).unwrap();
        assert_eq!(
            l1,
            alpha(&u, 2.0, &ExtTangent::new(udot.clone(), 1.0).unwrap(), p).unwrap()
        );
        // −½ Im∫ u_t ū − ¼∫|u_x|² + ∫|u|⁴/4
        let dx = u.grid().dx();
        let im_term: f64 = udot
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a * b.conj()).im)
            .sum::<f64>()
            * dx;
        let ux = spectral_derivative(&u, 1);
        let kin = 0.25 * dx * ux.values().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let pot = 0.25 * dx * u.values().iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>();
        let l2 = -0.5 * im_term - kin + pot;
        assert!((l1 - l2).abs() < 1e-10, "{l1} vs {l2}");
        // on shell for the soliton: ½ω(u, iu/2) − H = −½ + 1/6
        assert!((l1 + 1.0 / 3.0).abs() < 1e-8);

        let rot = Complex64::from_polar(1.0, 1.1);
        let l3 = lagrangian(&u.scale(rot), &udot.scale(rot), p).unwrap();
        assert!((l1 - l3).abs() < 1e-12);
    }

    fn stationary_soliton(eta: f64, dt: f64, steps: usize) -> Trajectory {
        let g = Grid::new(512, 40.0).unwrap();
        let lam = 0.5 * eta * eta;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        let states = times
            .iter()
            .map(|&t| {
                let ph = Complex64::from_polar(1.0, lam * t);
                Field::from_fn(&g, |x| ph * eta * sech(eta * x))
            })
            .collect();
        Trajectory::new(times, states, NonlinearityPower::CUBIC).unwrap()
    }

    #[test]
    fn action_of_stationary_soliton() {
        let (eta, dt, steps) = (1.2, 1e-2, 200);
        let traj = stationary_soliton(eta, dt, steps);
        let dur = dt * steps as f64;
        let s = action(&traj).unwrap();
        // every node sees ω(u, D u) = −mass · sin(λΔt)/Δt exactly
        let lam = 0.5 * eta * eta;
        let discrete = (-eta * (lam * dt).sin() / dt + eta.powi(3) / 6.0) * dur;
        assert!((s - discrete).abs() < 1e-9, "{s} vs {discrete}");
        // continuum value −η³/3 · duration
        let continuum = -eta.powi(3) / 3.0 * dur;
        assert!((s - continuum).abs() < 1e-4 * continuum.abs());
    }

    #[test]
    fn action_edge_cases() {
        let g = Grid::new(32, 10.0).unwrap();
        let z = Field::zeros(&g);
        let traj = Trajectory::new(
            vec![0.0, 0.1, 0.2],
            vec![z.clone(), z.clone(), z.clone()],
            NonlinearityPower::CUBIC,
        )
        .unwrap();
        assert_eq!(action(&traj).unwrap(), 0.0);
        let short = Trajectory::new(vec![0.0, 0.1], vec![z.clone(), z], NonlinearityPower::CUBIC).unwrap();
        assert!(matches!(action(&short), Err(NlsError::TooFewStates { .. })));
    }

    #[test]
    fn trajectory_rejects_bad_times() {
        let g = Grid::new(32, 10.0).unwrap();
        let z = Field::zeros(&g);
        assert!(Trajectory::new(
            vec![0.0, 0.0],
            vec![z.clone(), z.clone()],
            NonlinearityPower::CUBIC
        )
        .is_err());
        let other = Field::zeros(&Grid::new(64, 10.0).unwrap());
        assert!(matches!(
            Trajectory::new(vec![0.0, 1.0], vec![z, other], NonlinearityPower::CUBIC),
            Err(NlsError::GridMismatch)
        ));
    }

    #[test]
    fn action_is_time_reversal_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = Grid::new(128, 40.0).unwrap();
        let times: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 + 0.01 * (i * i) as f64).collect();
        let states: Vec<Field> = times
            .iter()
            .map(|_| random_smooth_field(&g, &mut rng, 4))
            .collect();
        let p = NonlinearityPower::CUBIC;
        let traj = Trajectory::new(times.clone(), states.clone(), p).unwrap();
        let t_end = *times.last().unwrap();
        let rev_times: Vec<f64> = times.iter().rev().map(|&t| t_end - t).collect();
        let rev_states: Vec<Field> = states.iter().rev().map(Field::conj).collect();
        let rev = Trajectory::new(rev_times, rev_states, p).unwrap();
        let (a, b) = (action(&traj).unwrap(), action(&rev).unwrap());
        assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn first_variation_validates_perturbation() {
        let traj = stationary_soliton(1.0, 0.1, 4);
        let g = traj.states()[0].grid().clone();
        let zero = vec![Field::zeros(&g); traj.len()];
        assert_eq!(first_variation(&traj, &zero, 1e-3).unwrap(), 0.0);
        let mut bad = zero.clone();
        bad[0] = Field::from_real_fn(&g, sech);
        assert!(matches!(
            first_variation(&traj, &bad, 1e-3),
            Err(NlsError::PerturbationNotPinned)
        ));
        assert!(first_variation(&traj, &zero[..2], 1e-3).is_err());
    }
}

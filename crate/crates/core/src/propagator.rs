//! Strang split-step integration of `i u_t = −½ u_xx − |u|^{p−1} u`.
//!
//! Each step is half a nonlinear phase rotation, a full exact linear step in
//! Fourier space, and another half nonlinear rotation. All three substeps are
//! unimodular, so `∫|u|²` is preserved to roundoff.

use std::sync::Arc;

use log::warn;
use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::grid::{Field, Grid};
use crate::hamiltonian::{NonlinearityPower, Trajectory};

/// Default threshold on the fraction of `∫|u|²` in the top third of the
/// spectrum beyond which the run is declared unresolved (blow-up).
pub const DEFAULT_BLOWUP_TAIL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub t_final: f64,
    pub observer_stride: usize,
    pub blowup_tail: f64,
}

impl StepConfig {
    pub fn new(dt: f64, t_final: f64, observer_stride: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(NlsError::param("dt", "must be positive"));
        }
        if !(t_final >= dt && t_final.is_finite()) {
            return Err(NlsError::param("t_final", "must be at least dt"));
        }
        if observer_stride == 0 {
            return Err(NlsError::param("observer_stride", "must be positive"));
        }
        Ok(StepConfig {
            dt,
            t_final,
            observer_stride,
            blowup_tail: DEFAULT_BLOWUP_TAIL,
        })
    }

    pub fn with_blowup_tail(mut self, tail: f64) -> Self {
        self.blowup_tail = tail;
        self
    }

    /// Number of steps; `t_final` is rounded to a whole number of steps.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

/// Reusable Strang stepper with precomputed linear propagator.
pub struct SplitStepper {
    grid: Arc<Grid>,
    power: NonlinearityPower,
    dt: f64,
    coupling: f64,
    linear: Vec<Complex64>,
    tail_cut: usize,
}

impl SplitStepper {
    pub fn new(grid: &Arc<Grid>, power: NonlinearityPower, dt: f64) -> Self {
        let linear = grid
            .wavenumbers()
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -0.5 * k * k * dt))
            .collect();
        SplitStepper {
            grid: grid.clone(),
            power,
            dt,
            coupling: 1.0,
            linear,
            tail_cut: grid.n() / 3,
        }
    }

    /// Scales the nonlinear term; `0.0` gives the free Schrödinger flow.
    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    fn nonlinear_half(&self, buf: &mut [Complex64]) {
        if self.coupling == 0.0 {
            return;
        }
        let h = 0.5 * self.dt * self.coupling;
        for z in buf.iter_mut() {
            let phase = self.power.potential_factor(z.norm_sqr()) * h;
            *z *= Complex64::from_polar(1.0, phase);
        }
    }

    /// Advances `buf` by one step and returns the spectral tail fraction
    /// observed during the linear substep.
    pub fn step_in_place(&self, buf: &mut [Complex64]) -> f64 {
        self.nonlinear_half(buf);
        self.grid.forward(buf);
        let n = self.grid.n();
        let (mut tail, mut total) = (0.0, 0.0);
        for (j, (z, l)) in buf.iter_mut().zip(&self.linear).enumerate() {
            let w = z.norm_sqr();
            total += w;
            if j.min(n - j) > self.tail_cut {
                tail += w;
            }
            *z *= l;
        }
        self.grid.inverse(buf);
        self.nonlinear_half(buf);
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn step(&self, u: &Field) -> Field {
        let mut buf = u.values().to_vec();
        self.step_in_place(&mut buf);
        Field::from_raw(self.grid.clone(), buf)
    }
}

/// One Strang step of the NLS flow.
pub fn strang_step(u: &Field, dt: f64, p: NonlinearityPower) -> Field {
    if dt == 0.0 {
        return u.clone();
    }
    SplitStepper::new(u.grid(), p, dt).step(u)
}

/// Integrates from `t = 0`, recording every `observer_stride`-th step plus the
/// initial and final states.
pub fn evolve(u0: &Field, p: NonlinearityPower, cfg: &StepConfig) -> Result<Trajectory> {
    evolve_from(u0, 0.0, p, cfg)
}

/// As [`evolve`], starting the clock at `t0`.
pub fn evolve_from(u0: &Field, t0: f64, p: NonlinearityPower, cfg: &StepConfig) -> Result<Trajectory> {
    if !u0.is_localized() {
        warn!(
            "initial data carries boundary mass fraction {:.3e}; periodic wrap-around may matter",
            u0.boundary_mass_fraction()
        );
    }
    let grid = u0.grid().clone();
    let stepper = SplitStepper::new(&grid, p, cfg.dt);
    let n_steps = cfg.steps();
    let mut traj = Trajectory::empty(p);
    traj.push(t0, u0.clone())?;
    let mut buf = u0.values().to_vec();
    for step in 1..=n_steps {
        let tail = stepper.step_in_place(&mut buf);
        let finite = buf.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite || tail > cfg.blowup_tail {
            return Err(NlsError::BlowUp {
                t_last_valid: t0 + (step - 1) as f64 * cfg.dt,
                partial: Box::new(traj),
            });
        }
        if step % cfg.observer_stride == 0 || step == n_steps {
            traj.push(
                t0 + step as f64 * cfg.dt,
                Field::from_raw(grid.clone(), buf.clone()),
            )?;
        }
    }
    Ok(traj)
}

/// Moving cubic soliton
/// `η sech(η(x − v t − z₀)) exp(i(v x − (v² − η²) t / 2 + φ₀))`.
pub fn exact_soliton(eta: f64, v: f64, z0: f64, phi0: f64, t: f64, grid: &Arc<Grid>) -> Result<Field> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(NlsError::param("eta", "must be positive"));
    }
    let phase_t = -0.5 * (v * v - eta * eta) * t + phi0;
    Ok(Field::from_fn(grid, |x| {
        let amp = eta / (eta * (x - v * t - z0)).cosh();
        Complex64::from_polar(amp, v * x + phase_t)
    }))
}

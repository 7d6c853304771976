//! Seeded random test data: smooth localized fields and directions.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::grid::{Field, Grid};

/// A smooth, localized random field: a Gaussian envelope of width
/// `L / 12` times a random trigonometric polynomial with `modes` modes on
/// each side of zero.
pub fn random_smooth_field<R: Rng + ?Sized>(grid: &Arc<Grid>, rng: &mut R, modes: usize) -> Field {
    let sigma = grid.length() / 12.0;
    let k1 = 2.0 * std::f64::consts::PI / grid.length();
    let coeffs: Vec<(f64, Complex64)> = (-(modes as i64)..=modes as i64)
        .map(|j| {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (j as f64 * k1, c / (1.0 + (j * j) as f64).sqrt())
        })
        .collect();
    let center = rng.gen_range(-0.05..0.05) * grid.length();
    Field::from_fn(grid, |x| {
        let env = (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp();
        let s: Complex64 = coeffs
            .iter()
            .map(|&(k, c)| c * Complex64::from_polar(1.0, k * x))
            .sum();
        s * env
    })
}

/// Random smooth field rescaled to unit L² norm.
pub fn random_unit_field<R: Rng + ?Sized>(grid: &Arc<Grid>, rng: &mut R, modes: usize) -> Field {
    let u = random_smooth_field(grid, rng, modes);
    let nrm = u.norm();
    u.scale_re(1.0 / nrm)
}

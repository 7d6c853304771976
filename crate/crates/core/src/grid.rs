//! Periodic spatial grid, complex fields sampled on it, and the two real
//! bilinear forms on the discretized phase space:
//!
//! ```text
//! <u, v>     = Re ∫ u v̄ dx
//! ω(u, v)    = Im ∫ u v̄ dx = <u, i v>
//! ```
//!
//! Integrals use the rectangle rule, which is spectrally accurate for smooth
//! periodic integrands. Derivatives are Fourier multipliers.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NlsError, Result};

/// Fraction of the domain (at each end combined) treated as the "boundary
/// layer" when checking localization.
pub const BOUNDARY_LAYER: f64 = 0.1;
/// Mass fraction in the boundary layer above which results are flagged.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;

const MIN_POINTS: usize = 16;

/// Uniform periodic grid on `[-L/2, L/2)`.
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dx", &self.dx)
            .finish()
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if !n.is_power_of_two() {
            return Err(NlsError::InvalidGrid(format!("n = {n} is not a power of two")));
        }
        if n < MIN_POINTS {
            return Err(NlsError::InvalidGrid(format!(
                "n = {n} is below the minimum of {MIN_POINTS}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(NlsError::InvalidGrid(format!(
                "length = {length} must be positive and finite"
            )));
        }
        let dx = length / n as f64;
        let nodes = (0..n).map(|j| -0.5 * length + j as f64 * dx).collect();
        // FFT ordering: 0, 1, ..., n/2 - 1, -n/2, ..., -1
        let half = n as i64 / 2;
        let wavenumbers = (0..n as i64)
            .map(|j| {
                let m = if j < half { j } else { j - n as i64 };
                2.0 * PI * m as f64 / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            n,
            length,
            dx,
            nodes,
            wavenumbers,
            fft,
            ifft,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the unpaired Nyquist mode in FFT order.
    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.length == other.length)
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.fft.process(data);
    }

    /// Inverse DFT in place, including the `1/n` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.ifft.process(data);
        let scale = 1.0 / self.n as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Rectangle rule `dx · Σ f_j`.
    pub fn quadrature(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.n {
            return Err(NlsError::ShapeMismatch {
                expected: self.n,
                got: f.len(),
            });
        }
        Ok(self.dx * f.iter().sum::<f64>())
    }
}

/// A complex field sampled on a [`Grid`]; a point of the phase space.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("norm", &self.norm())
            .finish()
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.n() {
            return Err(NlsError::ShapeMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NlsError::NonFinite("field values"));
        }
        Ok(Field { grid, values })
    }

    /// Builds a field without the finiteness scan. Callers guarantee the length.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<Complex64>) -> Field {
        debug_assert_eq!(values.len(), grid.n());
        Field { grid, values }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Field {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Field::from_raw(grid.clone(), values)
    }

    pub fn from_real_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        Field::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field::from_raw(grid.clone(), vec![Complex64::new(0.0, 0.0); grid.n()])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::from_raw(self.grid.clone(), self.values.iter().map(|&z| f(z)).collect())
    }

    /// Pointwise map that also sees the node coordinate.
    pub fn map_with_x(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Field {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &z)| f(x, z))
            .collect();
        Field::from_raw(self.grid.clone(), values)
    }

    /// `i u`; exact in floating point.
    pub fn mul_i(&self) -> Field {
        self.map(|z| Complex64::new(-z.im, z.re))
    }

    pub fn conj(&self) -> Field {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    pub fn scale_re(&self, a: f64) -> Field {
        self.map(|z| z * a)
    }

    /// `a u + b w` for real coefficients.
    pub fn lin_comb(a: f64, u: &Field, b: f64, w: &Field) -> Result<Field> {
        check_same_grid(u, w)?;
        let values = u
            .values
            .iter()
            .zip(&w.values)
            .map(|(&p, &q)| p * a + q * b)
            .collect();
        Ok(Field::from_raw(u.grid.clone(), values))
    }

    pub fn abs2(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// L² norm `sqrt(∫|u|²)`.
    pub fn norm(&self) -> f64 {
        (self.grid.dx * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Discrete Fourier coefficients (unnormalized, FFT order).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        self.grid.forward(&mut buf);
        buf
    }

    /// Fraction of `∫|u|²` sitting in the outer boundary layer of the box.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let cut = 0.5 * self.grid.length * (1.0 - BOUNDARY_LAYER);
        let (mut edge, mut total) = (0.0, 0.0);
        for (&x, z) in self.grid.nodes.iter().zip(&self.values) {
            let w = z.norm_sqr();
            total += w;
            if x.abs() > cut {
                edge += w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }

    pub fn is_localized(&self) -> bool {
        self.boundary_mass_fraction() < BOUNDARY_MASS_TOL
    }
}

impl Add for &Field {
    type Output = Field;

    fn add(self, rhs: &Field) -> Field {
        Field::lin_comb(1.0, self, 1.0, rhs).expect("adding fields on different grids")
    }
}

impl Sub for &Field {
    type Output = Field;

    fn sub(self, rhs: &Field) -> Field {
        Field::lin_comb(1.0, self, -1.0, rhs).expect("subtracting fields on different grids")
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;

    fn mul(self, rhs: &Field) -> Field {
        rhs.scale_re(self)
    }
}

/// Tangent vector `(v, T)` to the extended space `V × ℝ`.
#[derive(Debug, Clone)]
pub struct ExtTangent {
    pub v: Field,
    pub t: f64,
}

impl ExtTangent {
    pub fn new(v: Field, t: f64) -> Result<ExtTangent> {
        if !v.is_finite() || !t.is_finite() {
            return Err(NlsError::NonFinite("extended tangent"));
        }
        Ok(ExtTangent { v, t })
    }

    /// Euclidean norm on `V × ℝ` built from the L² pairing.
    pub fn norm(&self) -> f64 {
        (self.v.norm().powi(2) + self.t * self.t).sqrt()
    }
}

pub(crate) fn check_same_grid(u: &Field, v: &Field) -> Result<()> {
    if u.grid.same_as(&v.grid) {
        Ok(())
    } else {
        Err(NlsError::GridMismatch)
    }
}

/// `(i k)^order` applied in Fourier space. For odd orders the unpaired
/// Nyquist mode is dropped.
pub fn spectral_derivative(u: &Field, order: u32) -> Field {
    let grid = u.grid();
    let mut buf = u.values.clone();
    grid.forward(&mut buf);
    let nyq = grid.nyquist_index();
    let ik_pow = |k: f64| Complex64::new(0.0, k).powu(order);
    for (j, (z, &k)) in buf.iter_mut().zip(grid.wavenumbers()).enumerate() {
        if j == nyq && order % 2 == 1 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= ik_pow(k);
        }
    }
    grid.inverse(&mut buf);
    Field::from_raw(grid.clone(), buf)
}

/// `<u, v> = Re ∫ u v̄`.
pub fn inner(u: &Field, v: &Field) -> Result<f64> {
    check_same_grid(u, v)?;
    let s: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a * b.conj()).re)
        .sum();
    Ok(u.grid.dx * s)
}

/// `ω(u, v) = Im ∫ u v̄`, evaluated literally as `<u, i v>`.
pub fn omega(u: &Field, v: &Field) -> Result<f64> {
    check_same_grid(u, v)?;
    let s: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a * Complex64::new(-b.im, b.re).conj()).re)
        .sum();
    Ok(u.grid.dx * s)
}

/// Result of an x-moment together with its localization diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub boundary_fraction: f64,
    pub boundary_warning: bool,
}

/// `∫ x^order |u|² dx` on the canonical branch `x ∈ [-L/2, L/2)`.
pub fn moment(u: &Field, order: u32) -> Moment {
    let grid = u.grid();
    let s: f64 = grid
        .nodes()
        .iter()
        .zip(u.values())
        .map(|(&x, z)| x.powi(order as i32) * z.norm_sqr())
        .sum();
    let boundary_fraction = u.boundary_mass_fraction();
    Moment {
        value: grid.dx() * s,
        boundary_fraction,
        boundary_warning: boundary_fraction >= BOUNDARY_MASS_TOL,
    }
}

/// Evaluates the band-limited trigonometric interpolant of `u` at the points
/// `factor · x_j + shift`; points falling outside the box give zero.
///
/// The Nyquist mode enters through its cosine part so the interpolant
/// reproduces the samples exactly.
pub fn resample(u: &Field, factor: f64, shift: f64) -> Field {
    let grid = u.grid();
    let n = grid.n();
    let spec = u.spectrum();
    let x0 = -0.5 * grid.length();
    let half = 0.5 * grid.length();
    let nyq = grid.nyquist_index();
    let inv_n = 1.0 / n as f64;
    let values = grid
        .nodes()
        .iter()
        .map(|&x| {
            let y = factor * x + shift;
            if y < -half || y >= half {
                return Complex64::new(0.0, 0.0);
            }
            let r = y - x0;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, (&c, &k)) in spec.iter().zip(grid.wavenumbers()).enumerate() {
                if j == nyq {
                    acc += c * (k * r).cos();
                } else {
                    acc += c * Complex64::from_polar(1.0, k * r);
                }
            }
            acc * inv_n
        })
        .collect();
    Field::from_raw(grid.clone(), values)
}

/// Value of the band-limited interpolant of `u` at a single point `x`
/// (taken periodically).
pub fn interpolate_at(u: &Field, x: f64) -> Complex64 {
    let grid = u.grid();
    let spec = u.spectrum();
    let r = (x + 0.5 * grid.length()).rem_euclid(grid.length());
    let nyq = grid.nyquist_index();
    let acc: Complex64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .map(|(j, (&c, &k))| {
            if j == nyq {
                c * (k * r).cos()
            } else {
                c * Complex64::from_polar(1.0, k * r)
            }
        })
        .sum();
    acc / grid.n() as f64
}

/// Periodic translation `u(x - shift)` by a Fourier phase shift.
pub fn translate(u: &Field, shift: f64) -> Field {
    let grid = u.grid();
    let mut buf = u.spectrum();
    let nyq = grid.nyquist_index();
    for (j, (z, &k)) in buf.iter_mut().zip(grid.wavenumbers()).enumerate() {
        if j == nyq {
            *z *= (k * shift).cos();
        } else {
            *z *= Complex64::from_polar(1.0, -k * shift);
        }
    }
    grid.inverse(&mut buf);
    Field::from_raw(grid.clone(), buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn grid_nodes_and_spacing() {
        let g = Grid::new(16, 16.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.nodes()[0], -8.0);
        assert_eq!(g.nodes()[15], 7.0);
        for w in g.nodes().windows(2) {
            assert_eq!(w[1] - w[0], g.dx());
        }
    }

    #[test]
    fn wavenumbers_contain_zero_once_and_pair_up() {
        let g = Grid::new(256, 40.0).unwrap();
        let ks = g.wavenumbers();
        assert_eq!(ks.iter().filter(|&&k| k == 0.0).count(), 1);
        let k1 = 2.0 * PI / 40.0;
        assert!(ks.iter().any(|&k| (k - k1).abs() < 1e-15));
        assert!(ks.iter().any(|&k| (k + k1).abs() < 1e-15));
        let unpaired: Vec<f64> = ks
            .iter()
            .copied()
            .filter(|&k| !ks.iter().any(|&q| q == -k))
            .collect();
        assert_eq!(unpaired.len(), 1);
        assert_eq!(unpaired[0], ks[g.nyquist_index()]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::new(100, 10.0), Err(NlsError::InvalidGrid(_))));
        assert!(matches!(Grid::new(8, 10.0), Err(NlsError::InvalidGrid(_))));
        assert!(matches!(Grid::new(64, 0.0), Err(NlsError::InvalidGrid(_))));
        assert!(matches!(Grid::new(64, -3.0), Err(NlsError::InvalidGrid(_))));
    }

    #[test]
    fn quadrature_examples() {
        let g = Grid::new(16, 16.0).unwrap();
        assert_eq!(g.quadrature(&[1.0; 16]).unwrap(), 16.0);
        assert!(g.quadrature(&[1.0; 15]).is_err());

        let g = Grid::new(512, 40.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&x| sech(x).powi(2)).collect();
        assert!((g.quadrature(&f).unwrap() - 2.0).abs() < 1e-10);
        let f: Vec<f64> = g.nodes().iter().map(|&x| (2.0 * PI * x / 40.0).sin()).collect();
        assert!(g.quadrature(&f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn derivative_of_plane_wave_and_sech() {
        let g = Grid::new(64, 10.0).unwrap();
        let k = 2.0 * PI / 10.0;
        let u = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k * x));
        let du = spectral_derivative(&u, 1);
        for (d, z) in du.values().iter().zip(u.values()) {
            assert!((d - Complex64::new(0.0, k) * z).norm() < 1e-12);
        }

        let g = Grid::new(1024, 60.0).unwrap();
        let u = Field::from_real_fn(&g, sech);
        let du = spectral_derivative(&u, 1);
        for (&x, d) in g.nodes().iter().zip(du.values()) {
            assert!((d.re + sech(x) * x.tanh()).abs() < 1e-9);
            assert!(d.im.abs() < 1e-12);
        }

        let c = Field::from_fn(&g, |_| Complex64::new(0.7, -0.2));
        assert!(spectral_derivative(&c, 2).max_abs() < 1e-12);
    }

    #[test]
    fn bilinear_form_examples() {
        let g = Grid::new(512, 40.0).unwrap();
        let u = Field::from_real_fn(&g, sech);
        assert!((inner(&u, &u).unwrap() - 2.0).abs() < 1e-10);
        assert!(inner(&u, &u.mul_i()).unwrap().abs() < 1e-15);
        assert_eq!(omega(&u, &u).unwrap(), 0.0);
        assert!((omega(&u, &u.mul_i()).unwrap() + 2.0).abs() < 1e-10);

        let gauss = Field::from_real_fn(&g, |x| (-x * x).exp());
        let expected = -(PI / 2.0).sqrt();
        assert!((omega(&gauss, &gauss.mul_i()).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = Field::zeros(&Grid::new(32, 10.0).unwrap());
        let b = Field::zeros(&Grid::new(32, 12.0).unwrap());
        assert!(matches!(inner(&a, &b), Err(NlsError::GridMismatch)));
        assert!(matches!(omega(&a, &b), Err(NlsError::GridMismatch)));
    }

    #[test]
    fn moment_examples() {
        let g = Grid::new(512, 40.0).unwrap();
        let u = Field::from_real_fn(&g, sech);
        let m1 = moment(&u, 1);
        assert!(m1.value.abs() < 1e-10);
        assert!(!m1.boundary_warning);
        let m2 = moment(&u, 2);
        assert!((m2.value - PI * PI / 6.0).abs() < 1e-9);
        let shifted = Field::from_real_fn(&g, |x| sech(x - 3.0));
        assert!((moment(&shifted, 1).value - 6.0).abs() < 1e-9);

        let wide = Field::from_real_fn(&g, |x| sech(0.1 * x));
        assert!(moment(&wide, 2).boundary_warning);
    }

    #[test]
    fn translation_and_resampling_are_spectral() {
        let g = Grid::new(512, 60.0).unwrap();
        let u = Field::from_real_fn(&g, sech);
        let t = translate(&u, 1.37);
        for (&x, z) in g.nodes().iter().zip(t.values()) {
            assert!((z.re - sech(x - 1.37)).abs() < 1e-12);
        }
        let r = resample(&u, 1.0, 0.0);
        for (a, b) in r.values().iter().zip(u.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let z = interpolate_at(&u, 0.123);
        assert!((z.re - sech(0.123)).abs() < 1e-12 && z.im.abs() < 1e-14);
        assert!((interpolate_at(&u, g.nodes()[7]) - u.values()[7]).norm() < 1e-14);
        let r = resample(&u, 0.5, 0.3);
        for (&x, z) in g.nodes().iter().zip(r.values()) {
            assert!((z.re - sech(0.5 * x + 0.3)).abs() < 1e-10);
        }
    }
}

use nalgebra::DMatrix;

use crate::error::{NlsError, Result};

/// Absolute tolerance on `A + Aᵀ` accepted by [`AntisymMatrix::new`].
pub const ANTISYM_TOL: f64 = 1e-12;

/// A real antisymmetric `k × k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymMatrix {
    m: DMatrix<f64>,
}

impl AntisymMatrix {
    /// Wraps `m`, which must be antisymmetric to [`ANTISYM_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(NlsError::ShapeMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let k = m.nrows();
        for i in 0..k {
            for j in 0..=i {
                if (m[(i, j)] + m[(j, i)]).abs() > ANTISYM_TOL {
                    return Err(NlsError::param(
                        "matrix",
                        format!("not antisymmetric at ({i}, {j})"),
                    ));
                }
            }
        }
        Ok(AntisymMatrix::from_assembled(m).0)
    }

    /// Replaces an assembled matrix by `(M − Mᵀ)/2` and returns the largest
    /// entry of the discarded symmetric part relative to `max |M_ij|`.
    pub fn from_assembled(m: DMatrix<f64>) -> (Self, f64) {
        assert!(m.is_square(), "antisymmetric matrices are square");
        let anti = (&m - m.transpose()) * 0.5;
        let scale = m.amax();
        let sym = ((&m + m.transpose()) * 0.5).amax();
        let correction = if scale > 0.0 { sym / scale } else { 0.0 };
        (AntisymMatrix { m: anti }, correction)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(NlsError::ShapeMismatch {
                expected: k,
                got: r.len(),
            });
        }
        AntisymMatrix::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Pfaffian by Parlett–Reid elimination with partial pivoting. Zero for
    /// odd dimension.
    pub fn pfaffian(&self) -> f64 {
        let n = self.dim();
        if n % 2 == 1 {
            return 0.0;
        }
        let mut a = self.m.clone();
        let mut pf = 1.0;
        let mut k = 0;
        while k + 1 < n {
            let mut kp = k + 1;
            for i in k + 2..n {
                if a[(i, k)].abs() > a[(kp, k)].abs() {
                    kp = i;
                }
            }
            if kp != k + 1 {
                a.swap_rows(k + 1, kp);
                a.swap_columns(k + 1, kp);
                pf = -pf;
            }
            let piv = a[(k, k + 1)];
            if piv == 0.0 {
                return 0.0;
            }
            pf *= piv;
            if k + 2 < n {
                let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
                let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
                for (ii, i) in (k + 2..n).enumerate() {
                    for (jj, j) in (k + 2..n).enumerate() {
                        a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                    }
                }
            }
            k += 2;
        }
        pf
    }

    /// Determinant by LU decomposition, independent of the Pfaffian.
    pub fn determinant(&self) -> f64 {
        self.m.clone().lu().determinant()
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .m
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Number of singular values above `tol` times the largest one.
    pub fn rank_with_tolerance(&self, tol: f64) -> usize {
        let s = self.singular_values();
        match s.first() {
            Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > tol * smax).count(),
            _ => 0,
        }
    }

    /// `σ_max / σ_min`, infinite for a singular matrix.
    pub fn condition_number(&self) -> f64 {
        let s = self.singular_values();
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    /// Unit right singular vector of the smallest singular value.
    pub fn kernel_direction(&self) -> Vec<f64> {
        let svd = self.m.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty matrix");
        v_t.row(imin).iter().copied().collect()
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }
}

/// Extended matrix `[[Ω, −∇H], [∇Hᵀ, 0]]` of `ω̃` on the tangent space of
/// `M × ℝ` spanned by the parameter directions and `∂_t`.
pub fn extend_with_hamiltonian(omega: &AntisymMatrix, grad_h: &[f64]) -> Result<AntisymMatrix> {
    let k = omega.dim();
    if grad_h.len() != k {
        return Err(NlsError::ShapeMismatch {
            expected: k,
            got: grad_h.len(),
        });
    }
    let m = DMatrix::from_fn(k + 1, k + 1, |i, j| match (i < k, j < k) {
        (true, true) => omega.get(i, j),
        (true, false) => -grad_h[i],
        (false, true) => grad_h[j],
        (false, false) => 0.0,
    });
    Ok(AntisymMatrix { m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_antisym(rng: &mut ChaCha8Rng, k: usize) -> AntisymMatrix {
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i + 1..k {
                let x: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = x;
                m[(j, i)] = -x;
            }
        }
        AntisymMatrix::new(m).unwrap()
    }

    #[test]
    fn two_by_two_pfaffian_is_upper_entry() {
        for a in [-3.5, 0.0, 1e-8, 2.0] {
            let m = AntisymMatrix::from_rows(&[vec![0.0, a], vec![-a, 0.0]]).unwrap();
            assert_eq!(m.pfaffian(), a);
        }
    }

    #[test]
    fn block_diagonal_pfaffian_is_product() {
        let m = AntisymMatrix::from_rows(&[
            vec![0.0, 2.0, 0.0, 0.0],
            vec![-2.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 3.0],
            vec![0.0, 0.0, -3.0, 0.0],
        ])
        .unwrap();
        assert!((m.pfaffian() - 6.0).abs() < 1e-15);
        assert!((m.determinant() - 36.0).abs() < 1e-12);
    }

    #[test]
    fn pivoting_keeps_the_sign() {
        // zero in the (0, 1) slot forces a swap
        let m = AntisymMatrix::from_rows(&[
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0, 0.0],
        ])
        .unwrap();
        // Pf = a01 a23 − a02 a13 + a03 a12
        assert!((m.pfaffian() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pfaffian_squared_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_antisym(&mut rng, 6);
            let pf = a.pfaffian();
            let scale = a.norm().powi(6);
            assert!((pf * pf - a.determinant()).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn odd_dimension_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_antisym(&mut rng, 5);
        assert_eq!(a.pfaffian(), 0.0);
        assert!(a.determinant().abs() < 1e-14);
        assert!(a.rank_with_tolerance(1e-10) <= 4);
    }

    #[test]
    fn rank_and_kernel() {
        let m = AntisymMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(m.rank_with_tolerance(1e-6), 2);
        assert!((m.condition_number() - 1.0).abs() < 1e-14);
        let z = AntisymMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(z.rank_with_tolerance(1e-6), 0);
        assert!(z.condition_number().is_infinite());

        let ext = extend_with_hamiltonian(&m, &[0.0, 1.0]).unwrap();
        assert_eq!(ext.rank_with_tolerance(1e-9), 2);
        let v = ext.kernel_direction();
        let mv = ext.matrix() * nalgebra::DVector::from_vec(v);
        assert!(mv.amax() < 1e-12);
    }

    #[test]
    fn assembly_reports_symmetric_part() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.9, 0.0]);
        let (a, corr) = AntisymMatrix::from_assembled(m);
        assert!((a.get(0, 1) - 0.95).abs() < 1e-15);
        assert!((corr - 0.05).abs() < 1e-15);
        assert!(AntisymMatrix::from_rows(&[vec![0.0, 1.0], vec![-0.9, 0.0]]).is_err());
    }
}

//! Pfaffian scans of `ω|_M` over two parameters, with zero-level extraction.

use rayon::prelude::*;

use crate::error::{NlsError, Result};
use crate::presymplectic::ansatz::{omega_matrix, AnsatzManifold};

#[derive(Debug, Clone, PartialEq)]
pub struct ScanAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ScanAxis {
    pub fn new(name: &str, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(NlsError::param(name, "axis needs lo < hi and at least 2 points"));
        }
        Ok(ScanAxis {
            name: name.to_string(),
            lo,
            hi,
            n,
        })
    }

    /// `n` equispaced values including both ends.
    pub fn values(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo + h * i as f64
                }
            })
            .collect()
    }
}

/// One marching-squares segment in parameter coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub cell: (usize, usize),
    pub from: (f64, f64),
    pub to: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub manifold: String,
    pub axis1: ScanAxis,
    pub axis2: ScanAxis,
    pub fixed: Vec<(String, f64)>,
    /// `pf[i][j]` at `(axis1[i], axis2[j])`.
    pub pf: Vec<Vec<f64>>,
    /// Largest `|Pf² − det| / ‖Ω‖^k` over the grid.
    pub max_pf_det_mismatch: f64,
    /// Largest relative symmetrization correction over the grid.
    pub max_symmetrization: f64,
    /// Absolute threshold below which a node counts as zero.
    pub zero_tol: f64,
    pub zero_nodes: Vec<(usize, usize)>,
    /// Cells `(i, j)` spanning nodes `i..=i+1` × `j..=j+1` that meet the zero set.
    pub zero_cells: Vec<(usize, usize)>,
    pub segments: Vec<Segment>,
    /// Zero cells grouped into curves.
    pub curves: Vec<Vec<(usize, usize)>>,
}

impl ScanResult {
    pub fn curve_count(&self) -> usize {
        self.curves.len()
    }
}

fn assemble_theta<M: AnsatzManifold + ?Sized>(
    m: &M,
    axis1: &ScanAxis,
    axis2: &ScanAxis,
    fixed: &[(String, f64)],
) -> Result<(Vec<f64>, usize, usize)> {
    let names = m.param_names();
    let idx = |name: &str| {
        m.param_index(name).ok_or_else(|| {
            NlsError::param(name, format!("not a parameter of {} (has {:?})", m.name(), names))
        })
    };
    let i1 = idx(&axis1.name)?;
    let i2 = idx(&axis2.name)?;
    if i1 == i2 {
        return Err(NlsError::param(&axis2.name, "both axes name the same parameter"));
    }
    let mut theta = vec![f64::NAN; names.len()];
    for (name, v) in fixed {
        let i = idx(name)?;
        if i == i1 || i == i2 {
            return Err(NlsError::param(name, "fixed parameter is also a scan axis"));
        }
        theta[i] = *v;
    }
    if let Some(i) = (0..names.len()).find(|&i| i != i1 && i != i2 && theta[i].is_nan()) {
        return Err(NlsError::param(
            names[i],
            "parameter is neither scanned nor fixed",
        ));
    }
    Ok((theta, i1, i2))
}

/// Evaluates `Pf(Ω)` on the tensor grid of the two axes, the remaining
/// parameters held at `fixed`.
pub fn degeneracy_scan<M: AnsatzManifold + ?Sized>(
    m: &M,
    axis1: &ScanAxis,
    axis2: &ScanAxis,
    fixed: &[(String, f64)],
    zero_tol: f64,
) -> Result<ScanResult> {
    let (base, i1, i2) = assemble_theta(m, axis1, axis2, fixed)?;
    let (v1, v2) = (axis1.values(), axis2.values());
    let k = m.dim() as i32;
    let cells: Vec<(f64, f64, f64)> = (0..v1.len() * v2.len())
        .into_par_iter()
        .map(|idx| {
            let mut theta = base.clone();
            theta[i1] = v1[idx / v2.len()];
            theta[i2] = v2[idx % v2.len()];
            let f = omega_matrix(m, &theta)?;
            let pf = f.omega.pfaffian();
            let det = f.omega.determinant();
            let scale = f.omega.norm().powi(k).max(f64::MIN_POSITIVE);
            Ok((pf, (pf * pf - det).abs() / scale, f.symmetrization))
        })
        .collect::<Result<_>>()?;

    let pf: Vec<Vec<f64>> = cells
        .chunks(v2.len())
        .map(|r| r.iter().map(|c| c.0).collect())
        .collect();
    let max_pf_det_mismatch = cells.iter().map(|c| c.1).fold(0.0, f64::max);
    let max_symmetrization = cells.iter().map(|c| c.2).fold(0.0, f64::max);
    let zero = zero_set(&pf, &v1, &v2, zero_tol);
    Ok(ScanResult {
        manifold: m.name(),
        axis1: axis1.clone(),
        axis2: axis2.clone(),
        fixed: fixed.to_vec(),
        pf,
        max_pf_det_mismatch,
        max_symmetrization,
        zero_tol,
        zero_nodes: zero.nodes,
        zero_cells: zero.cells,
        segments: zero.segments,
        curves: zero.curves,
    })
}

pub struct ZeroSet {
    pub nodes: Vec<(usize, usize)>,
    pub cells: Vec<(usize, usize)>,
    pub segments: Vec<Segment>,
    pub curves: Vec<Vec<(usize, usize)>>,
}

/// Marching squares on a node grid. An edge is active when its end values
/// change sign or either end is within `tol` of zero; a cell is a zero cell
/// when one of its edges is active, and zero cells sharing an active edge
/// belong to the same curve.
pub fn zero_set(f: &[Vec<f64>], x1: &[f64], x2: &[f64], tol: f64) -> ZeroSet {
    let n1 = f.len();
    let n2 = f.first().map_or(0, Vec::len);
    let is_zero = |v: f64| v.abs() <= tol;
    let active = |a: f64, b: f64| is_zero(a) || is_zero(b) || (a > 0.0) != (b > 0.0);
    let nodes: Vec<(usize, usize)> = (0..n1)
        .flat_map(|i| (0..n2).map(move |j| (i, j)))
        .filter(|&(i, j)| is_zero(f[i][j]))
        .collect();

    // edges of cell (i, j): bottom (i,j)-(i+1,j), top (i,j+1)-(i+1,j+1),
    // left (i,j)-(i,j+1), right (i+1,j)-(i+1,j+1)
    let horiz = |i: usize, j: usize| active(f[i][j], f[i + 1][j]);
    let vert = |i: usize, j: usize| active(f[i][j], f[i][j + 1]);
    let (c1, c2) = (n1.saturating_sub(1), n2.saturating_sub(1));
    let mut cells = Vec::new();
    let mut segments = Vec::new();
    for i in 0..c1 {
        for j in 0..c2 {
            if !(horiz(i, j) || horiz(i, j + 1) || vert(i, j) || vert(i + 1, j)) {
                continue;
            }
            cells.push((i, j));
            let mut pts = Vec::new();
            let mut crossing = |a: (usize, usize), b: (usize, usize)| {
                let (fa, fb) = (f[a.0][a.1], f[b.0][b.1]);
                if fa != fb && ((fa > 0.0) != (fb > 0.0) || fa == 0.0 || fb == 0.0) {
                    let s = (fa / (fa - fb)).clamp(0.0, 1.0);
                    let p = (
                        x1[a.0] + s * (x1[b.0] - x1[a.0]),
                        x2[a.1] + s * (x2[b.1] - x2[a.1]),
                    );
                    if !pts.contains(&p) {
                        pts.push(p);
                    }
                }
            };
            crossing((i, j), (i + 1, j));
            crossing((i + 1, j), (i + 1, j + 1));
            crossing((i, j + 1), (i + 1, j + 1));
            crossing((i, j), (i, j + 1));
            for pair in pts.chunks(2) {
                if let [a, b] = pair {
                    segments.push(Segment {
                        cell: (i, j),
                        from: *a,
                        to: *b,
                    });
                }
            }
        }
    }

    let index = |i: usize, j: usize| i * c2 + j;
    let mut parent: Vec<usize> = (0..c1 * c2).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut is_cell = vec![false; c1 * c2];
    for &(i, j) in &cells {
        is_cell[index(i, j)] = true;
    }
    for &(i, j) in &cells {
        // neighbour across the right edge shares vert(i + 1, j)
        if i + 1 < c1 && is_cell[index(i + 1, j)] && vert(i + 1, j) {
            let (a, b) = (find(&mut parent, index(i, j)), find(&mut parent, index(i + 1, j)));
            parent[a] = b;
        }
        if j + 1 < c2 && is_cell[index(i, j + 1)] && horiz(i, j + 1) {
            let (a, b) = (find(&mut parent, index(i, j)), find(&mut parent, index(i, j + 1)));
            parent[a] = b;
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut curves: Vec<Vec<(usize, usize)>> = Vec::new();
    for &(i, j) in &cells {
        let r = find(&mut parent, index(i, j));
        match roots.iter().position(|&x| x == r) {
            Some(c) => curves[c].push((i, j)),
            None => {
                roots.push(r);
                curves.push(vec![(i, j)]);
            }
        }
    }
    ZeroSet {
        nodes,
        cells,
        segments,
        curves,
    }
}

/// Bisects `Pf(Ω)` along the segment from `theta_a` to `theta_b`, whose
/// endpoint Pfaffians must differ in sign. Returns the point and its Pf.
pub fn bisect_pfaffian_zero<M: AnsatzManifold + ?Sized>(
    m: &M,
    theta_a: &[f64],
    theta_b: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let pf_at = |s: f64| -> Result<(Vec<f64>, f64)> {
        let theta: Vec<f64> = theta_a
            .iter()
            .zip(theta_b)
            .map(|(a, b)| a + s * (b - a))
            .collect();
        let pf = omega_matrix(m, &theta)?.omega.pfaffian();
        Ok((theta, pf))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let (_, mut f_lo) = pf_at(lo)?;
    let (_, f_hi) = pf_at(hi)?;
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(NlsError::param(
            "theta",
            format!("Pfaffian does not change sign on the segment ({f_lo:e}, {f_hi:e})"),
        ));
    }
    let mut best = pf_at(0.5)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        best = pf_at(mid)?;
        if best.1 == 0.0 || hi - lo < tol {
            break;
        }
        if (best.1 > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = best.1;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presymplectic::ansatz::{FiniteExample, ToyCanonical};

    #[test]
    fn axis_values_hit_both_ends() {
        let a = ScanAxis::new("eta", 0.05, 1.2, 64).unwrap();
        let v = a.values();
        assert_eq!(v[0], 0.05);
        assert_eq!(v[63], 1.2);
        assert!(ScanAxis::new("eta", 1.0, 1.0, 4).is_err());
    }

    #[test]
    fn toy_manifold_has_no_zero_cells() {
        let m = ToyCanonical::new(2, 0.5).unwrap();
        let r = degeneracy_scan(
            &m,
            &ScanAxis::new("q1", -1.0, 1.0, 9).unwrap(),
            &ScanAxis::new("p1", -1.0, 1.0, 9).unwrap(),
            &[],
            1e-12,
        )
        .unwrap();
        assert!(r.zero_cells.is_empty() && r.zero_nodes.is_empty());
        assert_eq!(r.curve_count(), 0);
    }

    #[test]
    fn finite_example_zero_set_is_the_line() {
        let r = degeneracy_scan(
            &FiniteExample,
            &ScanAxis::new("x1", -1.0, 1.0, 11).unwrap(),
            &ScanAxis::new("xi2", -1.0, 1.0, 11).unwrap(),
            &[],
            1e-12,
        )
        .unwrap();
        assert_eq!(r.zero_nodes, (0..11).map(|i| (i, 5)).collect::<Vec<_>>());
        assert_eq!(r.curve_count(), 1);
        assert!(r.zero_cells.iter().all(|&(_, j)| j == 4 || j == 5));
        assert_eq!(r.max_pf_det_mismatch, 0.0);
    }

    #[test]
    fn two_sign_changes_make_two_curves() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let f: Vec<Vec<f64>> = x
            .iter()
            .map(|&a| x.iter().map(|&b| (a + b - 4.5) * (a + b - 12.5)).collect())
            .collect();
        let z = zero_set(&f, &x, &x, 0.0);
        assert_eq!(z.curves.len(), 2);
        assert!(z.nodes.is_empty());
        assert_eq!(z.segments.len(), z.cells.len());
    }

    #[test]
    fn scan_rejects_unknown_or_missing_parameters() {
        let m = ToyCanonical::new(4, 0.5).unwrap();
        let a1 = ScanAxis::new("q1", -1.0, 1.0, 3).unwrap();
        let a2 = ScanAxis::new("p1", -1.0, 1.0, 3).unwrap();
        assert!(degeneracy_scan(&m, &a1, &a2, &[("q2".into(), 0.0)], 0.0).is_err());
        let bad = ScanAxis::new("zeta", -1.0, 1.0, 3).unwrap();
        assert!(degeneracy_scan(&m, &a1, &bad, &[], 0.0).is_err());
        let fixed = [("q2".to_string(), 0.0), ("p2".to_string(), 0.3)];
        assert!(degeneracy_scan(&m, &a1, &a2, &fixed, 0.0).is_ok());
    }

    #[test]
    fn bisection_finds_the_finite_example_line() {
        let (theta, pf) = bisect_pfaffian_zero(&FiniteExample, &[0.2, -0.3], &[0.2, 0.7], 1e-14).unwrap();
        assert!(theta[1].abs() < 1e-13);
        assert!(pf.abs() < 1e-12);
    }
}

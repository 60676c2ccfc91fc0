//! Dense generalized symmetric eigenproblems A v = λ M v.
//!
//! M is factored as L Lᵀ, the problem reduced to L⁻¹ A L⁻ᵀ and solved with a
//! dense symmetric eigendecomposition. Eigenvectors come back M-orthonormal
//! and sign-normalized (largest-magnitude entry positive).

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fem::{FormKind, FormMatrix};

/// Relative gap below which neighbouring eigenvalues form a cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// ascending
    pub eigenvalues: Vec<f64>,
    /// columns are M-orthonormal eigenvectors
    pub eigenvectors: DMatrix<f64>,
    /// ‖A v − λ M v‖ / ‖v‖_M per pair
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn clusters(&self) -> Vec<Range<usize>> {
        clusters(&self.eigenvalues, CLUSTER_TOL)
    }

    /// Columns of the cluster containing index k.
    pub fn cluster_block(&self, k: usize) -> (Range<usize>, DMatrix<f64>) {
        let range = self
            .clusters()
            .into_iter()
            .find(|r| r.contains(&k))
            .unwrap_or(k..k + 1);
        let block = self.eigenvectors.columns(range.start, range.len()).into_owned();
        (range, block)
    }
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("matrix is {}×{}", a.nrows(), a.ncols())));
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let asym = max_abs(&(a - a.transpose()));
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// First k eigenpairs of a Galerkin pair (A, M); M must be a mass matrix.
pub fn solve_generalized(a: &FormMatrix, m: &FormMatrix, k: usize) -> Result<Spectrum> {
    if m.kind != FormKind::Mass {
        return Err(Error::invalid("second matrix must be a mass matrix"));
    }
    solve_dense(&a.entries, &m.entries, k)
}

/// First k eigenpairs of A v = λ M v for dense symmetric A and SPD M.
pub fn solve_dense(a: &DMatrix<f64>, m: &DMatrix<f64>, k: usize) -> Result<Spectrum> {
    check_symmetric(a)?;
    check_symmetric(m)?;
    let n = a.nrows();
    if m.nrows() != n {
        return Err(Error::DimensionMismatch(format!("A is {n}×{n}, M is {0}×{0}", m.nrows())));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("requested {k} eigenpairs of a {n}×{n} problem")));
    }
    let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let x = l.solve_lower_triangular(a).ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    order.truncate(k);
    let lt = l.transpose();
    let mut vectors = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (col, &idx) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(idx).into_owned();
        let mut v = lt.solve_upper_triangular(&y).ok_or(Error::NotPositiveDefinite)?;
        normalize_sign(&mut v);
        vectors.set_column(col, &v);
        values.push(eig.eigenvalues[idx]);
    }
    let residuals = (0..k)
        .map(|j| {
            let v = vectors.column(j);
            let r = a * v - m * v * values[j];
            let norm_m = v.dot(&(m * v)).sqrt();
            r.norm() / norm_m
        })
        .collect();
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
    })
}

/// Scale so that the entry of largest magnitude (first on ties) is positive.
pub fn normalize_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// xᵀAx / xᵀMx
pub fn rayleigh(a: &DMatrix<f64>, m: &DMatrix<f64>, x: &DVector<f64>) -> Result<f64> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::invalid("Rayleigh quotient of the zero vector"));
    }
    if a.nrows() != x.len() || m.nrows() != x.len() {
        return Err(Error::DimensionMismatch("vector length does not match the matrices".into()));
    }
    Ok(x.dot(&(a * x)) / x.dot(&(m * x)))
}

/// Sine of the largest principal angle between span(U) and span(V) in the M
/// inner product; U and V must have M-orthonormal columns.
pub fn subspace_distance(u: &DMatrix<f64>, v: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    if u.ncols() != v.ncols() || u.nrows() != v.nrows() || m.nrows() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "blocks {}×{} and {}×{} with mass {}×{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    // R = U − V VᵀM U is the M-orthogonal residual of U against span(V)
    let mu = m * u;
    let r = u - v * (v.transpose() * &mu);
    let g = r.transpose() * (m * &r);
    let g = (&g + g.transpose()) * 0.5;
    let top = SymmetricEigen::new(g).eigenvalues.iter().fold(0.0f64, |a, b| a.max(*b));
    Ok(top.max(0.0).sqrt().min(1.0))
}

/// Ranges of consecutive eigenvalues whose neighbours differ by at most
/// `rel_tol` relative.
pub fn clusters(values: &[f64], rel_tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (a, b) = (values[i - 1], values[i]);
            (b - a).abs() > rel_tol * a.abs().max(b.abs())
        };
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

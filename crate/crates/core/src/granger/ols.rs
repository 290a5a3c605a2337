//! Least squares by orthogonalization.
//!
//! Columns are orthonormalized with modified Gram-Schmidt applied twice
//! ("twice is enough"), which yields a thin QR factorization accurate to
//! working precision without ever forming `X'X`.

use super::GrangerError;

/// A column whose residual norm after orthogonalization falls below this
/// fraction of its original norm is treated as linearly dependent.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Column-major `rows x cols` regressor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, GrangerError> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(GrangerError::LengthMismatch);
        }
        Ok(Self { rows, data: columns.concat() })
    }

    /// Intercept column followed by `regressors`.
    pub fn with_intercept(regressors: &[Vec<f64>], rows: usize) -> Result<Self, GrangerError> {
        let mut cols = vec![vec![1.0; rows]];
        cols.extend(regressors.iter().cloned());
        Self::from_columns(&cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        if self.rows == 0 {
            0
        } else {
            self.data.len() / self.rows
        }
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Orthonormal basis of a growing column space, stored column-major.
#[derive(Debug, Clone)]
pub(crate) struct OrthoBasis {
    rows: usize,
    q: Vec<f64>,
}

impl OrthoBasis {
    pub fn new(rows: usize) -> Self {
        Self { rows, q: Vec::new() }
    }

    pub fn vectors(&self) -> std::slice::ChunksExact<'_, f64> {
        self.q.chunks_exact(self.rows)
    }

    /// Removes the component of `v` lying in the span of `vectors`, two passes.
    pub fn project_out<'a>(vectors: impl Iterator<Item = &'a [f64]> + Clone, v: &mut [f64]) {
        for _ in 0..2 {
            for q in vectors.clone() {
                let c = dot(q, v);
                axpy(-c, q, v);
            }
        }
    }

    /// Orthonormalizes `v` against `prior` and the current basis and appends it.
    /// Fails when `v` is (numerically) in the span already.
    pub fn push_against(&mut self, prior: Option<&OrthoBasis>, mut v: Vec<f64>) -> Result<(), ()> {
        debug_assert_eq!(v.len(), self.rows);
        let norm0 = dot(&v, &v).sqrt();
        let own = self.q.chunks_exact(self.rows);
        match prior {
            Some(p) => Self::project_out(p.vectors().chain(own), &mut v),
            None => Self::project_out(own, &mut v),
        }
        let norm = dot(&v, &v).sqrt();
        if !(norm0 > 0.0) || !(norm > RANK_TOL * norm0) {
            return Err(());
        }
        v.iter_mut().for_each(|x| *x /= norm);
        self.q.extend_from_slice(&v);
        Ok(())
    }

    pub fn push(&mut self, v: Vec<f64>) -> Result<(), ()> {
        self.push_against(None, v)
    }
}

/// Residual sum of squares of the least-squares fit of `y` on `design`.
pub fn ols_rss(y: &[f64], design: &DesignMatrix) -> Result<f64, GrangerError> {
    let rows = design.rows();
    if rows != y.len() {
        return Err(GrangerError::LengthMismatch);
    }
    let cols = design.cols();
    if cols == 0 || rows <= cols {
        return Err(GrangerError::InsufficientObservations { needed: cols + 1, have: rows });
    }
    let mut basis = OrthoBasis::new(rows);
    for j in 0..cols {
        basis
            .push(design.column(j).to_vec())
            .map_err(|_| GrangerError::DegenerateDesign(format!("regressor column {j} is linearly dependent")))?;
    }
    let mut resid = y.to_vec();
    OrthoBasis::project_out(basis.vectors(), &mut resid);
    Ok(dot(&resid, &resid))
}

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::dot;

/// Fitted principal-component projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`, by decreasing explained variance.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (denominator `n - 1`) along each component.
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

impl PcaBasis {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    /// Projects `(x - mean)` onto the component rows.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }

    /// Maps reduced coordinates back to the input space.
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: z.len(),
            });
        }
        let mut out = self.mean.clone();
        for (coef, comp) in z.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += coef * c;
            }
        }
        Ok(out)
    }

    /// Sum over rows of the squared reconstruction residual.
    pub fn reconstruction_error(&self, rows: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        for row in rows {
            let back = self.inverse_transform(&self.transform(row)?)?;
            total += row.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total)
    }
}

/// Fits the top-`k` principal directions of `rows` (one observation per row).
///
/// Eigenpairs are ordered by decreasing eigenvalue with ties kept in solver
/// index order; each direction is signed so its largest-magnitude entry
/// (first such entry on ties) is positive.
pub fn pca_fit(rows: &[Vec<f64>], k: usize) -> Result<PcaBasis> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid(format!("PCA needs at least 2 rows, got {n}")));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::invalid(format!("k = {k} must be in 1..={}", n.min(d))));
    }

    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    if cov.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("covariance matrix".into()));
    }
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaBasis {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

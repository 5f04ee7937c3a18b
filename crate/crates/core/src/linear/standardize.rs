use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Per-column zero-mean, unit-variance transform fitted on training rows.
/// Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<F> {
    pub mean: Vec<F>,
    pub scale: Vec<F>,
}

impl<F: Scalar> Standardizer<F> {
    pub fn fit(x: &Matrix<F>) -> Self {
        let n = F::of_usize(x.rows().max(1));
        let d = x.cols();
        let mut mean = vec![F::zero(); d];
        for row in x.iter_rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![F::zero(); d];
        for row in x.iter_rows() {
            for j in 0..d {
                let c = row[j] - mean[j];
                var[j] = var[j] + c * c;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > F::epsilon() {
                    s
                } else {
                    F::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    /// Identity transform for `d` columns.
    pub fn identity(d: usize) -> Self {
        Self { mean: vec![F::zero(); d], scale: vec![F::one(); d] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[F]) -> Result<Vec<F>> {
        if row.len() != self.dim() {
            return Err(Error::Argument(format!("row has {} features, model expects {}", row.len(), self.dim())));
        }
        Ok(row.iter().zip(self.mean.iter().zip(&self.scale)).map(|(&v, (&m, &s))| (v - m) / s).collect())
    }

    pub fn transform(&self, x: &Matrix<F>) -> Result<Matrix<F>> {
        let mut out = x.clone();
        for i in 0..x.rows() {
            let t = self.transform_row(x.row(i))?;
            out.row_mut(i).copy_from_slice(&t);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_unit_variance() {
        let x = Matrix::from_rows(&[vec![1.0_f64, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&x);
        let t = s.transform(&x).unwrap();
        let col0: Vec<f64> = (0..3).map(|i| t.get(i, 0)).collect();
        assert!((col0.iter().sum::<f64>()).abs() < 1e-12);
        assert!((col0.iter().map(|v| v * v).sum::<f64>() / 3.0 - 1.0).abs() < 1e-12);
        assert_eq!(s.scale[1], 1.0);
        assert!(s.transform_row(&[1.0]).is_err());
    }
}

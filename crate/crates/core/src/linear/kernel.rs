use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, squared_distance};
use crate::scalar::Scalar;

/// Kernel function of the SVM dual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec<F> {
    Linear,
    /// `exp(-gamma * |x - z|^2)`
    Rbf {
        gamma: F,
    },
    /// `(gamma * x.z + coef0)^degree`
    Polynomial {
        gamma: F,
        degree: u32,
        coef0: F,
    },
}

impl<F: Scalar> KernelSpec<F> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } | KernelSpec::Polynomial { gamma, .. } => {
                if gamma > F::zero() && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Argument(format!("kernel gamma must be positive, got {gamma}")))
                }
            }
        }
    }

    /// Unchecked evaluation; callers guarantee equal lengths.
    pub(crate) fn eval(&self, x: &[F], z: &[F]) -> F {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Rbf { gamma } => (-gamma * squared_distance(x, z)).exp(),
            KernelSpec::Polynomial { gamma, degree, coef0 } => (gamma * dot(x, z) + coef0).powi(degree as i32),
        }
    }
}

pub fn kernel_eval<F: Scalar>(spec: &KernelSpec<F>, x: &[F], z: &[F]) -> Result<F> {
    if x.len() != z.len() {
        return Err(Error::Argument(format!("kernel inputs have dimensions {} and {}", x.len(), z.len())));
    }
    spec.validate()?;
    Ok(spec.eval(x, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        let rbf = KernelSpec::Rbf { gamma: 0.5_f64 };
        assert_eq!(kernel_eval(&rbf, &[1.0, -2.0], &[1.0, -2.0]).unwrap(), 1.0);
        assert_eq!(kernel_eval(&KernelSpec::Linear, &[1.0_f64, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let poly = KernelSpec::Polynomial { gamma: 1.0_f64, degree: 2, coef0: 1.0 };
        assert_eq!(kernel_eval(&poly, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 144.0);
    }

    #[test]
    fn errors() {
        assert!(kernel_eval(&KernelSpec::Linear, &[1.0_f64], &[1.0, 2.0]).is_err());
        assert!(kernel_eval(&KernelSpec::Rbf { gamma: 0.0_f64 }, &[1.0], &[1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn rbf_is_symmetric(x in proptest::collection::vec(-5.0f64..5.0, 3), z in proptest::collection::vec(-5.0f64..5.0, 3)) {
            let k = KernelSpec::Rbf { gamma: 0.7 };
            proptest::prop_assert_eq!(kernel_eval(&k, &x, &z).unwrap(), kernel_eval(&k, &z, &x).unwrap());
        }
    }
}

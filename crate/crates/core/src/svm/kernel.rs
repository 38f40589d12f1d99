use serde::{Deserialize, Serialize};

use super::{Result, SvmError};
use crate::features::FeatureVector;

/// Kernel choice. An RBF kernel without an explicit `gamma` uses `1 / dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

impl KernelSpec {
    pub const RBF_DEFAULT: KernelSpec = KernelSpec::Rbf { gamma: None };

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec::Rbf { gamma: Some(gamma) }
    }

    /// Pins the default gamma for the given input dimension.
    pub fn resolve(self, dim: usize) -> Self {
        match self {
            KernelSpec::Rbf { gamma: None } => KernelSpec::rbf(1.0 / dim.max(1) as f64),
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Rbf { gamma: Some(g) } if !(g.is_finite() && *g > 0.0) => {
                Err(SvmError::InvalidConfig(format!("rbf gamma must be finite and positive, got {g}")))
            }
            _ => Ok(()),
        }
    }

    /// Sort key used when breaking ties between otherwise equal grid cells.
    pub(crate) fn order(&self) -> u8 {
        match self {
            KernelSpec::Linear => 0,
            KernelSpec::Rbf { .. } => 1,
        }
    }

    pub(crate) fn eval_unchecked(&self, x: &FeatureVector, y: &FeatureVector) -> f64 {
        match self.resolve(x.dim) {
            KernelSpec::Linear => x.dot(y),
            KernelSpec::Rbf { gamma } => (-gamma.unwrap() * x.squared_distance(y)).exp(),
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf { gamma: None } => write!(f, "rbf(gamma=1/dim)"),
            KernelSpec::Rbf { gamma: Some(g) } => write!(f, "rbf(gamma={g})"),
        }
    }
}

/// `<x, y>` for the linear kernel, `exp(-gamma * |x - y|^2)` for RBF.
pub fn kernel_eval(x: &FeatureVector, y: &FeatureVector, spec: &KernelSpec) -> Result<f64> {
    if x.dim != y.dim {
        return Err(SvmError::DimensionMismatch {
            expected: x.dim,
            got: y.dim,
        });
    }
    Ok(spec.eval_unchecked(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> FeatureVector {
        FeatureVector::from_dense(x)
    }

    #[test]
    fn examples() {
        assert_eq!(kernel_eval(&v(&[1.0, 2.0]), &v(&[3.0, 4.0]), &KernelSpec::Linear).unwrap(), 11.0);
        let x = v(&[0.3, -2.0, 5.0]);
        assert_eq!(kernel_eval(&x, &x, &KernelSpec::rbf(0.7)).unwrap(), 1.0);
        let k = kernel_eval(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), &KernelSpec::rbf(1.0)).unwrap();
        assert!((k - (-2.0f64).exp()).abs() < 1e-15);
        assert!((k - 0.135_335).abs() < 1e-6);
    }

    #[test]
    fn default_gamma_is_inverse_dim() {
        assert_eq!(KernelSpec::RBF_DEFAULT.resolve(4), KernelSpec::rbf(0.25));
        let k = kernel_eval(&v(&[1.0, 0.0, 0.0, 0.0]), &v(&[0.0; 4]), &KernelSpec::RBF_DEFAULT).unwrap();
        assert!((k - (-0.25f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            kernel_eval(&v(&[1.0]), &v(&[1.0, 2.0]), &KernelSpec::Linear),
            Err(SvmError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn gamma_validation() {
        assert!(KernelSpec::rbf(0.0).validate().is_err());
        assert!(KernelSpec::rbf(f64::NAN).validate().is_err());
        assert!(KernelSpec::rbf(2.0).validate().is_ok());
    }

    #[test]
    fn serde_shape() {
        assert_eq!(serde_json::to_string(&KernelSpec::Linear).unwrap(), r#"{"kind":"linear"}"#);
        assert_eq!(serde_json::to_string(&KernelSpec::rbf(0.5)).unwrap(), r#"{"kind":"rbf","gamma":0.5}"#);
        let k: KernelSpec = serde_json::from_str(r#"{"kind":"rbf"}"#).unwrap();
        assert_eq!(k, KernelSpec::RBF_DEFAULT);
    }

    // Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
    fn min_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
    }

    proptest! {
        #[test]
        fn gram_matrix_is_symmetric_psd(
            pts in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 2..8),
            rbf in any::<bool>(),
            gamma in 0.05f64..3.0,
        ) {
            let spec = if rbf { KernelSpec::rbf(gamma) } else { KernelSpec::Linear };
            let xs: Vec<_> = pts.iter().map(|p| v(p)).collect();
            let gram: Vec<Vec<f64>> = xs.iter().map(|a| xs.iter().map(|b| kernel_eval(a, b, &spec).unwrap()).collect()).collect();
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    prop_assert_eq!(gram[i][j], gram[j][i]);
                }
            }
            prop_assert!(min_eigenvalue(gram) >= -1e-8);
        }
    }
}

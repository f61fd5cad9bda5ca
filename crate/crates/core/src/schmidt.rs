//! Schmidt decomposition of a gridded JSA.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::JointSpectralAmplitude;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtDecomposition {
    /// Schmidt coefficients `lambda_n`, descending, with `sum lambda_n^2 = 1`.
    pub coefficients: Vec<f64>,
    /// `K = 1 / sum lambda_n^4`.
    pub schmidt_number: f64,
    /// Entanglement entropy in bits.
    pub entropy_bits: f64,
}

/// Singular values of the discretized kernel `f(nu_s, nu_i)`. The uniform
/// cell area only rescales them and drops out after normalization.
pub fn schmidt_decompose(jsa: &JointSpectralAmplitude) -> Result<SchmidtDecomposition> {
    let (n_s, n_i) = jsa.amplitude.dim();
    let norm: f64 = jsa.amplitude.iter().map(|z| z.norm_sqr()).sum();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Domain("JSA is not normalizable".into()));
    }
    let scale = 1.0 / norm.sqrt();
    let matrix = DMatrix::<Complex64>::from_fn(n_s, n_i, |j, k| jsa.amplitude[[j, k]] * scale);
    let mut values: Vec<f64> = matrix.singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));

    let total: f64 = values.iter().map(|v| v * v).sum();
    let coefficients: Vec<f64> = values.iter().map(|v| v / total.sqrt()).collect();
    let purity: f64 = coefficients.iter().map(|l| l.powi(4)).sum();
    let entropy_bits = -coefficients
        .iter()
        .map(|l| l * l)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>();
    Ok(SchmidtDecomposition {
        coefficients,
        schmidt_number: 1.0 / purity,
        entropy_bits,
    })
}

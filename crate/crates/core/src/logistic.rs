//! Binary L2-regularized logistic regression over two standardized features.
//!
//! The objective matches the common library convention: `C` times the summed
//! log-loss plus half the squared weight norm, with an unpenalized intercept.
//! It is minimized with Newton's method.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::ProbeError;

pub const FEATURES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticOptions {
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iter: usize,
    /// Convergence threshold on the largest Newton step component.
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iter: 100,
            tol: 1e-10,
        }
    }
}

/// Per-feature standardization fitted on training data. Zero-variance
/// features get unit scale.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub mean: [f64; FEATURES],
    pub scale: [f64; FEATURES],
}

impl Standardizer {
    pub fn fit(x: &[[f64; FEATURES]]) -> Self {
        let n = x.len().max(1) as f64;
        let mut mean = [0.0; FEATURES];
        let mut scale = [0.0; FEATURES];
        for j in 0..FEATURES {
            mean[j] = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = x
                .iter()
                .map(|r| (r[j] - mean[j]) * (r[j] - mean[j]))
                .sum::<f64>()
                / n;
            let sd = libm::sqrt(var);
            scale[j] = if sd > 0.0 { sd } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn transform(&self, row: &[f64; FEATURES]) -> [f64; FEATURES] {
        let mut out = [0.0; FEATURES];
        for j in 0..FEATURES {
            out[j] = (row[j] - self.mean[j]) / self.scale[j];
        }
        out
    }

    /// Features whose training variance was zero.
    pub fn constant(&self, x: &[[f64; FEATURES]]) -> [bool; FEATURES] {
        let mut out = [true; FEATURES];
        for (j, flag) in out.iter_mut().enumerate() {
            *flag = x.windows(2).all(|w| w[0][j] == w[1][j]);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticModel {
    pub standardizer: Standardizer,
    pub weights: [f64; FEATURES],
    pub intercept: f64,
    pub iterations: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Solves a 3x3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

impl LogisticModel {
    /// Fits on raw features. Returns the model and any warnings. A training
    /// set with a single class is an error.
    pub fn fit(
        x: &[[f64; FEATURES]],
        y: &[bool],
        opts: &LogisticOptions,
    ) -> Result<(Self, Vec<String>), ProbeError> {
        if x.len() != y.len() {
            return Err(ProbeError::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(ProbeError::Empty("logistic regression training set"));
        }
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            return Err(ProbeError::SingleClass);
        }
        if !(opts.c > 0.0) {
            return Err(ProbeError::Config(
                "logistic regression C must be positive".into(),
            ));
        }
        let standardizer = Standardizer::fit(x);
        let mut warnings = Vec::new();
        let constant = standardizer.constant(x);
        if constant.iter().all(|&c| c) {
            warnings.push(String::from(
                "all features are constant; the model predicts the majority class",
            ));
        }
        let z: Vec<[f64; FEATURES]> = x.iter().map(|r| standardizer.transform(r)).collect();

        // theta = [w0, w1, b]
        let mut theta = [0.0f64; 3];
        let mut iterations = 0;
        for _ in 0..opts.max_iter {
            iterations += 1;
            let mut grad = [theta[0], theta[1], 0.0];
            let mut hess = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
            for (row, &label) in z.iter().zip(y) {
                let feats = [row[0], row[1], 1.0];
                let p = sigmoid(feats[0] * theta[0] + feats[1] * theta[1] + theta[2]);
                let r = p - if label { 1.0 } else { 0.0 };
                let s = p * (1.0 - p);
                for i in 0..3 {
                    grad[i] += opts.c * r * feats[i];
                    for j in 0..3 {
                        hess[i][j] += opts.c * s * feats[i] * feats[j];
                    }
                }
            }
            let step = solve3(hess, grad).ok_or_else(|| {
                ProbeError::Config("logistic regression Hessian is singular".into())
            })?;
            for i in 0..3 {
                theta[i] -= step[i];
            }
            if step.iter().all(|s| s.abs() < opts.tol) {
                break;
            }
        }
        if iterations == opts.max_iter {
            warnings.push(alloc::format!(
                "logistic regression stopped after {iterations} iterations"
            ));
        }
        Ok((
            Self {
                standardizer,
                weights: [theta[0], theta[1]],
                intercept: theta[2],
                iterations,
            },
            warnings,
        ))
    }

    pub fn probability(&self, row: &[f64; FEATURES]) -> f64 {
        let z = self.standardizer.transform(row);
        sigmoid(self.weights[0] * z[0] + self.weights[1] * z[1] + self.intercept)
    }

    /// Yes when the probability is at least 0.5.
    pub fn predict(&self, row: &[f64; FEATURES]) -> bool {
        self.probability(row) >= 0.5
    }
}

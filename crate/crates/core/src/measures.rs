//! Probability mass functions on a finite product alphabet `X × Y`, signed
//! measures, empirical measures, and the two distances used throughout the
//! crate: the F-norm and the variational (L1) distance.
//!
//! Alphabets are index sets. A cell `(x, y)` is stored row-major at
//! `x * y_size + y`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::losses::FunctionClass;

/// Normalization tolerance for [`JointPmf`].
pub const PMF_TOLERANCE: f64 = 1e-12;

/// A probability mass function on `{0..x_size} × {0..y_size}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    x_size: usize,
    y_size: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    /// Builds a pmf from a row-major probability vector.
    pub fn new(x_size: usize, y_size: usize, probs: Vec<f64>) -> Result<Self> {
        if x_size == 0 {
            return Err(Error::InvalidPmf("x alphabet must be nonempty".into()));
        }
        if y_size < 2 {
            return Err(Error::InvalidPmf(format!(
                "y alphabet must have at least 2 letters, got {y_size}"
            )));
        }
        if probs.len() != x_size * y_size {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", x_size * y_size),
                found: format!("{} entries", probs.len()),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidPmf(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Self {
            x_size,
            y_size,
            probs,
        })
    }

    /// Builds a pmf from rows indexed by `x`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let x_size = rows.len();
        let y_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != y_size) {
            return Err(Error::InvalidPmf("ragged rows".into()));
        }
        Self::new(x_size, y_size, rows.concat())
    }

    pub fn uniform(x_size: usize, y_size: usize) -> Result<Self> {
        let k = x_size * y_size;
        Self::new(x_size, y_size, vec![1.0 / k as f64; k])
    }

    /// Dirac measure at `(x, y)`.
    pub fn point_mass(x_size: usize, y_size: usize, x: usize, y: usize) -> Result<Self> {
        let mut probs = vec![0.0; x_size * y_size];
        check_index("x", x, x_size)?;
        check_index("y", y, y_size)?;
        probs[x * y_size + y] = 1.0;
        Self::new(x_size, y_size, probs)
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &JointPmf, lambda: f64) -> Result<Self> {
        check_dims(self.dims(), other.dims())?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("mixing weight {lambda}")));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
            .collect();
        Ok(Self {
            x_size: self.x_size,
            y_size: self.y_size,
            probs,
        })
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x_size, self.y_size)
    }

    /// Row-major probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.y_size + y]
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.y_size)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.y_size];
        for row in self.probs.chunks(self.y_size) {
            for (acc, p) in m.iter_mut().zip(row) {
                *acc += p;
            }
        }
        m
    }

    /// The signed measure `self − other`.
    pub fn minus(&self, other: &JointPmf) -> Result<SignedMeasure> {
        check_dims(self.dims(), other.dims())?;
        Ok(SignedMeasure {
            x_size: self.x_size,
            y_size: self.y_size,
            values: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(p, q)| p - q)
                .collect(),
        })
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &JointPmf) -> Result<f64> {
        check_dims(self.dims(), other.dims())?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .fold(0.0, |m, (p, q)| f64::max(m, (p - q).abs())))
    }
}

/// Integer counts of a finite sample over `X × Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalMeasure {
    x_size: usize,
    y_size: usize,
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalMeasure {
    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x_size, self.y_size)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.y_size + y]
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Normalized frequencies, row-major.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn to_pmf(&self) -> JointPmf {
        JointPmf {
            x_size: self.x_size,
            y_size: self.y_size,
            probs: self.frequencies(),
        }
    }

    /// The signed measure `self − p`.
    pub fn minus(&self, p: &JointPmf) -> Result<SignedMeasure> {
        check_dims(p.dims(), self.dims())?;
        let n = self.n as f64;
        Ok(SignedMeasure {
            x_size: self.x_size,
            y_size: self.y_size,
            values: self
                .counts
                .iter()
                .zip(p.probs())
                .map(|(&c, q)| c as f64 / n - q)
                .collect(),
        })
    }
}

/// Counts the occurrences of each pair in `sample`.
pub fn empirical(
    x_size: usize,
    y_size: usize,
    sample: &[(usize, usize)],
) -> Result<EmpiricalMeasure> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = vec![0u64; x_size * y_size];
    for &(x, y) in sample {
        check_index("x", x, x_size)?;
        check_index("y", y, y_size)?;
        counts[x * y_size + y] += 1;
    }
    Ok(EmpiricalMeasure {
        x_size,
        y_size,
        counts,
        n: sample.len() as u64,
    })
}

/// A real-valued measure on `X × Y`, typically a difference of two pmfs.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    x_size: usize,
    y_size: usize,
    values: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(x_size: usize, y_size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != x_size * y_size {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", x_size * y_size),
                found: format!("{} entries", values.len()),
            });
        }
        Ok(Self {
            x_size,
            y_size,
            values,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x_size, self.y_size)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn negated(&self) -> Self {
        Self {
            x_size: self.x_size,
            y_size: self.y_size,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// `mu(f) = Σ mu(z) f(z)` for function `f_index` of `class`.
    pub fn integrate(&self, class: &FunctionClass, f_index: usize) -> Result<f64> {
        check_dims(class.dims(), self.dims())?;
        Ok(dot(&self.values, class.function(f_index)?))
    }
}

/// `‖mu‖_F = max_f |mu(f)|`, exact because `F` is finite.
pub fn f_norm(mu: &SignedMeasure, class: &FunctionClass) -> Result<f64> {
    check_dims(class.dims(), mu.dims())?;
    Ok(f_norm_values(&mu.values, class))
}

/// F-norm of a row-major signed vector whose length matches the class.
pub(crate) fn f_norm_values(values: &[f64], class: &FunctionClass) -> f64 {
    class
        .functions()
        .map(|f| dot(values, f).abs())
        .fold(0.0, f64::max)
}

/// `‖P − Q‖_F` for two pmfs.
pub fn f_distance(p: &JointPmf, q: &JointPmf, class: &FunctionClass) -> Result<f64> {
    f_norm(&p.minus(q)?, class)
}

/// `Σ |P(z) − Q(z)|`; on a finite alphabet this is the supremum over
/// partitions, attained by the partition into `{P > Q}` and its complement.
pub fn variational_distance(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    check_dims(p.dims(), q.dims())?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub(crate) fn check_index(what: &'static str, index: usize, size: usize) -> Result<()> {
    if index >= size {
        return Err(Error::IndexOutOfRange { what, index, size });
    }
    Ok(())
}

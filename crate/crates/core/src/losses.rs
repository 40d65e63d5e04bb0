//! Finite loss classes and the expected / best-in-class loss.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::measures::{check_index, dot, JointPmf};

/// A finite class of loss functions `f: X × Y → [0, B]`.
///
/// Values are stored function-major, each function row-major over `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionClass {
    x_size: usize,
    y_size: usize,
    bound: f64,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FunctionClass {
    pub fn new(
        x_size: usize,
        y_size: usize,
        bound: f64,
        values: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let cell_count = x_size * y_size;
        if cell_count == 0 {
            return Err(Error::InvalidArgument("empty alphabet".into()));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "loss bound {bound} must be positive"
            )));
        }
        if values.is_empty() || !values.len().is_multiple_of(cell_count) {
            return Err(Error::InvalidArgument(format!(
                "value tensor of length {} is not a nonempty multiple of {cell_count}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= bound)) {
            return Err(Error::InvalidArgument(format!(
                "loss value {v} outside [0, {bound}]"
            )));
        }
        let count = values.len() / cell_count;
        if let Some(l) = &labels {
            if l.len() != count {
                return Err(Error::InvalidArgument(format!(
                    "{} labels for {count} functions",
                    l.len()
                )));
            }
        }
        Ok(Self {
            x_size,
            y_size,
            bound,
            values,
            labels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x_size, self.y_size)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    /// The bound `B` on every loss value.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.values.len() / (self.x_size * self.y_size)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Values of one function, row-major over `(x, y)`.
    pub fn function(&self, f_index: usize) -> Result<&[f64]> {
        check_index("function", f_index, self.len())?;
        let k = self.x_size * self.y_size;
        Ok(&self.values[f_index * k..(f_index + 1) * k])
    }

    pub fn functions(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks(self.x_size * self.y_size)
    }

    pub fn value(&self, f_index: usize, x: usize, y: usize) -> f64 {
        self.values[(f_index * self.x_size + x) * self.y_size + y]
    }
}

/// A finite family of classifiers `g: X → Y`, each stored as its table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFamily {
    x_size: usize,
    y_size: usize,
    maps: Vec<Vec<usize>>,
}

impl ClassifierFamily {
    pub fn new(x_size: usize, y_size: usize, maps: Vec<Vec<usize>>) -> Result<Self> {
        for g in &maps {
            if g.len() != x_size {
                return Err(Error::DimensionMismatch {
                    expected: format!("classifier table of length {x_size}"),
                    found: format!("length {}", g.len()),
                });
            }
            for &y in g {
                check_index("classifier output", y, y_size)?;
            }
        }
        Ok(Self {
            x_size,
            y_size,
            maps,
        })
    }

    /// Every map `X → Y`, in lexicographic order with `x = 0` most
    /// significant.
    pub fn all(x_size: usize, y_size: usize) -> Result<Self> {
        let count = (y_size as u32)
            .checked_pow(x_size as u32)
            .filter(|c| *c <= 1 << 20)
            .ok_or_else(|| {
                Error::GuardExceeded(format!("{y_size}^{x_size} classifiers is too many"))
            })?;
        let maps = (0..count as usize)
            .map(|mut code| {
                let mut g = vec![0; x_size];
                for slot in g.iter_mut().rev() {
                    *slot = code % y_size;
                    code /= y_size;
                }
                g
            })
            .collect();
        Self::new(x_size, y_size, maps)
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// `L(f, P) = Σ P(x, y) f(x, y)`.
pub fn expected_loss(f_index: usize, class: &FunctionClass, p: &JointPmf) -> Result<f64> {
    check_dims(class.dims(), p.dims())?;
    Ok(dot(class.function(f_index)?, p.probs()))
}

/// Best-in-class loss `L*(F, P)` and its minimizer, lowest index on ties.
pub fn bayes_loss(class: &FunctionClass, p: &JointPmf) -> Result<(usize, f64)> {
    check_dims(class.dims(), p.dims())?;
    Ok(argmin_loss(class, p.probs()))
}

pub(crate) fn argmin_loss(class: &FunctionClass, probs: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, f) in class.functions().enumerate() {
        let l = dot(f, probs);
        if l < best.1 {
            best = (i, l);
        }
    }
    best
}

/// 0-1 losses `f(x, y) = 1{g(x) ≠ y}`, one per classifier, with `B = 1`.
pub fn classification_class(family: &ClassifierFamily) -> Result<FunctionClass> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty classifier family".into()));
    }
    let mut values = Vec::with_capacity(family.len() * family.x_size * family.y_size);
    let mut labels = Vec::with_capacity(family.len());
    for g in family.maps() {
        for &gx in g {
            values.extend((0..family.y_size).map(|y| if gx == y { 0.0 } else { 1.0 }));
        }
        labels.push(format!("g={g:?}"));
    }
    FunctionClass::new(family.x_size, family.y_size, 1.0, values, Some(labels))
}

/// Squared losses `f(x, y) = (g(x) − y_values[y])²`; `B` is the largest
/// value attained.
pub fn regression_class(estimators: &[Vec<f64>], y_values: &[f64]) -> Result<FunctionClass> {
    let x_size = estimators
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("empty estimator family".into()))?;
    if estimators.iter().any(|g| g.len() != x_size) {
        return Err(Error::InvalidArgument(
            "estimators have different lengths".into(),
        ));
    }
    let mut values = Vec::with_capacity(estimators.len() * x_size * y_values.len());
    for g in estimators {
        for gx in g {
            values.extend(y_values.iter().map(|y| (gx - y) * (gx - y)));
        }
    }
    let bound = values.iter().copied().fold(0.0, f64::max);
    if !(bound > 0.0) {
        return Err(Error::InvalidArgument(
            "every squared loss is zero; the class needs a positive bound".into(),
        ));
    }
    FunctionClass::new(x_size, y_values.len(), bound, values, None)
}

//! Sorted, deduplicated, weighted samples.

use crate::error::{Error, Result};

/// Strictly increasing support points with positive weights.
///
/// Duplicated raw values are merged and their weights summed, so the
/// estimator only ever sees distinct points. Unit weights reproduce the
/// ordinary empirical distribution; fractional weights come from EM.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
}

impl WeightedSample {
    /// Builds a sample from raw values and optional per-value weights.
    ///
    /// Every raw value gets weight 1 when `weights` is `None`.
    pub fn new(raw: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::DegenerateSample { distinct: 0 });
        }
        if let Some(w) = weights {
            if w.len() != raw.len() {
                return Err(Error::InvalidData(format!(
                    "{} weights for {} values",
                    w.len(),
                    raw.len()
                )));
            }
        }
        let mut pairs = Vec::with_capacity(raw.len());
        for (i, &x) in raw.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidData(format!("non-finite value {x} at index {i}")));
            }
            let w = weights.map_or(1.0, |w| w[i]);
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidData(format!("weight {w} at index {i} is not positive")));
            }
            pairs.push((x, w));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut points: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut merged: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match points.last() {
                // -0.0 and 0.0 compare equal and are merged
                Some(&last) if last == x => *merged.last_mut().unwrap() += w,
                _ => {
                    points.push(x);
                    merged.push(w);
                }
            }
        }
        if points.len() < 2 {
            return Err(Error::DegenerateSample { distinct: points.len() });
        }
        let total_weight = merged.iter().sum();
        Ok(Self {
            points,
            weights: merged,
            total_weight,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Number of distinct points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; a valid sample holds at least two points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted mean and (biased) variance of the points.
    pub fn mean_variance(&self) -> (f64, f64) {
        let w = self.total_weight;
        let mean = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, wi)| x * wi)
            .sum::<f64>()
            / w;
        let var = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, wi)| wi * (x - mean) * (x - mean))
            .sum::<f64>()
            / w;
        (mean, var)
    }

    /// Empirical distribution function evaluated at each point, i.e. the
    /// cumulative weight up to and including point `i`, divided by the total.
    pub fn empirical_cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w;
                acc / self.total_weight
            })
            .collect()
    }
}

/// Builds a [`WeightedSample`]; see [`WeightedSample::new`].
pub fn prepare_sample(raw: &[f64], weights: Option<&[f64]>) -> Result<WeightedSample> {
    WeightedSample::new(raw, weights)
}

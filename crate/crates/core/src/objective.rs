//! The concave log-likelihood surrogate and its derivatives.
//!
//! A concave log-density that is linear between consecutive sample points
//! is described by its value `φ₁` at the first point and the slopes
//! `s₂, …, s_n` of its linear pieces. For weights `w_i` with total `W` the
//! surrogate objective is
//!
//! ```text
//! Ψ(φ₁, s) = Σ_i w_i φ(x_i) − W ∫ exp φ(x) dx
//!          = W φ₁ + Σ_{i≥2} (W − C_{i−1}) Δ_i s_i − W Σ_{i≥2} Δ_i e^{φ(x_{i−1})} (e^{Δ_i s_i} − 1)/(Δ_i s_i)
//! ```
//!
//! where `Δ_i = x_i − x_{i−1}` and `C_{i−1}` is the cumulative weight of
//! the first `i − 1` points. Its maximizer over nonincreasing slopes is the
//! log-concave maximum-likelihood estimate, and at the maximum the
//! integral equals one.

use crate::error::{Error, Result};
use crate::sample::WeightedSample;
use crate::special::{ln_moment, ln_rel_exp};

/// Parameter vector `(φ₁, s₂, …, s_n)`.
///
/// The concavity cone is `s₂ ≥ s₃ ≥ … ≥ s_n`; `φ₁` is unconstrained.
/// Infeasible vectors are still valid inputs to [`objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveParams {
    pub phi1: f64,
    pub slopes: Vec<f64>,
}

impl ConcaveParams {
    pub fn new(phi1: f64, slopes: Vec<f64>) -> Self {
        Self { phi1, slopes }
    }

    /// Rebuilds parameters from a flat vector `[φ₁, s₂, …, s_n]`.
    pub fn from_vec(v: &[f64]) -> Self {
        Self {
            phi1: v[0],
            slopes: v[1..].to_vec(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.phi1);
        v.extend_from_slice(&self.slopes);
        v
    }

    /// Number of parameters, which equals the number of sample points.
    pub fn len(&self) -> usize {
        self.slopes.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Membership in the cone of nonincreasing slopes.
    pub fn is_feasible(&self) -> bool {
        self.slopes.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_finite(&self) -> bool {
        self.phi1.is_finite() && self.slopes.iter().all(|s| s.is_finite())
    }

    /// Log-density values at the sample points.
    pub fn log_density(&self, points: &[f64]) -> Vec<f64> {
        let mut phi = Vec::with_capacity(points.len());
        let mut acc = self.phi1;
        phi.push(acc);
        for (w, s) in points.windows(2).zip(&self.slopes) {
            acc += (w[1] - w[0]) * s;
            phi.push(acc);
        }
        phi
    }
}

/// Objective value with an optional gradient `(∂/∂φ₁, ∂/∂s₂, …, ∂/∂s_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

/// Per-segment pieces shared by the value and its derivatives.
#[derive(Debug, Clone)]
pub(crate) struct Terms {
    /// Log-density at each point.
    pub phi: Vec<f64>,
    /// Gaps `x_{j+1} − x_j`.
    pub gaps: Vec<f64>,
    /// Mass to the right of each segment, `Σ_{i>j} seg_mass[i]`.
    pub tail: Vec<f64>,
    /// `∫ exp φ` over the whole support.
    pub integral: f64,
    /// `Σ w_i φ(x_i)`.
    pub data_term: f64,
}

impl Terms {
    pub fn compute(params: &ConcaveParams, sample: &WeightedSample) -> Result<Self> {
        check_dims(params, sample)?;
        if !params.is_finite() {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        let x = sample.points();
        let phi = params.log_density(x);
        let gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let seg_mass: Vec<f64> = gaps
            .iter()
            .zip(&params.slopes)
            .zip(&phi)
            .map(|((&d, &s), &p)| d * (p + ln_rel_exp(d * s)).exp())
            .collect();
        let mut tail = vec![0.0; seg_mass.len()];
        let mut acc = 0.0;
        for j in (0..seg_mass.len()).rev() {
            tail[j] = acc;
            acc += seg_mass[j];
        }
        let data_term = phi.iter().zip(sample.weights()).map(|(p, w)| p * w).sum();
        Ok(Self {
            phi,
            gaps,
            tail,
            integral: acc,
            data_term,
        })
    }

    pub fn value(&self, total_weight: f64) -> f64 {
        self.data_term - total_weight * self.integral
    }

    /// `∂/∂s_j ∫ exp φ = ∫_{x_j}^{x_{j+1}} (1 − F)`, unnormalized.
    pub fn integral_slope_grad(&self, slopes: &[f64]) -> Vec<f64> {
        (0..self.gaps.len())
            .map(|j| {
                let d = self.gaps[j];
                d * self.tail[j] + d * d * (self.phi[j] + ln_moment(d * slopes[j], 1)).exp()
            })
            .collect()
    }

    /// Diagonal of the Hessian of `∫ exp φ` in the slopes.
    pub fn integral_slope_curvature(&self, slopes: &[f64]) -> Vec<f64> {
        (0..self.gaps.len())
            .map(|j| {
                let d = self.gaps[j];
                d * d * self.tail[j] + d * d * d * (self.phi[j] + ln_moment(d * slopes[j], 2)).exp()
            })
            .collect()
    }

    /// Gradient of `Ψ / W`.
    pub fn normalized_gradient(&self, params: &ConcaveParams, sample: &WeightedSample) -> Vec<f64> {
        let w = sample.total_weight();
        let mut g = Vec::with_capacity(params.len());
        g.push(1.0 - self.integral);
        let ig = self.integral_slope_grad(&params.slopes);
        let mut cum = 0.0;
        for (j, gj) in ig.iter().enumerate() {
            cum += sample.weights()[j];
            g.push(self.gaps[j] * (1.0 - cum / w) - gj);
        }
        g
    }
}

fn check_dims(params: &ConcaveParams, sample: &WeightedSample) -> Result<()> {
    if params.len() != sample.len() {
        return Err(Error::InvalidParams(format!(
            "{} parameters for {} points",
            params.len(),
            sample.len()
        )));
    }
    Ok(())
}

/// Evaluates `Ψ` (and optionally its gradient) at any real parameter vector.
pub fn objective(params: &ConcaveParams, sample: &WeightedSample, with_gradient: bool) -> Result<ObjectiveValue> {
    let terms = Terms::compute(params, sample)?;
    let w = sample.total_weight();
    let gradient = with_gradient.then(|| {
        terms
            .normalized_gradient(params, sample)
            .into_iter()
            .map(|g| g * w)
            .collect()
    });
    Ok(ObjectiveValue {
        value: terms.value(w),
        gradient,
    })
}

/// Largest relative deviation between the analytic gradient and central
/// finite differences with step `h`.
///
/// Deviations are measured as `|a − fd| / max(|a|, |fd|, 1)`.
pub fn gradient_check(params: &ConcaveParams, sample: &WeightedSample, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParams(format!("finite-difference step {h} must be positive")));
    }
    let analytic = objective(params, sample, true)?.gradient.unwrap();
    let base = params.to_vec();
    let mut worst: f64 = 0.0;
    for (k, a) in analytic.iter().enumerate() {
        let mut up = base.clone();
        let mut down = base.clone();
        up[k] += h;
        down[k] -= h;
        let fu = objective(&ConcaveParams::from_vec(&up), sample, false)?.value;
        let fd = objective(&ConcaveParams::from_vec(&down), sample, false)?.value;
        let numeric = (fu - fd) / (2.0 * h);
        let dev = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// `(x_i, φ(x_i))` pairs described by `params`.
pub fn params_to_knots(params: &ConcaveParams, sample: &WeightedSample) -> Result<Vec<(f64, f64)>> {
    check_dims(params, sample)?;
    let x = sample.points();
    Ok(x.iter().copied().zip(params.log_density(x)).collect())
}

/// Inverse of [`params_to_knots`]: slopes of the chords between consecutive knots.
pub fn knots_to_params(knots: &[(f64, f64)]) -> Result<ConcaveParams> {
    if knots.len() < 2 {
        return Err(Error::InvalidParams("at least two knots are required".into()));
    }
    let slopes = knots
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    Ok(ConcaveParams::new(knots[0].1, slopes))
}

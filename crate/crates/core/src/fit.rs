//! The normalized log-concave density produced by the solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::WeightedSample;
use crate::special::ln_rel_exp;

/// Progress record of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    /// Objective after initialization and after every accepted step.
    pub objective_trace: Vec<f64>,
    /// Max-norm of the projected-gradient residual at the returned point.
    pub stationarity_residual: f64,
    pub converged: bool,
}

/// A log-concave density that is piecewise linear on the log scale between
/// the sample points and zero outside `[x₁, x_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogConcaveFit {
    sample: WeightedSample,
    log_density: Vec<f64>,
    slopes: Vec<f64>,
    cdf_at_knots: Vec<f64>,
    survival_at_knots: Vec<f64>,
    report: SolverReport,
}

/// Chord slopes of the log-density, checked to be nonincreasing.
///
/// Chords of a pooled stretch are equal in exact arithmetic but pick up the
/// rounding of the stored values; an increase no larger than that rounding
/// is flattened, anything larger is rejected.
fn concave_slopes(x: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    let mut slopes: Vec<f64> = x
        .windows(2)
        .zip(phi.windows(2))
        .map(|(xs, ps)| (ps[1] - ps[0]) / (xs[1] - xs[0]))
        .collect();
    // rounding bound of each chord, inherited along flattened stretches
    let mut err: Vec<f64> = (0..slopes.len())
        .map(|j| 4.0 * f64::EPSILON * (phi[j].abs() + phi[j + 1].abs() + 1.0) / (x[j + 1] - x[j]))
        .collect();
    for j in 1..slopes.len() {
        let excess = slopes[j] - slopes[j - 1];
        if excess <= 0.0 {
            continue;
        }
        if excess > err[j] + err[j - 1] {
            return Err(Error::InvalidData(format!("log-density is not concave at knot {}", x[j])));
        }
        slopes[j] = slopes[j - 1];
        err[j] = err[j].max(err[j - 1]);
    }
    Ok(slopes)
}

impl LogConcaveFit {
    /// Assembles a fit from log-density values at the sample points.
    ///
    /// The values must describe a normalized density (total mass within
    /// `1e-8` of one); slopes, CDF and survival at the knots are derived.
    pub fn from_parts(sample: WeightedSample, log_density: Vec<f64>, report: SolverReport) -> Result<Self> {
        if log_density.len() != sample.len() {
            return Err(Error::InvalidData(format!(
                "{} log-density values for {} knots",
                log_density.len(),
                sample.len()
            )));
        }
        if log_density.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite log-density value".into()));
        }
        let x = sample.points();
        let slopes = concave_slopes(x, &log_density)?;
        let mass: Vec<f64> = x
            .windows(2)
            .zip(&slopes)
            .zip(&log_density)
            .map(|((xs, s), p)| {
                let d = xs[1] - xs[0];
                d * (p + ln_rel_exp(d * s)).exp()
            })
            .collect();

        let mut cdf_at_knots = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        cdf_at_knots.push(0.0);
        for m in &mass {
            acc += m;
            cdf_at_knots.push(acc);
        }
        let mut survival_at_knots = vec![0.0; x.len()];
        let mut acc = 0.0;
        for j in (0..mass.len()).rev() {
            acc += mass[j];
            survival_at_knots[j] = acc;
        }
        if (cdf_at_knots[x.len() - 1] - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidData(format!(
                "density integrates to {}, not 1",
                cdf_at_knots[x.len() - 1]
            )));
        }
        Ok(Self {
            sample,
            log_density,
            slopes,
            cdf_at_knots,
            survival_at_knots,
            report,
        })
    }

    /// The sample points, `x₁ < … < x_n`.
    pub fn knots(&self) -> &[f64] {
        self.sample.points()
    }

    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    /// Slopes of the log-density between consecutive knots.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn cdf_at_knots(&self) -> &[f64] {
        &self.cdf_at_knots
    }

    /// `1 − F` at the knots, accumulated from the right.
    pub fn survival_at_knots(&self) -> &[f64] {
        &self.survival_at_knots
    }

    pub fn weighted_sample(&self) -> &WeightedSample {
        &self.sample
    }

    pub fn report(&self) -> &SolverReport {
        &self.report
    }

    pub fn converged(&self) -> bool {
        self.report.converged
    }

    pub fn support(&self) -> (f64, f64) {
        let x = self.knots();
        (x[0], x[x.len() - 1])
    }

    /// Indices of the knots where the log-density actually bends, plus both
    /// endpoints.
    ///
    /// A slope change counts when it exceeds `rel_tol · max(1, |s|)`.
    pub fn breakpoints(&self, rel_tol: f64) -> Vec<usize> {
        let n = self.knots().len();
        let mut idx = vec![0];
        for j in 1..n - 1 {
            let (a, b) = (self.slopes[j - 1], self.slopes[j]);
            if (a - b).abs() > rel_tol * a.abs().max(b.abs()).max(1.0) {
                idx.push(j);
            }
        }
        idx.push(n - 1);
        idx
    }

    /// Index `j` of the segment `[x_j, x_{j+1}]` containing `x`, for `x`
    /// inside the support.
    pub(crate) fn segment_of(&self, x: f64) -> usize {
        let k = self.knots();
        let pos = k.partition_point(|&v| v <= x);
        pos.saturating_sub(1).min(k.len() - 2)
    }
}

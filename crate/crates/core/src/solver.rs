//! Iterative convex minorant maximization of the log-concave objective.
//!
//! Each iteration replaces the objective by a separable quadratic model
//! built from the gradient and the diagonal of the Hessian, maximizes that
//! model over the cone of nonincreasing slopes with a weighted
//! pool-adjacent-violators projection, and backtracks along the arc of
//! projected points until the Armijo condition holds.
//!
//! The diagonal model finds the pooling pattern quickly but converges
//! only linearly. By default every iteration therefore continues with
//! Newton steps on the kinks left open by the convex-minorant step,
//! closing kinks as they reach zero, which gives fast local convergence.

use crate::error::{Error, Result};
use crate::fit::{LogConcaveFit, SolverReport};
use crate::newton::newton_step;
use crate::objective::{ConcaveParams, Terms};
use crate::pava::project_cone;
use crate::sample::WeightedSample;

/// Gains below this fraction of the objective are treated as rounding noise.
const ROUNDING_GAIN: f64 = 1e-14;

/// `true` when `f` improves on `f0` by more than rounding noise.
pub(crate) fn is_ascent(f0: f64, f: f64) -> bool {
    f - f0 > ROUNDING_GAIN * f0.abs().max(1.0)
}

/// Floor on the diagonal curvature of the quadratic model.
const MIN_CURVATURE: f64 = 1e-8;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Relative change of the objective between iterations.
    pub tol_objective: f64,
    /// Max-norm of the projected gradient of `Ψ / W`.
    pub tol_stationarity: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Follow each convex-minorant step with Newton steps on the open kinks.
    pub newton: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol_objective: 1e-10,
            tol_stationarity: 1e-8,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            newton: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.tol_objective > 0.0
            && self.tol_stationarity > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid solver configuration {self:?}")))
        }
    }
}

/// `Ψ / W` at `params`, failing on non-finite values.
fn scaled_value(params: &ConcaveParams, sample: &WeightedSample) -> Result<(Terms, f64)> {
    let terms = Terms::compute(params, sample)?;
    let v = terms.value(sample.total_weight()) / sample.total_weight();
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::SolverFailure(format!("objective evaluated to {v}")));
    }
    Ok((terms, v))
}

/// Normal log-density with the weighted sample mean and variance, taken
/// through the points, projected onto the cone and shifted to unit mass.
pub fn initial_params(sample: &WeightedSample) -> Result<ConcaveParams> {
    let (mean, var) = sample.mean_variance();
    let log_norm = -0.5 * (2.0 * std::f64::consts::PI * var).ln();
    let phi: Vec<f64> = sample
        .points()
        .iter()
        .map(|x| log_norm - (x - mean) * (x - mean) / (2.0 * var))
        .collect();
    from_log_density(sample, &phi)
}

/// Chord slopes of `phi`, projected onto the cone and normalized to unit mass.
pub(crate) fn from_log_density(sample: &WeightedSample, phi: &[f64]) -> Result<ConcaveParams> {
    let x = sample.points();
    let slopes: Vec<f64> = x
        .windows(2)
        .zip(phi.windows(2))
        .map(|(xs, ps)| (ps[1] - ps[0]) / (xs[1] - xs[0]))
        .collect();
    let gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut params = ConcaveParams::new(phi[0], project_cone(&slopes, &gaps)?);
    let terms = Terms::compute(&params, sample)?;
    params.phi1 -= terms.integral.ln();
    if !params.is_finite() {
        return Err(Error::SolverFailure("non-finite starting point".into()));
    }
    Ok(params)
}

/// Max-norm of `θ − P(θ + ∇(Ψ/W))`, zero exactly at the constrained maximizer.
pub(crate) fn stationarity_residual(params: &ConcaveParams, grad: &[f64]) -> Result<f64> {
    let moved: Vec<f64> = params.slopes.iter().zip(&grad[1..]).map(|(s, g)| s + g).collect();
    let proj = project_cone(&moved, &vec![1.0; moved.len()])?;
    let r = params
        .slopes
        .iter()
        .zip(&proj)
        .map(|(s, p)| (s - p).abs())
        .fold(grad[0].abs(), f64::max);
    Ok(r)
}

/// One convex-minorant iteration from a feasible point.
///
/// Returns the new point and whether a step was accepted; on rejection the
/// input is returned unchanged.
pub fn step(params: &ConcaveParams, sample: &WeightedSample, config: &SolverConfig) -> Result<(ConcaveParams, bool)> {
    let (terms, f0) = scaled_value(params, sample)?;
    let (next, accepted) = icm_step(params, &terms, f0, sample, config)?;
    Ok((next.map(|(p, _)| p).unwrap_or_else(|| params.clone()), accepted))
}

fn icm_step(
    params: &ConcaveParams,
    terms: &Terms,
    f0: f64,
    sample: &WeightedSample,
    config: &SolverConfig,
) -> Result<(Option<(ConcaveParams, f64)>, bool)> {
    let grad = terms.normalized_gradient(params, sample);
    let curv: Vec<f64> = terms
        .integral_slope_curvature(&params.slopes)
        .into_iter()
        .map(|h| h.max(MIN_CURVATURE))
        .collect();
    let phi_curv = terms.integral.max(MIN_CURVATURE);
    let w = sample.total_weight();

    // backtrack along the projection arc t ↦ P(θ + t·g/h), so every trial
    // point is an exact projection and pooled slopes are exactly equal
    let mut t = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let target: Vec<f64> = params
            .slopes
            .iter()
            .zip(&grad[1..])
            .zip(&curv)
            .map(|((s, g), h)| s + t * g / h)
            .collect();
        let candidate = ConcaveParams::new(params.phi1 + t * grad[0] / phi_curv, project_cone(&target, &curv)?);
        let predicted: f64 = grad[0] * (candidate.phi1 - params.phi1)
            + grad[1..]
                .iter()
                .zip(candidate.slopes.iter().zip(&params.slopes))
                .map(|(g, (a, b))| g * (a - b))
                .sum::<f64>();
        if !(predicted > 0.0) {
            return Ok((None, false));
        }
        if candidate.is_finite() {
            let trial = Terms::compute(&candidate, sample)?;
            let f = trial.value(w) / w;
            if f.is_finite() && is_ascent(f0, f) && f - f0 >= config.armijo_c * predicted {
                return Ok((Some((candidate, f)), true));
            }
        }
        t *= config.backtrack_factor;
    }
    Ok((None, false))
}

/// Maximizes the objective over the cone and returns the normalized density.
///
/// Non-convergence within `max_iter` is reported through
/// [`SolverReport::converged`] rather than as an error.
pub fn fit_mle(sample: &WeightedSample, config: &SolverConfig) -> Result<LogConcaveFit> {
    let start = initial_params(sample)?;
    fit_mle_from(sample, start, config)
}

/// Like [`fit_mle`], starting from a caller-supplied feasible point.
pub fn fit_mle_from(sample: &WeightedSample, start: ConcaveParams, config: &SolverConfig) -> Result<LogConcaveFit> {
    config.validate()?;
    if !start.is_feasible() {
        return Err(Error::InvalidParams("starting point violates the concavity cone".into()));
    }
    let w = sample.total_weight();
    let mut params = start;
    let (mut terms, mut f) = scaled_value(&params, sample)?;
    let mut trace = vec![f * w];
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    for it in 0..config.max_iter {
        iterations = it + 1;
        let f_prev = f;
        let (icm, icm_ok) = icm_step(&params, &terms, f, sample, config)?;
        if let Some((p, v)) = icm {
            params = p;
            f = v;
            trace.push(f * w);
            terms = Terms::compute(&params, sample)?;
        }
        let mut newton_ok = false;
        if config.newton {
            // each truncated step closes a kink, so this ends after at most
            // one step per kink plus the final untruncated one
            for _ in 0..params.len() {
                let Some(nt) = newton_step(&params, &terms, f, sample, config.armijo_c, config.backtrack_factor)? else {
                    break;
                };
                params = nt.params;
                f = nt.value;
                if nt.ascended {
                    trace.push(f * w);
                    newton_ok = true;
                }
                terms = Terms::compute(&params, sample)?;
                if !nt.truncated {
                    break;
                }
            }
        }
        // for fixed slopes the objective is maximized exactly by unit mass;
        // the gain is often below rounding, so it cannot be left to the steps
        let mut shifted = params.clone();
        shifted.phi1 -= terms.integral.ln();
        let (shifted_terms, shifted_f) = scaled_value(&shifted, sample)?;
        if shifted_f >= f {
            params = shifted;
            terms = shifted_terms;
            f = shifted_f;
        }
        let grad = terms.normalized_gradient(&params, sample);
        residual = stationarity_residual(&params, &grad)?;
        let rel_change = (f - f_prev).abs() / f.abs().max(1.0);
        if residual <= config.tol_stationarity && rel_change <= config.tol_objective {
            converged = true;
            break;
        }
        if !icm_ok && !newton_ok {
            // no ascent possible in floating point; stationary to rounding
            converged = residual <= config.tol_stationarity;
            break;
        }
    }

    let phi = params.log_density(sample.points());
    let shift = terms.integral.ln();
    let phi: Vec<f64> = phi.into_iter().map(|p| p - shift).collect();
    let report = SolverReport {
        iterations,
        objective_trace: trace,
        stationarity_residual: residual,
        converged,
    };
    LogConcaveFit::from_parts(sample.clone(), phi, report)
        .map_err(|e| Error::SolverFailure(format!("could not normalize the solution: {e}")))
}

//! Newton steps on a fixed set of kinks.
//!
//! Writing the slopes as `s_j = s_last + Σ_{l≥j} δ_l` turns the concavity
//! cone into the bounds `δ ≥ 0`. With the closed kinks (`δ_j = 0`) held
//! shut, the remaining problem is smooth and unconstrained, and perturbations
//! that respect it are exactly the continuous functions that are linear
//! between the open kinks. The Newton system is therefore assembled in the
//! hat-function basis on those kinks. Each hat only overlaps its
//! neighbours, so the Hessian `∫ e^φ b_a b_b` is tridiagonal and a step
//! costs `O(n)`.
//!
//! A ratio test stops the step where the first open kink would close; the
//! caller repeats steps until one goes through untruncated.
//!
//! Close to the optimum the gain of a Newton step can fall below the
//! resolution of the objective. Such a step is judged by the projected
//! gradient instead, which is still computed accurately there.

use crate::error::Result;
use crate::objective::{ConcaveParams, Terms};
use crate::sample::WeightedSample;
use crate::solver::stationarity_residual;
use crate::special::ln_moment;

const MAX_BACKTRACKS: usize = 60;
/// Largest change of the log-density at any point in one step. The
/// quadratic model of `e^φ` is poor beyond a few nats.
const MAX_LOG_STEP: f64 = 4.0;
/// Relative objective changes below this are not resolved by a step.
const UNMEASURABLE_GAIN: f64 = 1e-12;
/// Ridge added to the Newton system, relative to its largest diagonal entry.
const DIAG_FLOOR: f64 = 1e-12;

/// Solves a symmetric positive-definite tridiagonal system in place
/// (`diag`, `off[i]` couples `i` and `i + 1`). `None` on a nonpositive pivot.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let k = diag.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    let mut piv = diag[0];
    if !(piv > 0.0) {
        return None;
    }
    d[0] = rhs[0] / piv;
    for i in 1..k {
        c[i - 1] = off[i - 1] / piv;
        piv = diag[i] - off[i - 1] * c[i - 1];
        if !(piv > 0.0) {
            return None;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..k - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// `∫ e^{φ} (t − x_j)^m dt` over segment `j` for `m = 0, 1, 2`, measured
/// from the left end (`from_right == false`) or from the right end.
fn segment_moments(terms: &Terms, slopes: &[f64], j: usize, from_right: bool) -> [f64; 3] {
    let d = terms.gaps[j];
    let (phi, z) = if from_right {
        (terms.phi[j + 1], -slopes[j] * d)
    } else {
        (terms.phi[j], slopes[j] * d)
    };
    let mut out = [0.0; 3];
    let mut dp = d;
    for (m, o) in out.iter_mut().enumerate() {
        *o = dp * (phi + ln_moment(z, m as u32)).exp();
        dp *= d;
    }
    out
}

/// Shifts moments about a point `offset` further away: moments of `(o + u)`.
fn shift(e: [f64; 3], o: f64) -> [f64; 3] {
    [e[0], o * e[0] + e[1], o * o * e[0] + 2.0 * o * e[1] + e[2]]
}

/// Outcome of an accepted Newton step.
pub(crate) struct NewtonStep {
    pub params: ConcaveParams,
    /// `Ψ / W` at `params`.
    pub value: f64,
    /// The step stopped short of the Newton point, because a kink closed or
    /// the step length was capped.
    pub truncated: bool,
    /// `false` for a step that only closed a kink without measurable gain.
    pub ascended: bool,
}

/// Search direction in `δ` coordinates.
struct Direction {
    /// Directional derivative of `Ψ / W` along the full step.
    ascent: f64,
    /// Largest change of the log-density over the points.
    d_max: f64,
    d_phi: f64,
    d_last: f64,
    d_delta: Vec<f64>,
}

fn direction(params: &ConcaveParams, terms: &Terms, sample: &WeightedSample) -> Option<Direction> {
    let x = sample.points();
    let n = x.len();
    let m = n - 1;
    let slopes = &params.slopes;

    // nodes are the ends plus every point carrying an open kink
    let mut nodes = vec![0usize];
    nodes.extend((1..m).filter(|&i| slopes[i - 1] > slopes[i]));
    nodes.push(n - 1);
    let k = nodes.len();

    let w_total = sample.total_weight();
    let mut rhs = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut off = vec![0.0; k - 1];
    let mut a = 0;
    for j in 0..m {
        while nodes[a + 1] <= j {
            a += 1;
        }
        let left = x[nodes[a]];
        let right = x[nodes[a + 1]];
        let len = right - left;
        let o_left = x[j] - left;
        let o_right = right - x[j + 1];
        let p = shift(segment_moments(terms, slopes, j, false), o_left);
        let q = shift(segment_moments(terms, slopes, j, true), o_right);
        rhs[a] -= q[1] / len;
        rhs[a + 1] -= p[1] / len;
        diag[a] += q[2] / (len * len);
        diag[a + 1] += p[2] / (len * len);
        // ∫ e^φ p q with p + q = len, expanded on the side where it is stable
        off[a] += if o_left <= o_right {
            (len * p[1] - p[2]) / (len * len)
        } else {
            (len * q[1] - q[2]) / (len * len)
        };
    }
    let mut a = 0;
    for (i, (&xi, &wi)) in x.iter().zip(sample.weights()).enumerate() {
        while a + 1 < k - 1 && nodes[a + 1] <= i {
            a += 1;
        }
        let (left, right) = (x[nodes[a]], x[nodes[a + 1]]);
        let len = right - left;
        rhs[a] += wi / w_total * (right - xi) / len;
        rhs[a + 1] += wi / w_total * (xi - left) / len;
    }

    // hats over regions where e^φ underflows have no curvature at all
    let floor = DIAG_FLOOR * diag.iter().copied().fold(0.0, f64::max);
    for d in diag.iter_mut() {
        *d += floor;
    }
    let coef = solve_tridiagonal(&diag, &off, &rhs);
    let coef = coef?;
    if coef.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let ascent: f64 = rhs.iter().zip(&coef).map(|(r, c)| r * c).sum();
    let d_max = coef.iter().fold(0.0, |a: f64, c| a.max(c.abs()));

    // node coefficients are values of the perturbation, so its slopes on
    // each node interval are constant
    let node_slope: Vec<f64> = (0..k - 1)
        .map(|a| (coef[a + 1] - coef[a]) / (x[nodes[a + 1]] - x[nodes[a]]))
        .collect();
    let mut d_delta = vec![0.0; m - 1];
    for a in 1..k - 1 {
        d_delta[nodes[a] - 1] = node_slope[a - 1] - node_slope[a];
    }
    Some(Direction {
        ascent,
        d_max,
        d_phi: coef[0],
        d_last: node_slope[k - 2],
        d_delta,
    })
}

/// Slopes from the last slope and the kink sizes, summed from the right.
fn slopes_from_kinks(last: f64, delta: &[f64]) -> Vec<f64> {
    let mut slopes = vec![last; delta.len() + 1];
    for j in (0..delta.len()).rev() {
        slopes[j] = slopes[j + 1] + delta[j];
    }
    slopes
}

fn kinks_after(delta: &[f64], d_delta: &[f64], alpha: f64) -> Vec<f64> {
    delta.iter().zip(d_delta).map(|(d, dd)| (d + alpha * dd).max(0.0)).collect()
}

/// One Newton step on the open kinks of a feasible point, stopped where the
/// first kink closes and backtracked until the Armijo condition holds.
/// `None` when no ascent was found.
///
/// Tiny kinks left by the convex-minorant step can block the step before
/// it gains anything measurable. Such a kink is closed even without a
/// measurable gain, provided the objective does not drop.
pub(crate) fn newton_step(
    params: &ConcaveParams,
    terms: &Terms,
    f0: f64,
    sample: &WeightedSample,
    armijo_c: f64,
    backtrack: f64,
) -> Result<Option<NewtonStep>> {
    let Some(dir) = direction(params, terms, sample) else {
        return Ok(None);
    };
    if !(dir.ascent > 0.0) {
        return Ok(None);
    }
    let m = params.slopes.len();
    let delta: Vec<f64> = params.slopes.windows(2).map(|w| w[0] - w[1]).collect();
    let largest = dir.d_max.max(f64::MIN_POSITIVE);
    let mut alpha: f64 = (MAX_LOG_STEP / largest).min(1.0);
    let capped = alpha < 1.0;
    let mut blocking = None;
    for (j, (d, dd)) in delta.iter().zip(&dir.d_delta).enumerate() {
        if *dd < 0.0 && -d / dd < alpha {
            alpha = -d / dd;
            blocking = Some(j);
        }
    }
    let scale = f0.abs().max(1.0);
    let w_total = sample.total_weight();
    if alpha == 1.0 && blocking.is_none() && dir.ascent <= UNMEASURABLE_GAIN * scale {
        let slopes = slopes_from_kinks(params.slopes[m - 1] + dir.d_last, &kinks_after(&delta, &dir.d_delta, 1.0));
        let candidate = ConcaveParams::new(params.phi1 + dir.d_phi, slopes);
        if candidate.is_finite() {
            if let Some(step) = unresolved_step(params, candidate, terms, f0, sample)? {
                return Ok(Some(step));
            }
        }
    }
    for _ in 0..MAX_BACKTRACKS {
        let mut new_delta = kinks_after(&delta, &dir.d_delta, alpha);
        if let Some(j) = blocking {
            new_delta[j] = 0.0;
        }
        let slopes = slopes_from_kinks(params.slopes[m - 1] + alpha * dir.d_last, &new_delta);
        let candidate = ConcaveParams::new(params.phi1 + alpha * dir.d_phi, slopes);
        if candidate.is_finite() {
            let f = Terms::compute(&candidate, sample)?.value(w_total) / w_total;
            if f.is_finite() && f > f0 && f - f0 >= armijo_c * alpha * dir.ascent {
                return Ok(Some(NewtonStep {
                    params: candidate,
                    value: f,
                    truncated: capped || blocking.is_some(),
                    ascended: true,
                }));
            }
            // a kink reached before any measurable gain is closed anyway
            if blocking.is_some() && alpha * dir.ascent <= UNMEASURABLE_GAIN * scale && f >= f0 {
                return Ok(Some(NewtonStep {
                    params: candidate,
                    value: f,
                    truncated: true,
                    ascended: false,
                }));
            }
        }
        alpha *= backtrack;
        blocking = None;
    }
    Ok(None)
}

/// Takes the full step when its predicted gain is below the resolution of
/// the objective, provided the objective stays within rounding of `f0` and
/// the projected-gradient residual strictly falls.
fn unresolved_step(
    params: &ConcaveParams,
    candidate: ConcaveParams,
    terms: &Terms,
    f0: f64,
    sample: &WeightedSample,
) -> Result<Option<NewtonStep>> {
    let w_total = sample.total_weight();
    let new_terms = Terms::compute(&candidate, sample)?;
    let f = new_terms.value(w_total) / w_total;
    if !f.is_finite() || (f - f0).abs() > UNMEASURABLE_GAIN * f0.abs().max(1.0) {
        return Ok(None);
    }
    let before = stationarity_residual(params, &terms.normalized_gradient(params, sample))?;
    let after = stationarity_residual(&candidate, &new_terms.normalized_gradient(&candidate, sample))?;
    Ok((after < before).then_some(NewtonStep {
        params: candidate,
        value: f,
        truncated: false,
        ascended: false,
    }))
}

//! Weighted least-squares projection onto nonincreasing sequences.

use crate::error::{Error, Result};

/// Projects `v` onto `{y : y₁ ≥ y₂ ≥ … ≥ y_m}` in the norm `Σ w_i (y_i − v_i)²`
/// using pool-adjacent-violators.
///
/// The output is piecewise constant; pooled blocks hold exactly equal values.
pub fn project_cone(v: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if v.len() != weights.len() {
        return Err(Error::InvalidData(format!(
            "{} values but {} weights",
            v.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidData(format!("projection weight {w} is not positive")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidData("non-finite value in projection input".into()));
    }

    // blocks of (weighted mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(v.len());
    for (&x, &w) in v.iter().zip(weights) {
        let mut cur = (x, w, 1usize);
        while let Some(&(mean, weight, len)) = blocks.last() {
            if mean >= cur.0 {
                break;
            }
            let total = weight + cur.1;
            cur = ((mean * weight + cur.0 * cur.1) / total, total, len + cur.2);
            blocks.pop();
        }
        blocks.push(cur);
    }

    let mut out = Vec::with_capacity(v.len());
    for (mean, _, len) in blocks {
        out.extend(std::iter::repeat_n(mean, len));
    }
    Ok(out)
}

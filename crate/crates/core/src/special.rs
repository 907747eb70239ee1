//! Moments of the exponential on the unit interval.
//!
//! `moment(z, m) = ∫₀¹ t^m e^{zt} dt`. For `m = 0` this is the relative
//! exponential `(e^z − 1)/z`, which turns the integral of `exp` over a
//! segment with slope `s` and length `Δ` into `Δ · e^{φ} · moment(sΔ, 0)`.
//! The first and second moments give the gradient and Hessian of that
//! integral with respect to the slope. Everything is evaluated on the log
//! scale so large positive `z` never overflows.

/// Below this magnitude `(e^z − 1)/z` switches to its Taylor series.
pub const REL_EXP_SERIES_CUTOFF: f64 = 1e-8;

/// Below this magnitude the first and second moments use their power series.
const MOMENT_SERIES_CUTOFF: f64 = 1.0;

/// `(e^z − 1)/z`, with value 1 at `z = 0`.
pub fn rel_exp(z: f64) -> f64 {
    if z.abs() < REL_EXP_SERIES_CUTOFF {
        1.0 + z * (0.5 + z / 6.0)
    } else {
        z.exp_m1() / z
    }
}

/// `ln((e^z − 1)/z)`.
pub fn ln_rel_exp(z: f64) -> f64 {
    if z.abs() < REL_EXP_SERIES_CUTOFF {
        (z * (0.5 + z / 6.0)).ln_1p()
    } else if z > 0.0 {
        z + (-(-z).exp_m1()).ln() - z.ln()
    } else {
        (z.exp_m1() / z).ln()
    }
}

/// `ln ∫₀¹ t^m e^{zt} dt` for `m ∈ {0, 1, 2}`.
pub fn ln_moment(z: f64, m: u32) -> f64 {
    match m {
        0 => ln_rel_exp(z),
        1 | 2 if z.abs() <= MOMENT_SERIES_CUTOFF => moment_series(z, m).ln(),
        1 => {
            if z > 0.0 {
                // ((z − 1)e^z + 1)/z²
                z + (z + (-z).exp_m1()).ln() - 2.0 * z.ln()
            } else {
                ((z * z.exp() - z.exp_m1()) / (z * z)).ln()
            }
        }
        2 => {
            if z > 0.0 {
                // (e^z (z² − 2z + 2) − 2)/z³
                z + (z * z - 2.0 * z + 2.0 - 2.0 * (-z).exp()).ln() - 3.0 * z.ln()
            } else {
                ((2.0 - z.exp() * (z * z - 2.0 * z + 2.0)) / (-z * z * z)).ln()
            }
        }
        _ => panic!("moment order {m} not supported"),
    }
}

/// Power series `Σ_j z^j / (j! (j + m + 1))`.
fn moment_series(z: f64, m: u32) -> f64 {
    let mut term = 1.0; // z^j / j!
    let mut sum = 1.0 / f64::from(m + 1);
    for j in 1..40u32 {
        term *= z / f64::from(j);
        let add = term / f64::from(j + m + 1);
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

//! Density, distribution function, quantiles, exact sampling, mode and
//! hazard rate of a fitted log-concave density.
//!
//! On each segment `[x_j, x_{j+1}]` the density is `exp(φ_j + s (x − x_j))`,
//! so every quantity has a closed form in terms of the relative exponential.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fit::LogConcaveFit;
use crate::special::ln_rel_exp;

/// Segments with `|φ(x_J) − φ(x_{J−1})|` below this are sampled uniformly.
pub const THETA_ZERO: f64 = 1e-12;

/// Seeded uniform stream on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream `stream` derived from `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self(inner)
    }

    /// Uniform draw with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Fractional position `V ∈ [0, 1]` within a segment whose log-density
/// rises by `theta`, given a uniform draw `u`.
///
/// Inverts the truncated exponential: `V = ln(1 + (e^Θ − 1)U)/Θ`, and
/// `V = U` when `Θ` is zero.
pub fn segment_offset(theta: f64, u: f64) -> f64 {
    if theta.abs() < THETA_ZERO {
        u
    } else {
        // ln(1 + (e^Θ − 1)U) evaluated without overflow for large Θ
        let v = if theta > 50.0 {
            (theta + (u + (1.0 - u) * (-theta).exp()).ln()) / theta
        } else {
            (theta.exp_m1() * u).ln_1p() / theta
        };
        v.clamp(0.0, 1.0)
    }
}

impl LogConcaveFit {
    fn log_pdf_inside(&self, x: f64) -> f64 {
        let j = self.segment_of(x);
        self.log_density()[j] + self.slopes()[j] * (x - self.knots()[j])
    }

    /// Density at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidData(format!("cannot evaluate the density at {x}")));
        }
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return Ok(0.0);
        }
        Ok(self.log_pdf_inside(x).exp())
    }

    /// Distribution function at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let j = self.segment_of(x);
        let t = x - self.knots()[j];
        if t == 0.0 {
            return self.cdf_at_knots()[j];
        }
        let s = self.slopes()[j];
        let v = self.cdf_at_knots()[j] + t * (self.log_density()[j] + ln_rel_exp(s * t)).exp();
        v.clamp(0.0, 1.0)
    }

    /// `1 − F(x)` accumulated from the right end, accurate in the upper tail.
    pub fn survival(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 1.0;
        }
        if x >= hi {
            return 0.0;
        }
        let j = self.segment_of(x);
        let right = self.knots()[j + 1] - x;
        // mass of (x, x_{j+1}] integrated leftward from x_{j+1}
        let phi_right = self.log_density()[j + 1];
        let s = self.slopes()[j];
        self.survival_at_knots()[j + 1] + right * (phi_right + ln_rel_exp(-s * right)).exp()
    }

    /// Inverse distribution function.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidData(format!("probability {p} outside [0, 1]")));
        }
        let (lo, hi) = self.support();
        let cdf = self.cdf_at_knots();
        if p == 0.0 {
            return Ok(lo);
        }
        if p == 1.0 || p >= cdf[cdf.len() - 1] {
            return Ok(hi);
        }
        let j = cdf.partition_point(|&c| c <= p).saturating_sub(1).min(cdf.len() - 2);
        let q = p - cdf[j];
        let gap = self.knots()[j + 1] - self.knots()[j];
        let ln_a = q.ln() - self.log_density()[j];
        let a = ln_a.exp();
        let s = self.slopes()[j];
        let z = s * a;
        // solves t·e^{φ_j}·(e^{st} − 1)/(st) = q for t
        let t = if z.abs() < 1e-12 {
            a * (1.0 - 0.5 * z)
        } else if s > 0.0 && ln_a + s.ln() > 30.0 {
            // ln(1 + z) from ln z, since z itself may overflow
            let ln_z = ln_a + s.ln();
            (ln_z + (-ln_z).exp().ln_1p()) / s
        } else {
            z.ln_1p() / s
        };
        let t = if t.is_finite() { t.clamp(0.0, gap) } else { gap };
        Ok(self.knots()[j] + t)
    }

    /// Draws `m` independent values from the fitted density.
    ///
    /// A segment `J` is chosen with probability equal to its mass, then the
    /// position within it is drawn by inverting the exponential on that
    /// segment.
    pub fn sample(&self, rng: &mut Rng, m: usize) -> Vec<f64> {
        let cdf = self.cdf_at_knots();
        let total = cdf[cdf.len() - 1];
        let x = self.knots();
        let phi = self.log_density();
        (0..m)
            .map(|_| {
                let target = rng.uniform() * total;
                // J − 1 is the left endpoint index of the chosen segment
                let left = cdf.partition_point(|&c| c <= target).saturating_sub(1).min(x.len() - 2);
                let u = rng.uniform();
                let theta = phi[left + 1] - phi[left];
                let v = segment_offset(theta, u);
                x[left] + (x[left + 1] - x[left]) * v
            })
            .collect()
    }

    /// Location of the maximum of the density; the midpoint when the
    /// maximum is attained on an interval.
    pub fn mode(&self) -> f64 {
        let phi = self.log_density();
        let top = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-10 * top.abs().max(1.0);
        let first = phi.iter().position(|&v| v >= top - tol).unwrap();
        let last = phi.iter().rposition(|&v| v >= top - tol).unwrap();
        let x = self.knots();
        0.5 * (x[first] + x[last])
    }

    /// Hazard rate `f(x) / (1 − F(x))` for `x ∈ [x₁, x_n)`.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(x >= lo && x < hi) {
            return Err(Error::OutOfSupport { x, lo, hi });
        }
        let j = self.segment_of(x);
        let right = self.knots()[j + 1] - x;
        let s = self.slopes()[j];
        let log_f = self.log_pdf_inside(x);
        // S(x)/f(x) = S(x_{j+1})/f(x) + ∫_x^{x_{j+1}} e^{s(u − x)} du
        let ratio = (self.survival_at_knots()[j + 1].ln() - log_f).exp() + right * ln_rel_exp(s * right).exp();
        Ok(1.0 / ratio)
    }
}

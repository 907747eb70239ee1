//! Model-based clustering with EM.
//!
//! The mixture density is `f(x) = Σ_m π_m f_m(x)`. Each EM iteration
//! computes the posterior membership probabilities of every observation
//! (E-step) and refits the proportions and the components with those
//! probabilities as weights (M-step). Three component families are
//! provided:
//!
//! - [`em_fit`]: univariate log-concave components, refit by the weighted
//!   log-concave MLE
//! - [`copula_em_fit`]: multivariate components with log-concave marginals
//!   joined by a normal copula
//! - [`gaussian_em_fit`]: univariate normal components, the parametric
//!   baseline
//!
//! Labels returned by the library are 0-based component indices.

mod copula;
mod em;
mod gaussian;

pub use copula::{copula_em_fit, CopulaComponent};
pub use em::{em_fit, RESPONSIBILITY_FLOOR};
pub use gaussian::{gaussian_em_fit, GaussianMixture};

use crate::fit::LogConcaveFit;
use crate::solver::SolverConfig;

/// Settings shared by all EM variants.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_em_iter: usize,
    /// Relative change of the log-likelihood that ends the iteration.
    pub tol_loglik: f64,
    /// Number of random initializations; the best final log-likelihood wins.
    pub restarts: usize,
    /// A run whose smallest proportion drops below this is abandoned.
    /// `None` means `2/n`.
    pub min_component_weight: Option<f64>,
    pub seed: u64,
    /// Settings for the log-concave M-step fits.
    pub solver: SolverConfig,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_em_iter: 200,
            tol_loglik: 1e-8,
            restarts: 5,
            min_component_weight: None,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

/// A fitted mixture whose component densities can be evaluated.
pub trait MixtureDensity {
    /// Mixture proportions `π_1, …, π_k`.
    fn proportions(&self) -> &[f64];

    /// Dimension of an observation.
    fn dim(&self) -> usize;

    /// `ln f_m(x)`, `-∞` where the component density vanishes.
    fn ln_component_density(&self, m: usize, x: &[f64]) -> f64;

    fn k(&self) -> usize {
        self.proportions().len()
    }
}

/// Fitted components of a [`MixtureModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum Components {
    Univariate(Vec<LogConcaveFit>),
    Copula(Vec<CopulaComponent>),
}

/// Result of [`em_fit`] or [`copula_em_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub pi: Vec<f64>,
    pub components: Components,
    /// Observed-data log-likelihood at the returned parameters.
    pub loglik: f64,
    /// Log-likelihood after every EM iteration of the winning run.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Restarts that ended in a degenerate component.
    pub degenerate_restarts: usize,
}

impl MixtureDensity for MixtureModel {
    fn proportions(&self) -> &[f64] {
        &self.pi
    }

    fn dim(&self) -> usize {
        match &self.components {
            Components::Univariate(_) => 1,
            Components::Copula(c) => c[0].dim(),
        }
    }

    fn ln_component_density(&self, m: usize, x: &[f64]) -> f64 {
        match &self.components {
            Components::Univariate(fits) => {
                let p = fits[m].pdf(x[0]).unwrap_or(0.0);
                p.ln()
            }
            Components::Copula(c) => c[m].ln_density(x),
        }
    }
}

/// Posterior membership probabilities `π_m f_m(x) / Σ_j π_j f_j(x)`,
/// computed on the log scale. Returns the proportions themselves when every
/// component density vanishes at `x`.
pub fn posterior<M: MixtureDensity + ?Sized>(model: &M, x: &[f64]) -> Vec<f64> {
    let pi = model.proportions();
    let logs: Vec<f64> = (0..model.k())
        .map(|m| pi[m].ln() + model.ln_component_density(m, x))
        .collect();
    normalize_log_weights(&logs).map_or_else(|| pi.to_vec(), |(post, _)| post)
}

/// Turns log-weights into probabilities; also returns their log-sum.
/// `None` when all weights are zero.
pub(crate) fn normalize_log_weights(logs: &[f64]) -> Option<(Vec<f64>, f64)> {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return None;
    }
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    let lse = top + sum.ln();
    let post = logs.iter().map(|l| (l - lse).exp()).collect();
    Some((post, lse))
}

/// Index of the largest probability; ties go to the lower index.
pub fn argmax_label(post: &[f64]) -> usize {
    let mut best = 0;
    for (m, &p) in post.iter().enumerate().skip(1) {
        if p > post[best] {
            best = m;
        }
    }
    best
}

/// Most probable component for each observation.
pub fn classify<M, I, R>(model: &M, rows: I) -> Vec<usize>
where
    M: MixtureDensity + ?Sized,
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    rows.into_iter()
        .map(|x| argmax_label(&posterior(model, x.as_ref())))
        .collect()
}

/// Observed-data log-likelihood `Σ_i ln Σ_m π_m f_m(x_i)`.
pub fn log_likelihood<M, I, R>(model: &M, rows: I) -> f64
where
    M: MixtureDensity + ?Sized,
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let pi = model.proportions();
    rows.into_iter()
        .map(|x| {
            let logs: Vec<f64> = (0..model.k())
                .map(|m| pi[m].ln() + model.ln_component_density(m, x.as_ref()))
                .collect();
            normalize_log_weights(&logs).map_or(f64::NEG_INFINITY, |(_, l)| l)
        })
        .sum()
}

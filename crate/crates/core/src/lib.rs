//! Nonparametric maximum-likelihood estimation of univariate log-concave
//! densities.
//!
//! The estimator is the maximizer of the log-likelihood over all densities
//! `f = exp φ` with `φ` concave. It exists for any sample with at least two
//! distinct points, is supported on the sample range, and its log is
//! piecewise linear with kinks only at sample points. No bandwidth or other
//! tuning parameter is involved.
//!
//! - [`sample`]: weighted, deduplicated input data
//! - [`objective`]: the concave surrogate objective and its gradient
//! - [`pava`]: projection onto nonincreasing sequences
//! - [`solver`]: iterative convex minorant maximization
//! - [`distribution`]: density, CDF, quantiles, sampling, mode and hazard
//! - [`mixture`]: EM clustering with log-concave components
//!
//! ```
//! use logconcave::{fit_mle, prepare_sample, SolverConfig};
//!
//! let sample = prepare_sample(&[0.1, 0.4, 0.45, 0.9, 1.3, 1.35, 2.2], None).unwrap();
//! let fit = fit_mle(&sample, &SolverConfig::default()).unwrap();
//! assert!(fit.converged());
//! assert!((fit.cdf(2.2) - 1.0).abs() < 1e-10);
//! ```

pub mod distribution;
pub mod error;
pub mod fit;
pub mod mixture;
mod newton;
pub mod objective;
pub mod pava;
pub mod sample;
pub mod solver;
pub mod special;

pub use distribution::{segment_offset, Rng};
pub use error::{Error, Result};
pub use fit::{LogConcaveFit, SolverReport};
pub use mixture::{
    argmax_label, classify, copula_em_fit, em_fit, gaussian_em_fit, log_likelihood, posterior, Components,
    CopulaComponent, EmConfig, GaussianMixture, MixtureDensity, MixtureModel, RESPONSIBILITY_FLOOR,
};
pub use objective::{gradient_check, knots_to_params, objective, params_to_knots, ConcaveParams, ObjectiveValue};
pub use pava::project_cone;
pub use sample::{prepare_sample, WeightedSample};
pub use solver::{fit_mle, fit_mle_from, initial_params, step, SolverConfig};

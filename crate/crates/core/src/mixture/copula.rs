use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use super::em::{best_of_restarts, count_distinct, weighted_logconcave_fit, Family};
use super::{Components, EmConfig, MixtureModel};
use crate::error::{Error, Result};
use crate::fit::LogConcaveFit;

/// Marginal CDF values are clamped to `[ε, 1 − ε]` before the normal quantile.
pub const SCORE_CLAMP: f64 = 1e-6;
/// Smallest eigenvalue allowed in an estimated correlation matrix.
pub const MIN_EIGENVALUE: f64 = 1e-6;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Multivariate density with log-concave marginals and a normal copula:
/// `Π_j f_j(x_j) · |R|^{-1/2} exp(−½ zᵀ(R⁻¹ − I)z)` with normal scores
/// `z_j = Φ⁻¹(F_j(x_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaComponent {
    marginals: Vec<LogConcaveFit>,
    correlation: DMatrix<f64>,
    precision_minus_identity: DMatrix<f64>,
    ln_det: f64,
}

impl CopulaComponent {
    /// Validates that `correlation` is a symmetric positive-definite matrix
    /// with unit diagonal matching the number of marginals.
    pub fn new(marginals: Vec<LogConcaveFit>, correlation: DMatrix<f64>) -> Result<Self> {
        let d = marginals.len();
        if d < 2 || correlation.nrows() != d || correlation.ncols() != d {
            return Err(Error::InvalidParams(format!(
                "{d} marginals with a {}x{} correlation matrix",
                correlation.nrows(),
                correlation.ncols()
            )));
        }
        for i in 0..d {
            if (correlation[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParams("correlation diagonal must be 1".into()));
            }
            for j in 0..i {
                if (correlation[(i, j)] - correlation[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParams("correlation matrix must be symmetric".into()));
                }
            }
        }
        let chol = correlation
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("correlation matrix is not positive definite".into()))?;
        let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let precision_minus_identity = chol.inverse() - DMatrix::identity(d, d);
        Ok(Self {
            marginals,
            correlation,
            precision_minus_identity,
            ln_det,
        })
    }

    pub fn marginals(&self) -> &[LogConcaveFit] {
        &self.marginals
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    /// Normal scores `Φ⁻¹(clamp(F_j(x_j)))`.
    pub fn normal_scores(&self, x: &[f64]) -> Vec<f64> {
        normal_scores(&self.marginals, x)
    }

    /// `ln` of the copula density factor at normal scores `z`.
    pub fn ln_copula(&self, z: &[f64]) -> f64 {
        let d = z.len();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += z[i] * self.precision_minus_identity[(i, j)] * z[j];
            }
        }
        -0.5 * self.ln_det - 0.5 * quad
    }

    /// Log of the joint density; `-∞` outside the product of the marginal supports.
    pub fn ln_density(&self, x: &[f64]) -> f64 {
        let mut ln_marg = 0.0;
        for (f, &v) in self.marginals.iter().zip(x) {
            let p = f.pdf(v).unwrap_or(0.0);
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ln_marg += p.ln();
        }
        ln_marg + self.ln_copula(&self.normal_scores(x))
    }
}

fn normal_scores(marginals: &[LogConcaveFit], x: &[f64]) -> Vec<f64> {
    let normal = std_normal();
    marginals
        .iter()
        .zip(x)
        .map(|(f, &v)| normal.inverse_cdf(f.cdf(v).clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP)))
        .collect()
}

/// Weighted Pearson correlation of the rows of `scores`, shrunk toward the
/// identity by the smallest amount that lifts every eigenvalue to
/// [`MIN_EIGENVALUE`].
pub fn weighted_correlation(scores: &[Vec<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = scores[0].len();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    for (z, &w) in scores.iter().zip(weights) {
        for j in 0..d {
            mean[j] += w * z[j] / total;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (z, &w) in scores.iter().zip(weights) {
        for a in 0..d {
            for b in 0..=a {
                cov[(a, b)] += w * (z[a] - mean[a]) * (z[b] - mean[b]);
            }
        }
    }
    let mut corr = DMatrix::<f64>::identity(d, d);
    for a in 0..d {
        for b in 0..a {
            let denom = (cov[(a, a)] * cov[(b, b)]).sqrt();
            let r = if denom > 0.0 { (cov[(a, b)] / denom).clamp(-1.0, 1.0) } else { 0.0 };
            corr[(a, b)] = r;
            corr[(b, a)] = r;
        }
    }
    shrink_to_positive_definite(corr)
}

/// `(1 − λ)R + λI` with the minimal `λ ∈ [0, 1]` giving eigenvalues ≥ [`MIN_EIGENVALUE`].
pub fn shrink_to_positive_definite(corr: DMatrix<f64>) -> DMatrix<f64> {
    let d = corr.nrows();
    let min_eig = corr.clone().symmetric_eigen().eigenvalues.min();
    if min_eig >= MIN_EIGENVALUE {
        return corr;
    }
    let lambda = (MIN_EIGENVALUE - min_eig) / (1.0 - min_eig);
    let mut shrunk = corr * (1.0 - lambda) + DMatrix::identity(d, d) * lambda;
    for i in 0..d {
        shrunk[(i, i)] = 1.0;
    }
    shrunk
}

struct CopulaFamily<'a> {
    rows: &'a [Vec<f64>],
    columns: Vec<Vec<f64>>,
    config: &'a EmConfig,
}

impl Family for CopulaFamily<'_> {
    type Component = CopulaComponent;

    fn n(&self) -> usize {
        self.rows.len()
    }

    fn row(&self, i: usize) -> Vec<f64> {
        self.rows[i].clone()
    }

    fn fit(&self, resp: &[f64], prev: Option<&CopulaComponent>) -> Result<CopulaComponent> {
        let marginals = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, col)| weighted_logconcave_fit(col, resp, prev.map(|p| &p.marginals[j]), self.config))
            .collect::<Result<Vec<_>>>()?;
        let (scores, weights): (Vec<Vec<f64>>, Vec<f64>) = self
            .rows
            .iter()
            .zip(resp)
            .filter(|(_, &w)| w > 0.0)
            .map(|(x, &w)| (normal_scores(&marginals, x), w))
            .unzip();
        let corr = weighted_correlation(&scores, &weights);
        CopulaComponent::new(marginals, corr).map_err(|e| Error::SolverFailure(e.to_string()))
    }

    fn ln_density(&self, c: &CopulaComponent, i: usize) -> f64 {
        c.ln_density(&self.rows[i])
    }
}

/// EM clustering of `d ≥ 2` dimensional rows with normal-copula components
/// whose marginals are log-concave.
///
/// The M-step refits every marginal by weighted log-concave MLE and then
/// estimates the correlation from the weighted normal scores.
pub fn copula_em_fit(data: &[Vec<f64>], k: usize, config: &EmConfig) -> Result<MixtureModel> {
    if k == 0 {
        return Err(Error::InvalidData("number of components must be at least 1".into()));
    }
    let d = data.first().map_or(0, |r| r.len());
    if d < 2 {
        return Err(Error::InvalidData(format!(
            "copula mode needs at least 2 columns, got {d}; use the univariate fit"
        )));
    }
    if data.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidData("rows have different lengths".into()));
    }
    if data.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidData("non-finite observation".into()));
    }
    let columns: Vec<Vec<f64>> = (0..d).map(|j| data.iter().map(|r| r[j]).collect()).collect();
    for (j, col) in columns.iter().enumerate() {
        let distinct = count_distinct(col.iter().copied());
        if distinct < 2 * k + 2 {
            return Err(Error::InvalidData(format!(
                "column {j} has {distinct} distinct values, need {}",
                2 * k + 2
            )));
        }
    }
    let family = CopulaFamily {
        rows: data,
        columns,
        config,
    };
    let (best, degenerate) = best_of_restarts(&family, k, config)?;
    Ok(MixtureModel {
        pi: best.pi,
        components: Components::Copula(best.components),
        loglik: *best.trace.last().unwrap(),
        loglik_trace: best.trace,
        iterations: best.iterations,
        converged: best.converged,
        degenerate_restarts: degenerate,
    })
}

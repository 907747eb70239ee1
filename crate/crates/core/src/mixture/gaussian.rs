use super::em::{best_of_restarts, count_distinct, Family};
use super::{EmConfig, MixtureDensity};
use crate::error::{Error, Result};

/// Univariate normal mixture fitted by EM; the parametric baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub pi: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub loglik: f64,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate_restarts: usize,
}

fn ln_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

impl MixtureDensity for GaussianMixture {
    fn proportions(&self) -> &[f64] {
        &self.pi
    }

    fn dim(&self) -> usize {
        1
    }

    fn ln_component_density(&self, m: usize, x: &[f64]) -> f64 {
        ln_normal(x[0], self.means[m], self.sds[m])
    }
}

struct NormalFamily<'a> {
    data: &'a [f64],
    /// Variances below this count as singular.
    min_var: f64,
}

impl Family for NormalFamily<'_> {
    type Component = (f64, f64);

    fn n(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> Vec<f64> {
        vec![self.data[i]]
    }

    fn fit(&self, resp: &[f64], _prev: Option<&(f64, f64)>) -> Result<(f64, f64)> {
        let w: f64 = resp.iter().sum();
        let mean = self.data.iter().zip(resp).map(|(x, r)| x * r).sum::<f64>() / w;
        let var = self.data.iter().zip(resp).map(|(x, r)| r * (x - mean).powi(2)).sum::<f64>() / w;
        if !(var > self.min_var) {
            return Err(Error::DegenerateSample { distinct: 1 });
        }
        Ok((mean, var.sqrt()))
    }

    fn ln_density(&self, c: &(f64, f64), i: usize) -> f64 {
        ln_normal(self.data[i], c.0, c.1)
    }
}

/// EM clustering of univariate data with normal components, using the same
/// initialization and restart scheme as [`super::em_fit`]. A component whose
/// variance collapses ends its run.
pub fn gaussian_em_fit(data: &[f64], k: usize, config: &EmConfig) -> Result<GaussianMixture> {
    if k == 0 {
        return Err(Error::InvalidData("number of components must be at least 1".into()));
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite observation {x}")));
    }
    let distinct = count_distinct(data.iter().copied());
    if distinct < 2 * k.max(1) {
        return Err(Error::InvalidData(format!("{distinct} distinct values are too few for {k} components")));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let family = NormalFamily {
        data,
        min_var: 1e-12 * var,
    };
    let (best, degenerate) = best_of_restarts(&family, k, config)?;
    let (means, sds) = best.components.into_iter().unzip();
    Ok(GaussianMixture {
        pi: best.pi,
        means,
        sds,
        loglik: *best.trace.last().unwrap(),
        loglik_trace: best.trace,
        iterations: best.iterations,
        converged: best.converged,
        degenerate_restarts: degenerate,
    })
}

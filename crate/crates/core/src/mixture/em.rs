use rayon::prelude::*;

use super::{normalize_log_weights, Components, EmConfig, MixtureModel};
use crate::distribution::Rng;
use crate::error::{Error, Result};
use crate::fit::LogConcaveFit;
use crate::sample::prepare_sample;
use crate::solver::{fit_mle, fit_mle_from, from_log_density};

/// A component family plugged into the EM engine.
pub(crate) trait Family: Sync {
    type Component: Clone + Send;

    fn n(&self) -> usize;

    /// Observation `i` as a point in `d` dimensions.
    fn row(&self, i: usize) -> Vec<f64>;

    /// Weighted refit of one component. `prev` is the same component from
    /// the previous iteration.
    fn fit(&self, resp: &[f64], prev: Option<&Self::Component>) -> Result<Self::Component>;

    fn ln_density(&self, c: &Self::Component, i: usize) -> f64;
}

pub(crate) struct RunResult<C> {
    pub pi: Vec<f64>,
    pub components: Vec<C>,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Random hard partition: `k` distinct observations are drawn as centers
/// and every observation joins the nearest one in standardized coordinates.
fn random_partition<F: Family>(family: &F, k: usize, rng: &mut Rng) -> Vec<usize> {
    let n = family.n();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| family.row(i)).collect();
    let d = rows[0].len();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
            if var > 0.0 { var.sqrt() } else { 1.0 }
        })
        .collect();
    let mut centers: Vec<usize> = Vec::with_capacity(k);
    let mut attempts = 0;
    while centers.len() < k {
        let c = rng.index(n);
        attempts += 1;
        if !centers.iter().any(|&o| rows[o] == rows[c]) || attempts > 100 * n {
            centers.push(c);
        }
    }
    rows.iter()
        .map(|r| {
            let dist = |c: usize| -> f64 {
                r.iter()
                    .zip(&rows[c])
                    .zip(&scale)
                    .map(|((a, b), s)| ((a - b) / s).powi(2))
                    .sum()
            };
            let mut best = 0;
            for m in 1..k {
                if dist(centers[m]) < dist(centers[best]) {
                    best = m;
                }
            }
            best
        })
        .collect()
}

/// Soft responsibilities from moment-matched diagonal normal components of
/// a hard partition. Every observation receives positive weight in every
/// component, so no component starts with a truncated support.
fn seed_responsibilities(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Option<Vec<Vec<f64>>> {
    let n = rows.len();
    let d = rows[0].len();
    let mut logs = vec![vec![0.0; k]; n];
    for m in 0..k {
        let members: Vec<&Vec<f64>> = rows.iter().zip(labels).filter(|(_, &l)| l == m).map(|(r, _)| r).collect();
        if members.len() < 2 {
            return None;
        }
        let cnt = members.len() as f64;
        let ln_pi = (cnt / n as f64).ln();
        for j in 0..d {
            let mean = members.iter().map(|r| r[j]).sum::<f64>() / cnt;
            let var = members.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / cnt;
            if !(var > 0.0) {
                return None;
            }
            for (i, row) in rows.iter().enumerate() {
                logs[i][m] += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (row[j] - mean).powi(2) / (2.0 * var);
            }
        }
        for l in logs.iter_mut() {
            l[m] += ln_pi;
        }
    }
    logs.iter().map(|l| normalize_log_weights(l).map(|(p, _)| p)).collect()
}

/// One EM run from a random start. `Ok(None)` marks a degenerate run.
fn run<F: Family>(family: &F, k: usize, config: &EmConfig, stream: u64) -> Result<Option<RunResult<F::Component>>> {
    let n = family.n();
    let min_weight = config.min_component_weight.unwrap_or(2.0 / n as f64);
    let mut rng = Rng::with_stream(config.seed, stream);
    let labels = random_partition(family, k, &mut rng);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| family.row(i)).collect();
    let Some(mut resp) = seed_responsibilities(&rows, &labels, k) else {
        return Ok(None);
    };

    let mut components: Vec<F::Component> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut pi = vec![0.0; k];
    for it in 0..config.max_em_iter {
        iterations = it + 1;
        // M-step
        for (m, p) in pi.iter_mut().enumerate() {
            *p = resp.iter().map(|r| r[m]).sum::<f64>() / n as f64;
        }
        if pi.iter().any(|&p| p < min_weight) {
            return Ok(None);
        }
        let mut next = Vec::with_capacity(k);
        for m in 0..k {
            let w: Vec<f64> = resp.iter().map(|r| r[m]).collect();
            match family.fit(&w, components.get(m)) {
                Ok(c) => next.push(c),
                Err(Error::DegenerateSample { .. }) | Err(Error::SolverFailure(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        components = next;

        // E-step
        let mut ll = 0.0;
        for (i, r) in resp.iter_mut().enumerate() {
            let logs: Vec<f64> = (0..k)
                .map(|m| pi[m].ln() + family.ln_density(&components[m], i))
                .collect();
            match normalize_log_weights(&logs) {
                Some((post, lse)) => {
                    *r = post;
                    ll += lse;
                }
                None => return Ok(None),
            }
        }
        let prev = trace.last().copied();
        trace.push(ll);
        if let Some(prev) = prev {
            if (ll - prev).abs() <= config.tol_loglik * prev.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    Ok(Some(RunResult {
        pi,
        components,
        trace,
        iterations,
        converged,
    }))
}

/// Runs all restarts (concurrently) and keeps the best final log-likelihood.
/// Returns the winner and the number of degenerate runs.
pub(crate) fn best_of_restarts<F: Family>(
    family: &F,
    k: usize,
    config: &EmConfig,
) -> Result<(RunResult<F::Component>, usize)> {
    if k == 0 {
        return Err(Error::InvalidData("number of components must be at least 1".into()));
    }
    if config.restarts == 0 || config.max_em_iter == 0 || !(config.tol_loglik > 0.0) {
        return Err(Error::InvalidParams(format!("invalid EM configuration {config:?}")));
    }
    if let Some(w) = config.min_component_weight {
        if !(w > 0.0) {
            return Err(Error::InvalidParams(format!("minimum component weight {w} must be positive")));
        }
    }
    let outcomes: Vec<Result<Option<RunResult<F::Component>>>> = (0..config.restarts as u64)
        .into_par_iter()
        .map(|r| run(family, k, config, r))
        .collect();
    let mut best: Option<RunResult<F::Component>> = None;
    let mut degenerate = 0;
    for outcome in outcomes {
        match outcome? {
            None => degenerate += 1,
            Some(r) => {
                let better = match &best {
                    None => true,
                    Some(b) => r.trace.last().unwrap() > b.trace.last().unwrap(),
                };
                if better {
                    best = Some(r);
                }
            }
        }
    }
    best.map(|b| (b, degenerate)).ok_or_else(|| {
        Error::DegenerateMixture(format!("all {} restarts produced a degenerate component", config.restarts))
    })
}

pub(crate) fn count_distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Responsibilities below this are left out of the log-concave M-step.
///
/// Such points would otherwise drag the fitted log-density toward `-∞` at
/// the edge of the support, which the solver can only approach slowly.
/// Every observation keeps a responsibility of at least `1/k` somewhere,
/// so it stays inside the support of some component.
pub const RESPONSIBILITY_FLOOR: f64 = 1e-10;

/// Weighted log-concave fit of `values`, warm-started from `prev` when the
/// new support lies inside the previous one.
pub(crate) fn weighted_logconcave_fit(
    values: &[f64],
    resp: &[f64],
    prev: Option<&LogConcaveFit>,
    config: &EmConfig,
) -> Result<LogConcaveFit> {
    let (xs, ws): (Vec<f64>, Vec<f64>) = values
        .iter()
        .zip(resp)
        .filter(|(_, &w)| w > RESPONSIBILITY_FLOOR)
        .map(|(&x, &w)| (x, w))
        .unzip();
    let sample = prepare_sample(&xs, Some(&ws))?;
    if let Some(prev) = prev {
        let phi: Vec<f64> = sample.points().iter().map(|&x| prev.pdf(x).unwrap_or(0.0).ln()).collect();
        if phi.iter().all(|p| p.is_finite()) {
            if let Ok(start) = from_log_density(&sample, &phi) {
                return fit_mle_from(&sample, start, &config.solver);
            }
        }
    }
    fit_mle(&sample, &config.solver)
}

struct LogConcaveFamily<'a> {
    data: &'a [f64],
    config: &'a EmConfig,
}

impl Family for LogConcaveFamily<'_> {
    type Component = LogConcaveFit;

    fn n(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> Vec<f64> {
        vec![self.data[i]]
    }

    fn fit(&self, resp: &[f64], prev: Option<&LogConcaveFit>) -> Result<LogConcaveFit> {
        weighted_logconcave_fit(self.data, resp, prev, self.config)
    }

    fn ln_density(&self, c: &LogConcaveFit, i: usize) -> f64 {
        c.pdf(self.data[i]).unwrap_or(0.0).ln()
    }
}

/// EM clustering of univariate data with log-concave components.
///
/// Requires at least `2k + 2` distinct values. Each run starts from a
/// random hard partition, smoothed into soft responsibilities by normal
/// densities matched to the partition's moments; afterwards every M-step
/// is a weighted log-concave MLE per component.
pub fn em_fit(data: &[f64], k: usize, config: &EmConfig) -> Result<MixtureModel> {
    if k == 0 {
        return Err(Error::InvalidData("number of components must be at least 1".into()));
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite observation {x}")));
    }
    let distinct = count_distinct(data.iter().copied());
    if distinct < 2 * k + 2 {
        return Err(Error::InvalidData(format!(
            "{distinct} distinct values are too few for {k} components (need {})",
            2 * k + 2
        )));
    }
    let family = LogConcaveFamily { data, config };
    let (best, degenerate) = best_of_restarts(&family, k, config)?;
    Ok(MixtureModel {
        pi: best.pi,
        components: Components::Univariate(best.components),
        loglik: *best.trace.last().unwrap(),
        loglik_trace: best.trace,
        iterations: best.iterations,
        converged: best.converged,
        degenerate_restarts: degenerate,
    })
}

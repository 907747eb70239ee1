//! The subcommands. Each one turns its input bytes and flags into output
//! bytes; nothing here touches the file system.

use logconcave::{
    classify, copula_em_fit, em_fit, fit_mle, gaussian_em_fit, posterior, prepare_sample, EmConfig, LogConcaveFit,
    MixtureDensity, Rng, SolverConfig,
};
use serde::Serialize;

use crate::artifact::{parse_artifact, FitArtifact};
use crate::error::CliError;
use crate::number::{g17, G17Json};
use crate::table::parse_table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    Pdf,
    Cdf,
    Hazard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Univariate,
    Copula,
    Gaussian,
}

/// Bytes to emit, plus a nonzero exit code and message for results that are
/// written but flagged.
#[derive(Debug)]
pub struct Output {
    pub bytes: Vec<u8>,
    pub warning: Option<CliError>,
}

impl Output {
    fn ok(bytes: Vec<u8>) -> Self {
        Self { bytes, warning: None }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Json);
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    out
}

fn csv_line(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let fields: Vec<String> = fields.into_iter().collect();
    out.push_str(&fields.join(","));
    out.push('\n');
}

pub fn fit(input: &[u8], solver: &SolverConfig, format: Format) -> Result<Output, CliError> {
    let data = parse_table(input)?.single_column()?;
    let sample = prepare_sample(&data, None)?;
    let fit = fit_mle(&sample, solver)?;
    let bytes = match format {
        Format::Json => to_json(&FitArtifact::from_fit(&fit)),
        Format::Csv => {
            let mut out = String::from("x,log_density,cdf\n");
            for ((x, p), c) in fit.knots().iter().zip(fit.log_density()).zip(fit.cdf_at_knots()) {
                csv_line(&mut out, [g17(*x), g17(*p), g17(*c)]);
            }
            out.into_bytes()
        }
    };
    let warning = (!fit.converged()).then(|| {
        CliError::NotConverged(format!(
            "solver stopped after {} iterations with stationarity residual {}",
            fit.report().iterations,
            g17(fit.report().stationarity_residual)
        ))
    });
    Ok(Output { bytes, warning })
}

/// `g` equally spaced points of the support; for the hazard the right end
/// is left out, so the spacing is `(x_n − x₁)/g`.
pub fn grid(fit: &LogConcaveFit, g: usize, what: Quantity) -> Vec<f64> {
    let (lo, hi) = fit.support();
    let steps = if what == Quantity::Hazard { g } else { g - 1 };
    (0..g)
        .map(|i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
        .collect()
}

pub fn eval(artifact: &[u8], g: usize, what: Quantity, format: Format) -> Result<Output, CliError> {
    if g < 2 {
        return Err(CliError::Input(format!("grid size must be at least 2, got {g}")));
    }
    let fit = parse_artifact(artifact)?;
    let xs = grid(&fit, g, what);
    let values = xs
        .iter()
        .map(|&x| match what {
            Quantity::Pdf => fit.pdf(x),
            Quantity::Cdf => Ok(fit.cdf(x)),
            Quantity::Hazard => fit.hazard(x),
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let name = match what {
        Quantity::Pdf => "pdf",
        Quantity::Cdf => "cdf",
        Quantity::Hazard => "hazard",
    };
    let bytes = match format {
        Format::Csv => {
            let mut out = format!("x,{name}\n");
            for (x, v) in xs.iter().zip(&values) {
                csv_line(&mut out, [g17(*x), g17(*v)]);
            }
            out.into_bytes()
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Grid<'a> {
                quantity: &'a str,
                x: &'a [f64],
                value: &'a [f64],
            }
            to_json(&Grid {
                quantity: name,
                x: &xs,
                value: &values,
            })
        }
    };
    Ok(Output::ok(bytes))
}

pub fn sample(artifact: &[u8], m: i64, seed: u64, format: Format) -> Result<Output, CliError> {
    let m = usize::try_from(m).map_err(|_| CliError::Input(format!("sample size must be nonnegative, got {m}")))?;
    let fit = parse_artifact(artifact)?;
    let draws = fit.sample(&mut Rng::seed_from_u64(seed), m);
    let bytes = match format {
        Format::Csv => {
            let mut out = String::new();
            for x in &draws {
                csv_line(&mut out, [g17(*x)]);
            }
            out.into_bytes()
        }
        Format::Json => to_json(&draws),
    };
    Ok(Output::ok(bytes))
}

#[derive(Serialize)]
struct Clustering<'a> {
    version: u32,
    mode: &'a str,
    k: usize,
    pi: &'a [f64],
    loglik: f64,
    iterations: usize,
    converged: bool,
    /// Component of each observation, counted from 1.
    labels: Vec<usize>,
    posteriors: Vec<Vec<f64>>,
}

pub fn cluster(input: &[u8], k: usize, mode: Mode, config: &EmConfig, format: Format) -> Result<Output, CliError> {
    let table = parse_table(input)?;
    let (model, loglik, iterations, converged): (Box<dyn MixtureDensity>, f64, usize, bool) = match mode {
        Mode::Univariate => {
            let m = em_fit(&table.single_column()?, k, config)?;
            let (l, i, c) = (m.loglik, m.iterations, m.converged);
            (Box::new(m), l, i, c)
        }
        Mode::Gaussian => {
            let m = gaussian_em_fit(&table.single_column()?, k, config)?;
            let (l, i, c) = (m.loglik, m.iterations, m.converged);
            (Box::new(m), l, i, c)
        }
        Mode::Copula => {
            if table.columns() < 2 {
                return Err(CliError::Input(format!(
                    "copula mode needs at least 2 columns, found {}",
                    table.columns()
                )));
            }
            let m = copula_em_fit(&table.rows, k, config)?;
            let (l, i, c) = (m.loglik, m.iterations, m.converged);
            (Box::new(m), l, i, c)
        }
    };
    let labels: Vec<usize> = classify(model.as_ref(), &table.rows).into_iter().map(|l| l + 1).collect();
    let posteriors: Vec<Vec<f64>> = table.rows.iter().map(|r| posterior(model.as_ref(), r)).collect();
    let mode_name = match mode {
        Mode::Univariate => "univariate",
        Mode::Copula => "copula",
        Mode::Gaussian => "gaussian",
    };
    let bytes = match format {
        Format::Json => to_json(&Clustering {
            version: 1,
            mode: mode_name,
            k,
            pi: model.proportions(),
            loglik,
            iterations,
            converged,
            labels,
            posteriors,
        }),
        Format::Csv => {
            let mut out = String::new();
            csv_line(
                &mut out,
                std::iter::once("label".to_string()).chain((1..=k).map(|m| format!("posterior_{m}"))),
            );
            for (l, p) in labels.iter().zip(&posteriors) {
                csv_line(&mut out, std::iter::once(l.to_string()).chain(p.iter().map(|v| g17(*v))));
            }
            out.into_bytes()
        }
    };
    Ok(Output::ok(bytes))
}

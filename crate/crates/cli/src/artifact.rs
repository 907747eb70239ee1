//! The JSON document written by `fit` and read by `eval` and `sample`.

use logconcave::{prepare_sample, LogConcaveFit, SolverReport};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub version: u32,
    pub knots: Vec<f64>,
    /// Multiplicity of each knot in the input data.
    pub weights: Vec<f64>,
    pub log_density: Vec<f64>,
    pub cdf_at_knots: Vec<f64>,
    pub report: SolverReport,
}

impl FitArtifact {
    pub fn from_fit(fit: &LogConcaveFit) -> Self {
        Self {
            version: ARTIFACT_VERSION,
            knots: fit.knots().to_vec(),
            weights: fit.weighted_sample().weights().to_vec(),
            log_density: fit.log_density().to_vec(),
            cdf_at_knots: fit.cdf_at_knots().to_vec(),
            report: fit.report().clone(),
        }
    }

    /// Rebuilds the fit. The result equals the fit the artifact was written
    /// from, bit for bit.
    pub fn to_fit(&self) -> Result<LogConcaveFit, CliError> {
        if self.version != ARTIFACT_VERSION {
            return Err(CliError::Input(format!(
                "unsupported artifact version {} (expected {ARTIFACT_VERSION})",
                self.version
            )));
        }
        if self.knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CliError::Input("artifact knots are not strictly increasing".into()));
        }
        let sample = prepare_sample(&self.knots, Some(&self.weights))?;
        Ok(LogConcaveFit::from_parts(sample, self.log_density.clone(), self.report.clone())?)
    }
}

pub fn parse_artifact(bytes: &[u8]) -> Result<LogConcaveFit, CliError> {
    let artifact: FitArtifact =
        serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("invalid fit artifact: {e}")))?;
    artifact.to_fit()
}

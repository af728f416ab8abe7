//! TOML experiment configuration. Every command has an optional section whose
//! fields mirror its flags; flags win over config values.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub check_class: CheckClassSection,
    #[serde(default)]
    pub saddle: SaddleSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub correlate: CorrelateSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub heatflow: HeatflowSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SampleSection {
    pub ensemble: Option<String>,
    pub n: Option<usize>,
    pub tau_n: Option<f64>,
    pub t: Option<f64>,
    pub atom: Option<String>,
    pub atom_coeffs: Option<String>,
    pub atom_delta: Option<f64>,
    pub trials: Option<usize>,
    pub emit: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CheckClassSection {
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub tau_n: Option<f64>,
    pub w2: Option<String>,
    pub m_max: Option<usize>,
    pub include_far: Option<bool>,
    pub c0: Option<f64>,
    pub c_m: Option<f64>,
    pub c_m_prime: Option<f64>,
    pub c_beta: Option<f64>,
    pub c3: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SaddleSection {
    pub e: Option<f64>,
    pub t: Option<f64>,
    pub semicircle: Option<bool>,
    pub n: Option<usize>,
    pub tau_n: Option<f64>,
    pub tol: Option<f64>,
    pub bound_c: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct KernelSection {
    pub tau: Option<f64>,
    pub grid: Option<String>,
    pub grid_y: Option<String>,
    pub order: Option<usize>,
    pub points: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CorrelateSection {
    pub mode: Option<String>,
    pub n: Option<usize>,
    pub tau_n: Option<f64>,
    pub e: Option<f64>,
    pub t: Option<f64>,
    pub atom: Option<String>,
    pub atom_coeffs: Option<String>,
    pub atom_delta: Option<f64>,
    pub trials: Option<usize>,
    pub window: Option<String>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub tau_theory: Option<f64>,
    pub rho2: Option<bool>,
    pub disp_window: Option<String>,
    pub disp_nx: Option<usize>,
    pub disp_ny: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CompareSection {
    pub estimate: Option<PathBuf>,
    pub tau: Option<f64>,
    pub floor_frac: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct HeatflowSection {
    pub n: Option<String>,
    pub t: Option<String>,
    pub l: Option<f64>,
    pub h: Option<f64>,
    pub mu: Option<f64>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::usage(format!("invalid config: {e}")))
        }
    }
}

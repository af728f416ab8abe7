pub mod check_class;
pub mod compare;
pub mod correlate;
pub mod heatflow;
pub mod kernel;
pub mod saddle;
pub mod sample;

use crate::error::CliError;
use weaknh::ensembles::{AtomDistribution, AtomKind, SmoothedPotential};

/// Resolve the shared atom flags/config into a distribution.
pub fn resolve_atom(
    atom: Option<&str>,
    coeffs: Option<&str>,
    delta: Option<f64>,
) -> Result<(AtomKind, AtomDistribution), CliError> {
    match atom.unwrap_or("gaussian") {
        "gaussian" => Ok((AtomKind::Gaussian, AtomDistribution::gaussian())),
        "smoothed" => {
            let coeffs = crate::parse::atom_coeffs(
                coeffs.ok_or_else(|| CliError::missing("atom-coeffs"))?,
            )?;
            let delta = delta.unwrap_or(0.5);
            let dist = AtomDistribution::smoothed(coeffs, delta)?;
            Ok((
                AtomKind::Smoothed(SmoothedPotential { coeffs, delta }),
                dist,
            ))
        }
        other => Err(CliError::usage(format!(
            "unknown atom kind '{other}' (expected gaussian|smoothed)"
        ))),
    }
}

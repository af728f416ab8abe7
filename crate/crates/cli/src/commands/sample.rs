//! `sample` and `spectrum`: draw matrices and persist matrix / eigenvalue CSVs.

use crate::commands::resolve_atom;
use crate::config::FileConfig;
use crate::error::CliError;
use crate::output::{write_sidecar, CsvField, CsvWriter};
use crate::runner::run_trials;
use crate::Globals;
use clap::Args;
use serde::Serialize;
use weaknh::ensembles::{
    sample_elliptic, sample_gauss_divisible, sample_gue, sample_weak_elliptic, sample_wigner,
    AtomDistribution, AtomKind, RngStream,
};
use weaknh::linalg::{general_eigen, hermitian_eigen, ComplexMatrix, Spectrum};

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    /// gue | wigner | elliptic | weak-elliptic | gauss-divisible
    #[arg(long)]
    pub ensemble: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tau_n: Option<f64>,
    /// Gaussian-component time for gauss-divisible draws.
    #[arg(long)]
    pub t: Option<f64>,
    /// gaussian | smoothed
    #[arg(long)]
    pub atom: Option<String>,
    /// Coefficients of x^2,x^4,x^6,x^8 for the smoothed atom.
    #[arg(long)]
    pub atom_coeffs: Option<String>,
    #[arg(long)]
    pub atom_delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// matrix | spectrum | both
    #[arg(long)]
    pub emit: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub inner: SampleArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSample {
    pub ensemble: String,
    pub n: usize,
    pub tau_n: f64,
    pub t: f64,
    pub atom: AtomKind,
    pub trials: usize,
    pub emit: String,
}

fn resolve(file: &FileConfig, args: &SampleArgs, emit_default: &str) -> Result<(ResolvedSample, AtomDistribution), CliError> {
    let cfg = &file.sample;
    let ensemble = args
        .ensemble
        .clone()
        .or_else(|| cfg.ensemble.clone())
        .ok_or_else(|| CliError::missing("ensemble"))?;
    let n = args.n.or(cfg.n).ok_or_else(|| CliError::missing("n"))?;
    let tau_n = args.tau_n.or(cfg.tau_n).unwrap_or(0.0);
    let t = args.t.or(cfg.t).unwrap_or(0.0);
    let trials = args.trials.or(cfg.trials).unwrap_or(1);
    let emit = args
        .emit
        .clone()
        .or_else(|| cfg.emit.clone())
        .unwrap_or_else(|| emit_default.to_string());
    if !matches!(emit.as_str(), "matrix" | "spectrum" | "both") {
        return Err(CliError::usage(format!(
            "emit must be matrix|spectrum|both, got '{emit}'"
        )));
    }
    if trials == 0 {
        return Err(CliError::usage("trials must be at least 1"));
    }
    let (atom_kind, atom) = resolve_atom(
        args.atom.as_deref().or(cfg.atom.as_deref()),
        args.atom_coeffs.as_deref().or(cfg.atom_coeffs.as_deref()),
        args.atom_delta.or(cfg.atom_delta),
    )?;
    Ok((
        ResolvedSample {
            ensemble,
            n,
            tau_n,
            t,
            atom: atom_kind,
            trials,
            emit,
        },
        atom,
    ))
}

enum Draw {
    Hermitian(weaknh::linalg::HermitianMatrix),
    General(ComplexMatrix),
}

fn draw_one(
    resolved: &ResolvedSample,
    atom: &AtomDistribution,
    globals: &Globals,
    trial: usize,
) -> Result<Draw, CliError> {
    let mut rng = RngStream::new(globals.seed, trial as u64).rng();
    let n = resolved.n;
    Ok(match resolved.ensemble.as_str() {
        "gue" => Draw::Hermitian(sample_gue(n, &mut rng)?),
        "wigner" => Draw::Hermitian(sample_wigner(n, atom, &mut rng)?),
        "elliptic" => Draw::General(sample_elliptic(n, resolved.tau_n, &mut rng)?),
        "weak-elliptic" => {
            Draw::General(sample_weak_elliptic(n, resolved.tau_n, atom, &mut rng)?.a)
        }
        "gauss-divisible" => {
            let base = sample_weak_elliptic(n, resolved.tau_n, atom, &mut rng)?;
            Draw::General(sample_gauss_divisible(
                &base.a,
                resolved.t,
                resolved.tau_n,
                &mut rng,
            )?)
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown ensemble '{other}' (expected gue|wigner|elliptic|weak-elliptic|gauss-divisible)"
            )))
        }
    })
}

fn spectrum_of(draw: &Draw) -> Result<Spectrum, CliError> {
    Ok(match draw {
        Draw::Hermitian(h) => hermitian_eigen(h)?.0,
        Draw::General(m) => general_eigen(m)?,
    })
}

fn write_matrix_csv(globals: &Globals, trial: usize, draw: &Draw) -> Result<(), CliError> {
    let entries = match draw {
        Draw::Hermitian(h) => h.entries(),
        Draw::General(m) => m.entries(),
    };
    let mut csv = CsvWriter::new("i,j,re,im");
    for ((i, j), v) in entries.indexed_iter() {
        csv.row(&[
            CsvField::Int(i as i64),
            CsvField::Int(j as i64),
            CsvField::Float(v.re),
            CsvField::Float(v.im),
        ]);
    }
    csv.write(&globals.out.join(format!("matrix_{trial:04}.csv")))
}

pub fn run(globals: &Globals, file: &FileConfig, args: SampleArgs) -> Result<(), CliError> {
    let (resolved, atom) = resolve(file, &args, "both")?;
    execute(globals, &resolved, &atom, "sample")
}

pub fn run_spectrum(globals: &Globals, file: &FileConfig, args: SpectrumArgs) -> Result<(), CliError> {
    let (mut resolved, atom) = resolve(file, &args.inner, "spectrum")?;
    resolved.emit = "spectrum".to_string();
    execute(globals, &resolved, &atom, "spectrum")
}

fn execute(
    globals: &Globals,
    resolved: &ResolvedSample,
    atom: &AtomDistribution,
    command: &str,
) -> Result<(), CliError> {
    let want_matrix = matches!(resolved.emit.as_str(), "matrix" | "both");
    let want_spectrum = matches!(resolved.emit.as_str(), "spectrum" | "both");

    let spectra: Vec<Option<Spectrum>> = run_trials(globals.workers, resolved.trials, |trial| {
        let draw = draw_one(resolved, atom, globals, trial)?;
        if want_matrix {
            write_matrix_csv(globals, trial, &draw)?;
        }
        if want_spectrum {
            Ok(Some(spectrum_of(&draw)?))
        } else {
            Ok(None)
        }
    })?;

    if want_spectrum {
        let mut csv = CsvWriter::new("trial,index,re,im");
        for (trial, spec) in spectra.iter().enumerate() {
            let spec = spec.as_ref().expect("spectrum requested");
            for (index, v) in spec.values().iter().enumerate() {
                csv.row(&[
                    CsvField::Int(trial as i64),
                    CsvField::Int(index as i64),
                    CsvField::Float(v.re),
                    CsvField::Float(v.im),
                ]);
            }
        }
        csv.write(&globals.out.join("spectrum.csv"))?;
    }
    write_sidecar(globals, command, resolved)?;
    Ok(())
}

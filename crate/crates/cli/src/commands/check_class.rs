//! `check-class`: sample or construct a (W1, W2) pair and run the C0-C3
//! spectral-domain checker. Exit code 0 iff all conditions pass.

use crate::config::FileConfig;
use crate::error::CliError;
use crate::output::{write_json, write_sidecar};
use crate::Globals;
use clap::Args;
use serde::Serialize;
use weaknh::diagnostics::{check_class_membership, ClassCheckOptions, ClassConstants};
use weaknh::ensembles::{sample_gue, RngStream};
use weaknh::linalg::HermitianMatrix;

#[derive(Args, Debug, Clone)]
pub struct CheckClassArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Domain parameter in (0, 1/2].
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tau_n: Option<f64>,
    /// wigner | identity (identity forces the C2 failure mode)
    #[arg(long)]
    pub w2: Option<String>,
    /// Largest product length for C3.2.
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Also probe the far energies {±5, ±9} (expected to fail C1.2/C2).
    #[arg(long)]
    pub include_far: Option<bool>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub c_m: Option<f64>,
    #[arg(long)]
    pub c_m_prime: Option<f64>,
    #[arg(long)]
    pub c_beta: Option<f64>,
    #[arg(long)]
    pub c3: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedCheckClass {
    pub n: usize,
    pub epsilon: f64,
    pub tau_n: f64,
    pub w2: String,
    pub m_max: usize,
    pub include_far: bool,
    pub constants: ClassConstants,
}

pub fn run(globals: &Globals, file: &FileConfig, args: CheckClassArgs) -> Result<(), CliError> {
    let cfg = &file.check_class;
    let n = args.n.or(cfg.n).ok_or_else(|| CliError::missing("n"))?;
    let epsilon = args
        .epsilon
        .or(cfg.epsilon)
        .ok_or_else(|| CliError::missing("epsilon"))?;
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(CliError::usage(format!(
            "epsilon must lie in (0, 1/2], got {epsilon}"
        )));
    }
    let tau_n = args.tau_n.or(cfg.tau_n).unwrap_or(1.0 / n as f64);
    let w2_kind = args
        .w2
        .clone()
        .or_else(|| cfg.w2.clone())
        .unwrap_or_else(|| "wigner".to_string());
    let defaults = ClassConstants::default();
    let constants = ClassConstants {
        c0: args.c0.or(cfg.c0).unwrap_or(defaults.c0),
        c_m: args.c_m.or(cfg.c_m).unwrap_or(defaults.c_m),
        c_m_prime: args.c_m_prime.or(cfg.c_m_prime).unwrap_or(defaults.c_m_prime),
        c_beta: args.c_beta.or(cfg.c_beta).unwrap_or(defaults.c_beta),
        c3: args.c3.or(cfg.c3).unwrap_or(defaults.c3),
    };
    let resolved = ResolvedCheckClass {
        n,
        epsilon,
        tau_n,
        w2: w2_kind.clone(),
        m_max: args.m_max.or(cfg.m_max).unwrap_or(8),
        include_far: args.include_far.or(cfg.include_far).unwrap_or(false),
        constants,
    };

    let mut rng = RngStream::new(globals.seed, 0).rng();
    let w1 = sample_gue(n, &mut rng)?;
    let w2 = match w2_kind.as_str() {
        "wigner" => sample_gue(n, &mut rng)?,
        "identity" => HermitianMatrix::identity(n),
        other => {
            return Err(CliError::usage(format!(
                "unknown w2 kind '{other}' (expected wigner|identity)"
            )))
        }
    };

    let mut opts = ClassCheckOptions::new(epsilon, tau_n);
    opts.constants = resolved.constants;
    opts.m_max = resolved.m_max;
    opts.grid.include_far = resolved.include_far;
    let report = check_class_membership(&w1, &w2, &opts)?;

    write_json(&globals.out.join("class_report.json"), &report)?;
    write_sidecar(globals, "check-class", &resolved)?;
    println!(
        "class membership: {} (C0 {}, C1.1 {}, C1.2 {}, C2 {}, C3.1 {}, C3.2 {})",
        if report.pass { "PASS" } else { "FAIL" },
        report.conditions.c0.pass,
        report.conditions.c1_1.pass,
        report.conditions.c1_2.pass,
        report.conditions.c2.pass,
        report.conditions.c3_1.pass,
        report.conditions.c3_2.pass,
    );
    if report.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(
            "one or more spectral-domain conditions failed (see class_report.json)".to_string(),
        ))
    }
}

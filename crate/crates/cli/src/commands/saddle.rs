//! `saddle`: solve lambda = E + t m(lambda) for the semicircle law or for a
//! sampled GUE spectrum; report tau_{E,t} and optional eta/u bound checks.

use crate::config::FileConfig;
use crate::error::CliError;
use crate::output::{write_json, write_sidecar};
use crate::Globals;
use clap::Args;
use serde::Serialize;
use weaknh::diagnostics::{semicircle_density, semicircle_m, SemicircleLaw, SpectralData};
use weaknh::ensembles::{sample_gue, RngStream};
use weaknh::linalg::HermitianEigen;
use weaknh::saddle::{
    solve_lambda, tau_et, verify_eta_bounds, EtaBoundsReport, SaddleResult, SolveOptions,
};

#[derive(Args, Debug, Clone)]
pub struct SaddleArgs {
    /// Bulk energy E (recommended inside (-2, 2)).
    #[arg(long)]
    pub e: Option<f64>,
    /// Gaussian-component time t > 0.
    #[arg(long)]
    pub t: Option<f64>,
    /// Use the semicircle Stieltjes transform instead of a sampled spectrum.
    #[arg(long)]
    pub semicircle: bool,
    /// Dimension of the GUE draw backing m_N (ignored with --semicircle
    /// unless tau-n is also set, in which case it scales tau_{E,t}).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tau_n: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Check t/C <= eta <= Ct and t/C <= |u-E| <= Ct for this C.
    #[arg(long)]
    pub bound_c: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSaddle {
    pub e: f64,
    pub t: f64,
    pub semicircle: bool,
    pub n: Option<usize>,
    pub tau_n: Option<f64>,
    pub tol: f64,
    pub bound_c: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SaddleOutput {
    result: SaddleResult,
    eta_bounds: Option<EtaBoundsReport>,
    /// The limit target pi rho_sc(E) N tau_N, when N and tau_N are known.
    tau_e_target: Option<f64>,
}

pub fn run(globals: &Globals, file: &FileConfig, args: SaddleArgs) -> Result<(), CliError> {
    let cfg = &file.saddle;
    let energy = args.e.or(cfg.e).ok_or_else(|| CliError::missing("e"))?;
    let t = args.t.or(cfg.t).ok_or_else(|| CliError::missing("t"))?;
    let semicircle = args.semicircle || cfg.semicircle.unwrap_or(false);
    let n = args.n.or(cfg.n);
    let tau_n = args.tau_n.or(cfg.tau_n);
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-13);
    let bound_c = args.bound_c.or(cfg.bound_c);
    if !semicircle && n.is_none() {
        return Err(CliError::usage(
            "either --semicircle or --n <dim> must be given to define m(z)",
        ));
    }
    if energy.abs() >= 2.0 {
        eprintln!("warning: E = {energy} lies outside the bulk (-2, 2)");
    }
    let resolved = ResolvedSaddle {
        e: energy,
        t,
        semicircle,
        n,
        tau_n,
        tol,
        bound_c,
    };

    let opts = SolveOptions {
        tol,
        ..Default::default()
    };
    let mut output = if semicircle {
        let mut result = solve_lambda(&SemicircleLaw, energy, t, &opts)?;
        if let (Some(n), Some(tau_n)) = (n, tau_n) {
            // Wigner-pair proxy beta = N tau_N (Im m)^2 (unit <W2t^2>)
            let m = semicircle_m(result.lambda_c())?;
            let beta = n as f64 * tau_n * m.im * m.im;
            result.tau_et = Some(tau_et(beta, n, tau_n, result.eta, t));
        }
        SaddleOutput {
            result,
            eta_bounds: None,
            tau_e_target: None,
        }
    } else {
        let n = n.expect("checked above");
        let mut rng = RngStream::new(globals.seed, 0).rng();
        let w1 = sample_gue(n, &mut rng)?;
        let w2 = sample_gue(n, &mut rng)?;
        let eig = HermitianEigen::new(&w1)?;
        let mut result = solve_lambda(&eig, energy, t, &opts)?;
        if let Some(tau_n) = tau_n {
            let data = SpectralData::new(&w1, &w2)?;
            let (_, beta) = data.alpha_beta(result.lambda_c(), tau_n)?;
            result.tau_et = Some(tau_et(beta, n, tau_n, result.eta, t));
        }
        SaddleOutput {
            result,
            eta_bounds: None,
            tau_e_target: None,
        }
    };
    if let Some(c) = bound_c {
        output.eta_bounds = Some(verify_eta_bounds(&output.result, c));
    }
    if let (Some(n), Some(tau_n)) = (n, tau_n) {
        output.tau_e_target =
            Some(std::f64::consts::PI * semicircle_density(energy) * n as f64 * tau_n);
    }

    let text = serde_json::to_string_pretty(&output)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    println!("{text}");
    write_json(&globals.out.join("saddle.json"), &output)?;
    write_sidecar(globals, "saddle", &resolved)?;
    Ok(())
}

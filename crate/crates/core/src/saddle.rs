//! The characteristic fixed point lambda_{E,t} = E + t m(lambda_{E,t}) in the
//! upper half-plane, solved by Newton iteration with the analytic derivative,
//! plus the effective weak non-Hermiticity parameter tau_{E,t} and the
//! two-sided eta/u bound checks.

use crate::diagnostics::{semicircle_density, semicircle_m, semicircle_m_prime, SemicircleLaw};
use crate::linalg::HermitianEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SaddleError {
    #[error("t must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(
        "no convergence after {iterations} iterations (last residual {residual:.3e}); \
         final iterates: {trace:?}"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<Complex64>,
    },
    #[error("iteration left the upper half-plane: Im lambda = {0} at convergence")]
    LeftUpperHalfPlane(f64),
    #[error("stieltjes provider failed: {0}")]
    Provider(String),
}

/// A Stieltjes transform m(z) with its analytic derivative, defined off the
/// real axis. Implemented by the semicircle law and by concrete spectra.
pub trait StieltjesProvider {
    fn m(&self, z: Complex64) -> Result<Complex64, SaddleError>;
    fn m_prime(&self, z: Complex64) -> Result<Complex64, SaddleError>;
}

impl StieltjesProvider for SemicircleLaw {
    fn m(&self, z: Complex64) -> Result<Complex64, SaddleError> {
        semicircle_m(z).map_err(|e| SaddleError::Provider(e.to_string()))
    }

    fn m_prime(&self, z: Complex64) -> Result<Complex64, SaddleError> {
        semicircle_m_prime(z).map_err(|e| SaddleError::Provider(e.to_string()))
    }
}

impl StieltjesProvider for HermitianEigen {
    fn m(&self, z: Complex64) -> Result<Complex64, SaddleError> {
        self.stieltjes(z).map_err(|e| SaddleError::Provider(e.to_string()))
    }

    fn m_prime(&self, z: Complex64) -> Result<Complex64, SaddleError> {
        self.stieltjes_prime(z)
            .map_err(|e| SaddleError::Provider(e.to_string()))
    }
}

/// Converged fixed point lambda_{E,t} = u + i eta with convergence metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleResult {
    pub lambda: [f64; 2],
    pub u: f64,
    pub eta: f64,
    pub residual: f64,
    pub iterations: usize,
    pub tau_et: Option<f64>,
    pub energy: f64,
    pub t: f64,
}

impl SaddleResult {
    pub fn lambda_c(&self) -> Complex64 {
        Complex64::new(self.lambda[0], self.lambda[1])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 200,
        }
    }
}

/// Solve F(lambda) = lambda - E - t m(lambda) = 0 in the upper half-plane.
///
/// Newton steps use F' = 1 - t m'(lambda); whenever a step would leave the
/// upper half-plane the iteration falls back to the fixed-point map
/// lambda <- E + t m(lambda), which preserves Im > 0 by the Herglotz property.
/// Initial guess: E + i t pi rho_sc(E), or E + i t outside the bulk.
pub fn solve_lambda<P: StieltjesProvider + ?Sized>(
    provider: &P,
    energy: f64,
    t: f64,
    opts: &SolveOptions,
) -> Result<SaddleResult, SaddleError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(SaddleError::InvalidTime(t));
    }
    if !(opts.tol > 0.0) {
        return Err(SaddleError::InvalidTolerance(opts.tol));
    }
    let rho = semicircle_density(energy);
    let eta0 = if rho > 0.0 {
        t * std::f64::consts::PI * rho
    } else {
        t
    };
    let mut lambda = Complex64::new(energy, eta0);
    let mut trace: Vec<Complex64> = Vec::new();
    for iter in 0..opts.max_iter {
        let m = provider.m(lambda)?;
        let f = lambda - energy - t * m;
        let residual = f.norm();
        if residual <= opts.tol {
            if lambda.im <= 0.0 {
                return Err(SaddleError::LeftUpperHalfPlane(lambda.im));
            }
            return Ok(SaddleResult {
                lambda: [lambda.re, lambda.im],
                u: lambda.re,
                eta: lambda.im,
                residual,
                iterations: iter,
                tau_et: None,
                energy,
                t,
            });
        }
        let fp = Complex64::new(1.0, 0.0) - t * provider.m_prime(lambda)?;
        let newton = lambda - f / fp;
        lambda = if fp.norm() > 1e-14 && newton.im > 0.0 {
            newton
        } else {
            // damped fixed-point step, contractive for small t
            0.5 * lambda + 0.5 * (Complex64::new(energy, 0.0) + t * m)
        };
        if trace.len() >= 10 {
            trace.remove(0);
        }
        trace.push(lambda);
    }
    let residual = (lambda - energy - t * provider.m(lambda)?).norm();
    Err(SaddleError::NoConvergence {
        iterations: opts.max_iter,
        residual,
        trace,
    })
}

/// tau_{E,t} = beta_{E,t} + N tau_N eta^2 / t.
pub fn tau_et(beta_at_lambda: f64, n: usize, tau_n: f64, eta: f64, t: f64) -> f64 {
    beta_at_lambda + n as f64 * tau_n * eta * eta / t
}

/// Outcome of checking t/C <= eta <= C t and t/C <= |u - E| <= C t.
///
/// The |u - E| lower bound only makes sense when Re m(lambda) is bounded away
/// from zero (at the fixed point u - E = t Re m); when |u - E|/t < 0.05 the
/// lower bound is skipped, as at E = 0 where u = E by symmetry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaBoundsReport {
    pub pass: bool,
    pub eta_pass: bool,
    /// eta/t in [1/C, C]: smallest slack of the two sides (negative = violated)
    pub eta_margin: f64,
    pub u_lower_checked: bool,
    pub u_pass: bool,
    pub u_margin: f64,
}

pub fn verify_eta_bounds(result: &SaddleResult, c: f64) -> EtaBoundsReport {
    let ratio = result.eta / result.t;
    let eta_margin = (c - ratio).min(ratio - 1.0 / c);
    let eta_pass = eta_margin >= 0.0;

    let u_ratio = (result.u - result.energy).abs() / result.t;
    let u_lower_checked = u_ratio >= 0.05;
    let upper_margin = c - u_ratio;
    let u_margin = if u_lower_checked {
        upper_margin.min(u_ratio - 1.0 / c)
    } else {
        upper_margin
    };
    let u_pass = u_margin >= 0.0;
    EtaBoundsReport {
        pass: eta_pass && u_pass,
        eta_pass,
        eta_margin,
        u_lower_checked,
        u_pass,
        u_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::SpectralData;
    use crate::ensembles::{sample_gue, RngStream};
    use approx::assert_abs_diff_eq;

    fn solve_sc(energy: f64, t: f64) -> SaddleResult {
        solve_lambda(&SemicircleLaw, energy, t, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn semicircle_closed_form_at_center() {
        // E = 0: eta = t / sqrt(1 + t)
        for &t in &[1e-1, 1e-2, 1e-3] {
            let r = solve_sc(0.0, t);
            assert!((r.eta - t / (1.0 + t).sqrt()).abs() <= 1e-12, "t = {t}");
            assert!(r.residual <= 1e-13);
            assert!(r.u.abs() < 1e-13);
        }
    }

    #[test]
    fn eta_over_t_approaches_semicircle_density() {
        for &e in &[0.0, 0.5, 1.0] {
            let t = 1e-3;
            let r = solve_sc(e, t);
            let target = std::f64::consts::PI * semicircle_density(e);
            let ratio = r.eta / t;
            assert!(
                (ratio - target).abs() <= 0.03 * target,
                "E={e}: ratio {ratio} vs {target}"
            );
        }
    }

    #[test]
    fn newton_converges_quickly_on_grid() {
        for &e in &[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5] {
            for &t in &[1e-1, 1e-2, 1e-3] {
                let r = solve_sc(e, t);
                assert!(r.iterations <= 30, "E={e}, t={t}: {} iters", r.iterations);
                assert!(r.eta > 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            solve_lambda(&SemicircleLaw, 0.0, 0.0, &SolveOptions::default()),
            Err(SaddleError::InvalidTime(_))
        ));
        assert!(matches!(
            solve_lambda(
                &SemicircleLaw,
                0.0,
                0.1,
                &SolveOptions {
                    tol: -1.0,
                    max_iter: 10
                }
            ),
            Err(SaddleError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn conjugate_reflection_consistency() {
        // conj(lambda) solves the reflected equation with m~(w) = conj(m(conj w))
        let r = solve_sc(0.7, 0.05);
        let lam = r.lambda_c();
        let m_reflected = semicircle_m(lam.conj().conj()).unwrap().conj();
        let resid = (lam.conj() - 0.7 - 0.05 * m_reflected).norm();
        assert!(resid <= 1e-12);
    }

    #[test]
    fn eta_monotone_in_t_at_center() {
        let mut prev = 0.0;
        for k in 1..=12 {
            let t = 1e-3 * k as f64;
            let r = solve_sc(0.0, t);
            assert!(r.eta > prev, "eta not increasing at t={t}");
            prev = r.eta;
        }
    }

    #[test]
    fn spectrum_backed_provider_converges() {
        let mut rng = RngStream::new(9, 0).rng();
        let w1 = sample_gue(256, &mut rng).unwrap();
        let eig = crate::linalg::HermitianEigen::new(&w1).unwrap();
        let t = 0.05;
        let r = solve_lambda(&eig, 0.0, t, &SolveOptions::default()).unwrap();
        assert!(r.residual <= 1e-13);
        assert!(r.eta > 0.0);
        // eta = t Im m(lambda) at the fixed point
        let m = eig.stieltjes(r.lambda_c()).unwrap();
        assert_abs_diff_eq!(r.eta, t * m.im, epsilon = 1e-12);
    }

    #[test]
    fn tau_et_identities() {
        // Hermitian case: tau_N = 0 and beta = 0 gives 0
        assert_eq!(tau_et(0.0, 512, 0.0, 0.01, 0.1), 0.0);

        // at the fixed point N tau eta^2/t = N tau eta Im m exactly
        let t = 1e-2;
        let r = solve_sc(0.3, t);
        let m = semicircle_m(r.lambda_c()).unwrap();
        let n = 512;
        let tau_n = 1.0 / n as f64;
        let via_eta = n as f64 * tau_n * r.eta * r.eta / t;
        let via_m = n as f64 * tau_n * r.eta * m.im;
        let tau = tau_et(0.0, n, tau_n, r.eta, t) + 1e-300;
        assert!((via_eta - via_m).abs() / tau <= 1e-10);
    }

    #[test]
    fn tau_et_gue_matches_lemma_asymptotics() {
        // GUE pair, N = 512, tau_N = 1/N, E = 0, t = N^{-1/2}:
        // tau_{E,t} ~ N tau_N pi rho_sc(0) (1 + pi t rho_sc(0)) within 10%
        let n = 512;
        let mut rng = RngStream::new(77, 0).rng();
        let w1 = sample_gue(n, &mut rng).unwrap();
        let w2 = sample_gue(n, &mut rng).unwrap();
        let eig = crate::linalg::HermitianEigen::new(&w1).unwrap();
        let t = (n as f64).powf(-0.5);
        let tau_n = 1.0 / n as f64;
        let r = solve_lambda(&eig, 0.0, t, &SolveOptions::default()).unwrap();
        let data = SpectralData::new(&w1, &w2).unwrap();
        let (_, beta) = data.alpha_beta(r.lambda_c(), tau_n).unwrap();
        let tau = tau_et(beta, n, tau_n, r.eta, t);
        let rho0 = semicircle_density(0.0);
        let target = n as f64
            * tau_n
            * std::f64::consts::PI
            * rho0
            * (1.0 + std::f64::consts::PI * t * rho0);
        assert!(
            (tau - target).abs() <= 0.10 * target,
            "tau_Et = {tau} vs {target}"
        );
    }

    #[test]
    fn eta_bounds_checks() {
        // E = 0, small t: eta/t ~ 1, u = E exactly (lower u bound skipped)
        let r = solve_sc(0.0, 0.01);
        let rep = verify_eta_bounds(&r, 2.0);
        assert!(rep.pass && rep.eta_pass);
        assert!(!rep.u_lower_checked);

        // tight C at E = 0.8: eta/t -> pi rho_sc(0.8) ~ 0.9165 < 1/1.0001
        let r = solve_sc(0.8, 1e-4);
        let rep = verify_eta_bounds(&r, 1.0001);
        assert!(!rep.eta_pass);
        assert!(rep.eta_margin < 0.0);
    }
}

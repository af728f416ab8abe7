//! Numerical toolkit for weakly non-Hermitian random matrices.
//!
//! The crate simulates elliptic ensembles `A = W1 + i sqrt(tau_N) W2` built from
//! Hermitian (Wigner) blocks, evaluates the interpolating bulk kernel `K_tau` of
//! the weak non-Hermiticity regime together with its determinantal correlation
//! functions, and provides the resolvent diagnostics (Stieltjes transforms,
//! multi-resolvent traces, spectral-domain condition checks), the characteristic
//! fixed point `lambda_{E,t} = E + t m(lambda)`, Monte Carlo estimators for
//! rescaled eigenvalue correlations, and a 1-D reverse-heat-flow demonstration.
//!
//! Modules map one-to-one onto the subsystems:
//!
//! * [`linalg`] — dense complex/Hermitian matrices, eigendecompositions, resolvents
//! * [`ensembles`] — deterministic, seedable samplers (GUE, Wigner, elliptic, Gauss-divisible)
//! * [`diagnostics`] — resolvent functionals and the spectral-domain class checker
//! * [`saddle`] — the fixed point `lambda_{E,t}` and effective parameters `tau_{E,t}`
//! * [`kernel`] — the bulk kernel `K_tau` and determinantal correlations `rho_k`
//! * [`correlation`] — bulk rescaling, binned Monte Carlo estimators, comparisons
//! * [`heatflow`] — Ornstein-Uhlenbeck semigroup, truncated time reversal, chi^2 error

pub mod correlation;
pub mod diagnostics;
pub mod ensembles;
pub mod heatflow;
pub mod kernel;
pub mod linalg;
pub mod quadrature;
pub mod saddle;

pub use num_complex::Complex64;

//! Deterministic, seedable samplers: GUE, Wigner matrices with a smooth atom
//! family, elliptic matrices B = V1 + i sqrt(tau) V2, weakly non-Hermitian
//! A = W1 + i sqrt(tau_N) W2 and the Gauss-divisible A_t = A + sqrt(t) B.
//!
//! Reproducibility contract: a sampler is a pure function of (parameters,
//! RNG stream). Per-trial streams come from a counter-based split of the
//! master seed ([`RngStream`]), so Monte Carlo trials can run in any order,
//! on any number of workers, and still draw identical matrices.
//!
//! Normalization: matrix entries use the standard Wigner scaling, diagonal
//! ~ nu/sqrt(N) and off-diagonal real/imaginary parts ~ nu/sqrt(2N) with nu
//! standardized to unit variance, so E|W_ij|^2 = 1/N and the bulk is (-2, 2).
//! Atom densities themselves live in the e^{-V(x)-x^2} family (the gaussian
//! case is N(0, 1/2)); the sampler divides raw draws by the atom's standard
//! deviation, computed once by quadrature for smoothed atoms.

use crate::diagnostics::semicircle_density;
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("matrix dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("tau_N must lie in [0, 1], got {0}")]
    InvalidTau(f64),
    #[error("time t must be nonnegative and finite, got {0}")]
    InvalidTime(f64),
    #[error("invalid atom distribution: {0}")]
    InvalidAtom(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Counter-based RNG stream: (master seed, stream index) -> independent ChaCha
/// stream. Same pair, same draws, bit-exactly; distinct pairs are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self { master_seed, index }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.index);
        rng
    }
}

/// Parameters of the smooth atom family d nu(x) = e^{-V(x) - x^2} dx with
/// V(x) = a1 x^2 + a2 x^4 + a3 x^6 + a4 x^8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPotential {
    /// Coefficients of x^2, x^4, x^6, x^8.
    pub coeffs: [f64; 4],
    /// Margin in V(x) >= -(1 - delta) x^2.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AtomKind {
    /// V == 0: the density e^{-x^2}/sqrt(pi), i.e. N(0, 1/2).
    Gaussian,
    Smoothed(SmoothedPotential),
}

/// Cached quadrature tables for a smoothed atom: normalization, variance and
/// the CDF grid used for inverse-CDF sampling.
#[derive(Debug, Clone)]
struct AtomTable {
    half_width: f64,
    step: f64,
    /// Raw-density normalization constant: integral of e^{-V-x^2}.
    norm: f64,
    /// Trapezoidal CDF at the grid points; cdf[0] = 0, cdf[last] = 1.
    cdf: Vec<f64>,
    variance: f64,
}

/// An atom distribution: the density e^{-V(x)-x^2} (normalized), its variance,
/// and a deterministic sampler. Immutable after construction; all caches are
/// computed up front so sampling is pure.
#[derive(Debug, Clone)]
pub struct AtomDistribution {
    kind: AtomKind,
    table: Option<AtomTable>,
}

const ATOM_GRID_POINTS: usize = 16_385; // 2^14 + 1, Simpson-friendly

impl AtomDistribution {
    pub fn gaussian() -> Self {
        Self {
            kind: AtomKind::Gaussian,
            table: None,
        }
    }

    /// Build a smoothed atom; validates normalizability and the potential
    /// lower bound V(x) >= -(1-delta) x^2 (sufficient conditions: a1 >= -(1-delta),
    /// a2..a4 >= 0).
    pub fn smoothed(coeffs: [f64; 4], delta: f64) -> Result<Self, EnsembleError> {
        if !(delta > 0.0 && delta <= 1.0) || !delta.is_finite() {
            return Err(EnsembleError::InvalidAtom(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(EnsembleError::InvalidAtom("non-finite coefficient".into()));
        }
        if coeffs[0] < -(1.0 - delta) {
            return Err(EnsembleError::InvalidAtom(format!(
                "a1 = {} violates V(x) >= -(1-delta) x^2 with delta = {delta}",
                coeffs[0]
            )));
        }
        if coeffs[1..].iter().any(|&c| c < 0.0) {
            return Err(EnsembleError::InvalidAtom(
                "higher coefficients a2..a4 must be nonnegative".into(),
            ));
        }
        let potential = SmoothedPotential { coeffs, delta };
        let table = AtomTable::build(&potential);
        Ok(Self {
            kind: AtomKind::Smoothed(potential),
            table: Some(table),
        })
    }

    pub fn from_kind(kind: &AtomKind) -> Result<Self, EnsembleError> {
        match kind {
            AtomKind::Gaussian => Ok(Self::gaussian()),
            AtomKind::Smoothed(p) => Self::smoothed(p.coeffs, p.delta),
        }
    }

    pub fn kind(&self) -> &AtomKind {
        &self.kind
    }

    /// Normalized density of nu at x.
    pub fn density(&self, x: f64) -> f64 {
        match (&self.kind, &self.table) {
            (AtomKind::Gaussian, _) => (-x * x).exp() / std::f64::consts::PI.sqrt(),
            (AtomKind::Smoothed(p), Some(t)) => (-p.potential(x) - x * x).exp() / t.norm,
            _ => unreachable!("smoothed atom always carries a table"),
        }
    }

    /// Variance of nu (1/2 for the gaussian case; by quadrature otherwise).
    pub fn variance(&self) -> f64 {
        match &self.table {
            None => 0.5,
            Some(t) => t.variance,
        }
    }

    /// One raw draw from nu.
    pub fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.table {
            None => {
                let g: f64 = rng.sample(StandardNormal);
                g / 2.0_f64.sqrt()
            }
            Some(t) => t.invert(rng.random::<f64>()),
        }
    }

    /// One draw standardized to unit variance (what the matrix samplers use).
    pub fn sample_standardized<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.table {
            // nu/sigma for the gaussian atom is exactly N(0, 1)
            None => rng.sample(StandardNormal),
            Some(t) => t.invert(rng.random::<f64>()) / t.variance.sqrt(),
        }
    }
}

impl SmoothedPotential {
    fn potential(&self, x: f64) -> f64 {
        let x2 = x * x;
        (((self.coeffs[3] * x2 + self.coeffs[2]) * x2 + self.coeffs[1]) * x2 + self.coeffs[0]) * x2
    }
}

impl AtomTable {
    fn build(p: &SmoothedPotential) -> Self {
        // e^{-V - x^2} <= e^{-delta x^2}, so this window keeps the tail mass
        // far below the quadrature resolution.
        let half_width = (42.0 / p.delta).sqrt().max(10.0);
        let n = ATOM_GRID_POINTS;
        let step = 2.0 * half_width / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|k| -half_width + k as f64 * step).collect();
        let raw: Vec<f64> = xs.iter().map(|&x| (-p.potential(x) - x * x).exp()).collect();
        let norm = simpson(&raw, step);
        let pdf: Vec<f64> = raw.iter().map(|&v| v / norm).collect();
        let second: Vec<f64> = xs.iter().zip(&pdf).map(|(&x, &f)| x * x * f).collect();
        let variance = simpson(&second, step);
        let mut cdf = vec![0.0; n];
        for k in 1..n {
            cdf[k] = cdf[k - 1] + 0.5 * step * (pdf[k - 1] + pdf[k]);
        }
        let total = cdf[n - 1];
        for v in cdf.iter_mut() {
            *v /= total;
        }
        Self {
            half_width,
            step,
            norm,
            cdf,
            variance,
        }
    }

    /// Inverse CDF by binary search plus linear interpolation inside the cell.
    fn invert(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let mut lo = 0usize;
        let mut hi = self.cdf.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c0 = self.cdf[lo];
        let c1 = self.cdf[hi];
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        -self.half_width + (lo as f64 + frac) * self.step
    }
}

fn simpson(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of points");
    let mut acc = values[0] + values[n - 1];
    for (k, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * step / 3.0
}

/// Full recipe for one random-matrix draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub tau_n: f64,
    pub t: f64,
    pub atom: AtomKind,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        check_dim(self.n)?;
        check_tau(self.tau_n)?;
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(EnsembleError::InvalidTime(self.t));
        }
        AtomDistribution::from_kind(&self.atom).map(|_| ())
    }
}

fn check_dim(n: usize) -> Result<(), EnsembleError> {
    if n < 2 {
        return Err(EnsembleError::InvalidDimension(n));
    }
    Ok(())
}

fn check_tau(tau_n: f64) -> Result<(), EnsembleError> {
    if !(0.0..=1.0).contains(&tau_n) || !tau_n.is_finite() {
        return Err(EnsembleError::InvalidTau(tau_n));
    }
    Ok(())
}

/// GUE draw: diagonal real N(0, 1/N), off-diagonal with independent real and
/// imaginary parts N(0, 1/(2N)). Hermitian by construction.
pub fn sample_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HermitianMatrix, EnsembleError> {
    sample_wigner(n, &AtomDistribution::gaussian(), rng)
}

/// Wigner draw with the given atom distribution (standardized to unit variance):
/// diagonal ~ nu/sqrt(N), off-diagonal real and imaginary parts ~ nu/sqrt(2N).
pub fn sample_wigner<R: Rng + ?Sized>(
    n: usize,
    atom: &AtomDistribution,
    rng: &mut R,
) -> Result<HermitianMatrix, EnsembleError> {
    check_dim(n)?;
    let diag_scale = 1.0 / (n as f64).sqrt();
    let off_scale = 1.0 / (2.0 * n as f64).sqrt();
    Ok(HermitianMatrix::from_upper(n, |i, j| {
        if i == j {
            Complex64::new(atom.sample_standardized(rng) * diag_scale, 0.0)
        } else {
            Complex64::new(
                atom.sample_standardized(rng) * off_scale,
                atom.sample_standardized(rng) * off_scale,
            )
        }
    }))
}

/// Elliptic Ginibre draw B = V1 + i sqrt(tau_N) V2 with independent GUE V1, V2.
pub fn sample_elliptic<R: Rng + ?Sized>(
    n: usize,
    tau_n: f64,
    rng: &mut R,
) -> Result<ComplexMatrix, EnsembleError> {
    check_tau(tau_n)?;
    let v1 = sample_gue(n, rng)?;
    let v2 = sample_gue(n, rng)?;
    Ok(assemble_elliptic(&v1, &v2, tau_n))
}

/// A weakly non-Hermitian draw A = W1 + i sqrt(tau_N) W2 together with the
/// Hermitian blocks, so diagnostics can reuse W1 and W2.
#[derive(Debug, Clone)]
pub struct WeakEllipticSample {
    pub a: ComplexMatrix,
    pub w1: HermitianMatrix,
    pub w2: HermitianMatrix,
}

pub fn sample_weak_elliptic<R: Rng + ?Sized>(
    n: usize,
    tau_n: f64,
    atom: &AtomDistribution,
    rng: &mut R,
) -> Result<WeakEllipticSample, EnsembleError> {
    check_tau(tau_n)?;
    let w1 = sample_wigner(n, atom, rng)?;
    let w2 = sample_wigner(n, atom, rng)?;
    let a = assemble_elliptic(&w1, &w2, tau_n);
    Ok(WeakEllipticSample { a, w1, w2 })
}

fn assemble_elliptic(w1: &HermitianMatrix, w2: &HermitianMatrix, tau_n: f64) -> ComplexMatrix {
    let s = tau_n.sqrt();
    let n = w1.dim();
    ComplexMatrix::from_fn(n, |i, j| {
        let a = w1.get(i, j);
        let b = w2.get(i, j);
        // a + i s b, written out so tau_N = 0 reproduces w1 exactly
        Complex64::new(a.re - s * b.im, a.im + s * b.re)
    })
    .expect("finite by construction")
}

/// Gauss-divisible draw A_t = A + sqrt(t) B with a fresh elliptic B at the same tau_N.
pub fn sample_gauss_divisible<R: Rng + ?Sized>(
    a: &ComplexMatrix,
    t: f64,
    tau_n: f64,
    rng: &mut R,
) -> Result<ComplexMatrix, EnsembleError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(EnsembleError::InvalidTime(t));
    }
    let b = sample_elliptic(a.dim(), tau_n, rng)?;
    a.add_scaled(Complex64::new(t.sqrt(), 0.0), &b)
        .map_err(|_| EnsembleError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        })
}

/// Normalized density value of the atom at x (free-function form of
/// [`AtomDistribution::density`]).
pub fn atom_density(atom: &AtomDistribution, x: f64) -> f64 {
    atom.density(x)
}

/// The caller-side convention for the weak non-Hermiticity sequence:
/// tau_N = tau_E / (N pi rho_sc(E)).
pub fn tau_n_for_target(tau_e: f64, n: usize, energy: f64) -> f64 {
    tau_e / (n as f64 * std::f64::consts::PI * semicircle_density(energy))
}

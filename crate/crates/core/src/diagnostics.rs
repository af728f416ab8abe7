//! Resolvent diagnostics for a pair (W1, W2): the Stieltjes transform m_N and
//! its derivative, the quadratic functionals alpha_N / beta_N, multi-resolvent
//! traces with traceless W2 insertions, semicircle closed forms, and the
//! checker for the spectral-domain conditions C0-C3 over S_epsilon.
//!
//! Everything is driven by one cached eigendecomposition of W1: with
//! W1 = U diag(lambda) U* and the rotated traceless block Wt = U* (W2 - <W2>) U,
//! each functional is evaluated from the resolvent weights g_i = 1/(lambda_i - z)
//! in O(N) or O(N^2) per spectral point; only the C3.2 product traces need
//! dense matrix products.

use crate::linalg::{HermitianEigen, HermitianMatrix, LinalgError};
use ndarray::prelude::*;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("spectral parameter must have Im z != 0, got z = {z}")]
    RealSpectralParameter { z: Complex64 },
    #[error("empty spectral parameter list")]
    EmptyParameterList,
    #[error("epsilon must lie in (0, 1/2], got {0}")]
    InvalidEpsilon(f64),
    #[error("dimension mismatch between W1 ({left}) and W2 ({right})")]
    DimensionMismatch { left: usize, right: usize },
}

/// Semicircle density: sqrt(4 - E^2) / (2 pi) on [-2, 2], zero outside.
pub fn semicircle_density(energy: f64) -> f64 {
    let disc = 4.0 - energy * energy;
    if disc <= 0.0 {
        0.0
    } else {
        disc.sqrt() / (2.0 * std::f64::consts::PI)
    }
}

/// Stieltjes transform of the semicircle law: the root of m^2 + z m + 1 = 0
/// with Im m(z) * Im z > 0.
pub fn semicircle_m(z: Complex64) -> Result<Complex64, DiagnosticsError> {
    if z.im == 0.0 {
        return Err(DiagnosticsError::RealSpectralParameter { z });
    }
    let s = (z * z - 4.0).sqrt();
    let m1 = (-z + s) / 2.0;
    if m1.im * z.im > 0.0 {
        Ok(m1)
    } else {
        Ok((-z - s) / 2.0)
    }
}

/// d/dz of the semicircle Stieltjes transform: m' = m^2 / (1 - m^2).
pub fn semicircle_m_prime(z: Complex64) -> Result<Complex64, DiagnosticsError> {
    let m = semicircle_m(z)?;
    Ok(m * m / (1.0 - m * m))
}

/// Marker type for the semicircle law as a Stieltjes-transform provider.
#[derive(Debug, Clone, Copy, Default)]
pub struct SemicircleLaw;

/// Cached spectral data for a pair (W1, W2): eigenbasis of W1 plus the
/// traceless part of W2 rotated into that basis.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eig: HermitianEigen,
    /// U* (W2 - <W2>) U
    w2_rot: Array2<Complex64>,
    w2_norm: f64,
}

impl SpectralData {
    pub fn new(w1: &HermitianMatrix, w2: &HermitianMatrix) -> Result<Self, DiagnosticsError> {
        if w1.dim() != w2.dim() {
            return Err(DiagnosticsError::DimensionMismatch {
                left: w1.dim(),
                right: w2.dim(),
            });
        }
        let eig = HermitianEigen::new(w1)?;
        let w2_traceless = crate::linalg::traceless_part(w2);
        let w2_rot = eig.rotate_to_eigenbasis(w2_traceless.entries());
        let w2_norm = w2.operator_norm()?;
        Ok(Self {
            eig,
            w2_rot,
            w2_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eig
    }

    /// Operator norm of W1 (max |eigenvalue|).
    pub fn w1_norm(&self) -> f64 {
        self.eig
            .eigenvalues()
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn w2_norm(&self) -> f64 {
        self.w2_norm
    }

    fn check_z(&self, z: Complex64) -> Result<(), DiagnosticsError> {
        if z.im == 0.0 {
            return Err(DiagnosticsError::RealSpectralParameter { z });
        }
        Ok(())
    }

    fn weights(&self, z: Complex64) -> Vec<Complex64> {
        self.eig
            .eigenvalues()
            .iter()
            .map(|&l| (Complex64::new(l, 0.0) - z).inv())
            .collect()
    }

    /// m_N(z) = <G_z>
    pub fn stieltjes_m(&self, z: Complex64) -> Result<Complex64, DiagnosticsError> {
        self.check_z(z)?;
        let sum: Complex64 = self.weights(z).iter().sum();
        let m = sum / self.dim() as f64;
        debug_assert!(m.im * z.im > 0.0, "Herglotz property violated");
        Ok(m)
    }

    /// m'_N(z) = <G_z^2>
    pub fn m_prime(&self, z: Complex64) -> Result<Complex64, DiagnosticsError> {
        self.check_z(z)?;
        let sum: Complex64 = self.weights(z).iter().map(|g| g * g).sum();
        Ok(sum / self.dim() as f64)
    }

    /// (alpha_N, beta_N) at z:
    /// alpha_N = N tau_N <(Re(G_z) W2t)^2>, beta_N = N tau_N <(Im(G_z) W2t)^2>.
    ///
    /// In the eigenbasis Re(G) and Im(G) are diagonal, so both reduce to
    /// sum_{ij} d_i d_j |Wt_ij|^2; beta is nonnegative because Im(G) has one sign.
    pub fn alpha_beta(&self, z: Complex64, tau_n: f64) -> Result<(f64, f64), DiagnosticsError> {
        self.check_z(z)?;
        let gs = self.weights(z);
        let n = self.dim();
        let mut alpha = 0.0;
        let mut beta = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w2 = self.w2_rot[[i, j]].norm_sqr();
                alpha += gs[i].re * gs[j].re * w2;
                beta += gs[i].im * gs[j].im * w2;
            }
        }
        alpha *= tau_n;
        beta *= tau_n;
        debug_assert!(beta >= -1e-12, "beta_N must be nonnegative, got {beta}");
        Ok((alpha, beta))
    }

    /// <G_z W2t>
    pub fn g_w2_trace(&self, z: Complex64) -> Result<Complex64, DiagnosticsError> {
        self.check_z(z)?;
        let gs = self.weights(z);
        let sum: Complex64 = gs
            .iter()
            .enumerate()
            .map(|(i, g)| g * self.w2_rot[[i, i]])
            .sum();
        Ok(sum / self.dim() as f64)
    }

    /// <G_z^{1+m} W2t> — used by the optional contour-bound diagnostic.
    pub fn g_power_w2_trace(&self, z: Complex64, m: usize) -> Result<Complex64, DiagnosticsError> {
        self.check_z(z)?;
        let gs = self.weights(z);
        let sum: Complex64 = gs
            .iter()
            .enumerate()
            .map(|(i, g)| g.powu(1 + m as u32) * self.w2_rot[[i, i]])
            .sum();
        Ok(sum / self.dim() as f64)
    }

    /// <prod_j G_{z_j} W2t> by dense products in the eigenbasis (exact).
    pub fn multi_resolvent_trace(
        &self,
        z_list: &[Complex64],
    ) -> Result<Complex64, DiagnosticsError> {
        if z_list.is_empty() {
            return Err(DiagnosticsError::EmptyParameterList);
        }
        for &z in z_list {
            self.check_z(z)?;
        }
        let n = self.dim();
        let mut product = scale_rows(&self.weights(z_list[0]), &self.w2_rot);
        for &z in &z_list[1..] {
            let factor = scale_rows(&self.weights(z), &self.w2_rot);
            product = product.dot(&factor);
        }
        let tr: Complex64 = (0..n).map(|i| product[[i, i]]).sum();
        Ok(tr / n as f64)
    }

    /// <(G_z W2t)^m> for every m in 2..=m_max, sharing the dense work:
    /// powers P^2..P^h with h = ceil(m_max/2) are formed once (h-1 products)
    /// and every trace is an O(N^2) pairing of two stored powers.
    pub fn equal_z_traces(
        &self,
        z: Complex64,
        m_max: usize,
    ) -> Result<Vec<Complex64>, DiagnosticsError> {
        self.check_z(z)?;
        let p = scale_rows(&self.weights(z), &self.w2_rot);
        Ok(product_power_traces(&p, None, m_max, self.dim()))
    }

    /// Same as [`Self::equal_z_traces`] for the alternating configuration
    /// (z, conj z, z, conj z, ...), the m-th entry using m factors.
    pub fn alternating_traces(
        &self,
        z: Complex64,
        m_max: usize,
    ) -> Result<Vec<Complex64>, DiagnosticsError> {
        self.check_z(z)?;
        let p = scale_rows(&self.weights(z), &self.w2_rot);
        let q = scale_rows(&self.weights(z.conj()), &self.w2_rot);
        Ok(product_power_traces(&p, Some(&q), m_max, self.dim()))
    }
}

/// diag(d) * M
fn scale_rows(d: &[Complex64], m: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = m.clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let di = d[i];
        row.mapv_inplace(|v| di * v);
    }
    out
}

fn pair_trace(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    acc
}

/// Normalized traces <X^m> (or of the alternating word in P, Q) for m = 2..=m_max.
///
/// For the alternating case the word of length m is P Q P Q ... ; pairings then
/// run over R = P Q: even m uses R^{m/2}, odd m uses R^{(m-1)/2} P.
fn product_power_traces(
    p: &Array2<Complex64>,
    q: Option<&Array2<Complex64>>,
    m_max: usize,
    n: usize,
) -> Vec<Complex64> {
    let norm = 1.0 / n as f64;
    match q {
        None => {
            // powers P^2..P^h
            let h = m_max.div_ceil(2).max(2);
            let mut powers: Vec<Array2<Complex64>> = Vec::with_capacity(h);
            powers.push(p.clone()); // P^1
            for k in 2..=h {
                let next = powers[k - 2].dot(p);
                powers.push(next);
            }
            (2..=m_max)
                .map(|m| {
                    let t = if m <= h {
                        trace_of(&powers[m - 1])
                    } else {
                        pair_trace(&powers[h - 1], &powers[m - h - 1])
                    };
                    t * norm
                })
                .collect()
        }
        Some(q) => {
            let r = p.dot(q);
            // powers R^1..R^hr with hr chosen so every word splits in two stored factors
            let hr = (m_max / 2).div_ceil(2).max(1);
            let mut rpow: Vec<Array2<Complex64>> = Vec::with_capacity(hr);
            rpow.push(r);
            for k in 2..=hr {
                let next = rpow[k - 2].dot(&rpow[0]);
                rpow.push(next);
            }
            let rp: Vec<Array2<Complex64>> = rpow.iter().map(|rk| rk.dot(p)).collect();
            (2..=m_max)
                .map(|m| {
                    let t = if m % 2 == 0 {
                        let k = m / 2; // trace of R^k
                        if k <= hr {
                            trace_of(&rpow[k - 1])
                        } else {
                            pair_trace(&rpow[hr - 1], &rpow[k - hr - 1])
                        }
                    } else {
                        let k = (m - 1) / 2; // trace of R^k P
                        if k <= hr {
                            pair_trace(&rp[k - 1], &Array2::eye(n))
                        } else {
                            pair_trace(&rpow[hr - 1], &rp[k - hr - 1])
                        }
                    };
                    t * norm
                })
                .collect()
        }
    }
}

fn trace_of(m: &Array2<Complex64>) -> Complex64 {
    (0..m.nrows()).map(|i| m[[i, i]]).sum()
}

// ---------------------------------------------------------------------------
// Free-function forms of the per-operation surface. Each builds the cached
// spectral data once; hold a `SpectralData` when evaluating many points.
// ---------------------------------------------------------------------------

pub fn stieltjes_m(w1: &HermitianMatrix, z: Complex64) -> Result<Complex64, DiagnosticsError> {
    let eig = HermitianEigen::new(w1)?;
    if z.im == 0.0 {
        return Err(DiagnosticsError::RealSpectralParameter { z });
    }
    Ok(eig.stieltjes(z)?)
}

pub fn m_prime(w1: &HermitianMatrix, z: Complex64) -> Result<Complex64, DiagnosticsError> {
    let eig = HermitianEigen::new(w1)?;
    if z.im == 0.0 {
        return Err(DiagnosticsError::RealSpectralParameter { z });
    }
    Ok(eig.stieltjes_prime(z)?)
}

pub fn alpha_beta(
    w1: &HermitianMatrix,
    w2: &HermitianMatrix,
    z: Complex64,
    tau_n: f64,
) -> Result<(f64, f64), DiagnosticsError> {
    SpectralData::new(w1, w2)?.alpha_beta(z, tau_n)
}

/// <prod_j G_{z_j} W2t> where `w2_traceless` is used as given (the caller is
/// expected to have applied [`crate::linalg::traceless_part`]).
pub fn multi_resolvent_trace(
    w1: &HermitianMatrix,
    w2_traceless: &HermitianMatrix,
    z_list: &[Complex64],
) -> Result<Complex64, DiagnosticsError> {
    if z_list.is_empty() {
        return Err(DiagnosticsError::EmptyParameterList);
    }
    if w1.dim() != w2_traceless.dim() {
        return Err(DiagnosticsError::DimensionMismatch {
            left: w1.dim(),
            right: w2_traceless.dim(),
        });
    }
    let eig = HermitianEigen::new(w1)?;
    let w2_rot = eig.rotate_to_eigenbasis(w2_traceless.entries());
    let data = SpectralData {
        eig,
        w2_rot,
        w2_norm: 0.0,
    };
    data.multi_resolvent_trace(z_list)
}

// ---------------------------------------------------------------------------
// Spectral domain and the class checker
// ---------------------------------------------------------------------------

/// The spectral domain S_epsilon = { |Re z| <= 10, N^{-1+eps} <= |Im z| <= 10 }.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDomainSpec {
    pub epsilon: f64,
    pub n: usize,
}

impl SpectralDomainSpec {
    pub fn new(epsilon: f64, n: usize) -> Result<Self, DiagnosticsError> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(DiagnosticsError::InvalidEpsilon(epsilon));
        }
        Ok(Self { epsilon, n })
    }

    /// n_epsilon = ceil(48 / epsilon)
    pub fn n_epsilon(&self) -> usize {
        (48.0 / self.epsilon).ceil() as usize
    }

    pub fn eta_min(&self) -> f64 {
        (self.n as f64).powf(-1.0 + self.epsilon)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re.abs() <= 10.0 && z.im.abs() >= self.eta_min() && z.im.abs() <= 10.0
    }
}

/// Shape of the deterministic evaluation grid inside S_epsilon.
///
/// The default is bulk-weighted: 5 energies in [-1.8, 1.8] times 10
/// logarithmic eta levels in [N^{-1+eps}, 2.5] — 50 points where the default
/// condition constants hold for Wigner pairs. `include_far` appends the far
/// energies {±5, ±9} at every eta level; these probe the outer reaches of
/// S_epsilon, where C1.2/C2 fail for Wigner pairs with any modest constants
/// (outside the spectrum Im m is proportional to eta, so eta |m'| / Im m -> 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub re_count: usize,
    pub re_half_width: f64,
    pub eta_levels: usize,
    pub eta_cap: f64,
    pub include_far: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            re_count: 5,
            re_half_width: 1.8,
            eta_levels: 10,
            eta_cap: 2.5,
            include_far: false,
        }
    }
}

/// The deterministic evaluation grid (upper half-plane; conditions are
/// symmetric under z -> conj z).
pub fn class_grid(domain: &SpectralDomainSpec, opts: &GridOptions) -> Vec<Complex64> {
    let eta_min = domain.eta_min();
    let eta_max = opts.eta_cap.clamp(eta_min * 1.0001, 10.0);
    let levels = opts.eta_levels.max(1);
    let etas: Vec<f64> = (0..levels)
        .map(|k| {
            if levels == 1 {
                eta_min
            } else {
                (eta_min.ln() + (eta_max / eta_min).ln() * k as f64 / (levels - 1) as f64).exp()
            }
        })
        .collect();
    let mut res: Vec<f64> = (0..opts.re_count.max(1))
        .map(|k| {
            if opts.re_count <= 1 {
                0.0
            } else {
                -opts.re_half_width
                    + 2.0 * opts.re_half_width * k as f64 / (opts.re_count - 1) as f64
            }
        })
        .collect();
    if opts.include_far {
        res.extend_from_slice(&[-9.0, -5.0, 5.0, 9.0]);
    }
    let mut grid = Vec::with_capacity(res.len() * etas.len());
    for &re in &res {
        for &eta in &etas {
            grid.push(Complex64::new(re, eta));
        }
    }
    grid
}

/// Constants in the conditions C0-C3.2. Defaults are artifact choices tuned to
/// pass comfortably for Wigner pairs in the bulk at N >= 256 and to fail on
/// adversarial inputs; the underlying statements only assert existence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassConstants {
    pub c0: f64,
    pub c_m: f64,
    pub c_m_prime: f64,
    pub c_beta: f64,
    pub c3: f64,
}

impl Default for ClassConstants {
    fn default() -> Self {
        Self {
            c0: 4.0,
            c_m: 10.0,
            c_m_prime: 0.05,
            c_beta: 20.0,
            c3: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCheckOptions {
    pub epsilon: f64,
    pub tau_n: f64,
    pub constants: ClassConstants,
    pub grid: GridOptions,
    /// C3.2 is checked for m = 2..=min(m_max, 4 n_epsilon).
    pub m_max: usize,
    /// Also check the alternating (z, conj z, ...) configuration.
    pub alternating: bool,
}

impl ClassCheckOptions {
    pub fn new(epsilon: f64, tau_n: f64) -> Self {
        Self {
            epsilon,
            tau_n,
            constants: ClassConstants::default(),
            grid: GridOptions::default(),
            m_max: 8,
            alternating: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// One condition: worst-case margin over the grid (nonnegative = pass),
/// the witness point achieving it, and the measured constant that would make
/// the condition tight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub pass: bool,
    pub margin: f64,
    pub witness: Option<Point>,
    pub measured: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct C32Entry {
    pub m: usize,
    /// max over grid and configurations of |<prod G W2t>| * eta^{m/2 - 1}
    pub measured_c3: f64,
    pub margin: f64,
    pub pass: bool,
    pub witness: Option<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct C32Report {
    pub pass: bool,
    pub per_m: Vec<C32Entry>,
    /// Set when the measured per-m constant grows monotonically by more than
    /// 10x from m = 2 to m_max (the uniform-constant reading looks doubtful).
    pub growth_flag: bool,
}

/// Informational only: the contour-derived bound |<G^{1+m} W2t>| <=
/// N^{eps/2} / (N eta^{m+1/2}), reported as the worst ratio lhs/bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourDiagnostic {
    pub m: usize,
    pub max_ratio: f64,
    pub witness: Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionSet {
    #[serde(rename = "C0")]
    pub c0: ConditionReport,
    #[serde(rename = "C1.1")]
    pub c1_1: ConditionReport,
    #[serde(rename = "C1.2")]
    pub c1_2: ConditionReport,
    #[serde(rename = "C2")]
    pub c2: ConditionReport,
    #[serde(rename = "C3.1")]
    pub c3_1: ConditionReport,
    #[serde(rename = "C3.2")]
    pub c3_2: C32Report,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMeta {
    pub epsilon: f64,
    pub n_points: usize,
    pub n_epsilon: usize,
    pub eta_min: f64,
    pub tau_n: f64,
}

/// Result of a class-membership check; serializes to the documented JSON shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub pass: bool,
    pub conditions: ConditionSet,
    pub grid: GridMeta,
    pub contour_diagnostic: Vec<ContourDiagnostic>,
}

impl ClassReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

struct MarginTracker {
    margin: f64,
    witness: Option<Complex64>,
    measured: f64,
}

impl MarginTracker {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            witness: None,
            measured: 0.0,
        }
    }

    fn update(&mut self, margin: f64, z: Complex64, measured: f64) {
        self.measured = self.measured.max(measured);
        if margin < self.margin {
            self.margin = margin;
            self.witness = Some(z);
        }
    }

    fn report(&self) -> ConditionReport {
        ConditionReport {
            pass: self.margin >= 0.0,
            margin: self.margin,
            witness: self.witness.map(Point::from),
            measured: self.measured,
        }
    }
}

struct PointEval {
    z: Complex64,
    abs_m: f64,
    ratio_c12: f64,
    beta: f64,
    g_w2: f64,
    /// |trace| for m = 2..=m_max, max over the evaluated configurations
    c32: Vec<f64>,
    contour: [f64; 2],
}

/// Evaluate C0-C3.2 for the pair over a deterministic grid of S_epsilon.
pub fn check_class_membership(
    w1: &HermitianMatrix,
    w2: &HermitianMatrix,
    opts: &ClassCheckOptions,
) -> Result<ClassReport, DiagnosticsError> {
    let domain = SpectralDomainSpec::new(opts.epsilon, w1.dim())?;
    let data = SpectralData::new(w1, w2)?;
    let grid = class_grid(&domain, &opts.grid);
    let n = w1.dim() as f64;
    let n_eps = domain.n_epsilon();
    let m_max = opts.m_max.min(4 * n_eps).max(2);
    let consts = &opts.constants;

    let evals: Vec<PointEval> = grid
        .par_iter()
        .map(|&z| -> Result<PointEval, DiagnosticsError> {
            let m = data.stieltjes_m(z)?;
            let mp = data.m_prime(z)?;
            let (_, beta) = data.alpha_beta(z, opts.tau_n)?;
            let g_w2 = data.g_w2_trace(z)?.norm();
            let mut c32: Vec<f64> = data
                .equal_z_traces(z, m_max)?
                .iter()
                .map(|t| t.norm())
                .collect();
            if opts.alternating {
                for (acc, t) in c32.iter_mut().zip(data.alternating_traces(z, m_max)?) {
                    *acc = acc.max(t.norm());
                }
            }
            let contour = [
                data.g_power_w2_trace(z, 1)?.norm(),
                data.g_power_w2_trace(z, 2)?.norm(),
            ];
            Ok(PointEval {
                z,
                abs_m: m.norm(),
                ratio_c12: z.im * mp.norm() / m.im,
                beta,
                g_w2,
                c32,
                contour,
            })
        })
        .collect::<Result<_, _>>()?;

    // C0 is z-independent.
    let w_norm = data.w1_norm().max(data.w2_norm());
    let c0 = ConditionReport {
        pass: w_norm <= consts.c0,
        margin: 1.0 - w_norm / consts.c0,
        witness: None,
        measured: w_norm,
    };

    let mut c1_1 = MarginTracker::new();
    let mut c1_2 = MarginTracker::new();
    let mut c2 = MarginTracker::new();
    let mut c3_1 = MarginTracker::new();
    let mut c32_track: Vec<MarginTracker> = (2..=m_max).map(|_| MarginTracker::new()).collect();
    let mut contour: Vec<ContourDiagnostic> = Vec::new();

    for e in &evals {
        let eta = e.z.im;
        // two-sided |m|: measured constant is the c_m that would be tight
        let m_measured = e.abs_m.max(1.0 / e.abs_m);
        let m_margin = (1.0 - e.abs_m / consts.c_m).min(1.0 - 1.0 / (consts.c_m * e.abs_m));
        c1_1.update(m_margin, e.z, m_measured);

        c1_2.update(
            1.0 - e.ratio_c12 / (1.0 - consts.c_m_prime),
            e.z,
            1.0 - e.ratio_c12,
        );

        let b_measured = e.beta.max(1.0 / e.beta);
        let b_margin = (1.0 - e.beta / consts.c_beta).min(1.0 - 1.0 / (consts.c_beta * e.beta));
        c2.update(b_margin, e.z, b_measured);

        let bound31 = n.powf(opts.epsilon / 2.0) / (n * eta.sqrt());
        c3_1.update(1.0 - e.g_w2 / bound31, e.z, e.g_w2 * n * eta.sqrt());

        for (k, tracker) in c32_track.iter_mut().enumerate() {
            let m = k + 2;
            let scaled = e.c32[k] * eta.powf(m as f64 / 2.0 - 1.0);
            tracker.update(1.0 - scaled / consts.c3, e.z, scaled);
        }
    }

    for (idx, label_m) in [1usize, 2].iter().enumerate() {
        let mut best = (0.0f64, grid[0]);
        for e in &evals {
            let eta = e.z.im;
            let bound = n.powf(opts.epsilon / 2.0) / (n * eta.powf(*label_m as f64 + 0.5));
            let ratio = e.contour[idx] / bound;
            if ratio > best.0 {
                best = (ratio, e.z);
            }
        }
        contour.push(ContourDiagnostic {
            m: *label_m,
            max_ratio: best.0,
            witness: Point::from(best.1),
        });
    }

    let per_m: Vec<C32Entry> = c32_track
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let r = t.report();
            C32Entry {
                m: k + 2,
                measured_c3: r.measured,
                margin: r.margin,
                pass: r.pass,
                witness: r.witness,
            }
        })
        .collect();
    let growth_flag = per_m.len() >= 2
        && per_m.windows(2).all(|w| w[1].measured_c3 >= w[0].measured_c3)
        && per_m.last().unwrap().measured_c3 > 10.0 * per_m[0].measured_c3;
    let c3_2 = C32Report {
        pass: per_m.iter().all(|e| e.pass),
        per_m,
        growth_flag,
    };

    let conditions = ConditionSet {
        c0,
        c1_1: c1_1.report(),
        c1_2: c1_2.report(),
        c2: c2.report(),
        c3_1: c3_1.report(),
        c3_2,
    };
    let pass = conditions.c0.pass
        && conditions.c1_1.pass
        && conditions.c1_2.pass
        && conditions.c2.pass
        && conditions.c3_1.pass
        && conditions.c3_2.pass;
    Ok(ClassReport {
        pass,
        conditions,
        grid: GridMeta {
            epsilon: opts.epsilon,
            n_points: grid.len(),
            n_epsilon: n_eps,
            eta_min: domain.eta_min(),
            tau_n: opts.tau_n,
        },
        contour_diagnostic: contour,
    })
}

//! The universal bulk kernel of the weak non-Hermiticity regime,
//!
//! K_tau(z, w) = (2 pi)^{-3/2} tau^{-1/2} e^{-[(Im z)^2 + (Im w)^2]/(4 tau)}
//!               * int_{-1}^{1} e^{-2 tau lambda^2 - i lambda (z - conj w)} d lambda,
//!
//! its determinantal correlation functions rho_k(z) = det [K_tau(z_j, z_l)],
//! and the closed-form y-marginal of rho_1.
//!
//! The lambda integral is evaluated by fixed-order Gauss-Legendre quadrature
//! (default order 64, doubled automatically for strongly oscillatory
//! separations |z - conj w| > 30). The Gaussian prefactor is computed in log
//! space so large |Im z| underflows gracefully to zero instead of producing
//! spurious NaNs. Inside the validity window |Im z|, |Im w| <= 6 sqrt(tau) + 6
//! the absolute quadrature error is far below 1e-12.

use crate::diagnostics::Point;
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::quadrature::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("tau must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("quadrature order must be at least 16, got {0}")]
    InvalidOrder(usize),
    #[error("rho_k supports 1 <= k <= 8 points, got {0}")]
    UnsupportedOrder(usize),
    #[error("kernel determinant is not real: imaginary part {0:.3e}")]
    NonRealDeterminant(f64),
    #[error("kernel determinant is negative beyond tolerance: {0:.3e}")]
    NegativeDeterminant(f64),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Parameters of the kernel family: the effective weak non-Hermiticity
/// parameter tau > 0 and the base Gauss-Legendre order.
#[derive(Debug, Clone)]
pub struct KernelParams {
    tau: f64,
    quad_order: usize,
    rule: GaussLegendre,
}

pub const DEFAULT_QUAD_ORDER: usize = 64;

impl KernelParams {
    pub fn new(tau: f64) -> Result<Self, KernelError> {
        Self::with_order(tau, DEFAULT_QUAD_ORDER)
    }

    pub fn with_order(tau: f64, quad_order: usize) -> Result<Self, KernelError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(KernelError::InvalidTau(tau));
        }
        if quad_order < 16 {
            return Err(KernelError::InvalidOrder(quad_order));
        }
        Ok(Self {
            tau,
            quad_order,
            rule: GaussLegendre::new(quad_order),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }
}

/// The oscillatory integral int_{-1}^{1} e^{-2 tau l^2 - i l q} dl.
fn oscillatory_integral(params: &KernelParams, q: Complex64) -> Complex64 {
    let tau = params.tau;
    let speed = q.norm();
    let integrand = |l: f64| Complex64::new(-2.0 * tau * l * l + l * q.im, -l * q.re).exp();
    if speed <= 30.0 {
        params.rule.integrate_complex(integrand)
    } else {
        // roughly |q|/(2 pi) oscillation periods on [-1, 1]: double the order
        // until it comfortably resolves them (capped; accuracy degrades
        // gracefully beyond).
        let doublings = ((speed / 30.0).log2().ceil() as u32).min(6);
        let rule = GaussLegendre::new(params.quad_order << doublings);
        rule.integrate_complex(integrand)
    }
}

fn log_prefactor(params: &KernelParams, z: Complex64, w: Complex64) -> f64 {
    -1.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * params.tau.ln()
        - (z.im * z.im + w.im * w.im) / (4.0 * params.tau)
}

/// K_tau(z, w).
pub fn kernel(params: &KernelParams, z: Complex64, w: Complex64) -> Complex64 {
    let integral = oscillatory_integral(params, z - w.conj());
    integral * log_prefactor(params, z, w).exp()
}

/// The Hermitian kernel matrix [K_tau(z_j, z_l)] with an exactly real,
/// nonnegative-by-construction diagonal (the tiny imaginary residue of the
/// diagonal quadrature is dropped).
pub fn kernel_matrix(
    params: &KernelParams,
    points: &[Complex64],
) -> Result<HermitianMatrix, KernelError> {
    let k = points.len();
    if k == 0 || k > 8 {
        return Err(KernelError::UnsupportedOrder(k));
    }
    let mut data = ndarray::Array2::<Complex64>::zeros((k, k));
    for j in 0..k {
        let diag = kernel(params, points[j], points[j]);
        data[[j, j]] = Complex64::new(diag.re, 0.0);
        for l in (j + 1)..k {
            let v = kernel(params, points[j], points[l]);
            data[[j, l]] = v;
            data[[l, j]] = v.conj();
        }
    }
    Ok(HermitianMatrix::try_new(data)?)
}

/// rho_k(z_1, ..., z_k) = det [K_tau(z_j, z_l)], real and >= -1e-10.
///
/// Coincident points make the matrix singular, so the determinant is zero by
/// construction (up to roundoff); no special casing is needed.
pub fn rho_k(params: &KernelParams, points: &[Complex64]) -> Result<f64, KernelError> {
    let matrix = kernel_matrix(params, points)?;
    let det = crate::linalg::determinant(&matrix.to_complex())?;
    let scale = det.re.abs().max(1.0);
    if det.im.abs() > 1e-10 * scale {
        return Err(KernelError::NonRealDeterminant(det.im));
    }
    if det.re < -1e-10 {
        return Err(KernelError::NegativeDeterminant(det.re));
    }
    Ok(det.re)
}

/// rho_1(z) = K_tau(z, z); always real and nonnegative in exact arithmetic.
pub fn rho_1(params: &KernelParams, z: Complex64) -> f64 {
    kernel(params, z, z).re
}

/// The y-marginal of rho_1: int_R K_tau(x + i y, x + i y) dy.
///
/// The Gaussian y-integral contributes sqrt(2 pi tau) e^{+2 tau lambda^2},
/// which cancels the e^{-2 tau lambda^2} of the kernel exactly, so the
/// marginal is 1/pi for every x and every tau (eigenvalue-count conservation
/// under the bulk rescaling forces the same value). The tau -> 0 limit of the
/// kernel reproduces this directly.
pub fn marginal_density(_params: &KernelParams) -> f64 {
    std::f64::consts::FRAC_1_PI
}

/// The y-marginal truncated to |y| <= y_half: closed form via the error
/// function, int = (4 pi)^{-1} int_{-1}^{1} [erf((Y - 2 tau l)/sqrt(2 tau))
/// + erf((Y + 2 tau l)/sqrt(2 tau))] dl. Converges to 1/pi as Y -> infinity.
pub fn marginal_density_windowed(params: &KernelParams, y_half: f64) -> f64 {
    let tau = params.tau;
    let s = (2.0 * tau).sqrt();
    let integral = params.rule.integrate(|l| {
        libm::erf((y_half - 2.0 * tau * l) / s) + libm::erf((y_half + 2.0 * tau * l) / s)
    });
    integral / (4.0 * std::f64::consts::PI)
}

/// tau plus a set of evaluation points and the full matrix of kernel values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelGrid {
    pub tau: f64,
    pub points: Vec<Point>,
    pub values: Vec<Vec<Point>>,
}

impl KernelGrid {
    /// Evaluate the kernel on all pairs; the value matrix is Hermitian by
    /// construction and its diagonal is real and nonnegative.
    pub fn evaluate(params: &KernelParams, points: &[Complex64]) -> Result<Self, KernelError> {
        let matrix = kernel_matrix(params, points)?;
        let k = points.len();
        let values = (0..k)
            .map(|j| (0..k).map(|l| Point::from(matrix.get(j, l))).collect())
            .collect();
        Ok(Self {
            tau: params.tau,
            points: points.iter().map(|&z| Point::from(z)).collect(),
            values,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serialization cannot fail")
    }
}

/// rho_1 sampled on a rectangular grid, row-major over (x, y); used by the
/// CSV plotting output.
pub fn rho1_grid(params: &KernelParams, xs: &[f64], ys: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &x in xs {
        for &y in ys {
            out.push((x, y, rho_1(params, Complex64::new(x, y))));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianEigen;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Adaptive Simpson quadrature, the independent reference for the
    /// Gauss-Legendre path. Test-only.
    fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth > 50 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth + 1)
                    + rec(f, m, b, right, tol / 2.0, depth + 1)
            }
        }
        let whole = simpson(&f, a, b);
        rec(&f, a, b, whole, tol, 0)
    }

    fn complex_adaptive<F: Fn(f64) -> Complex64 + Copy>(f: F, tol: f64) -> Complex64 {
        let re = adaptive_simpson(move |x| f(x).re, -1.0, 1.0, tol);
        let im = adaptive_simpson(move |x| f(x).im, -1.0, 1.0, tol);
        Complex64::new(re, im)
    }

    fn kernel_oracle(tau: f64, z: Complex64, w: Complex64) -> Complex64 {
        let q = z - w.conj();
        let integral = complex_adaptive(
            move |l| Complex64::new(-2.0 * tau * l * l + l * q.im, -l * q.re).exp(),
            1e-14,
        );
        let pref = (2.0 * std::f64::consts::PI).powf(-1.5) / tau.sqrt()
            * (-(z.im * z.im + w.im * w.im) / (4.0 * tau)).exp();
        pref * integral
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(KernelParams::new(0.0), Err(KernelError::InvalidTau(_))));
        assert!(matches!(KernelParams::new(-1.0), Err(KernelError::InvalidTau(_))));
        assert!(matches!(
            KernelParams::with_order(1.0, 8),
            Err(KernelError::InvalidOrder(8))
        ));
    }

    #[test]
    fn hermiticity_and_shift_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..50 {
            let tau = 0.1 + 4.9 * rng.random::<f64>();
            let params = KernelParams::new(tau).unwrap();
            let z = c(4.0 * rng.random::<f64>() - 2.0, 4.0 * rng.random::<f64>() - 2.0);
            let w = c(4.0 * rng.random::<f64>() - 2.0, 4.0 * rng.random::<f64>() - 2.0);
            let k_zw = kernel(&params, z, w);
            let k_wz = kernel(&params, w, z);
            assert!((k_wz - k_zw.conj()).norm() <= 1e-13);

            let s = 3.0 * rng.random::<f64>() - 1.5;
            let shifted = kernel(&params, z + s, w + s);
            assert!((shifted - k_zw).norm() <= 1e-13);
        }
    }

    #[test]
    fn value_against_adaptive_oracle() {
        let params = KernelParams::new(1.0).unwrap();
        let got = kernel(&params, c(0.0, 0.0), c(0.0, 0.0));
        let want = kernel_oracle(1.0, c(0.0, 0.0), c(0.0, 0.0));
        assert!((got - want).norm() <= 1e-10, "{got} vs {want}");

        // a handful of generic points across tau
        for (tau, z, w) in [
            (0.25, c(0.7, 0.3), c(-0.2, -0.5)),
            (1.0, c(1.5, 1.0), c(0.5, 0.2)),
            (4.0, c(-2.0, 2.0), c(2.0, -1.0)),
        ] {
            let params = KernelParams::new(tau).unwrap();
            let got = kernel(&params, z, w);
            let want = kernel_oracle(tau, z, w);
            assert!((got - want).norm() <= 1e-10, "tau={tau}: {got} vs {want}");
        }
    }

    #[test]
    fn order_doubling_is_converged() {
        let base = KernelParams::new(0.5).unwrap();
        let fine = KernelParams::with_order(0.5, 128).unwrap();
        for (z, w) in [
            (c(0.0, 0.0), c(0.0, 0.0)),
            (c(2.5, 1.0), c(-2.5, -1.0)),
            (c(1.0, 2.0), c(0.0, 1.0)),
        ] {
            let a = kernel(&base, z, w);
            let b = kernel(&fine, z, w);
            assert!((a - b).norm() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn oscillatory_separation_uses_doubled_rule() {
        // |z - conj w| > 30 triggers doubling; compare against the adaptive oracle
        let params = KernelParams::new(1.0).unwrap();
        let z = c(20.0, 0.5);
        let w = c(-20.0, 0.4);
        let got = kernel(&params, z, w);
        let want = kernel_oracle(1.0, z, w);
        assert!((got - want).norm() <= 1e-12, "{got} vs {want}");
    }

    #[test]
    fn log_space_prefactor_matches_direct_product() {
        let params = KernelParams::new(0.3).unwrap();
        for (z, w) in [(c(0.5, 1.2), c(-0.3, 0.7)), (c(0.0, 2.5), c(0.0, -2.0))] {
            let direct = (2.0 * std::f64::consts::PI).powf(-1.5) / params.tau().sqrt()
                * (-(z.im * z.im + w.im * w.im) / (4.0 * params.tau())).exp()
                * oscillatory_integral(&params, z - w.conj());
            let got = kernel(&params, z, w);
            assert!(
                (got - direct).norm() <= 1e-12 * direct.norm().max(1e-300),
                "{got} vs {direct}"
            );
        }
    }

    #[test]
    fn huge_imaginary_parts_underflow_to_zero() {
        let params = KernelParams::new(0.01).unwrap();
        let v = kernel(&params, c(0.0, 60.0), c(0.0, -60.0));
        assert!(v.re.is_finite() && v.im.is_finite());
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rho1_positive_and_duplicates_vanish() {
        let params = KernelParams::new(1.0).unwrap();
        let z = c(0.5, 0.5);
        assert!(rho_k(&params, &[z]).unwrap() > 0.0);
        let dup = rho_k(&params, &[z, z]).unwrap();
        assert!(dup.abs() <= 1e-10);
    }

    #[test]
    fn rho_k_rejects_bad_cardinality() {
        let params = KernelParams::new(1.0).unwrap();
        assert!(matches!(
            rho_k(&params, &[]),
            Err(KernelError::UnsupportedOrder(0))
        ));
        let pts = vec![c(0.0, 0.0); 9];
        assert!(matches!(
            rho_k(&params, &pts),
            Err(KernelError::UnsupportedOrder(9))
        ));
    }

    #[test]
    fn fischer_inequality_for_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let params = KernelParams::new(1.0).unwrap();
        for _ in 0..40 {
            let z1 = c(10.0 * rng.random::<f64>() - 5.0, 6.0 * rng.random::<f64>() - 3.0);
            let z2 = c(10.0 * rng.random::<f64>() - 5.0, 6.0 * rng.random::<f64>() - 3.0);
            let r2 = rho_k(&params, &[z1, z2]).unwrap();
            let r1a = rho_k(&params, &[z1]).unwrap();
            let r1b = rho_k(&params, &[z2]).unwrap();
            assert!(r2 <= r1a * r1b + 1e-10);
        }
    }

    #[test]
    fn kernel_matrix_is_psd_on_random_configurations() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for &tau in &[0.25, 1.0, 4.0] {
            let params = KernelParams::new(tau).unwrap();
            for _ in 0..20 {
                let k = 2 + (rng.random::<u32>() % 3) as usize;
                let pts: Vec<Complex64> = (0..k)
                    .map(|_| {
                        c(
                            10.0 * rng.random::<f64>() - 5.0,
                            6.0 * rng.random::<f64>() - 3.0,
                        )
                    })
                    .collect();
                let matrix = kernel_matrix(&params, &pts).unwrap();
                let eig = HermitianEigen::new(&matrix).unwrap();
                assert!(eig.eigenvalues()[0] >= -1e-10);
                let det = rho_k(&params, &pts).unwrap();
                assert!(det >= -1e-10);
            }
        }
    }

    #[test]
    fn marginal_density_is_one_over_pi() {
        let params = KernelParams::new(1.0).unwrap();
        assert_abs_diff_eq!(
            marginal_density(&params),
            std::f64::consts::FRAC_1_PI,
            epsilon = 1e-16
        );
        // windowed form converges to 1/pi
        let wide = marginal_density_windowed(&params, 40.0);
        assert_abs_diff_eq!(wide, std::f64::consts::FRAC_1_PI, epsilon = 1e-14);
        // and the tau -> 0 limit of the windowed form is 1/pi as well
        let small = KernelParams::new(1e-8).unwrap();
        assert_abs_diff_eq!(
            marginal_density_windowed(&small, 1.0),
            std::f64::consts::FRAC_1_PI,
            epsilon = 1e-9
        );
    }

    #[test]
    fn windowed_marginal_matches_2d_quadrature() {
        // integrate K_tau(x + iy, x + iy) over y in [-8, 8] by adaptive Simpson
        let params = KernelParams::new(1.0).unwrap();
        for &x in &[0.0, 1.7] {
            let oracle = adaptive_simpson(
                move |y| kernel_oracle(1.0, c(x, y), c(x, y)).re,
                -8.0,
                8.0,
                1e-13,
            );
            let closed = marginal_density_windowed(&params, 8.0);
            assert!(
                (closed - oracle).abs() <= 1e-8,
                "x={x}: {closed} vs {oracle}"
            );
        }
    }

    #[test]
    fn kernel_grid_shape_and_hermiticity() {
        let params = KernelParams::new(0.5).unwrap();
        let pts = [c(0.0, 0.0), c(1.0, 0.5), c(-0.5, -0.2)];
        let grid = KernelGrid::evaluate(&params, &pts).unwrap();
        assert_eq!(grid.points.len(), 3);
        for j in 0..3 {
            assert_eq!(grid.values[j][j].im, 0.0);
            assert!(grid.values[j][j].re >= 0.0);
            for l in 0..3 {
                assert_abs_diff_eq!(grid.values[j][l].re, grid.values[l][j].re, epsilon = 1e-15);
                assert_abs_diff_eq!(grid.values[j][l].im, -grid.values[l][j].im, epsilon = 1e-15);
            }
        }
        let json = grid.to_json();
        assert!(json.contains("\"tau\""));
    }
}

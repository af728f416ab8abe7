//! 1-D reverse heat flow: the Ornstein-Uhlenbeck generator in Fokker-Planck
//! form, L f = (1/2) f'' + (x f)', whose stationary density is e^{-x^2}; the
//! truncated time-reversal operator T_n = sum_{m<n} (-1)^m (tL)^m / m!; the
//! exact OU semigroup e^{tL} via the Mehler transition kernel; and the
//! chi^2-type divergence int (g - f)^2 / g e^{-x^2} dx whose decay rate in t
//! (order 2n) is the point of the construction.
//!
//! Everything lives on a uniform grid of [-L, L]. The generator uses central
//! second-order differences with zero ghost values outside the grid (the
//! densities of interest carry mass < 1e-27 beyond |x| = 8); the semigroup is
//! an exact Gaussian-kernel quadrature rather than a finite-difference
//! exponential, so T_n and e^{tL} are numerically independent routes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HeatflowError {
    #[error("grid must have an integer number of steps: 2L/h = {0}")]
    NonIntegerGrid(f64),
    #[error("grid needs at least 5 points, got {0}")]
    TooFewPoints(usize),
    #[error("values contain a non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("grids are incompatible: {0}")]
    IncompatibleGrids(String),
    #[error("time must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("series order n must be at least 1")]
    InvalidOrder,
    #[error("domain too small: semigroup mass {leaked:.3e} would leave [-{l}, {l}]")]
    DomainTooSmall { leaked: f64, l: f64 },
    #[error("normalization requested for a density with nonpositive mass {0}")]
    NonPositiveMass(f64),
}

/// Density samples on the uniform grid x_k = -L + k h of [-L, L].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    half_width: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(half_width: f64, step: f64, values: Vec<f64>) -> Result<Self, HeatflowError> {
        let steps = 2.0 * half_width / step;
        if (steps - steps.round()).abs() > 1e-9 || !steps.is_finite() {
            return Err(HeatflowError::NonIntegerGrid(steps));
        }
        let n = steps.round() as usize + 1;
        if n < 5 {
            return Err(HeatflowError::TooFewPoints(n));
        }
        if values.len() != n {
            return Err(HeatflowError::IncompatibleGrids(format!(
                "expected {n} values, got {}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(HeatflowError::NonFinite(k));
        }
        Ok(Self {
            half_width,
            step,
            values,
        })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(
        half_width: f64,
        step: f64,
        mut f: F,
    ) -> Result<Self, HeatflowError> {
        let steps = 2.0 * half_width / step;
        if (steps - steps.round()).abs() > 1e-9 || !steps.is_finite() {
            return Err(HeatflowError::NonIntegerGrid(steps));
        }
        let n = steps.round() as usize + 1;
        let values = (0..n).map(|k| f(-half_width + k as f64 * step)).collect();
        Self::new(half_width, step, values)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.step
    }

    /// Finite differencing at this resolution is unreliable for h > 1/16.
    pub fn is_coarse(&self) -> bool {
        self.step > 1.0 / 16.0
    }

    /// Trapezoidal integral of the samples.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.step)
    }

    /// Trapezoidal k-th moment.
    pub fn moment(&self, k: u32) -> f64 {
        let weighted: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.x(i).powi(k as i32) * v)
            .collect();
        trapezoid(&weighted, self.step)
    }

    /// Rescale to unit mass.
    pub fn normalized(mut self) -> Result<Self, HeatflowError> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(HeatflowError::NonPositiveMass(m));
        }
        for v in self.values.iter_mut() {
            *v /= m;
        }
        Ok(self)
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    fn same_grid(&self, other: &Self) -> Result<(), HeatflowError> {
        if self.half_width != other.half_width
            || self.step != other.step
            || self.values.len() != other.values.len()
        {
            return Err(HeatflowError::IncompatibleGrids(format!(
                "L {} vs {}, h {} vs {}",
                self.half_width, other.half_width, self.step, other.step
            )));
        }
        Ok(())
    }
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    step * (0.5 * values[0] + inner + 0.5 * values[n - 1])
}

/// L f = (1/2) f'' + (x f)' by central differences (ghost values zero).
pub fn ou_generator_apply(f: &GridDensity) -> GridDensity {
    let n = f.len();
    let h = f.step;
    let get = |k: isize| -> f64 {
        if k < 0 || k as usize >= n {
            0.0
        } else {
            f.values[k as usize]
        }
    };
    let values = (0..n as isize)
        .map(|k| {
            let second = (get(k + 1) - 2.0 * get(k) + get(k - 1)) / (h * h);
            let xf_plus = (f.half_width * -1.0 + (k + 1) as f64 * h) * get(k + 1);
            let xf_minus = (-f.half_width + (k - 1) as f64 * h) * get(k - 1);
            0.5 * second + (xf_plus - xf_minus) / (2.0 * h)
        })
        .collect();
    GridDensity {
        half_width: f.half_width,
        step: h,
        values,
    }
}

/// The truncated reverse flow T_n f = sum_{m=0}^{n-1} (-1)^m (t L)^m f / m!,
/// accumulated Horner-style: u <- f - (t/m) L u.
#[derive(Debug, Clone)]
pub struct TnOutput {
    pub density: GridDensity,
    /// Set when t < 10 h^2, where finite-difference noise is comparable to
    /// the t L f signal.
    pub noise_warning: bool,
}

pub fn reverse_approx_tn(f: &GridDensity, t: f64, n: usize) -> Result<TnOutput, HeatflowError> {
    if n < 1 {
        return Err(HeatflowError::InvalidOrder);
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(HeatflowError::InvalidTime(t));
    }
    let mut u = f.clone();
    for m in (1..n).rev() {
        let lu = ou_generator_apply(&u);
        let coeff = -t / m as f64;
        u = GridDensity {
            half_width: f.half_width,
            step: f.step,
            values: f
                .values
                .iter()
                .zip(&lu.values)
                .map(|(&fv, &lv)| fv + coeff * lv)
                .collect(),
        };
    }
    Ok(TnOutput {
        noise_warning: n > 1 && t > 0.0 && t < 10.0 * f.step * f.step,
        density: u,
    })
}

#[derive(Debug, Clone)]
pub struct SemigroupOutput {
    pub density: GridDensity,
    /// Trapezoidal mass before the final renormalization; should be 1 to 1e-8
    /// for a normalized input.
    pub mass_before_renormalization: f64,
}

/// e^{tL} f by the exact OU transition kernel (Mehler): X_t | x0 is Gaussian
/// with mean e^{-t} x0 and variance (1 - e^{-2t})/2. The result is
/// renormalized to unit mass; mass escaping [-L, L] beyond 1e-8 is an error.
pub fn semigroup_apply(f: &GridDensity, t: f64) -> Result<SemigroupOutput, HeatflowError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(HeatflowError::InvalidTime(t));
    }
    let n = f.len();
    let h = f.step;
    let decay = (-t).exp();
    let var = 0.5 * (1.0 - (-2.0 * t).exp());
    let sigma = var.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();

    // trapezoid weights over the source variable
    let weight = |k: usize| -> f64 {
        if k == 0 || k == n - 1 {
            0.5 * h
        } else {
            h
        }
    };

    // leaked mass: int f(x0) P(|X_t| > L | x0) dx0
    let mut leaked = 0.0;
    for k in 0..n {
        let mean = decay * f.x(k);
        let tail = 0.5
            * (libm::erfc((f.half_width - mean) / (std::f64::consts::SQRT_2 * sigma))
                + libm::erfc((f.half_width + mean) / (std::f64::consts::SQRT_2 * sigma)));
        leaked += weight(k) * f.values[k] * tail;
    }
    if leaked > 1e-8 {
        return Err(HeatflowError::DomainTooSmall {
            leaked,
            l: f.half_width,
        });
    }

    let mut values = vec![0.0; n];
    for (k, out) in values.iter_mut().enumerate() {
        let x = f.x(k);
        let mut acc = 0.0;
        for j in 0..n {
            let mean = decay * f.x(j);
            let d = (x - mean) / sigma;
            acc += weight(j) * f.values[j] * (-0.5 * d * d).exp();
        }
        *out = acc * norm;
    }
    let raw = GridDensity {
        half_width: f.half_width,
        step: h,
        values,
    };
    let mass = raw.mass();
    Ok(SemigroupOutput {
        density: raw.normalized()?,
        mass_before_renormalization: mass,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Chi2Outcome {
    pub value: f64,
    /// g dipped nonpositive inside the effective support of f; the value was
    /// computed with the 1e-12 floor.
    pub negative_support: bool,
}

const CHI2_FLOOR: f64 = 1e-12;

/// int (g - f)^2 / g e^{-x^2} dx by the trapezoid rule, with g floored at
/// 1e-12. Nonpositive g inside the support of f is reported, not fatal.
pub fn chi2_divergence(g: &GridDensity, f: &GridDensity) -> Result<Chi2Outcome, HeatflowError> {
    g.same_grid(f)?;
    let f_peak = f.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let support_floor = 1e-12 * f_peak;
    let mut negative_support = false;
    let integrand: Vec<f64> = (0..f.len())
        .map(|k| {
            let x = f.x(k);
            let gv = g.values[k];
            if gv <= 0.0 && f.values[k] > support_floor {
                negative_support = true;
            }
            let denom = gv.max(CHI2_FLOOR);
            let d = gv - f.values[k];
            d * d / denom * (-x * x).exp()
        })
        .collect();
    Ok(Chi2Outcome {
        value: trapezoid(&integrand, f.step),
        negative_support,
    })
}

/// chi^2(e^{tL} T_n f, f) for each requested t.
pub fn divergence_scaling(
    f: &GridDensity,
    n: usize,
    ts: &[f64],
) -> Result<Vec<(f64, f64)>, HeatflowError> {
    ts.iter()
        .map(|&t| {
            let tn = reverse_approx_tn(f, t, n)?;
            let flowed = semigroup_apply(&tn.density, t)?;
            let chi2 = chi2_divergence(&flowed.density, f)?;
            Ok((t, chi2.value))
        })
        .collect()
}

/// Least-squares slope of log(d) against log(t).
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, d)| d.max(1e-300).ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}

/// The default demonstration density: the shifted Gaussian e^{-(x-mu)^2} of
/// the smooth atom family (V = -2 mu x + mu^2), normalized on the grid.
/// Mode-1 dominated, so the order-2n decay is visible on coarse t grids.
pub fn shifted_gaussian(half_width: f64, step: f64, mu: f64) -> Result<GridDensity, HeatflowError> {
    GridDensity::from_fn(half_width, step, |x| {
        (-(x - mu) * (x - mu)).exp() / std::f64::consts::PI.sqrt()
    })?
    .normalized()
}

/// The stationary density e^{-x^2}/sqrt(pi) sampled on the grid.
pub fn stationary_density(half_width: f64, step: f64) -> Result<GridDensity, HeatflowError> {
    GridDensity::from_fn(half_width, step, |x| {
        (-x * x).exp() / std::f64::consts::PI.sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const L: f64 = 8.0;
    const H: f64 = 1.0 / 128.0;

    #[test]
    fn grid_construction_checks() {
        assert!(GridDensity::from_fn(8.0, 1.0 / 128.0, |_| 1.0).is_ok());
        assert!(matches!(
            GridDensity::from_fn(8.0, 0.3, |_| 1.0),
            Err(HeatflowError::NonIntegerGrid(_))
        ));
        assert!(matches!(
            GridDensity::new(8.0, 1.0 / 128.0, vec![1.0; 7]),
            Err(HeatflowError::IncompatibleGrids(_))
        ));
        let coarse = GridDensity::from_fn(8.0, 0.125, |_| 1.0).unwrap();
        assert!(coarse.is_coarse());
    }

    #[test]
    fn generator_annihilates_stationary_density() {
        let f = stationary_density(L, H).unwrap();
        let lf = ou_generator_apply(&f);
        let sup = lf.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(sup <= 1e-3, "sup |L f| = {sup}");
    }

    #[test]
    fn generator_matches_symbolic_derivative() {
        // f = N(0, 1): L f = (1 - x^2)/2 f
        let f = GridDensity::from_fn(L, H, |x| {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .unwrap();
        let lf = ou_generator_apply(&f);
        for k in 0..f.len() {
            let x = f.x(k);
            let expect = 0.5 * (1.0 - x * x) * f.values()[k];
            assert!(
                (lf.values()[k] - expect).abs() <= 2e-4,
                "x = {x}: {} vs {expect}",
                lf.values()[k]
            );
        }
    }

    #[test]
    fn generator_is_linear() {
        let f = stationary_density(L, H).unwrap();
        let g = shifted_gaussian(L, H, 0.7).unwrap();
        let (a, b) = (1.7, -0.4);
        let combo = GridDensity::new(
            L,
            H,
            f.values()
                .iter()
                .zip(g.values())
                .map(|(&fv, &gv)| a * fv + b * gv)
                .collect(),
        )
        .unwrap();
        let lhs = ou_generator_apply(&combo);
        let lf = ou_generator_apply(&f);
        let lg = ou_generator_apply(&g);
        for k in 0..f.len() {
            let rhs = a * lf.values()[k] + b * lg.values()[k];
            assert!((lhs.values()[k] - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn tn_trivial_cases() {
        let f = shifted_gaussian(L, H, 0.3).unwrap();
        let t1 = reverse_approx_tn(&f, 0.17, 1).unwrap();
        assert_eq!(t1.density.values(), f.values());

        for n in 1..=3 {
            let t0 = reverse_approx_tn(&f, 0.0, n).unwrap();
            assert_eq!(t0.density.values(), f.values());
        }

        assert!(matches!(
            reverse_approx_tn(&f, 0.1, 0),
            Err(HeatflowError::InvalidOrder)
        ));
    }

    #[test]
    fn tn_second_order_matches_symbolic() {
        // n = 2 on the variance-1 Gaussian: T2 f = f - t L f = f (1 - t(1-x^2)/2)
        let f = GridDensity::from_fn(L, H, |x| {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .unwrap();
        let t = 0.12;
        let t2 = reverse_approx_tn(&f, t, 2).unwrap();
        for k in 0..f.len() {
            let x = f.x(k);
            let expect = f.values()[k] * (1.0 - 0.5 * t * (1.0 - x * x));
            assert!(
                (t2.density.values()[k] - expect).abs() <= 3e-5,
                "x = {x}"
            );
        }
    }

    #[test]
    fn tn_noise_warning_fires_for_tiny_t() {
        let f = shifted_gaussian(L, H, 0.3).unwrap();
        let out = reverse_approx_tn(&f, 1e-6, 2).unwrap();
        assert!(out.noise_warning);
        let out = reverse_approx_tn(&f, 0.05, 2).unwrap();
        assert!(!out.noise_warning);
    }

    #[test]
    fn semigroup_fixes_stationary_density() {
        let f = stationary_density(L, H).unwrap().normalized().unwrap();
        let out = semigroup_apply(&f, 0.3).unwrap();
        assert!(out.density.sup_distance(&f) <= 1e-6);
    }

    #[test]
    fn semigroup_moments_follow_mehler_formula() {
        // narrow Gaussian at x0 = 1: mean e^{-t} x0, var e^{-2t} s^2 + (1-e^{-2t})/2
        let x0 = 1.0;
        let s2 = 0.04;
        let f = GridDensity::from_fn(L, H, |x| {
            (-(x - x0) * (x - x0) / (2.0 * s2)).exp()
                / (2.0 * std::f64::consts::PI * s2).sqrt()
        })
        .unwrap()
        .normalized()
        .unwrap();
        let t = 0.4;
        let out = semigroup_apply(&f, t).unwrap().density;
        let mean = out.moment(1);
        let var = out.moment(2) - mean * mean;
        let decay = (-t).exp();
        assert_abs_diff_eq!(mean, decay * x0, epsilon = 1e-6);
        let expect_var = decay * decay * s2 + 0.5 * (1.0 - decay * decay);
        assert_abs_diff_eq!(var, expect_var, epsilon = 1e-6);
    }

    #[test]
    fn semigroup_mass_conservation_before_renormalization() {
        let f = shifted_gaussian(L, H, 0.3).unwrap();
        let out = semigroup_apply(&f, 0.2).unwrap();
        assert!((out.mass_before_renormalization - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn semigroup_composition_property() {
        let f = shifted_gaussian(L, H, 0.5).unwrap();
        let (s, t) = (0.15, 0.25);
        let two_step = semigroup_apply(&semigroup_apply(&f, t).unwrap().density, s)
            .unwrap()
            .density;
        let one_step = semigroup_apply(&f, s + t).unwrap().density;
        assert!(two_step.sup_distance(&one_step) <= 1e-6);
    }

    #[test]
    fn semigroup_detects_leaking_domain() {
        // a density pushed against the boundary of a small domain leaks
        let f = GridDensity::from_fn(2.0, 1.0 / 64.0, |x| (-(x - 1.8) * (x - 1.8) / 0.02).exp())
            .unwrap()
            .normalized()
            .unwrap();
        assert!(matches!(
            semigroup_apply(&f, 0.5),
            Err(HeatflowError::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn chi2_trivial_and_scaled() {
        let f = stationary_density(L, H).unwrap().normalized().unwrap();
        let same = chi2_divergence(&f, &f).unwrap();
        assert_eq!(same.value, 0.0);
        assert!(!same.negative_support);

        let delta = 0.01;
        let g = GridDensity::new(L, H, f.values().iter().map(|&v| (1.0 + delta) * v).collect())
            .unwrap();
        let got = chi2_divergence(&g, &f).unwrap();
        // closed form: delta^2/(1+delta) * int f e^{-x^2} dx = delta^2/((1+delta) sqrt 2)
        let expect = delta * delta / ((1.0 + delta) * 2.0_f64.sqrt());
        assert_abs_diff_eq!(got.value, expect, epsilon = 1e-9);
    }

    #[test]
    fn chi2_reports_negative_density() {
        let f = stationary_density(L, H).unwrap().normalized().unwrap();
        let mut vals = f.values().to_vec();
        let mid = vals.len() / 2;
        vals[mid] = -0.1;
        let g = GridDensity::new(L, H, vals).unwrap();
        let out = chi2_divergence(&g, &f).unwrap();
        assert!(out.negative_support);
        assert!(out.value.is_finite());
    }

    #[test]
    fn divergence_scaling_orders() {
        let f = shifted_gaussian(L, H, 0.3).unwrap();
        let ts = [0.2, 0.1, 0.05];
        for (n, floor) in [(1usize, 1.7), (2usize, 3.7)] {
            let pts = divergence_scaling(&f, n, &ts).unwrap();
            let slope = fit_loglog_slope(&pts);
            assert!(
                slope >= floor,
                "n = {n}: slope {slope} < {floor} ({pts:?})"
            );
        }
    }

    #[test]
    fn refinement_convergence() {
        // successive grid halvings shrink the change in the reported divergence
        let scaling_at = |h: f64| -> f64 {
            let f = shifted_gaussian(L, h, 0.3).unwrap();
            divergence_scaling(&f, 2, &[0.1]).unwrap()[0].1
        };
        let d1 = scaling_at(1.0 / 32.0);
        let d2 = scaling_at(1.0 / 64.0);
        let d3 = scaling_at(1.0 / 128.0);
        let first = (d1 - d2).abs();
        let second = (d2 - d3).abs();
        assert!(
            second <= first / 2.0,
            "differences not shrinking: {first} -> {second}"
        );
    }
}

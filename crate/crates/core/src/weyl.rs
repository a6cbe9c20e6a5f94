//! The Weyl measure `dm_g` on eigenvalue angles of `USp(2g)` and the trace
//! densities `F_g`, `H_g` obtained by integrating it over level sets of
//! `w₁ = Σ 2cos θ_j`.
//!
//! Two coordinate systems are used. Moments over the whole torus are taken
//! in angles `θ ∈ [0, π]^g`, where every integrand is a trigonometric
//! polynomial and the equal-weight trapezoid rule is exact once it has
//! enough nodes. Level-set integrals are taken in `x_j = 2cos θ_j`, where
//!
//! ```text
//! dm_g = 1/(g! π^g 2^g) ∏_{i<j} (x_i − x_j)² ∏_j √(4 − x_j²) dx
//! ```
//!
//! and `F_g(τ)` is the integral of that density over `x₂, …, x_g` with
//! `x₁ = τ − Σ_{j≥2} x_j`. The two innermost square roots are handled by a
//! Chebyshev substitution that absorbs both edge singularities; the outer
//! variables are integrated panel-by-panel between the points where the
//! remaining slice function has kinks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiplicities;
use crate::quadrature::{trapezoid_0_pi, GaussLegendre};
use crate::scalar::Real;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Density of `dm_g` with respect to `dθ₁…dθ_g` on `[0, π]^g`.
pub fn weyl_density<T: Real>(theta: &[T]) -> T {
    let g = theta.len();
    let two = T::lit(2.0);
    let x: Vec<T> = theta.iter().map(|t| two * t.cos()).collect();
    let mut d = T::one();
    for i in 0..g {
        for j in i + 1..g {
            let diff = x[i] - x[j];
            d *= diff * diff;
        }
        let s = theta[i].sin();
        d *= two * s * s;
    }
    d / T::lit(factorial(g) * std::f64::consts::PI.powi(g as i32))
}

/// `w_k = Σ_j 2cos(kθ_j)` for `k = 0..=k_max`, given `x_j = 2cos θ_j`.
pub fn power_sums<T: Real>(x: &[T], k_max: usize) -> Vec<T> {
    let mut w = vec![T::zero(); k_max + 1];
    for &xj in x {
        // 2cos(kθ) satisfies v_{k+1} = x v_k − v_{k−1}
        let mut prev = T::lit(2.0);
        let mut cur = xj;
        w[0] += prev;
        if k_max >= 1 {
            w[1] += cur;
        }
        for wk in w.iter_mut().skip(2) {
            let next = xj * cur - prev;
            prev = cur;
            cur = next;
            *wk += cur;
        }
    }
    w
}

/// One monomial `coeff · ∏ w_k^{e_k}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSumTerm {
    pub coeff: f64,
    /// `(k, e_k)` pairs with `k ≥ 1`.
    pub powers: Vec<(usize, u32)>,
}

/// A polynomial in the power sums `w₁, w₂, …`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSumPolynomial {
    pub terms: Vec<PowerSumTerm>,
}

impl PowerSumPolynomial {
    /// `(1/6)w₁³ − (1/2)w₁w₂ + (1/3)w₃ − w₁`, the character of `V_{(1,1,1)}`.
    pub fn s111() -> Self {
        let t = |coeff: f64, powers: Vec<(usize, u32)>| PowerSumTerm { coeff, powers };
        PowerSumPolynomial {
            terms: vec![
                t(1.0 / 6.0, vec![(1, 3)]),
                t(-0.5, vec![(1, 1), (2, 1)]),
                t(1.0 / 3.0, vec![(3, 1)]),
                t(-1.0, vec![(1, 1)]),
            ],
        }
    }

    pub fn max_k(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.powers.iter().map(|p| p.0))
            .max()
            .unwrap_or(0)
    }

    /// Degree as a trigonometric polynomial in a single angle.
    pub fn trig_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.powers.iter().map(|&(k, e)| k * e as usize).sum::<usize>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval<T: Real>(&self, w: &[T]) -> T {
        let mut acc = T::zero();
        for term in &self.terms {
            let mut v = T::lit(term.coeff);
            for &(k, e) in &term.powers {
                v *= w[k].powi(e as i32);
            }
            acc += v;
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum WeylIntegrand {
    ConstantOne,
    S111Combination,
    Custom(PowerSumPolynomial),
}

impl WeylIntegrand {
    /// Evaluates at eigenvalue coordinates `x_j = 2cos θ_j`.
    pub fn eval_x<T: Real>(&self, x: &[T]) -> T {
        match self {
            WeylIntegrand::ConstantOne => T::one(),
            WeylIntegrand::S111Combination => s111_x(x),
            WeylIntegrand::Custom(p) => p.eval(&power_sums(x, p.max_k())),
        }
    }

    fn trig_degree(&self) -> usize {
        match self {
            WeylIntegrand::ConstantOne => 0,
            WeylIntegrand::S111Combination => 3,
            WeylIntegrand::Custom(p) => p.trig_degree(),
        }
    }
}

fn s111_x<T: Real>(x: &[T]) -> T {
    let mut w1 = T::zero();
    let mut w2 = T::zero();
    let mut w3 = T::zero();
    for &xi in x {
        w1 += xi;
        w2 += xi * xi - T::lit(2.0);
        w3 += xi * xi * xi - T::lit(3.0) * xi;
    }
    w1 * w1 * w1 / T::lit(6.0) - w1 * w2 / T::lit(2.0) + w3 / T::lit(3.0) - w1
}

fn vandermonde_sq<T: Real>(x: &[T]) -> T {
    let mut d = T::one();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let diff = x[i] - x[j];
            d *= diff * diff;
        }
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TorusRule {
    /// Equal weights on `[0, π]` including both endpoints.
    Trapezoid,
    GaussLegendre,
}

#[derive(Clone, Debug)]
pub struct MomentConfig {
    pub max_g: usize,
    pub max_n: usize,
    /// Ceiling on nodes per axis.
    pub max_points: usize,
    pub rule: TorusRule,
    /// Absolute error target.
    pub target: f64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig {
            max_g: 4,
            max_n: 64,
            max_points: 256,
            rule: TorusRule::Trapezoid,
            target: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub points: usize,
}

fn torus_sum<T: Real>(g: usize, n: usize, integrand: &WeylIntegrand, nodes: &[T], weights: &[T]) -> (T, T) {
    let two = T::lit(2.0);
    let x: Vec<T> = nodes.iter().map(|&t| two * t.cos()).collect();
    let base: Vec<T> = nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| {
            let s = t.sin();
            w * two * s * s
        })
        .collect();
    let m = nodes.len();
    let norm = T::lit(factorial(g) * std::f64::consts::PI.powi(g as i32));
    // partial sums per leading index keep the reduction order fixed
    let partial: Vec<(T, T)> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; g];
            idx[0] = i0;
            let mut xs = vec![T::zero(); g];
            let mut sum = T::zero();
            let mut abs = T::zero();
            loop {
                let mut w = T::one();
                for (k, &i) in idx.iter().enumerate() {
                    xs[k] = x[i];
                    w *= base[i];
                }
                if w != T::zero() {
                    let w1: T = xs.iter().fold(T::zero(), |a, &b| a + b);
                    let v = w * vandermonde_sq(&xs) * w1.powi(n as i32) * integrand.eval_x(&xs);
                    sum += v;
                    abs += v.abs();
                }
                // odometer over indices 1..g
                let mut k = g;
                loop {
                    if k == 1 {
                        return (sum, abs);
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < m {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();
    let (s, a) = partial
        .into_iter()
        .fold((T::zero(), T::zero()), |(s, a), (ps, pa)| (s + ps, a + pa));
    (s / norm, a / norm)
}

fn torus_rule<T: Real>(rule: TorusRule, n: usize) -> (Vec<T>, Vec<T>) {
    match rule {
        TorusRule::Trapezoid => trapezoid_0_pi(n),
        TorusRule::GaussLegendre => {
            let gl = GaussLegendre::<T>::new(n);
            let half = T::PI() / T::lit(2.0);
            let nodes = gl.nodes.iter().map(|&x| half * (x + T::one())).collect();
            let weights = gl.weights.iter().map(|&w| w * half).collect();
            (nodes, weights)
        }
    }
}

/// `∫ w₁ⁿ · integrand dm_g` by tensor-grid quadrature over `[0, π]^g`.
///
/// The grid is doubled until two successive grids agree to the configured
/// target; the returned error adds a floating point rounding bound to that
/// difference.
pub fn moment_by_quadrature<T: Real>(
    g: usize,
    n: usize,
    integrand: &WeylIntegrand,
    config: &MomentConfig,
) -> Result<Estimate<T>> {
    if g == 0 || g > config.max_g {
        return Err(Error::GenusOutOfRange {
            g,
            reason: "moment quadrature supports 1 <= g <= max_g",
        });
    }
    if n > config.max_n {
        return Err(Error::InvalidArgument(format!(
            "moment order {n} exceeds configured maximum {}",
            config.max_n
        )));
    }
    // per-angle trigonometric degree of the full integrand
    let degree = n + 2 * (g - 1) + 2 + integrand.trig_degree();
    let mut points = (degree / 2 + 2).max(4);
    let (nodes, weights) = torus_rule::<T>(config.rule, points);
    let (mut prev, _) = torus_sum(g, n, integrand, &nodes, &weights);
    loop {
        let next_points = points * 2;
        if next_points > config.max_points {
            return Err(Error::QuadratureTarget {
                target: config.target,
                estimate: f64::NAN,
                points,
            });
        }
        let (nodes, weights) = torus_rule::<T>(config.rule, next_points);
        let (value, abs) = torus_sum(g, n, integrand, &nodes, &weights);
        let rounding = abs * T::epsilon() * T::lit(64.0 * (g as f64 + n as f64 + 1.0));
        let error = (value - prev).abs() + rounding;
        if error.to_f64_lossy() <= config.target {
            return Ok(Estimate {
                value,
                error,
                points: next_points,
            });
        }
        if next_points * 2 > config.max_points {
            return Err(Error::QuadratureTarget {
                target: config.target,
                estimate: error.to_f64_lossy(),
                points: next_points,
            });
        }
        prev = value;
        points = next_points;
    }
}

/// Configuration of the level-set quadrature.
#[derive(Clone, Debug)]
pub struct DensityConfig {
    /// Gauss–Legendre nodes per panel for each outer angle.
    pub panel_points: usize,
    /// Trapezoid intervals for the innermost Chebyshev angle.
    pub inner_points: usize,
    /// Largest genus served by deterministic quadrature.
    pub max_g: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            panel_points: 64,
            inner_points: 128,
            max_g: 4,
        }
    }
}

impl DensityConfig {
    fn coarse(&self) -> Self {
        DensityConfig {
            panel_points: (self.panel_points / 2).max(2),
            inner_points: (self.inner_points / 2).max(2),
            max_g: self.max_g,
        }
    }
}

/// Evaluates `F_g(τ)` and `H_g(τ)` pointwise.
pub struct SliceEvaluator<T> {
    g: usize,
    panel: GaussLegendre<T>,
    /// `(cos φ, sin² φ · weight)` for the inner trapezoid rule on `[0, π]`.
    inner: Vec<(T, T)>,
    norm: T,
}

impl<T: Real> SliceEvaluator<T> {
    pub fn new(g: usize, config: &DensityConfig) -> Result<Self> {
        if g == 0 || g > config.max_g {
            return Err(Error::GenusOutOfRange {
                g,
                reason: "level-set quadrature supports 1 <= g <= max_g",
            });
        }
        let (nodes, weights) = trapezoid_0_pi::<T>(config.inner_points);
        let inner = nodes
            .iter()
            .zip(&weights)
            .filter_map(|(&phi, &w)| {
                let s = phi.sin();
                let sw = s * s * w;
                (sw > T::zero()).then_some((phi.cos(), sw))
            })
            .collect();
        let norm = T::one()
            / T::lit(factorial(g) * std::f64::consts::PI.powi(g as i32) * 2f64.powi(g as i32));
        Ok(SliceEvaluator {
            g,
            panel: GaussLegendre::new(config.panel_points),
            inner,
            norm,
        })
    }

    pub fn g(&self) -> usize {
        self.g
    }

    /// `(F_g(τ), H_g(τ))`.
    pub fn eval(&self, tau: T) -> (T, T) {
        let g = self.g;
        if tau.abs() >= T::lit(2.0 * g as f64) {
            return (T::zero(), T::zero());
        }
        let mut xs = vec![T::zero(); g];
        if g == 1 {
            let s = (T::lit(4.0) - tau * tau).max(T::zero()).sqrt();
            xs[0] = tau;
            let f = self.norm * s;
            return (f, f * s111_x(&xs));
        }
        let (f, h) = self.level(g, tau, T::one(), &mut xs);
        (f * self.norm, h * self.norm)
    }

    /// Integrates over `x₂..x_m` (with `x₁ = r − Σ`) for the `m` leading
    /// coordinates, the trailing ones already fixed in `xs`.
    fn level(&self, m: usize, r: T, weight: T, xs: &mut [T]) -> (T, T) {
        let two = T::lit(2.0);
        if m == 2 {
            return self.inner_pair(r, weight, xs);
        }
        let reach = two * T::lit((m - 1) as f64);
        let lo = (r - reach).max(-two);
        let hi = (r + reach).min(two);
        if lo >= hi {
            return (T::zero(), T::zero());
        }
        let mut cuts = vec![lo, hi];
        for i in 1..m - 1 {
            let c = r - reach + T::lit(4.0 * i as f64);
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut"));
        let mut f = T::zero();
        let mut h = T::zero();
        for pair in cuts.windows(2) {
            // x = 2cos θ reverses orientation
            let th_a = (pair[1] / two).max(-T::one()).min(T::one()).acos();
            let th_b = (pair[0] / two).max(-T::one()).min(T::one()).acos();
            if th_b <= th_a {
                continue;
            }
            for (theta, w) in self.panel.clustered_points(th_a, th_b) {
                let s = theta.sin();
                let x = two * theta.cos();
                xs[m - 1] = x;
                let (df, dh) = self.level(m - 1, r - x, weight * w * T::lit(4.0) * s * s, xs);
                f += df;
                h += dh;
            }
        }
        (f, h)
    }

    fn inner_pair(&self, r: T, weight: T, xs: &mut [T]) -> (T, T) {
        let two = T::lit(2.0);
        let lo = (-two).max(r - two);
        let hi = two.min(r + two);
        if lo >= hi {
            return (T::zero(), T::zero());
        }
        let lo_far = (-two).min(r - two);
        let hi_far = two.max(r + two);
        let c = (lo + hi) / two;
        let d = (hi - lo) / two;
        let mut f = T::zero();
        let mut h = T::zero();
        for &(cos_phi, sw) in &self.inner {
            let x2 = c + d * cos_phi;
            let x1 = r - x2;
            let far = ((x2 - lo_far) * (hi_far - x2)).max(T::zero()).sqrt();
            xs[0] = x1;
            xs[1] = x2;
            let v = sw * far * vandermonde_sq(xs);
            f += v;
            h += v * s111_x(xs);
        }
        let scale = weight * d * d;
        (f * scale, h * scale)
    }

    /// `∫_a^b F_g(τ) dτ`, split at the kinks `τ = 2g − 4k`.
    pub fn integrate_f(&self, a: T, b: T, rule: &GaussLegendre<T>) -> T {
        let edge = T::lit(2.0 * self.g as f64);
        let a = a.max(-edge);
        let b = b.min(edge);
        if a >= b {
            return T::zero();
        }
        let mut cuts = vec![a, b];
        for k in 1..self.g {
            let c = edge - T::lit(4.0 * k as f64);
            if c > a && c < b {
                cuts.push(c);
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let mut total = T::zero();
        for pair in cuts.windows(2) {
            let points: Vec<(T, T)> = rule.clustered_points(pair[0], pair[1]).collect();
            let parts: Vec<T> = points.par_iter().map(|&(t, w)| w * self.eval(t).0).collect();
            total += parts.into_iter().fold(T::zero(), |s, v| s + v);
        }
        total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DensityMethod {
    Quadrature,
    /// Importance-weighted sampling; lower precision.
    MonteCarlo,
}

/// Values of `F_g` and `H_g` on a symmetric grid `τ = k·h`.
#[derive(Clone, Debug, Serialize)]
pub struct DensitySample<T> {
    pub g: usize,
    pub grid_step: T,
    pub grid: Vec<T>,
    pub f_values: Vec<T>,
    pub h_values: Vec<T>,
    pub f_errors: Vec<T>,
    pub h_errors: Vec<T>,
    pub method: DensityMethod,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityInvariants {
    pub trapezoid_mass: f64,
    pub min_f: f64,
    pub max_f_asymmetry: f64,
    pub max_h_symmetry: f64,
    pub holds: bool,
}

impl<T: Real> DensitySample<T> {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn max_abs_error(&self) -> T {
        self.f_errors
            .iter()
            .chain(&self.h_errors)
            .fold(T::zero(), |m, &e| m.max(e))
    }

    /// Trapezoid sum of `F` over the grid.
    pub fn trapezoid_mass(&self) -> T {
        self.f_moment(0)
    }

    /// `∫ τⁿ F(τ) dτ` by the trapezoid rule on the grid.
    pub fn f_moment(&self, n: u32) -> T {
        self.moment(&self.f_values, n)
    }

    pub fn h_moment(&self, n: u32) -> T {
        self.moment(&self.h_values, n)
    }

    fn moment(&self, values: &[T], n: u32) -> T {
        // endpoints of the symmetric grid carry half weight; F and H vanish
        // at ±2g so that only matters if the grid stops short of the edge
        let last = values.len().saturating_sub(1);
        let mut acc = T::zero();
        for (i, (&t, &v)) in self.grid.iter().zip(values).enumerate() {
            let w = if i == 0 || i == last { T::lit(0.5) } else { T::one() };
            acc += w * t.powi(n as i32) * v;
        }
        acc * self.grid_step
    }

    fn interpolate(&self, values: &[T], tau: T) -> T {
        if self.grid.is_empty() {
            return T::zero();
        }
        let first = self.grid[0];
        let pos = (tau - first) / self.grid_step;
        if pos < T::zero() || pos > T::lit((self.grid.len() - 1) as f64) {
            return T::zero();
        }
        let i = pos.floor().to_usize().unwrap_or(0).min(self.grid.len() - 1);
        if i + 1 >= self.grid.len() {
            return values[i];
        }
        let frac = pos - T::lit(i as f64);
        values[i] * (T::one() - frac) + values[i + 1] * frac
    }

    /// Linear interpolation of `F_g`; zero outside the grid.
    pub fn interpolate_f(&self, tau: T) -> T {
        self.interpolate(&self.f_values, tau)
    }

    pub fn interpolate_h(&self, tau: T) -> T {
        self.interpolate(&self.h_values, tau)
    }

    pub fn check_invariants(&self, tol: T) -> DensityInvariants {
        let n = self.grid.len();
        let mut min_f = T::infinity();
        let mut asym = T::zero();
        let mut sym = T::zero();
        for i in 0..n {
            let j = n - 1 - i;
            min_f = min_f.min(self.f_values[i]);
            asym = asym.max((self.f_values[i] - self.f_values[j]).abs());
            sym = sym.max((self.h_values[i] + self.h_values[j]).abs());
        }
        let mass = self.trapezoid_mass();
        let holds = min_f >= T::zero()
            && (mass - T::one()).abs() <= tol
            && asym <= tol
            && sym <= tol;
        DensityInvariants {
            trapezoid_mass: mass.to_f64_lossy(),
            min_f: min_f.to_f64_lossy(),
            max_f_asymmetry: asym.to_f64_lossy(),
            max_h_symmetry: sym.to_f64_lossy(),
            holds,
        }
    }
}

/// The symmetric grid `k·h`, `|k·h| ≤ 2g`.
pub fn tau_grid<T: Real>(g: usize, step: T) -> Vec<T> {
    let edge = T::lit(2.0 * g as f64);
    let k_max = ((edge / step) + T::lit(1e-9)).floor().to_i64().unwrap_or(0);
    (-k_max..=k_max).map(|k| step * T::lit(k as f64)).collect()
}

/// Density profile with the default quadrature configuration.
pub fn density_profile<T: Real>(g: usize, grid_step: T, tol: T) -> Result<DensitySample<T>> {
    density_profile_with(g, grid_step, tol, &DensityConfig::default())
}

/// Tabulates `F_g` and `H_g` on the grid.
///
/// Each point is computed at two resolutions; the difference is reported as
/// the error estimate and must not exceed `tol`.
pub fn density_profile_with<T: Real>(
    g: usize,
    grid_step: T,
    tol: T,
    config: &DensityConfig,
) -> Result<DensitySample<T>> {
    if !(grid_step > T::zero()) {
        return Err(Error::InvalidArgument("grid step must be positive".into()));
    }
    let fine = SliceEvaluator::<T>::new(g, config)?;
    let coarse = SliceEvaluator::<T>::new(g, &config.coarse())?;
    let grid = tau_grid(g, grid_step);
    let values: Vec<(T, T, T, T)> = grid
        .par_iter()
        .map(|&tau| {
            let (f, h) = fine.eval(tau);
            let (fc, hc) = coarse.eval(tau);
            (f, h, (f - fc).abs(), (h - hc).abs())
        })
        .collect();
    for (tau, v) in grid.iter().zip(&values) {
        let est = v.2.max(v.3);
        if !(est <= tol) {
            return Err(Error::NonConvergence {
                tau: tau.to_f64_lossy(),
                estimate: est.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
    }
    Ok(DensitySample {
        g,
        grid_step,
        f_values: values.iter().map(|v| v.0).collect(),
        h_values: values.iter().map(|v| v.1).collect(),
        f_errors: values.iter().map(|v| v.2).collect(),
        h_errors: values.iter().map(|v| v.3).collect(),
        grid,
        method: DensityMethod::Quadrature,
    })
}

/// Histogram estimate of `F_g`, `H_g` from uniformly sampled angles weighted
/// by the Weyl density. Used beyond the quadrature ceiling.
pub fn density_profile_monte_carlo(
    g: usize,
    grid_step: f64,
    samples: usize,
    seed: u64,
) -> Result<DensitySample<f64>> {
    if g == 0 {
        return Err(Error::GenusOutOfRange { g, reason: "g must be positive" });
    }
    if !(grid_step > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument("grid step and sample count must be positive".into()));
    }
    let grid = tau_grid(g, grid_step);
    let k_max = (grid.len() / 2) as i64;
    let nbins = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f_sum = vec![0.0; nbins];
    let mut f_sq = vec![0.0; nbins];
    let mut h_sum = vec![0.0; nbins];
    let mut h_sq = vec![0.0; nbins];
    let mut theta = vec![0.0; g];
    let volume = std::f64::consts::PI.powi(g as i32);
    for _ in 0..samples {
        for t in theta.iter_mut() {
            *t = rng.gen::<f64>() * std::f64::consts::PI;
        }
        let x: Vec<f64> = theta.iter().map(|t| 2.0 * t.cos()).collect();
        let tau: f64 = x.iter().sum();
        let k = (tau / grid_step).round() as i64;
        if k.abs() > k_max {
            continue;
        }
        let bin = (k + k_max) as usize;
        let w = weyl_density(&theta) * volume;
        let hw = w * s111_x(&x);
        f_sum[bin] += w;
        f_sq[bin] += w * w;
        h_sum[bin] += hw;
        h_sq[bin] += hw * hw;
    }
    let n = samples as f64;
    let scale = 1.0 / (n * grid_step);
    let stderr = |sum: f64, sq: f64| ((sq / n - (sum / n).powi(2)).max(0.0) / n).sqrt() / grid_step;
    Ok(DensitySample {
        g,
        grid_step,
        f_values: f_sum.iter().map(|s| s * scale).collect(),
        h_values: h_sum.iter().map(|s| s * scale).collect(),
        f_errors: f_sum.iter().zip(&f_sq).map(|(&s, &q)| stderr(s, q)).collect(),
        h_errors: h_sum.iter().zip(&h_sq).map(|(&s, &q)| stderr(s, q)).collect(),
        grid,
        method: DensityMethod::MonteCarlo,
    })
}

/// Moment-level refined prediction `𝔞_n(g) − 𝔟_n(g)/√q`.
pub fn refined_moment_prediction(g: usize, n: usize, q: u64) -> Result<f64> {
    use num_traits::ToPrimitive;
    let a = multiplicities::a_n(g, n)?.to_f64().unwrap_or(f64::INFINITY);
    let b = multiplicities::b_n(g, n)?.to_f64().unwrap_or(f64::INFINITY);
    Ok(a - b / (q as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn density_examples() {
        let v = weyl_density(&[PI / 2.0]);
        assert!((v - 2.0 / PI).abs() < 1e-15);
        assert_eq!(weyl_density(&[0.7, 0.7, 1.9]), 0.0);
        assert!(weyl_density(&[0.0f64, 1.0]).abs() < 1e-30);
        assert!(weyl_density(&[PI, 1.0f64]).abs() < 1e-30);
    }

    #[test]
    fn total_mass_is_one() {
        for g in 1..=3 {
            let est = moment_by_quadrature::<f64>(g, 0, &WeylIntegrand::ConstantOne, &MomentConfig::default())
                .unwrap();
            assert!((est.value - 1.0).abs() < 1e-8, "g = {g}: {}", est.value);
        }
    }

    #[test]
    fn moment_examples() {
        let cfg = MomentConfig::default();
        let b3 = moment_by_quadrature::<f64>(3, 3, &WeylIntegrand::S111Combination, &cfg).unwrap();
        assert!((b3.value - 1.0).abs() < 1e-6);
        let m1 = moment_by_quadrature::<f64>(3, 1, &WeylIntegrand::ConstantOne, &cfg).unwrap();
        assert!(m1.value.abs() < 1e-10);
        let a4 = moment_by_quadrature::<f64>(2, 4, &WeylIntegrand::ConstantOne, &cfg).unwrap();
        assert!((a4.value - 3.0).abs() < 1e-6);
        assert!((a4.value - 3.0).abs() <= a4.error);
    }

    #[test]
    fn gauss_legendre_rule_agrees() {
        let cfg = MomentConfig {
            rule: TorusRule::GaussLegendre,
            target: 1e-8,
            ..MomentConfig::default()
        };
        let a6 = moment_by_quadrature::<f64>(3, 6, &WeylIntegrand::ConstantOne, &cfg).unwrap();
        assert!((a6.value - 15.0).abs() < 1e-7, "{}", a6.value);
    }

    #[test]
    fn unreachable_target_is_reported() {
        let cfg = MomentConfig {
            target: 0.0,
            max_points: 40,
            ..MomentConfig::default()
        };
        let r = moment_by_quadrature::<f64>(2, 2, &WeylIntegrand::ConstantOne, &cfg);
        assert!(matches!(r, Err(Error::QuadratureTarget { .. })));
        let r = moment_by_quadrature::<f64>(5, 2, &WeylIntegrand::ConstantOne, &MomentConfig::default());
        assert!(matches!(r, Err(Error::GenusOutOfRange { .. })));
    }

    #[test]
    fn s111_polynomial_matches_closed_form() {
        let poly = PowerSumPolynomial::s111();
        let x = [1.3f64, -0.4, 0.25, 1.9];
        let w = power_sums(&x, 3);
        assert!((poly.eval(&w) - s111_x(&x)).abs() < 1e-12);
        let custom = WeylIntegrand::Custom(poly);
        assert!((custom.eval_x(&x) - WeylIntegrand::S111Combination.eval_x(&x)).abs() < 1e-12);
    }

    #[test]
    fn power_sums_match_cosines() {
        let theta = [0.3f64, 2.1];
        let x: Vec<f64> = theta.iter().map(|t| 2.0 * t.cos()).collect();
        let w = power_sums(&x, 5);
        for (k, wk) in w.iter().enumerate() {
            let direct: f64 = theta.iter().map(|t| 2.0 * (k as f64 * t).cos()).sum();
            assert!((wk - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn semicircle_for_genus_one() {
        let s = density_profile::<f64>(1, 0.02, 1e-8).unwrap();
        for (t, f) in s.grid.iter().zip(&s.f_values) {
            let exact = (4.0 - t * t).max(0.0).sqrt() / (2.0 * PI);
            assert!((f - exact).abs() < 1e-8);
        }
        let mid = s.grid.len() / 2;
        assert!((s.f_values[mid] - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn genus_two_slice_normalized() {
        let eval = SliceEvaluator::<f64>::new(2, &DensityConfig::default()).unwrap();
        let rule = GaussLegendre::new(48);
        let mass = eval.integrate_f(-4.0, 4.0, &rule);
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn refined_prediction_examples() {
        assert!((refined_moment_prediction(3, 2, 53).unwrap() - 1.0).abs() < 1e-15);
        let v = refined_moment_prediction(3, 3, 53).unwrap();
        assert!((v + 1.0 / 53f64.sqrt()).abs() < 1e-15);
        let v = refined_moment_prediction(3, 5, 53).unwrap();
        assert!((v + 9.0 / 53f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn monte_carlo_is_roughly_normalized() {
        let s = density_profile_monte_carlo(2, 0.1, 200_000, 7).unwrap();
        assert_eq!(s.method, DensityMethod::MonteCarlo);
        assert!((s.trapezoid_mass() - 1.0).abs() < 0.05);
        let again = density_profile_monte_carlo(2, 0.1, 200_000, 7).unwrap();
        assert_eq!(s.f_values, again.f_values);
    }
}

//! Densities of the form `P(τ)·φ(τ)` with `φ` the standard Gaussian and `P`
//! an odd polynomial, fitted to prescribed odd moments.
//!
//! Because `∫ τ^{2m} φ = (2m − 1)!!`, matching the moments
//! `∫ τ^{2k+1} P φ = target_k` is a Hankel linear system with integer
//! entries, solved here in whatever field the caller picks.

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::scalar::{FieldScalar, Real};
use crate::Rational;

/// `(2m − 1)!!`, the `2m`-th moment of the standard Gaussian.
pub fn gaussian_even_moment(m: u32) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, k| acc * BigInt::from(2 * k - 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolyFit<S> {
    /// `c₁, c₃, c₅, …`: coefficient of `τ^{2j+1}` at index `j`.
    pub coefficients: Vec<S>,
    /// Targeted moments of orders `1, 3, 5, …`.
    pub targets: Vec<BigInt>,
}

/// Solves for the odd polynomial of the given degree whose Gaussian-weighted
/// odd moments equal `targets` (orders `1, 3, …, degree`).
pub fn fit_gaussian_poly<S: FieldScalar>(targets: &[BigInt], degree: usize) -> Result<GaussianPolyFit<S>> {
    if degree % 2 == 0 {
        return Err(Error::InvalidArgument(format!("degree must be odd, got {degree}")));
    }
    let m = degree.div_ceil(2);
    if targets.len() != m {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} needs {m} target moments, got {}",
            targets.len()
        )));
    }
    // row k, column j: E[τ^{2k+1} · τ^{2j+1}] = (2(k+j+1) − 1)!!
    let mut a: Vec<Vec<S>> = (0..m)
        .map(|k| {
            let mut row: Vec<S> = (0..m)
                .map(|j| S::from_bigint(&gaussian_even_moment((k + j + 1) as u32)))
                .collect();
            row.push(S::from_bigint(&targets[k]));
            row
        })
        .collect();

    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| !a[r][col].is_zero())
            .expect("Gaussian moment matrix is positive definite");
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for entry in a[col].iter_mut() {
            *entry = entry.clone() / p.clone();
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=m {
                    let sub = factor.clone() * a[col][c].clone();
                    a[r][c] = a[r][c].clone() - sub;
                }
            }
        }
    }
    Ok(GaussianPolyFit {
        coefficients: a.into_iter().map(|row| row[m].clone()).collect(),
        targets: targets.to_vec(),
    })
}

impl<S: FieldScalar> GaussianPolyFit<S> {
    pub fn degree(&self) -> usize {
        2 * self.coefficients.len() - 1
    }

    /// `∫ τⁿ P(τ) φ(τ) dτ`, computed from the Gaussian moment identity.
    pub fn moment(&self, n: u32) -> S {
        if n % 2 == 0 {
            return S::zero();
        }
        self.coefficients
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (j, c)| {
                let m = (n + 2 * j as u32 + 1) / 2;
                acc + c.clone() * S::from_bigint(&gaussian_even_moment(m))
            })
    }
}

impl GaussianPolyFit<Rational> {
    pub fn eval(&self, tau: f64) -> f64 {
        use num_traits::ToPrimitive;
        let p: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c.to_f64().unwrap_or(f64::NAN) * tau.powi(2 * j as i32 + 1))
            .sum();
        p * standard_gaussian(tau)
    }
}

fn standard_gaussian<T: Real>(tau: T) -> T {
    (-(tau * tau) / T::lit(2.0)).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

/// `τ(1 − τ²/3)·φ(τ)`, the binomial-heuristic comparison curve.
pub fn vlim_reference<T: Real>(tau: T) -> T {
    tau * (T::one() - tau * tau / T::lit(3.0)) * standard_gaussian(tau)
}

/// Fits `ν^lim` to `−2𝔟_n(M_g)` for `n = 1, 3, …, degree`.
pub fn nu_lim_fit(g: usize, degree: usize) -> Result<GaussianPolyFit<Rational>> {
    if degree % 2 == 0 {
        return Err(Error::InvalidArgument(format!("degree must be odd, got {degree}")));
    }
    let targets = (1..=degree)
        .step_by(2)
        .map(|n| crate::multiplicities::b_n(g, n).map(|b| BigInt::from(b) * -2))
        .collect::<Result<Vec<_>>>()?;
    fit_gaussian_poly(&targets, degree)
}

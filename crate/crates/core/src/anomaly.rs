//! Traces `t` with `|t| ≤ √q` whose weighted elliptic count `H(t² − 4q)/2`
//! exceeds `c·√(4q − t²)`.
//!
//! `f` runs through products of the first inert primes of `Q(√Δ₀)`; for each
//! `f` the smallest prime `q₀ = x² − f²Δ₀y²` is taken, and `ϖ = x + fy√Δ₀`
//! is raised to the first power whose argument lands in `[π/3, 2π/3)`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::census::{elliptic_census, elliptic_work, CensusConfig, EllipticMethod};
use crate::classno::{class_number_forms, kronecker, kronecker_h, QuadDiscriminant};
use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::Rational;

/// Parses `"0.5"`, `"1/10"`, `"3"` or `"2.5e-1"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse {s:?} as a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.trim_start_matches(['-', '+']).is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits == "-" || digits == "+" { format!("{digits}0") } else { digits };
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(n * ten.pow(scale as u32))
    } else {
        Rational::new(n, ten.pow((-scale) as u32))
    })
}

#[derive(Clone, Debug)]
pub struct AnomalyBudget {
    /// Total `(x, y)` candidates examined across all `f`.
    pub candidates: u64,
    /// Largest number of inert primes in `f`.
    pub max_inert_primes: usize,
    /// Largest exponent `m`.
    pub max_m: u32,
    /// Census verification is attempted when its work fits this budget.
    pub census: CensusConfig,
}

impl Default for AnomalyBudget {
    fn default() -> Self {
        AnomalyBudget {
            candidates: 10_000_000,
            max_inert_primes: 24,
            max_m: 256,
            census: CensusConfig {
                threads: None,
                budget: 100_000_000,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnomalyCertificate {
    #[serde(serialize_with = "crate::serde_util::rational_str")]
    pub c: Rational,
    pub delta0: i64,
    pub h0: u64,
    pub inert_primes: Vec<u64>,
    pub f: u64,
    pub q0: u64,
    pub x: u64,
    pub y: u64,
    pub m: u32,
    pub theta: f64,
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub u: BigInt,
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub v: BigInt,
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub q: BigInt,
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub t: BigInt,
    pub discriminant: QuadDiscriminant,
    #[serde(serialize_with = "crate::serde_util::rational_str")]
    pub kronecker_h: Rational,
    /// `H(Δ)/2`.
    #[serde(serialize_with = "crate::serde_util::rational_str")]
    pub weighted_count: Rational,
    /// `4q − t²`.
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub radicand: BigInt,
    /// `H(Δ) / (2√(4q − t²))`.
    pub ratio: f64,
    /// `(H/2)² > c²(4q − t²)`, checked exactly.
    pub inequality_holds: bool,
    /// `4t² ≤ 4q`, i.e. `|t| ≤ √q`, checked exactly.
    pub trace_within_sqrt_q: bool,
    /// `gcd(t, q₀) = 1`, so the isogeny class is ordinary.
    pub ordinary: bool,
    /// `∏_{p | f}(1 + 1/p)`.
    pub inert_product: f64,
    /// `(cπ²/3)·√|Δ₀| / h(Δ₀)`.
    pub inert_threshold: f64,
    pub inert_condition_met: bool,
    /// Result of comparing against an elliptic census, when `q` was small enough.
    pub census_verified: Option<bool>,
    pub candidates_examined: u64,
}

fn inert_primes(delta0: i64, count: usize) -> Vec<u64> {
    (2u64..)
        .filter(|&p| is_prime(p) && kronecker(delta0 as i128, p as u128) == -1)
        .take(count)
        .collect()
}

/// Smallest prime `x² + k·y²` with `x, y > 0`, scanning values in doubling windows.
fn smallest_prime_norm(k: u128, examined: &mut u64, budget: u64) -> Option<(u64, u64, u64)> {
    let mut limit = 4 * k + 16;
    loop {
        let mut best: Option<(u128, u128, u128)> = None;
        let mut y = 1u128;
        while k * y * y < limit {
            let mut x = 1u128;
            while x * x + k * y * y < limit {
                *examined += 1;
                if *examined > budget {
                    return None;
                }
                let n = x * x + k * y * y;
                if best.is_none_or(|b| n < b.0) && n <= u64::MAX as u128 && is_prime(n as u64) && n % x != 0 {
                    best = Some((n, x, y));
                }
                x += 1;
            }
            y += 1;
        }
        if let Some((n, x, y)) = best {
            return Some((n as u64, x as u64, y as u64));
        }
        limit = limit.checked_mul(2)?;
    }
}

/// `(x + f·y·√Δ₀)^m = u + f·v·√Δ₀`.
fn weil_power(x: u64, y: u64, f: u64, delta0: i64, m: u32) -> (BigInt, BigInt) {
    let k = BigInt::from(f) * BigInt::from(f) * BigInt::from(delta0);
    let (x, y) = (BigInt::from(x), BigInt::from(y));
    let mut u = BigInt::one();
    let mut v = BigInt::zero();
    for _ in 0..m {
        let nu = &u * &x + &k * &v * &y;
        let nv = &u * &y + &v * &x;
        u = nu;
        v = nv;
    }
    (u, v)
}

/// Builds and checks the certificate for one `(f, x, y, m)`.
pub fn certify(
    c: &Rational,
    delta0: i64,
    inert: &[u64],
    x: u64,
    y: u64,
    m: u32,
) -> Result<AnomalyCertificate> {
    let h0 = class_number_forms(delta0)?;
    let f: u64 = inert.iter().product();
    let k = (f as u128) * (f as u128) * delta0.unsigned_abs() as u128;
    let q0 = (x as u128) * (x as u128) + k * (y as u128) * (y as u128);
    let (u, v) = weil_power(x, y, f, delta0, m);
    let q = BigInt::from(q0).pow(m);
    let t: BigInt = &u * 2;
    let radicand: BigInt = &q * 4 - &t * &t;
    let conductor = (BigInt::from(2 * f) * v.abs())
        .to_u128()
        .ok_or_else(|| Error::InvalidArgument("conductor exceeds 128 bits".into()))?;
    let discriminant = QuadDiscriminant::from_parts(delta0, conductor)?;
    let kh = kronecker_h(&discriminant)?;
    let weighted_count = &kh / Rational::from_integer(BigInt::from(2));
    let lhs = &weighted_count * &weighted_count;
    let rhs = c * c * Rational::from_integer(radicand.clone());
    let inequality_holds = lhs > rhs;
    let trace_within_sqrt_q = &t * &t <= q;
    let ordinary = num_integer::Integer::gcd(&t, &BigInt::from(q0)).is_one();
    let ratio = weighted_count.to_f64().unwrap_or(f64::NAN) / radicand.to_f64().unwrap_or(f64::NAN).sqrt();
    let inert_product: f64 = inert.iter().map(|&p| 1.0 + 1.0 / p as f64).product();
    let inert_threshold = c.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(2) / 3.0
        * (delta0.unsigned_abs() as f64).sqrt()
        / h0 as f64;
    let theta = ((f as f64) * (y as f64) * (delta0.unsigned_abs() as f64).sqrt()).atan2(x as f64);
    Ok(AnomalyCertificate {
        c: c.clone(),
        delta0,
        h0,
        inert_primes: inert.to_vec(),
        f,
        q0: q0 as u64,
        x,
        y,
        m,
        theta,
        u,
        v,
        q,
        t,
        discriminant,
        kronecker_h: kh,
        weighted_count,
        radicand,
        ratio,
        inequality_holds,
        trace_within_sqrt_q,
        ordinary,
        inert_product,
        inert_threshold,
        inert_condition_met: inert_product > inert_threshold,
        census_verified: None,
        candidates_examined: 0,
    })
}

/// Recomputes a certificate from its defining parameters and compares.
pub fn verify_certificate(cert: &AnomalyCertificate) -> Result<bool> {
    let mut fresh = certify(&cert.c, cert.delta0, &cert.inert_primes, cert.x, cert.y, cert.m)?;
    fresh.census_verified = cert.census_verified;
    fresh.candidates_examined = cert.candidates_examined;
    Ok(fresh == *cert && fresh.inequality_holds && fresh.trace_within_sqrt_q && fresh.ordinary)
}

/// Smallest `m ≥ 1` with `π/3 ≤ mθ < 2π/3`, confirmed by the exact test
/// `3u² ≤ f²v²|Δ₀|`.
fn choose_m(x: u64, y: u64, f: u64, delta0: i64, max_m: u32) -> Option<u32> {
    let theta = ((f as f64) * (y as f64) * (delta0.unsigned_abs() as f64).sqrt()).atan2(x as f64);
    let lo = std::f64::consts::FRAC_PI_3;
    let guess = ((lo / theta).ceil() as u32).max(1);
    let k = BigInt::from(f) * BigInt::from(f) * BigInt::from(delta0.unsigned_abs());
    // the float guess can be off by one at the boundary
    (guess.saturating_sub(1).max(1)..=guess + 1).filter(|&m| m <= max_m).find(|&m| {
        let (u, v) = weil_power(x, y, f, delta0, m);
        &u * &u * 3 <= &k * &v * &v
    })
}

pub fn find_anomalous_trace(c: &Rational, delta0: i64, budget: &AnomalyBudget) -> Result<AnomalyCertificate> {
    if !c.is_positive() {
        return Err(Error::InvalidArgument("c must be positive".into()));
    }
    class_number_forms(delta0)?;
    let primes = inert_primes(delta0, budget.max_inert_primes);
    let mut examined = 0u64;
    for n in 0..=primes.len() {
        let inert = &primes[..n];
        let f = inert
            .iter()
            .try_fold(1u64, |acc, &p| acc.checked_mul(p))
            .ok_or_else(|| Error::SearchExhausted(format!("f overflows with {n} inert primes")))?;
        let k = (f as u128) * (f as u128) * delta0.unsigned_abs() as u128;
        let Some((_, x, y)) = smallest_prime_norm(k, &mut examined, budget.candidates) else {
            return Err(Error::SearchExhausted(format!(
                "no prime q0 = x^2 + {k} y^2 found within {} candidates (f = {f}, {n} inert primes)",
                budget.candidates
            )));
        };
        let Some(m) = choose_m(x, y, f, delta0, budget.max_m) else {
            continue;
        };
        let mut cert = certify(c, delta0, inert, x, y, m)?;
        cert.candidates_examined = examined;
        if !(cert.inequality_holds && cert.trace_within_sqrt_q && cert.ordinary) {
            continue;
        }
        if let (Some(q), Some(t)) = (cert.q.to_u64(), cert.t.to_i64()) {
            if m == 1 && elliptic_work(q, EllipticMethod::OrbitReduced) <= budget.census.budget {
                let hist = elliptic_census(q, EllipticMethod::OrbitReduced, &budget.census)?;
                cert.census_verified = Some(hist.count(t) == cert.weighted_count);
            }
        }
        return Ok(cert);
    }
    Err(Error::SearchExhausted(format!(
        "inequality not certified with up to {} inert primes",
        primes.len()
    )))
}

//! Exhaustive weighted censuses of elliptic and hyperelliptic curves over
//! prime fields.
//!
//! Hyperelliptic curves are enumerated as pairs `(c, f)` with `c ∈ {1, n_q}`
//! and `f` monic separable of degree `2g+1` or `2g+2`. Dividing the pair
//! count by `2·#PGL₂(F_q)` weights every curve by `1/#Aut`. Elliptic curves
//! are short Weierstrass pairs `(a, b)`, weighted by `1/(q − 1)`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::quadrature::GaussLegendre;
use crate::weyl::{DensityConfig, SliceEvaluator};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hyperelliptic,
    Elliptic,
    External,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Hyperelliptic => "hyperelliptic",
            Family::Elliptic => "elliptic",
            Family::External => "external",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hyperelliptic" | "hyp" => Ok(Family::Hyperelliptic),
            "elliptic" | "ell" => Ok(Family::Elliptic),
            "external" | "ext" => Ok(Family::External),
            other => Err(Error::InvalidArgument(format!("unknown family {other:?}"))),
        }
    }
}

/// `⌊2g√q⌋`.
pub fn weil_bound(g: usize, q: u64) -> i64 {
    let four_g2q = 4u128 * (g as u128) * (g as u128) * q as u128;
    let mut r = (four_g2q as f64).sqrt() as u128;
    while r * r > four_g2q {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= four_g2q {
        r += 1;
    }
    r as i64
}

/// Weighted curve counts by Frobenius trace. Only nonzero bins are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceHistogram {
    pub family: Family,
    pub g: usize,
    pub q: u64,
    pub counts: BTreeMap<i64, Rational>,
    /// Number of enumerated parameter tuples per trace; empty for external data.
    pub raw_pair_counts: BTreeMap<i64, u64>,
}

impl TraceHistogram {
    pub fn count(&self, t: i64) -> Rational {
        self.counts.get(&t).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_mass(&self) -> Rational {
        self.counts.values().fold(Rational::zero(), |acc, c| acc + c)
    }

    pub fn total_raw(&self) -> u128 {
        self.raw_pair_counts.values().map(|&c| c as u128).sum()
    }

    /// Dimension of the moduli space the census samples.
    pub fn dimension(&self) -> u32 {
        match self.family {
            Family::Hyperelliptic => 2 * self.g as u32 - 1,
            Family::Elliptic => 1,
            Family::External if self.g >= 2 => 3 * self.g as u32 - 3,
            Family::External => 1,
        }
    }

    pub fn weil_bound(&self) -> i64 {
        weil_bound(self.g, self.q)
    }

    pub fn is_symmetric(&self) -> bool {
        self.counts.iter().all(|(t, c)| self.count(-t) == *c)
    }

    /// Drops zero bins so structural equality matches value equality.
    pub fn normalize_bins(&mut self) {
        self.counts.retain(|_, c| !c.is_zero());
        self.raw_pair_counts.retain(|_, c| *c != 0);
    }
}

#[derive(Clone, Debug)]
pub struct CensusConfig {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Ceiling on character-table lookups.
    pub budget: u128,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            threads: None,
            budget: 1_000_000_000,
        }
    }
}

impl CensusConfig {
    fn run<R: Send, F: FnOnce() -> R + Send>(&self, f: F) -> Result<R> {
        match self.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
}

/// Dense trace accumulator indexed by `t + offset`.
struct Bins {
    offset: i64,
    data: Vec<u64>,
}

impl Bins {
    fn new(q: u64) -> Self {
        let offset = q as i64 + 2;
        Bins {
            offset,
            data: vec![0; 2 * offset as usize + 1],
        }
    }

    #[inline]
    fn add(&mut self, t: i64, w: u64) {
        self.data[(t + self.offset) as usize] += w;
    }

    fn merge(mut self, other: Bins) -> Bins {
        for (a, b) in self.data.iter_mut().zip(other.data) {
            *a += b;
        }
        self
    }

    fn into_map(self) -> BTreeMap<i64, u64> {
        self.data
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0)
            .map(|(i, c)| (i as i64 - self.offset, c))
            .collect()
    }
}

/// Estimated character lookups for the hyperelliptic census.
pub fn hyperelliptic_work(g: usize, q: u64) -> u128 {
    let q = q as u128;
    let d = 2 * g as u32 + 1;
    2 * (q.pow(d) + q.pow(d + 1)) * q
}

pub fn hyperelliptic_census(g: usize, q: u64, config: &CensusConfig) -> Result<TraceHistogram> {
    if g < 2 {
        return Err(Error::GenusOutOfRange {
            g,
            reason: "hyperelliptic census needs g >= 2",
        });
    }
    let field = PrimeField::new(q)?;
    let work = hyperelliptic_work(g, q);
    if work > config.budget {
        return Err(Error::BudgetExceeded {
            work,
            budget: config.budget,
        });
    }
    let n_q = field.nonsquare();
    let bins = config.run(|| {
        let odd = hyp_degree(&field, 2 * g + 1, n_q);
        let even = hyp_degree(&field, 2 * g + 2, n_q);
        odd.merge(even)
    })?;
    let raw = bins.into_map();
    let den = BigInt::from(2u64) * (BigInt::from(q).pow(3) - BigInt::from(q));
    let counts = raw
        .iter()
        .map(|(&t, &c)| (t, Rational::new(BigInt::from(c), den.clone())))
        .collect();
    Ok(TraceHistogram {
        family: Family::Hyperelliptic,
        g,
        q,
        counts,
        raw_pair_counts: raw,
    })
}

/// All `(c, f)` with `f` monic separable of degree `d`.
fn hyp_degree(field: &PrimeField, d: usize, n_q: u32) -> Bins {
    let q = field.q();
    let qu = q as usize;
    // χ(c·v) for c = 1 and c = n_q
    let chi_c: [Vec<i8>; 2] = [
        (0..q).map(|v| field.chi(v)).collect(),
        (0..q).map(|v| field.chi(field.mul(n_q, v))).collect(),
    ];
    let infinity: [i64; 2] = if d % 2 == 0 {
        [field.chi(1) as i64, field.chi(n_q) as i64]
    } else {
        [0, 0]
    };
    // blocks fixed by (a_{d−1}, a_{d−2})
    let blocks = (qu * qu) as u64;
    (0..blocks)
        .into_par_iter()
        .fold(
            || Bins::new(q as u64),
            |mut bins, block| {
                let mut coeffs = vec![0u32; d + 1];
                coeffs[d] = 1;
                coeffs[d - 1] = (block % q as u64) as u32;
                coeffs[d - 2] = (block / q as u64) as u32;
                let free = d - 3; // a_1 .. a_{d−3}
                let mut base = vec![0u32; qu];
                loop {
                    for (x, slot) in base.iter_mut().enumerate() {
                        // value of f − a_0 at x
                        let mut acc = 0u32;
                        for &c in coeffs[1..].iter().rev() {
                            acc = field.add(field.mul(acc, x as u32), c);
                        }
                        *slot = field.mul(acc, x as u32);
                    }
                    for a0 in 0..q {
                        coeffs[0] = a0;
                        if !field.is_separable(&coeffs) {
                            continue;
                        }
                        for (ci, table) in chi_c.iter().enumerate() {
                            let s: i64 = base
                                .iter()
                                .map(|&b| table[field.add(b, a0) as usize] as i64)
                                .sum();
                            bins.add(-s - infinity[ci], 1);
                        }
                    }
                    // odometer over a_1 .. a_{d−3}
                    let mut i = 1;
                    loop {
                        if i > free {
                            return bins;
                        }
                        coeffs[i] += 1;
                        if coeffs[i] < q {
                            break;
                        }
                        coeffs[i] = 0;
                        i += 1;
                    }
                }
            },
        )
        .reduce(|| Bins::new(q as u64), Bins::merge)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllipticMethod {
    /// All `q²` pairs.
    Direct,
    /// One pair per orbit of `(a, b) ↦ (u⁴a, u⁶b)`, scaled by the orbit size.
    #[default]
    OrbitReduced,
}

/// Estimated character lookups for the elliptic census.
pub fn elliptic_work(q: u64, method: EllipticMethod) -> u128 {
    let q = q as u128;
    match method {
        EllipticMethod::Direct => q * q * q,
        EllipticMethod::OrbitReduced => (q - 1).gcd(&4) * q * q + (q - 1).gcd(&6) * q,
    }
}

pub fn elliptic_census(q: u64, method: EllipticMethod, config: &CensusConfig) -> Result<TraceHistogram> {
    if q <= 3 {
        return Err(Error::InvalidArgument(format!(
            "elliptic census needs a prime q > 3, got {q}"
        )));
    }
    let field = PrimeField::new(q)?;
    let work = elliptic_work(q, method);
    if work > config.budget {
        return Err(Error::BudgetExceeded {
            work,
            budget: config.budget,
        });
    }
    let qu = field.q();
    let cubes: Vec<u32> = (0..qu).map(|x| field.mul(field.mul(x, x), x)).collect();
    let trace_row = |a: u32, b_values: &mut dyn Iterator<Item = u32>, weight: u64, bins: &mut Bins| {
        let base: Vec<u32> = (0..qu).map(|x| field.add(cubes[x as usize], field.mul(a, x))).collect();
        let four_a3 = field.mul(4, field.mul(field.mul(a, a), a));
        for b in b_values {
            let disc = field.add(four_a3, field.mul(27, field.mul(b, b)));
            if disc == 0 {
                continue;
            }
            let s: i64 = base.iter().map(|&v| field.chi(field.add(v, b)) as i64).sum();
            bins.add(-s, weight);
        }
    };
    let bins = config.run(|| match method {
        EllipticMethod::Direct => (0..qu)
            .into_par_iter()
            .fold(
                || Bins::new(q),
                |mut bins, a| {
                    trace_row(a, &mut (0..qu), 1, &mut bins);
                    bins
                },
            )
            .reduce(|| Bins::new(q), Bins::merge),
        EllipticMethod::OrbitReduced => {
            let gen = field.primitive_root();
            let k4 = (q - 1).gcd(&4);
            let k6 = (q - 1).gcd(&6);
            let mut bins = (0..k4)
                .into_par_iter()
                .fold(
                    || Bins::new(q),
                    |mut bins, i| {
                        let rep = field.pow(gen, i);
                        trace_row(rep, &mut (0..qu), (q - 1) / k4, &mut bins);
                        bins
                    },
                )
                .reduce(|| Bins::new(q), Bins::merge);
            let reps: Vec<u32> = (0..k6).map(|j| field.pow(gen, j)).collect();
            trace_row(0, &mut reps.into_iter(), (q - 1) / k6, &mut bins);
            bins
        }
    })?;
    let raw = bins.into_map();
    let den = BigInt::from(q - 1);
    let counts = raw
        .iter()
        .map(|(&t, &c)| (t, Rational::new(BigInt::from(c), den.clone())))
        .collect();
    Ok(TraceHistogram {
        family: Family::Elliptic,
        g: 1,
        q,
        counts,
        raw_pair_counts: raw,
    })
}

/// `r_g = Σ_{i=0}^{2g+2} (−2)^i / i!`.
pub fn r_g(g: usize) -> Rational {
    let mut term = Rational::one();
    let mut sum = Rational::one();
    for i in 1..=(2 * g + 2) {
        term = term * Rational::from_integer(BigInt::from(-2)) / Rational::from_integer(BigInt::from(i));
        sum += &term;
    }
    sum
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityReport {
    pub g: usize,
    pub q: u64,
    pub even_mass: Rational,
    pub odd_mass: Rational,
    pub r_g: Rational,
    pub predicted_even: Rational,
    pub deviation: Rational,
}

/// Even/odd trace masses of a histogram, normalized to total mass 1.
pub fn parity_from_histogram(hist: &TraceHistogram) -> Result<ParityReport> {
    let total = hist.total_mass();
    if total.is_zero() {
        return Err(Error::InvalidArgument("histogram has zero mass".into()));
    }
    let even = hist
        .counts
        .iter()
        .filter(|(t, _)| *t % 2 == 0)
        .fold(Rational::zero(), |acc, (_, c)| acc + c);
    let even_mass = even / &total;
    let odd_mass = Rational::one() - &even_mass;
    let r = r_g(hist.g);
    let predicted_even = (Rational::one() + &r) / Rational::from_integer(BigInt::from(2));
    let deviation = (&even_mass - &predicted_even).abs();
    Ok(ParityReport {
        g: hist.g,
        q: hist.q,
        even_mass,
        odd_mass,
        r_g: r,
        predicted_even,
        deviation,
    })
}

pub fn parity_report(g: usize, q: u64, config: &CensusConfig) -> Result<ParityReport> {
    parity_from_histogram(&hyperelliptic_census(g, q, config)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NolimitBounds {
    pub g: usize,
    pub eps: f64,
    /// `∫_{2g−ε}^{2g} F_g`.
    pub v: f64,
    pub b_max: f64,
    pub c_min: f64,
    /// Exact values, available when `ε = 0`.
    #[serde(skip)]
    pub exact: Option<(Rational, Rational)>,
}

/// `b_g ≤ (1 − r_g)/(1 − 2v)` and `c_g ≥ (1 + r_g − 4v)/(1 − 2v)`.
pub fn nolimit_bounds(g: usize, eps: f64) -> Result<NolimitBounds> {
    let edge = 2.0 * g as f64;
    if !(0.0..edge).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps must lie in [0, {edge}), got {eps}")));
    }
    let r = r_g(g);
    if eps == 0.0 {
        let b = Rational::one() - &r;
        let c = Rational::one() + &r;
        return Ok(NolimitBounds {
            g,
            eps,
            v: 0.0,
            b_max: b.to_f64().unwrap_or(f64::NAN),
            c_min: c.to_f64().unwrap_or(f64::NAN),
            exact: Some((b, c)),
        });
    }
    let eval = SliceEvaluator::<f64>::new(g, &DensityConfig::default())?;
    let v = eval.integrate_f(edge - eps, edge, &GaussLegendre::new(48));
    let denom = 1.0 - 2.0 * v;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} gives v = {v} >= 1/2; the bounds are undefined"
        )));
    }
    let rf = r.to_f64().unwrap_or(f64::NAN);
    Ok(NolimitBounds {
        g,
        eps,
        v,
        b_max: (1.0 - rf) / denom,
        c_min: (1.0 + rf - 4.0 * v) / denom,
        exact: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMoment {
    pub n: u32,
    /// `Σ_t tⁿ·counts(t)`.
    pub raw: Rational,
    /// `raw / q^{dim + n/2}`.
    pub normalized: f64,
    /// The normalized value when `n` is even.
    pub normalized_exact: Option<Rational>,
}

pub fn empirical_sn(hist: &TraceHistogram, n: u32) -> EmpiricalMoment {
    let raw = hist.counts.iter().fold(Rational::zero(), |acc, (&t, c)| {
        acc + Rational::from_integer(BigInt::from(t).pow(n)) * c
    });
    let q = BigInt::from(hist.q);
    let dim = hist.dimension();
    let base = &raw / Rational::from_integer(q.pow(dim + n / 2));
    let (normalized, normalized_exact) = if n % 2 == 0 {
        (base.to_f64().unwrap_or(f64::NAN), Some(base))
    } else {
        (base.to_f64().unwrap_or(f64::NAN) / (hist.q as f64).sqrt(), None)
    };
    EmpiricalMoment {
        n,
        raw,
        normalized,
        normalized_exact,
    }
}

/// `t ↦ q·(counts(t) − counts(−t)) / total` for `t ≥ 0`.
pub fn signed_asymmetry(hist: &TraceHistogram) -> BTreeMap<i64, Rational> {
    let total = hist.total_mass();
    if total.is_zero() {
        return BTreeMap::new();
    }
    let top = hist.counts.keys().map(|t| t.abs()).max().unwrap_or(0);
    let q = Rational::from_integer(BigInt::from(hist.q));
    (0..=top)
        .map(|t| (t, &q * (hist.count(t) - hist.count(-t)) / &total))
        .collect()
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Monic degree-`d` polynomials over `F_q` by number of distinct roots,
/// via inclusion–exclusion on root sets.
pub fn root_count_table(q: u64, d: usize) -> Result<BTreeMap<usize, BigUint>> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let top = (d as u64).min(q) as usize;
    let qb = BigInt::from(q);
    // at_least[j] = Σ_{|S| = j} #{f : S ⊆ roots(f)}
    let at_least: Vec<BigInt> = (0..=top)
        .map(|j| binomial(q, j as u64) * qb.pow((d - j) as u32))
        .collect();
    let mut table = BTreeMap::new();
    for k in 0..=top {
        let mut e = BigInt::zero();
        for (j, a) in at_least.iter().enumerate().skip(k) {
            let term = binomial(j as u64, k as u64) * a;
            if (j - k) % 2 == 0 {
                e += term;
            } else {
                e -= term;
            }
        }
        let e = e
            .to_biguint()
            .ok_or_else(|| Error::InvalidArgument("negative root count".into()))?;
        table.insert(k, e);
    }
    Ok(table)
}

/// Separable monic polynomials of degree `d` by number of roots, enumerated.
pub fn separable_root_count_table(q: u64, d: usize, budget: u128) -> Result<BTreeMap<usize, u64>> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let field = PrimeField::new(q)?;
    let work = (q as u128).pow(d as u32) * q as u128;
    if work > budget {
        return Err(Error::BudgetExceeded { work, budget });
    }
    let qu = field.q();
    let total = (q as u64).pow(d as u32);
    let table = (0..total)
        .into_par_iter()
        .fold(BTreeMap::new, |mut map: BTreeMap<usize, u64>, idx| {
            let mut coeffs = Vec::with_capacity(d + 1);
            let mut r = idx;
            for _ in 0..d {
                coeffs.push((r % q) as u32);
                r /= q;
            }
            coeffs.push(1);
            if field.is_separable(&coeffs) {
                let roots = (0..qu).filter(|&x| field.eval(&coeffs, x) == 0).count();
                *map.entry(roots).or_insert(0) += 1;
            }
            map
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(table)
}

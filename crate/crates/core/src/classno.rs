//! Class numbers of imaginary quadratic discriminants.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::census::{weil_bound, TraceHistogram};
use crate::error::{Error, Result};
use crate::Rational;

/// Kronecker symbol `(a/n)`.
pub fn kronecker(a: i128, n: u128) -> i8 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut n = n;
    let mut result = 1i8;
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n >>= twos;
        if twos % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    // Jacobi symbol for odd n
    let mut a = a.rem_euclid(n as i128) as u128;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

pub fn is_discriminant(d: i128) -> bool {
    d < 0 && matches!(d.rem_euclid(4), 0 | 1)
}

fn is_squarefree(mut m: u128) -> bool {
    let mut p = 2u128;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

pub fn is_fundamental(d: i128) -> bool {
    if !is_discriminant(d) {
        return false;
    }
    if d.rem_euclid(4) == 1 {
        return is_squarefree(d.unsigned_abs());
    }
    let m = d / 4;
    matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
}

/// Prime factorization by trial division.
pub fn factorize(mut n: u128) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u128;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n as u64, 1));
    }
    out
}

/// `Δ = F²Δ₀` with `Δ₀` fundamental.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadDiscriminant {
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub delta: i128,
    pub delta0: i64,
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub conductor: u128,
    pub conductor_factors: Vec<(u64, u32)>,
}

impl QuadDiscriminant {
    pub fn new(delta: i128) -> Result<Self> {
        if !is_discriminant(delta) {
            return Err(Error::NotDiscriminant(delta as i64));
        }
        let mut delta0 = -1i128;
        let mut conductor = 1u128;
        for (p, e) in factorize(delta.unsigned_abs()) {
            let p = p as u128;
            conductor *= p.pow(e / 2);
            if e % 2 == 1 {
                delta0 *= p as i128;
            }
        }
        if delta0.rem_euclid(4) != 1 {
            delta0 *= 4;
            conductor /= 2;
        }
        Self::from_parts(delta0 as i64, conductor)
    }

    /// Builds `F²Δ₀` from a known fundamental part and conductor.
    pub fn from_parts(delta0: i64, conductor: u128) -> Result<Self> {
        if !is_fundamental(delta0 as i128) {
            return Err(Error::NotFundamental(delta0));
        }
        if conductor == 0 {
            return Err(Error::InvalidArgument("conductor must be positive".into()));
        }
        let delta = (conductor as i128)
            .checked_mul(conductor as i128)
            .and_then(|f2| f2.checked_mul(delta0 as i128))
            .ok_or_else(|| Error::InvalidArgument("discriminant overflows i128".into()))?;
        Ok(QuadDiscriminant {
            delta,
            delta0,
            conductor,
            conductor_factors: factorize(conductor),
        })
    }

    pub fn chi(&self, p: u64) -> i8 {
        kronecker(self.delta0 as i128, p as u128)
    }
}

/// Number of reduced primitive forms of discriminant `d < 0`.
pub fn class_number(d: i128) -> Result<u64> {
    if !is_discriminant(d) {
        return Err(Error::NotDiscriminant(d as i64));
    }
    let n = -d;
    let mut h = 0u64;
    let mut a = 1i128;
    while 3 * a * a <= n {
        let mut b = -a + 1;
        while b <= a {
            if (b - d).rem_euclid(2) == 0 {
                let num = b * b - d;
                if num % (4 * a) == 0 {
                    let c = num / (4 * a);
                    if c >= a && !((a == c || b.abs() == a) && b < 0) && a.gcd(&b).gcd(&c) == 1 {
                        h += 1;
                    }
                }
            }
            b += 1;
        }
        a += 1;
    }
    Ok(h)
}

/// `h(Δ₀)` for a fundamental discriminant `Δ₀ < −4`.
pub fn class_number_forms(delta0: i64) -> Result<u64> {
    if !is_discriminant(delta0 as i128) {
        return Err(Error::NotDiscriminant(delta0));
    }
    if !is_fundamental(delta0 as i128) {
        return Err(Error::NotFundamental(delta0));
    }
    if delta0 >= -4 {
        return Err(Error::ExcludedDiscriminant(delta0));
    }
    class_number(delta0 as i128)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalFactor {
    pub p: u64,
    pub e: u32,
    pub chi: i8,
    #[serde(serialize_with = "crate::serde_util::rational_str")]
    pub factor: Rational,
}

/// `1 + (1 − χ(p)/p)(p + p² + ⋯ + p^e)` for each `p^e ∥ F`.
pub fn local_factors(d: &QuadDiscriminant) -> Vec<LocalFactor> {
    d.conductor_factors
        .iter()
        .map(|&(p, e)| {
            let chi = d.chi(p);
            let pb = BigInt::from(p);
            let geometric = (1..=e).fold(BigInt::zero(), |acc, i| acc + pb.pow(i));
            let one_minus = Rational::one() - Rational::new(BigInt::from(chi), pb.clone());
            let factor = Rational::one() + one_minus * Rational::from_integer(geometric);
            LocalFactor { p, e, chi, factor }
        })
        .collect()
}

/// Kronecker class number `H(Δ)` by the product formula.
pub fn kronecker_h(d: &QuadDiscriminant) -> Result<Rational> {
    if d.delta0 >= -4 {
        return Err(Error::ExcludedDiscriminant(d.delta0));
    }
    let h0 = class_number(d.delta0 as i128)?;
    Ok(local_factors(d)
        .into_iter()
        .fold(Rational::from_integer(BigInt::from(h0)), |acc, l| acc * l.factor))
}

/// `Σ h(Δ/d²)` over the `d` for which `Δ/d²` is a discriminant.
pub fn hurwitz_sum_by_forms(delta: i128) -> Result<u64> {
    if !is_discriminant(delta) {
        return Err(Error::NotDiscriminant(delta as i64));
    }
    let mut total = 0;
    let mut d = 1i128;
    while d * d <= -delta {
        if delta % (d * d) == 0 && is_discriminant(delta / (d * d)) {
            total += class_number(delta / (d * d))?;
        }
        d += 1;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeuringReport {
    pub q: u64,
    pub t: i64,
    pub discriminant: QuadDiscriminant,
    #[serde(serialize_with = "crate::serde_util::rational_str")]
    pub predicted: Rational,
    #[serde(serialize_with = "crate::serde_util::rational_str")]
    pub census: Rational,
    pub equal: bool,
}

/// Checks the Deuring preconditions for `(q, t)`; returns the discriminant.
pub fn deuring_admissible(q: u64, t: i64) -> Result<QuadDiscriminant> {
    let fail = |reason: &str| Error::Inadmissible {
        q,
        t,
        reason: reason.to_string(),
    };
    if t == 0 || (t.unsigned_abs()).gcd(&q) != 1 {
        return Err(fail("gcd(t, q) != 1"));
    }
    if t.abs() > weil_bound(1, q) {
        return Err(fail("|t| > 2 sqrt(q)"));
    }
    let delta = (t as i128) * (t as i128) - 4 * q as i128;
    if delta >= 0 {
        return Err(fail("t^2 - 4q is not negative"));
    }
    let d = QuadDiscriminant::new(delta)?;
    if d.delta0 >= -4 {
        return Err(fail(&format!("fundamental part {} is -3 or -4", d.delta0)));
    }
    Ok(d)
}

/// Compares `H(t² − 4q)/2` with the weighted elliptic census at `t`.
pub fn deuring_check(hist: &TraceHistogram, t: i64) -> Result<DeuringReport> {
    if hist.family != crate::census::Family::Elliptic {
        return Err(Error::InvalidArgument("deuring check needs an elliptic census".into()));
    }
    let d = deuring_admissible(hist.q, t)?;
    let predicted = kronecker_h(&d)? / Rational::from_integer(BigInt::from(2));
    let census = hist.count(t);
    Ok(DeuringReport {
        q: hist.q,
        t,
        equal: predicted == census,
        discriminant: d,
        predicted,
        census,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeuringSweep {
    pub q: u64,
    pub reports: Vec<DeuringReport>,
    /// Traces in the Weil range that fail a precondition, with the reason.
    pub excluded: Vec<(i64, String)>,
}

impl DeuringSweep {
    pub fn all_equal(&self) -> bool {
        self.reports.iter().all(|r| r.equal)
    }
}

pub fn deuring_all(hist: &TraceHistogram) -> Result<DeuringSweep> {
    let bound = weil_bound(1, hist.q);
    let mut reports = Vec::new();
    let mut excluded = Vec::new();
    for t in -bound..=bound {
        match deuring_check(hist, t) {
            Ok(r) => reports.push(r),
            Err(Error::Inadmissible { reason, .. }) => excluded.push((t, reason)),
            Err(e) => return Err(e),
        }
    }
    Ok(DeuringSweep {
        q: hist.q,
        reports,
        excluded,
    })
}

impl DeuringReport {
    pub fn predicted_f64(&self) -> f64 {
        self.predicted.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::{elliptic_census, CensusConfig, EllipticMethod};

    fn int(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn kronecker_values() {
        assert_eq!(kronecker(-19, 2), -1);
        assert_eq!(kronecker(-23, 2), 1);
        assert_eq!(kronecker(-20, 2), 0);
        assert_eq!(kronecker(-19, 5), 1);
        assert_eq!(kronecker(-19, 3), -1);
        assert_eq!(kronecker(2, 7), 1);
        assert_eq!(kronecker(3, 7), -1);
        assert_eq!(kronecker(-1, 0), 1);
        // quadratic reciprocity spot check against Euler's criterion
        for p in [3u128, 5, 7, 11, 13] {
            for a in 1..p as i128 {
                let euler = (0..(p - 1) / 2).fold(1u128, |acc, _| acc * a as u128 % p);
                let expect = if euler == 1 { 1 } else { -1 };
                assert_eq!(kronecker(a, p), expect);
            }
        }
    }

    #[test]
    fn fundamentality() {
        for d in [-3, -4, -7, -8, -19, -20, -23, -24, -35] {
            assert!(is_fundamental(d), "{d}");
        }
        for d in [-12, -16, -27, -76, -92, -36] {
            assert!(!is_fundamental(d), "{d}");
        }
        assert!(!is_discriminant(-6));
    }

    #[test]
    fn decomposition() {
        let d = QuadDiscriminant::new(-76).unwrap();
        assert_eq!((d.delta0, d.conductor), (-19, 2));
        let d = QuadDiscriminant::new(-27).unwrap();
        assert_eq!((d.delta0, d.conductor), (-3, 3));
        let d = QuadDiscriminant::new(-64).unwrap();
        assert_eq!((d.delta0, d.conductor), (-4, 4));
        let d = QuadDiscriminant::new(-128).unwrap();
        assert_eq!((d.delta0, d.conductor), (-8, 4));
        assert!(QuadDiscriminant::new(-6).is_err());
    }

    #[test]
    fn small_class_numbers() {
        assert_eq!(class_number_forms(-19).unwrap(), 1);
        assert_eq!(class_number_forms(-23).unwrap(), 3);
        assert_eq!(class_number_forms(-7).unwrap(), 1);
        assert_eq!(class_number_forms(-35).unwrap(), 2);
        assert_eq!(class_number(-76).unwrap(), 3);
        assert_eq!(class_number(-92).unwrap(), 3);
        assert!(matches!(class_number_forms(-4), Err(Error::ExcludedDiscriminant(-4))));
        assert!(matches!(class_number_forms(-76), Err(Error::NotFundamental(-76))));
    }

    #[test]
    fn product_formula_examples() {
        let d = QuadDiscriminant::new(-19).unwrap();
        assert_eq!(kronecker_h(&d).unwrap(), int(1));
        let d = QuadDiscriminant::new(-76).unwrap();
        assert_eq!(kronecker_h(&d).unwrap(), int(4));
        assert_eq!(hurwitz_sum_by_forms(-76).unwrap(), 4);
        let d = QuadDiscriminant::new(-92).unwrap();
        assert_eq!(kronecker_h(&d).unwrap(), int(6));
        assert_eq!(hurwitz_sum_by_forms(-92).unwrap(), 6);
        assert!(kronecker_h(&QuadDiscriminant::new(-27).unwrap()).is_err());
    }

    #[test]
    fn deuring_examples() {
        let h5 = elliptic_census(5, EllipticMethod::Direct, &CensusConfig::default()).unwrap();
        let r = deuring_check(&h5, 1).unwrap();
        assert!(r.equal);
        assert_eq!(r.predicted, Rational::new(1.into(), 2.into()));

        let h7 = elliptic_census(7, EllipticMethod::Direct, &CensusConfig::default()).unwrap();
        assert!(matches!(deuring_check(&h7, 1), Err(Error::Inadmissible { .. })));

        let h11 = elliptic_census(11, EllipticMethod::Direct, &CensusConfig::default()).unwrap();
        let r = deuring_check(&h11, 3).unwrap();
        assert_eq!(r.discriminant.delta0, -35);
        assert_eq!(r.census, int(1));
        assert!(r.equal);
    }

    #[test]
    fn deuring_sweep_small_primes() {
        for q in [5u64, 7, 11, 13] {
            let h = elliptic_census(q, EllipticMethod::OrbitReduced, &CensusConfig::default()).unwrap();
            let sweep = deuring_all(&h).unwrap();
            assert!(sweep.all_equal(), "q = {q}");
            assert!(!sweep.reports.is_empty());
        }
    }
}

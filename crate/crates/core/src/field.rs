//! Small prime fields and dense polynomials over them.

use serde::Serialize;

use crate::error::{Error, Result};

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `F_q` for an odd prime `q`, with its quadratic character tabulated.
#[derive(Clone, Debug, Serialize)]
pub struct PrimeField {
    q: u32,
    chi: Vec<i8>,
    nonsquare: u32,
    inverses: Vec<u32>,
}

impl PrimeField {
    /// Largest modulus accepted; the character table is dense.
    pub const MAX_Q: u64 = 1 << 26;

    pub fn new(q: u64) -> Result<Self> {
        if q == 2 || !is_prime(q) {
            return Err(Error::NotOddPrime { q });
        }
        if q > Self::MAX_Q {
            return Err(Error::InvalidArgument(format!(
                "q = {q} exceeds the tabulated field limit {}",
                Self::MAX_Q
            )));
        }
        let qu = q as usize;
        let mut chi = vec![-1i8; qu];
        chi[0] = 0;
        for x in 1..qu {
            chi[(x * x) % qu] = 1;
        }
        let nonsquare = (1..qu).find(|&x| chi[x] == -1).expect("odd prime has nonsquares") as u32;
        let mut inverses = vec![0u32; qu];
        for x in 1..q {
            inverses[x as usize] = pow_mod(x, q - 2, q) as u32;
        }
        Ok(PrimeField {
            q: q as u32,
            chi,
            nonsquare,
            inverses,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Quadratic character `χ_q(x)` for `0 ≤ x < q`.
    #[inline]
    pub fn chi(&self, x: u32) -> i8 {
        self.chi[x as usize]
    }

    /// The smallest nonsquare in `F_q`.
    pub fn nonsquare(&self) -> u32 {
        self.nonsquare
    }

    pub fn inv(&self, x: u32) -> u32 {
        debug_assert!(x != 0);
        self.inverses[x as usize]
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    /// Evaluates a polynomial given by little-endian coefficients.
    pub fn eval(&self, coeffs: &[u32], x: u32) -> u32 {
        coeffs.iter().rev().fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }

    pub fn derivative(&self, coeffs: &[u32]) -> Vec<u32> {
        let mut d: Vec<u32> = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| self.mul(c, (i as u64 % self.q as u64) as u32))
            .collect();
        while d.last() == Some(&0) {
            d.pop();
        }
        d
    }

    /// Remainder of `a` modulo `b` in place; returns the new length of `a`.
    fn rem_in_place(&self, a: &mut [u32], mut la: usize, b: &[u32]) -> usize {
        let db = b.len() - 1;
        let lead_inv = self.inv(b[db]);
        while la > db {
            let da = la - 1;
            let factor = self.mul(a[da], lead_inv);
            if factor != 0 {
                for (i, &bc) in b.iter().enumerate() {
                    let idx = da - db + i;
                    a[idx] = self.sub(a[idx], self.mul(factor, bc));
                }
            }
            la -= 1;
            while la > 0 && a[la - 1] == 0 {
                la -= 1;
            }
        }
        la
    }

    /// Degree of `gcd(a, b)`, or `None` when both are zero.
    pub fn gcd_degree(&self, a: &[u32], b: &[u32]) -> Option<usize> {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        let mut lx = x.len();
        let mut ly = y.len();
        while lx > 0 && x[lx - 1] == 0 {
            lx -= 1;
        }
        while ly > 0 && y[ly - 1] == 0 {
            ly -= 1;
        }
        loop {
            if ly == 0 {
                return if lx == 0 { None } else { Some(lx - 1) };
            }
            lx = self.rem_in_place(&mut x, lx, &y[..ly]);
            std::mem::swap(&mut x, &mut y);
            std::mem::swap(&mut lx, &mut ly);
        }
    }

    /// `gcd(f, f′) = 1`, i.e. `f` is squarefree over `F̄_q`.
    pub fn is_separable(&self, coeffs: &[u32]) -> bool {
        const CAP: usize = 32;
        if coeffs.len() > CAP {
            let d = self.derivative(coeffs);
            return !d.is_empty() && self.gcd_degree(coeffs, &d) == Some(0);
        }
        let mut x = [0u32; CAP];
        let mut y = [0u32; CAP];
        let mut lx = coeffs.len();
        x[..lx].copy_from_slice(coeffs);
        while lx > 0 && x[lx - 1] == 0 {
            lx -= 1;
        }
        let mut ly = 0;
        for i in 1..lx {
            y[i - 1] = self.mul(x[i], (i as u64 % self.q as u64) as u32);
            if y[i - 1] != 0 {
                ly = i;
            }
        }
        if ly == 0 {
            return false;
        }
        let (mut px, mut py) = (&mut x, &mut y);
        loop {
            if ly == 0 {
                return lx == 1;
            }
            if ly == 1 {
                return true;
            }
            lx = self.rem_in_place(&mut px[..], lx, &py[..ly]);
            std::mem::swap(&mut px, &mut py);
            std::mem::swap(&mut lx, &mut ly);
        }
    }

    /// The smallest generator of `F_q^*`.
    pub fn primitive_root(&self) -> u32 {
        let q = self.q as u64;
        let mut m = q - 1;
        let mut primes = Vec::new();
        let mut p = 2;
        while p * p <= m {
            if m % p == 0 {
                primes.push(p);
                while m % p == 0 {
                    m /= p;
                }
            }
            p += 1;
        }
        if m > 1 {
            primes.push(m);
        }
        (2..q)
            .find(|&g| primes.iter().all(|&p| pow_mod(g, (q - 1) / p, q) != 1))
            .unwrap_or(1) as u32
    }

    pub fn pow(&self, x: u32, e: u64) -> u32 {
        pow_mod(x as u64, e, self.q as u64) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..40).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]);
        assert!(is_prime(1_000_003));
        assert!(!is_prime(1_000_001));
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn character_table() {
        for q in [3u64, 5, 7, 11, 13, 101] {
            let f = PrimeField::new(q).unwrap();
            let plus = (1..q as u32).filter(|&x| f.chi(x) == 1).count();
            let minus = (1..q as u32).filter(|&x| f.chi(x) == -1).count();
            assert_eq!(plus as u64, (q - 1) / 2);
            assert_eq!(minus as u64, (q - 1) / 2);
            assert_eq!(f.chi(0), 0);
            assert_eq!(f.chi(f.nonsquare()), -1);
        }
    }

    #[test]
    fn rejects_non_odd_primes() {
        assert!(PrimeField::new(2).is_err());
        assert!(PrimeField::new(9).is_err());
    }

    #[test]
    fn separability() {
        let f = PrimeField::new(5).unwrap();
        // (x − 1)² = x² − 2x + 1
        assert!(!f.is_separable(&[1, 3, 1]));
        // x² − 2 is irreducible mod 5
        assert!(f.is_separable(&[3, 0, 1]));
        // x^5 − x has derivative 5x⁴ − 1 = −1
        assert!(f.is_separable(&[0, 4, 0, 0, 0, 1]));
        // x^5 + 1 = (x + 1)^5
        assert!(!f.is_separable(&[1, 0, 0, 0, 0, 1]));
    }

    #[test]
    fn primitive_roots() {
        for (q, g) in [(3u64, 2u32), (5, 2), (7, 3), (11, 2), (13, 2), (23, 5), (41, 6)] {
            assert_eq!(PrimeField::new(q).unwrap().primitive_root(), g, "q = {q}");
        }
    }

    #[test]
    fn gcd_degrees() {
        let f = PrimeField::new(7).unwrap();
        // (x−1)(x−2) and (x−1)(x−3)
        assert_eq!(f.gcd_degree(&[2, 4, 1], &[3, 3, 1]), Some(1));
        assert_eq!(f.gcd_degree(&[], &[]), None);
        assert_eq!(f.gcd_degree(&[2, 4, 1], &[]), Some(2));
    }

    #[test]
    fn separable_count_matches_carlitz() {
        // q^d − q^{d−1} monic squarefree polynomials of degree d ≥ 2
        let f = PrimeField::new(3).unwrap();
        for d in 2..=4usize {
            let mut count = 0u64;
            let total = 3u64.pow(d as u32);
            for idx in 0..total {
                let mut c = Vec::with_capacity(d + 1);
                let mut r = idx;
                for _ in 0..d {
                    c.push((r % 3) as u32);
                    r /= 3;
                }
                c.push(1);
                if f.is_separable(&c) {
                    count += 1;
                }
            }
            assert_eq!(count, total - total / 3, "d = {d}");
        }
    }
}

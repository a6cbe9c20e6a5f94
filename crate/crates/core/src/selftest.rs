//! Fast exact-invariant checks run by `ksrefine selftest`.

use num_bigint::BigUint;
use num_traits::{Pow, Zero};
use serde::Serialize;

use crate::census::{
    elliptic_census, empirical_sn, hyperelliptic_census, nolimit_bounds, r_g, CensusConfig, EllipticMethod,
};
use crate::gaussfit::nu_lim_fit;
use crate::multiplicities::{b_n, shared_table, weyl_dimension};
use crate::reports::{histogram_to_csv_string, parse_histogram_csv};
use crate::quadrature::GaussLegendre;
use crate::weyl::{density_profile, DensityConfig, SliceEvaluator};
use crate::Rational;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, result: crate::Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

const B3_TABLE: [u64; 13] = [
    0,
    1,
    9,
    84,
    882,
    10395,
    135564,
    1927926,
    29524716,
    481835250,
    8308361040,
    150309679212,
    2836568118720,
];

pub fn run_selftest() -> Vec<Check> {
    let mut out = Vec::new();

    out.push(check("dimension sums (2g)^n, g <= 4, n <= 12", (|| {
        for g in 1..=4 {
            let table = shared_table(g, 12)?;
            for n in 0..=12 {
                let row = table.row(n).expect("row built");
                let mut sum = BigUint::zero();
                for (lambda, c) in row {
                    sum += c * weyl_dimension(g, lambda)?;
                }
                if sum != BigUint::from(2 * g).pow(n as u32) {
                    return Ok((false, format!("g = {g}, n = {n}")));
                }
            }
        }
        Ok((true, "all 52 rows".into()))
    })()));

    out.push(check("parity vanishing of c_{lambda,n}", (|| {
        for g in 1..=4 {
            let table = shared_table(g, 12)?;
            for n in 0..=12 {
                for (lambda, c) in table.row(n).expect("row built") {
                    if (lambda.size() + n as u64) % 2 == 1 && !c.is_zero() {
                        return Ok((false, format!("g = {g}, n = {n}, lambda = {lambda}")));
                    }
                }
            }
        }
        Ok((true, "no odd-parity entries".into()))
    })()));

    out.push(check("b_n(3) table, odd n <= 25", (|| {
        for (i, &expect) in B3_TABLE.iter().enumerate() {
            let n = 2 * i + 1;
            if b_n(3, n)? != BigUint::from(expect) {
                return Ok((false, format!("n = {n}")));
            }
        }
        Ok((true, "13 values".into()))
    })()));

    for g in 1..=3 {
        out.push(check(&format!("density g = {g}: F even, H odd, mass 1 +- 1e-6"), (|| {
            let s = density_profile(g, 0.02f64, 1e-6)?;
            let inv = s.check_invariants(1e-6);
            let eval = SliceEvaluator::<f64>::new(g, &DensityConfig::default())?;
            let edge = 2.0 * g as f64;
            let mass = eval.integrate_f(-edge, edge, &GaussLegendre::new(64));
            let ok = inv.min_f >= 0.0
                && inv.max_f_asymmetry <= 1e-6
                && inv.max_h_symmetry <= 1e-6
                && (mass - 1.0).abs() <= 1e-6;
            Ok((
                ok,
                format!(
                    "mass - 1 = {:.2e}, max |F(t)-F(-t)| = {:.2e}, max |H(t)+H(-t)| = {:.2e}",
                    mass - 1.0,
                    inv.max_f_asymmetry,
                    inv.max_h_symmetry
                ),
            ))
        })()));
    }

    out.push(check("nu_lim coefficients (5/4, -1/2, 1/60)", (|| {
        let fit = nu_lim_fit(3, 5)?;
        let expect = [(5, 4), (-1, 2), (1, 60)].map(|(n, d)| Rational::new(n.into(), d.into()));
        Ok((fit.coefficients == expect, format!("{:?}", fit.coefficients)))
    })()));

    out.push(check("hyperelliptic census g = 2, q = 5 identities", (|| {
        let h = hyperelliptic_census(2, 5, &CensusConfig::default())?;
        let odd_zero = (1..10).step_by(2).all(|n| empirical_sn(&h, n).raw.is_zero());
        let ok = h.total_raw() == 30000
            && h.total_mass() == Rational::from_integer(125.into())
            && h.is_symmetric()
            && odd_zero;
        Ok((ok, format!("pairs = {}, mass = {}", h.total_raw(), h.total_mass())))
    })()));

    out.push(check("census CSV round-trip", (|| {
        let h = hyperelliptic_census(2, 5, &CensusConfig::default())?;
        let e = elliptic_census(11, EllipticMethod::OrbitReduced, &CensusConfig::default())?;
        let ok = parse_histogram_csv(&histogram_to_csv_string(&h))? == h
            && parse_histogram_csv(&histogram_to_csv_string(&e))? == e;
        Ok((ok, "hyperelliptic q = 5, elliptic q = 11".into()))
    })()));

    out.push(check("r_2 = 7/45 and eps = 0 bounds (38/45, 52/45)", (|| {
        let b = nolimit_bounds(2, 0.0)?;
        let r = r_g(2);
        let expect = (Rational::new(38.into(), 45.into()), Rational::new(52.into(), 45.into()));
        Ok((r == Rational::new(7.into(), 45.into()) && b.exact == Some(expect), format!("r_2 = {r}")))
    })()));

    out
}

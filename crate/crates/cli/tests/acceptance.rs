//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::Value;

use ksrefine::anomaly::verify_certificate;
use ksrefine::census::{
    elliptic_census, empirical_sn, hyperelliptic_census, nolimit_bounds, parity_from_histogram, weil_bound,
    CensusConfig, EllipticMethod, TraceHistogram,
};
use ksrefine::classno::{deuring_all, hurwitz_sum_by_forms, is_discriminant, kronecker_h, QuadDiscriminant};
use ksrefine::field::is_prime;
use ksrefine::gaussfit::nu_lim_fit;
use ksrefine::multiplicities::{a_n, b_n};
use ksrefine::weyl::density_profile;
use ksrefine::Rational;

type Outcome = Result<String, String>;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn ksrefine(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ksrefine"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code().unwrap_or(-1);
    Ok((code, String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const B3: [&str; 13] = [
    "0",
    "1",
    "9",
    "84",
    "882",
    "10395",
    "135564",
    "1927926",
    "29524716",
    "481835250",
    "8308361040",
    "150309679212",
    "2836568118720",
];

fn moments_table() -> Outcome {
    let start = Instant::now();
    let (code, text) = ksrefine(&["moments", "--g", "3", "--n-max", "25"])?;
    let elapsed = start.elapsed();
    ensure(code == 0, || format!("exit code {code}"))?;
    let mut seen = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let n: usize = cells[0].parse().map_err(|_| format!("bad row {line}"))?;
        if n % 2 == 1 {
            ensure(cells[2] == B3[n / 2], || format!("b_{n}(3) = {}, expected {}", cells[2], B3[n / 2]))?;
            seen += 1;
        } else {
            ensure(cells[2] == "0", || format!("b_{n}(3) = {} for even n", cells[2]))?;
        }
    }
    ensure(seen == 13, || format!("{seen} odd rows"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("13 odd values exact in {:.2}s", elapsed.as_secs_f64()))
}

fn density_moments() -> Outcome {
    let s = density_profile(3, 0.02f64, 1e-6).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for n in [0u32, 2, 4, 6, 8] {
        let exact = if n == 0 { 1.0 } else { a_n(3, n as usize).unwrap().to_f64().unwrap() };
        let rel = (s.f_moment(n) - exact).abs() / exact;
        worst = worst.max(rel);
        ensure(rel <= 1e-3, || format!("F_3 moment {n}: {} vs {exact}", s.f_moment(n)))?;
    }
    for n in [3u32, 5, 7, 9] {
        let exact = b_n(3, n as usize).unwrap().to_f64().unwrap();
        let rel = (s.h_moment(n) - exact).abs() / exact;
        worst = worst.max(rel);
        ensure(rel <= 1e-3, || format!("H_3 moment {n}: {} vs {exact}", s.h_moment(n)))?;
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn gaussian_fit() -> Outcome {
    let fit = nu_lim_fit(3, 5).map_err(|e| e.to_string())?;
    ensure(fit.coefficients == vec![rat(5, 4), rat(-1, 2), rat(1, 60)], || {
        format!("coefficients {:?}", fit.coefficients)
    })?;
    for n in (1..=11).step_by(2) {
        let target = -2 * BigInt::from(b_n(3, n).unwrap());
        ensure(fit.moment(n as u32) == Rational::from_integer(target), || format!("moment {n}"))?;
    }
    let m13 = fit.moment(13);
    ensure(m13 == Rational::from_integer(BigInt::from(-2 * 135135)), || format!("moment 13 = {m13}"))?;
    ensure(m13 != Rational::from_integer(-2 * BigInt::from(b_n(3, 13).unwrap())), || "moment 13 fitted".into())?;
    Ok("(5/4, -1/2, 1/60), n = 13 gives -270270".into())
}

fn genus_two_censuses(hists: &[TraceHistogram], census_time: Duration) -> Outcome {
    for h in hists {
        let q = h.q as u128;
        ensure(h.total_raw() == 2 * q.pow(6) - 2 * q.pow(4), || format!("q = {q}: {} pairs", h.total_raw()))?;
        ensure(h.total_mass() == Rational::from_integer(BigInt::from(q.pow(3))), || {
            format!("q = {q}: mass {}", h.total_mass())
        })?;
        ensure(h.is_symmetric(), || format!("q = {q}: asymmetric"))?;
        for n in (1..=15).step_by(2) {
            ensure(empirical_sn(h, n).raw.is_zero(), || format!("q = {q}: S_{n} nonzero"))?;
        }
    }
    let qs: Vec<String> = hists.iter().map(|h| h.q.to_string()).collect();
    Ok(format!("q in {{{}}}, censuses took {:.1}s", qs.join(", "), census_time.as_secs_f64()))
}

fn parity_deviation(hists: &[TraceHistogram]) -> Outcome {
    let mut prev: Option<Rational> = None;
    let mut parts = Vec::new();
    for h in hists.iter().filter(|h| h.q <= 13) {
        let p = parity_from_histogram(h).map_err(|e| e.to_string())?;
        ensure(p.predicted_even == rat(26, 45), || format!("predicted {}", p.predicted_even))?;
        ensure(p.deviation <= rat(3, h.q as i64), || format!("q = {}: deviation {}", h.q, p.deviation))?;
        if let Some(prev) = &prev {
            ensure(&p.deviation < prev, || format!("q = {}: not decreasing", h.q))?;
        }
        parts.push(format!("{:.4}", p.deviation.to_f64().unwrap()));
        prev = Some(p.deviation);
    }
    Ok(format!("deviations {}", parts.join(" > ")))
}

fn limit_bounds() -> Outcome {
    let b = nolimit_bounds(2, 0.0).map_err(|e| e.to_string())?;
    let expect = (rat(38, 45), rat(52, 45));
    ensure(b.exact.as_ref() == Some(&expect), || format!("{:?}", b.exact))?;
    Ok("(38/45, 52/45)".into())
}

fn deuring_sweep() -> Outcome {
    let mut checked = 0;
    for q in (5u64..=31).filter(|&q| is_prime(q)) {
        let hist = elliptic_census(q, EllipticMethod::OrbitReduced, &CensusConfig::default()).map_err(|e| e.to_string())?;
        let sweep = deuring_all(&hist).map_err(|e| e.to_string())?;
        ensure(sweep.all_equal(), || format!("q = {q}: library sweep mismatch"))?;
        let bound = weil_bound(1, q);
        for t in -bound..=bound {
            if t.gcd(&(q as i64)) != 1 || t * t >= 4 * q as i64 {
                continue;
            }
            let delta = (t * t - 4 * q as i64) as i128;
            let d = QuadDiscriminant::new(delta).map_err(|e| e.to_string())?;
            if d.delta0 >= -4 {
                continue;
            }
            let forms = hurwitz_sum_by_forms(delta).map_err(|e| e.to_string())?;
            let expect = rat(forms as i64, 2);
            ensure(hist.count(t) == expect, || format!("q = {q}, t = {t}: {} vs {expect}", hist.count(t)))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} pairs (q, t), q prime in [5, 31]"))
}

fn product_formula() -> Outcome {
    let mut checked = 0;
    for delta in -4000i128..0 {
        if !is_discriminant(delta) {
            continue;
        }
        let d = QuadDiscriminant::new(delta).map_err(|e| e.to_string())?;
        if d.delta0 >= -4 {
            continue;
        }
        let h = kronecker_h(&d).map_err(|e| e.to_string())?;
        let forms = hurwitz_sum_by_forms(delta).map_err(|e| e.to_string())?;
        ensure(h == Rational::from_integer(forms.into()), || format!("delta = {delta}: {h} vs {forms}"))?;
        checked += 1;
    }
    Ok(format!("{checked} discriminants"))
}

fn big(v: &Value, key: &str) -> Result<BigInt, String> {
    v[key]
        .as_str()
        .ok_or_else(|| format!("missing {key}"))?
        .parse()
        .map_err(|_| format!("bad {key}"))
}

fn anomaly_certificate() -> Outcome {
    let (code, text) = ksrefine(&["anomaly", "--c", "0.5", "--delta0", "-19", "--format", "json"])?;
    ensure(code == 0, || format!("exit code {code}"))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let q = big(&v, "q")?;
    let t = big(&v, "t")?;
    let h = big(&v, "kronecker_h")?;
    let c = rat(1, 2);
    ensure(v["c"] == "1/2", || format!("c = {}", v["c"]))?;
    ensure(v["inequality_holds"] == true, || "inequality flag false".into())?;

    // (H/2)^2 > c^2 (4q - t^2) and t^2 <= q, both in exact rationals
    let lhs = Rational::new(h.clone(), 2.into()).pow(2);
    let radicand = BigInt::from(4) * &q - &t * &t;
    ensure(radicand.is_positive(), || "4q - t^2 <= 0".into())?;
    let rhs = &c * &c * Rational::from_integer(radicand.clone());
    ensure(lhs > rhs, || format!("(H/2)^2 = {lhs} <= {rhs}"))?;
    ensure(&t * &t <= q, || format!("t^2 > q for t = {t}"))?;

    // H itself by the reduced-forms oracle
    let delta = (&t * &t - BigInt::from(4) * &q).to_i128().ok_or("delta overflow")?;
    let forms = hurwitz_sum_by_forms(delta).map_err(|e| e.to_string())?;
    ensure(BigInt::from(forms) == h, || format!("forms give {forms}, certificate {h}"))?;

    let cert = ksrefine::anomaly::find_anomalous_trace(&c, -19, &Default::default()).map_err(|e| e.to_string())?;
    ensure(verify_certificate(&cert).map_err(|e| e.to_string())?, || "library certificate rejected".into())?;
    Ok(format!("q = {q}, t = {t}, H = {h}, ratio {:.4}", v["ratio"].as_f64().unwrap_or(f64::NAN)))
}

fn selftest() -> Outcome {
    let (code, text) = ksrefine(&["selftest", "--format", "json"])?;
    ensure(code == 0, || format!("exit code {code}"))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let rows = v["rows"].as_array().ok_or("no rows")?;
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| r["passed"] != true)
        .filter_map(|r| r["name"].as_str())
        .collect();
    ensure(failed.is_empty(), || format!("failed: {}", failed.join("; ")))?;
    Ok(format!("{} checks", rows.len()))
}

fn main() -> ExitCode {
    let cfg = CensusConfig::default();
    let census_start = Instant::now();
    let hists: Result<Vec<TraceHistogram>, String> = [5u64, 7, 11, 13, 17]
        .iter()
        .map(|&q| hyperelliptic_census(2, q, &cfg).map_err(|e| e.to_string()))
        .collect();
    let census_time = census_start.elapsed();

    let mut criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("b_n(3) table for n <= 25", Box::new(moments_table)),
        ("F_3 and H_3 grid moments", Box::new(density_moments)),
        ("nu_lim Gaussian fit", Box::new(gaussian_fit)),
    ];
    match &hists {
        Ok(h) => {
            let (a, b) = (h.clone(), h.clone());
            criteria.push(("genus 2 census identities", Box::new(move || genus_two_censuses(&a, census_time))));
            criteria.push(("parity deviation <= 3/q", Box::new(move || parity_deviation(&b))));
        }
        Err(e) => {
            let (a, b) = (e.clone(), e.clone());
            criteria.push(("genus 2 census identities", Box::new(move || Err(a))));
            criteria.push(("parity deviation <= 3/q", Box::new(move || Err(b))));
        }
    }
    criteria.push(("eps = 0 bounds for g = 2", Box::new(limit_bounds)));
    criteria.push(("Deuring counts for q <= 31", Box::new(deuring_sweep)));
    criteria.push(("Kronecker product formula, |delta| <= 4000", Box::new(product_formula)));
    criteria.push(("anomaly certificate c = 1/2, delta0 = -19", Box::new(anomaly_certificate)));
    criteria.push(("selftest", Box::new(selftest)));

    let mut all = true;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                all = false;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! CSV/JSON emission, ingestion of external trace data, and
//! prediction-versus-census tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::census::{r_g, signed_asymmetry, weil_bound, Family, TraceHistogram};
use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::gaussfit::{nu_lim_fit, vlim_reference, GaussianPolyFit};
use crate::weyl::DensitySample;
use crate::Rational;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `# ksrefine v…, g=…, q=…, normalization=…`
pub fn metadata_line(g: Option<usize>, q: Option<u64>, normalization: &str) -> String {
    let show = |v: Option<String>| v.unwrap_or_else(|| "none".into());
    format!(
        "# ksrefine v{VERSION}, g={}, q={}, normalization={normalization}",
        show(g.map(|g| g.to_string())),
        show(q.map(|q| q.to_string())),
    )
}

pub fn histogram_normalization(hist: &TraceHistogram) -> &'static str {
    match hist.family {
        Family::Hyperelliptic => "pairs/(2(q^3-q))",
        Family::Elliptic => "pairs/(q-1)",
        Family::External => "external",
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_histogram_csv<W: Write>(hist: &TraceHistogram, mut w: W) -> Result<()> {
    writeln!(w, "{}", metadata_line(Some(hist.g), Some(hist.q), histogram_normalization(hist)))?;
    writeln!(w, "q,g,family")?;
    writeln!(w, "{},{},{}", hist.q, hist.g, hist.family)?;
    let with_raw = !hist.raw_pair_counts.is_empty();
    if with_raw {
        writeln!(w, "t,raw_count,weight_num,weight_den")?;
    } else {
        writeln!(w, "t,weight_num,weight_den")?;
    }
    for (t, c) in &hist.counts {
        if with_raw {
            let raw = hist.raw_pair_counts.get(t).copied().unwrap_or(0);
            writeln!(w, "{t},{raw},{},{}", c.numer(), c.denom())?;
        } else {
            writeln!(w, "{t},{},{}", c.numer(), c.denom())?;
        }
    }
    Ok(())
}

pub fn histogram_to_csv_string(hist: &TraceHistogram) -> String {
    let mut buf = Vec::new();
    write_histogram_csv(hist, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("{what}: cannot parse {:?}", field.trim()),
    })
}

/// Parses the census CSV format.
///
/// Expected layout, with `#` comment lines and blank lines ignored:
/// a `q,g,family` header, one value line, then a `t,weight_num,weight_den`
/// or `t,raw_count,weight_num,weight_den` header followed by rows.
pub fn parse_histogram_csv(text: &str) -> Result<TraceHistogram> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let missing = |what: &str| Error::Parse {
        line: text.lines().count(),
        reason: format!("missing {what}"),
    };

    let (ln, header) = lines.next().ok_or_else(|| missing("q,g,family header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["q", "g", "family"] {
        return Err(Error::Parse {
            line: ln,
            reason: format!("expected header q,g,family, found {header:?}"),
        });
    }
    let (ln, values) = lines.next().ok_or_else(|| missing("q,g,family values"))?;
    let vals: Vec<&str> = values.split(',').collect();
    if vals.len() != 3 {
        return Err(Error::Parse {
            line: ln,
            reason: format!("expected 3 fields, found {}", vals.len()),
        });
    }
    let q: u64 = parse_field(vals[0], ln, "q")?;
    let g: usize = parse_field(vals[1], ln, "g")?;
    let family: Family = vals[2].parse().map_err(|e: Error| Error::Parse {
        line: ln,
        reason: e.to_string(),
    })?;
    if !is_prime(q) || g == 0 {
        return Err(Error::Parse {
            line: ln,
            reason: format!("q must be prime and g positive, found q = {q}, g = {g}"),
        });
    }

    let (ln, row_header) = lines.next().ok_or_else(|| missing("row header"))?;
    let cols: Vec<&str> = row_header.split(',').map(str::trim).collect();
    let with_raw = match cols.as_slice() {
        ["t", "weight_num", "weight_den"] => false,
        ["t", "raw_count", "weight_num", "weight_den"] => true,
        _ => {
            return Err(Error::Parse {
                line: ln,
                reason: format!(
                    "expected t,weight_num,weight_den or t,raw_count,weight_num,weight_den, found {row_header:?}"
                ),
            })
        }
    };
    let width = if with_raw { 4 } else { 3 };
    let bound = weil_bound(g, q);
    let mut counts = BTreeMap::new();
    let mut raw = BTreeMap::new();
    let mut seen: BTreeMap<i64, usize> = BTreeMap::new();
    for (ln, row) in lines {
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != width {
            return Err(Error::Parse {
                line: ln,
                reason: format!("expected {width} fields, found {}", f.len()),
            });
        }
        let t: i64 = parse_field(f[0], ln, "t")?;
        if let Some(first) = seen.insert(t, ln) {
            return Err(Error::Parse {
                line: ln,
                reason: format!("duplicate trace t = {t} (first seen on line {first})"),
            });
        }
        if t.abs() > bound {
            return Err(Error::Parse {
                line: ln,
                reason: format!("trace t = {t} violates the Weil bound |t| <= {bound} for g = {g}, q = {q}"),
            });
        }
        let num: BigInt = parse_field(f[width - 2], ln, "weight_num")?;
        let den: BigInt = parse_field(f[width - 1], ln, "weight_den")?;
        if !den.is_positive() {
            return Err(Error::Parse {
                line: ln,
                reason: "weight_den must be positive".into(),
            });
        }
        if num.is_negative() {
            return Err(Error::Parse {
                line: ln,
                reason: "weight must be nonnegative".into(),
            });
        }
        if with_raw {
            let r: u64 = parse_field(f[1], ln, "raw_count")?;
            if r != 0 {
                raw.insert(t, r);
            }
        }
        let w = Rational::new(num, den);
        if !w.is_zero() {
            counts.insert(t, w);
        }
    }
    Ok(TraceHistogram {
        family,
        g,
        q,
        counts,
        raw_pair_counts: raw,
    })
}

/// Reads a histogram file in the census CSV format.
pub fn ingest_external(path: &Path) -> Result<TraceHistogram> {
    parse_histogram_csv(&std::fs::read_to_string(path)?)
}

pub fn histogram_to_json(hist: &TraceHistogram) -> Value {
    let bins: Vec<Value> = hist
        .counts
        .iter()
        .map(|(t, c)| {
            let mut bin = json!({
                "t": t,
                "weight_num": c.numer().to_string(),
                "weight_den": c.denom().to_string(),
            });
            if let Some(r) = hist.raw_pair_counts.get(t) {
                bin["raw_count"] = Value::String(r.to_string());
            }
            bin
        })
        .collect();
    json!({
        "version": VERSION,
        "q": hist.q,
        "g": hist.g,
        "family": hist.family.as_str(),
        "normalization": histogram_normalization(hist),
        "bins": bins,
    })
}

pub fn histogram_from_json(v: &Value) -> Result<TraceHistogram> {
    let bad = |what: &str| Error::InvalidArgument(format!("histogram JSON: {what}"));
    let q = v["q"].as_u64().ok_or_else(|| bad("missing q"))?;
    let g = v["g"].as_u64().ok_or_else(|| bad("missing g"))? as usize;
    let family: Family = v["family"].as_str().ok_or_else(|| bad("missing family"))?.parse()?;
    let mut counts = BTreeMap::new();
    let mut raw = BTreeMap::new();
    for bin in v["bins"].as_array().ok_or_else(|| bad("missing bins"))? {
        let t = bin["t"].as_i64().ok_or_else(|| bad("bin without t"))?;
        let num: BigInt = bin["weight_num"]
            .as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad weight_num"))?;
        let den: BigInt = bin["weight_den"]
            .as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad weight_den"))?;
        if let Some(r) = bin.get("raw_count") {
            let r: u64 = r.as_str().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad raw_count"))?;
            raw.insert(t, r);
        }
        counts.insert(t, Rational::new(num, den));
    }
    Ok(TraceHistogram {
        family,
        g,
        q,
        counts,
        raw_pair_counts: raw,
    })
}

/// Writes rows as CSV after a metadata comment line.
pub fn write_rows_csv<W: Write, R: Serialize>(meta: &str, rows: &[R], headers: &[&str], mut w: W) -> Result<()> {
    writeln!(w, "{meta}")?;
    if rows.is_empty() {
        writeln!(w, "{}", headers.join(","))?;
        return Ok(());
    }
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// JSON mirror: `{"meta": …, "rows": […]}`.
pub fn rows_to_json<R: Serialize>(meta: &str, rows: &[R]) -> Value {
    json!({
        "meta": meta.trim_start_matches("# "),
        "rows": serde_json::to_value(rows).expect("rows serialize"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: usize,
    pub a_n: String,
    pub b_n: Option<String>,
    pub c2_n: Option<String>,
    pub multiplicity: Option<String>,
}

pub const MOMENT_HEADERS: [&str; 5] = ["n", "a_n", "b_n", "c2_n", "multiplicity"];

/// `𝔞_n`, `𝔟_n` (g ≥ 3), `c_{2,n}` (g ≥ 6) and optionally `c_{λ,n}`.
pub fn moment_rows(g: usize, n_max: usize, lambda: Option<&crate::Partition>) -> Result<Vec<MomentRow>> {
    use crate::multiplicities::{a_n, b_n, c2_n, multiplicity};
    let show = |v: BigUint| v.to_string();
    (0..=n_max)
        .map(|n| {
            Ok(MomentRow {
                n,
                a_n: show(a_n(g, n)?),
                b_n: if g >= 3 { Some(show(b_n(g, n)?)) } else { None },
                c2_n: if g >= 6 { Some(show(c2_n(g, n)?)) } else { None },
                multiplicity: lambda.map(|l| multiplicity(g, n, l).map(show)).transpose()?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub tau: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub nu_lim: Option<f64>,
    pub vlim: f64,
    pub f_err: f64,
    pub h_err: f64,
}

pub const DENSITY_HEADERS: [&str; 7] = ["tau", "F", "H", "nu_lim", "vlim", "f_err", "h_err"];

fn nu_lim_for(g: usize) -> Result<Option<GaussianPolyFit<Rational>>> {
    if g >= 3 {
        Ok(Some(nu_lim_fit(g, 5)?))
    } else {
        Ok(None)
    }
}

pub fn density_rows(sample: &DensitySample<f64>) -> Result<Vec<DensityRow>> {
    let fit = nu_lim_for(sample.g)?;
    Ok(sample
        .grid
        .iter()
        .enumerate()
        .map(|(i, &tau)| DensityRow {
            tau,
            f: sample.f_values[i],
            h: sample.h_values[i],
            nu_lim: fit.as_ref().map(|p| p.eval(tau)),
            vlim: vlim_reference(tau),
            f_err: sample.f_errors[i],
            h_err: sample.h_errors[i],
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub tau: f64,
    pub t: i64,
    /// `√q · counts(t) / total`.
    pub observed: f64,
    #[serde(rename = "predicted_F")]
    pub predicted_f: f64,
    /// `F − H/√q`, for `g ≥ 3`.
    pub predicted_refined: Option<f64>,
    pub residual: f64,
    pub parity_scaled: Option<f64>,
}

pub const COMPARISON_HEADERS: [&str; 7] = [
    "tau",
    "t",
    "observed",
    "predicted_F",
    "predicted_refined",
    "residual",
    "parity_scaled",
];

/// Normalization tag for comparison output.
pub fn comparison_normalization(parity_scale: bool) -> &'static str {
    if parity_scale {
        "sqrt(q)*N(t)/total;parity_scaled=even/(1+r_g),odd/(1-r_g)"
    } else {
        "sqrt(q)*N(t)/total"
    }
}

/// One row per integer `t` in the Weil range.
pub fn emit_comparison(
    hist: &TraceHistogram,
    density: &DensitySample<f64>,
    parity_scale: bool,
) -> Result<Vec<ComparisonRow>> {
    if hist.g != density.g {
        return Err(Error::GenusMismatch {
            hist: hist.g,
            density: density.g,
        });
    }
    let total = hist.total_mass();
    if total.is_zero() {
        return Ok(Vec::new());
    }
    let sq = (hist.q as f64).sqrt();
    let r = r_g(hist.g).to_f64().unwrap_or(f64::NAN);
    let bound = hist.weil_bound();
    Ok((-bound..=bound)
        .map(|t| {
            let tau = t as f64 / sq;
            let p = (hist.count(t) / &total).to_f64().unwrap_or(f64::NAN);
            let observed = sq * p;
            let predicted_f = density.interpolate_f(tau);
            let predicted_refined = (hist.g >= 3).then(|| predicted_f - density.interpolate_h(tau) / sq);
            let parity_scaled = parity_scale.then(|| {
                if t % 2 == 0 {
                    observed / (1.0 + r)
                } else {
                    observed / (1.0 - r)
                }
            });
            ComparisonRow {
                tau,
                t,
                observed,
                predicted_f,
                predicted_refined,
                residual: observed - predicted_f,
                parity_scaled,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymmetryRow {
    pub tau: f64,
    pub t: i64,
    /// `q·(N(t) − N(−t)) / total`.
    pub observed_diff: f64,
    /// `−2·H_g(τ)`.
    pub predicted: f64,
    pub vlim: f64,
    pub nu_lim: Option<f64>,
}

pub const ASYMMETRY_HEADERS: [&str; 6] = ["tau", "t", "observed_diff", "predicted", "vlim", "nu_lim"];

pub fn emit_asymmetry(hist: &TraceHistogram, density: &DensitySample<f64>) -> Result<Vec<AsymmetryRow>> {
    if hist.g != density.g {
        return Err(Error::GenusMismatch {
            hist: hist.g,
            density: density.g,
        });
    }
    let fit = nu_lim_for(hist.g)?;
    let sq = (hist.q as f64).sqrt();
    Ok(signed_asymmetry(hist)
        .into_iter()
        .map(|(t, d)| {
            let tau = t as f64 / sq;
            AsymmetryRow {
                tau,
                t,
                observed_diff: d.to_f64().unwrap_or(f64::NAN),
                predicted: -2.0 * density.interpolate_h(tau),
                vlim: vlim_reference(tau),
                nu_lim: fit.as_ref().map(|p| p.eval(tau)),
            }
        })
        .collect())
}

/// Root-mean-square residuals of `observed_diff` against `−2H_g` and `𝒱^lim`.
pub fn asymmetry_rms(rows: &[AsymmetryRow]) -> (f64, f64) {
    if rows.is_empty() {
        return (0.0, 0.0);
    }
    let n = rows.len() as f64;
    let h = rows.iter().map(|r| (r.observed_diff - r.predicted).powi(2)).sum::<f64>() / n;
    let v = rows.iter().map(|r| (r.observed_diff - r.vlim).powi(2)).sum::<f64>() / n;
    (h.sqrt(), v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::{elliptic_census, hyperelliptic_census, CensusConfig, EllipticMethod};

    fn external_text(rows: &str) -> String {
        format!("# sample\nq,g,family\n53,3,external\nt,weight_num,weight_den\n{rows}")
    }

    #[test]
    fn csv_round_trip() {
        let h = hyperelliptic_census(2, 5, &CensusConfig::default()).unwrap();
        let text = histogram_to_csv_string(&h);
        assert!(text.starts_with("# ksrefine v"));
        assert_eq!(parse_histogram_csv(&text).unwrap(), h);
        let e = elliptic_census(7, EllipticMethod::Direct, &CensusConfig::default()).unwrap();
        assert_eq!(parse_histogram_csv(&histogram_to_csv_string(&e)).unwrap(), e);
    }

    #[test]
    fn json_round_trip() {
        let h = hyperelliptic_census(2, 5, &CensusConfig::default()).unwrap();
        let v = histogram_to_json(&h);
        let text = serde_json::to_string(&v).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(histogram_from_json(&back).unwrap(), h);
    }

    #[test]
    fn ingest_three_rows() {
        let h = parse_histogram_csv(&external_text("-1,3,10\n0,1,2\n4,7,5\n")).unwrap();
        assert_eq!(h.counts.len(), 3);
        assert_eq!(h.family, Family::External);
        assert_eq!(h.count(4), Rational::new(7.into(), 5.into()));
        assert!(h.raw_pair_counts.is_empty());
        assert_eq!(parse_histogram_csv(&histogram_to_csv_string(&h)).unwrap(), h);
    }

    #[test]
    fn ingest_rejects_weil_violation() {
        let err = parse_histogram_csv(&external_text("490,1,1\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        assert!(err.to_string().contains("Weil"));
    }

    #[test]
    fn ingest_rejects_duplicates() {
        let err = parse_histogram_csv(&external_text("1,1,1\n2,1,1\n1,1,3\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 7, .. }), "{err}");
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn ingest_rejects_malformed() {
        for rows in ["1,1\n", "x,1,1\n", "1,-1,2\n", "1,1,0\n", "1,1,1,1\n"] {
            let err = parse_histogram_csv(&external_text(rows)).unwrap_err();
            assert!(matches!(err, Error::Parse { line: 5, .. }), "{rows}: {err}");
        }
        assert!(parse_histogram_csv("q,g\n").is_err());
        assert!(parse_histogram_csv("q,g,family\n9,3,external\nt,weight_num,weight_den\n").is_err());
        assert!(parse_histogram_csv("q,g,family\n53,3,external\n").is_err());
    }

    #[test]
    fn empty_asymmetry() {
        let h = parse_histogram_csv(&external_text("")).unwrap();
        let density = crate::weyl::density_profile(3, 0.1, 1e-4).unwrap();
        assert!(emit_asymmetry(&h, &density).unwrap().is_empty());
        assert!(emit_comparison(&h, &density, false).unwrap().is_empty());
    }

    #[test]
    fn comparison_mass_and_parity() {
        let h = hyperelliptic_census(2, 13, &CensusConfig::default()).unwrap();
        let density = crate::weyl::density_profile(2, 0.02, 1e-6).unwrap();
        let rows = emit_comparison(&h, &density, true).unwrap();
        let sq = 13f64.sqrt();
        let mass: f64 = rows.iter().map(|r| r.observed / sq).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[0].tau < w[1].tau));
        assert!(rows.iter().all(|r| r.residual == r.observed - r.predicted_f));
        let even: f64 = rows
            .iter()
            .filter(|r| r.t % 2 == 0)
            .map(|r| r.parity_scaled.unwrap() / sq)
            .sum();
        let odd: f64 = rows
            .iter()
            .filter(|r| r.t % 2 != 0)
            .map(|r| r.parity_scaled.unwrap() / sq)
            .sum();
        assert!((even - 0.5).abs() <= 3.0 / 13.0);
        assert!((odd - 0.5).abs() <= 3.0 / 13.0);
        let asym = emit_asymmetry(&h, &density).unwrap();
        assert!(asym.iter().all(|r| r.observed_diff == 0.0));

        let wrong = crate::weyl::density_profile(3, 0.1, 1e-4).unwrap();
        assert!(matches!(
            emit_comparison(&h, &wrong, false),
            Err(Error::GenusMismatch { hist: 2, density: 3 })
        ));
    }

    #[test]
    fn rows_csv_and_json_agree() {
        let rows = moment_rows(3, 5, None).unwrap();
        let mut buf = Vec::new();
        write_rows_csv(&metadata_line(Some(3), None, "exact"), &rows, &MOMENT_HEADERS, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# ksrefine"));
        assert_eq!(lines.next().unwrap(), "n,a_n,b_n,c2_n,multiplicity");
        assert_eq!(lines.nth(3).unwrap(), "3,0,1,,");
        let json = rows_to_json("# x", &rows);
        assert_eq!(json["rows"][3]["b_n"], "1");
        assert_eq!(json["rows"][3]["c2_n"], Value::Null);
    }
}

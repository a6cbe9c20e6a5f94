use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::Value;

use ksrefine::anomaly::{find_anomalous_trace, parse_rational, AnomalyBudget};
use ksrefine::census::{
    elliptic_census, hyperelliptic_census, nolimit_bounds, parity_from_histogram, CensusConfig, EllipticMethod,
    TraceHistogram,
};
use ksrefine::classno::{
    class_number, class_number_forms, deuring_all, deuring_check, hurwitz_sum_by_forms, kronecker_h,
    DeuringReport, QuadDiscriminant,
};
use ksrefine::gaussfit::nu_lim_fit;
use ksrefine::reports::{self, metadata_line};
use ksrefine::weyl::{density_profile, density_profile_monte_carlo, DensitySample};
use ksrefine::{Partition, Rational};

#[derive(Parser, Debug)]
#[command(name = "ksrefine", version, about = "Refined Katz-Sarnak statistics for curves over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for censuses and quadrature.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for Monte Carlo fallbacks.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Direct,
    Orbit,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Hyperelliptic,
    Elliptic,
}

#[derive(clap::Args, Debug)]
struct HistSource {
    /// Census CSV file to read instead of running a census.
    #[arg(long, conflicts_with_all = ["family", "g", "q"])]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    g: Option<usize>,
    #[arg(long)]
    q: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tensor-power multiplicities a_n, b_n, c_{2,n}.
    Moments {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        n_max: usize,
        /// Also report the multiplicity of this partition, e.g. 1,1,1.
        #[arg(long)]
        lambda: Option<Partition>,
    },
    /// Limiting densities F_g and H_g on a grid.
    Density {
        #[arg(long)]
        g: usize,
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Samples for the Monte Carlo fallback used when g > 4.
        #[arg(long, default_value_t = 2_000_000)]
        samples: usize,
    },
    /// Exact Gaussian-polynomial fit to -2 b_n.
    FitNulim {
        #[arg(long, default_value_t = 3)]
        g: usize,
        #[arg(long, default_value_t = 5)]
        degree: usize,
        /// Targets come from the exact b_n table (the only supported source).
        #[arg(long)]
        moments_from_table: bool,
        /// Report moments up to this odd order.
        #[arg(long, default_value_t = 13)]
        check_to: usize,
    },
    /// Weighted hyperelliptic census.
    CensusHyp {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 1_000_000_000)]
        budget: u128,
    },
    /// Weighted elliptic census.
    CensusEll {
        #[arg(long)]
        q: u64,
        #[arg(long, value_enum, default_value_t = MethodArg::Orbit)]
        method: MethodArg,
        #[arg(long, default_value_t = 1_000_000_000)]
        budget: u128,
    },
    /// Even/odd trace masses against (1 + r_g)/2.
    Parity {
        #[arg(long)]
        g: usize,
        /// One or more primes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        #[arg(long, default_value_t = 1_000_000_000)]
        budget: u128,
    },
    /// Bound constants b_g, c_g for a given eps.
    Bounds {
        #[arg(long)]
        g: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Class numbers and the Kronecker class number of a discriminant.
    Classno {
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
    },
    /// Compare H(t^2 - 4q)/2 with the elliptic census.
    Deuring {
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<i64>,
    },
    /// Construct a trace with an anomalously large elliptic count.
    Anomaly {
        #[arg(long)]
        c: String,
        #[arg(long, allow_hyphen_values = true)]
        delta0: i64,
        /// Candidates (x, y) examined in the prime search.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Census against the limiting density F_g.
    Compare {
        #[command(flatten)]
        source: HistSource,
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        /// Divide even-t rows by 1 + r_g and odd-t rows by 1 - r_g.
        #[arg(long)]
        parity_scale: bool,
    },
    /// Signed asymmetry against -2 H_g, vlim and nu_lim.
    Asymmetry {
        #[command(flatten)]
        source: HistSource,
        #[arg(long, default_value_t = 0.02)]
        step: f64,
    },
    /// Run the exact-invariant checks.
    Selftest,
}

struct Output {
    format: Format,
    sink: Box<dyn Write>,
}

impl Output {
    fn open(cli: &Cli) -> Result<Self> {
        let sink: Box<dyn Write> = match &cli.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Output {
            format: cli.format,
            sink,
        })
    }

    fn rows<R: Serialize>(&mut self, meta: &str, rows: &[R], headers: &[&str]) -> Result<()> {
        match self.format {
            Format::Csv => reports::write_rows_csv(meta, rows, headers, &mut self.sink)?,
            Format::Json => self.json(&reports::rows_to_json(meta, rows))?,
        }
        Ok(())
    }

    fn json(&mut self, v: &Value) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.sink, v)?;
        writeln!(self.sink)?;
        Ok(())
    }

    fn histogram(&mut self, hist: &TraceHistogram) -> Result<()> {
        match self.format {
            Format::Csv => reports::write_histogram_csv(hist, &mut self.sink)?,
            Format::Json => self.json(&reports::histogram_to_json(hist))?,
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.sink.flush()?;
        Ok(())
    }
}

fn census_config(cli: &Cli, budget: u128) -> CensusConfig {
    CensusConfig {
        threads: cli.threads,
        budget,
    }
}

fn load_histogram(cli: &Cli, src: &HistSource) -> Result<TraceHistogram> {
    if let Some(path) = &src.input {
        return Ok(reports::ingest_external(path)?);
    }
    let q = src.q.context("either --input or --q is required")?;
    let cfg = census_config(cli, 1_000_000_000);
    match src.family.unwrap_or(FamilyArg::Hyperelliptic) {
        FamilyArg::Hyperelliptic => Ok(hyperelliptic_census(src.g.unwrap_or(2), q, &cfg)?),
        FamilyArg::Elliptic => {
            if matches!(src.g, Some(g) if g != 1) {
                bail!("elliptic censuses have g = 1");
            }
            Ok(elliptic_census(q, EllipticMethod::OrbitReduced, &cfg)?)
        }
    }
}

fn density_for(cli: &Cli, g: usize, step: f64) -> Result<DensitySample<f64>> {
    if g <= 4 {
        Ok(density_profile(g, step, 1e-6)?)
    } else {
        Ok(density_profile_monte_carlo(g, step, 2_000_000, cli.seed)?)
    }
}

fn rational_pair(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Serialize)]
struct FitRow {
    n: usize,
    coefficient: Option<String>,
    fitted_moment: String,
    minus_two_b_n: String,
    equal: bool,
}

#[derive(Serialize)]
struct ParityRow {
    g: usize,
    q: u64,
    even_mass: String,
    odd_mass: String,
    r_g: String,
    predicted_even: String,
    deviation: String,
    deviation_f64: f64,
    envelope_3_over_q: f64,
}

#[derive(Serialize)]
struct BoundsRow {
    g: usize,
    eps: f64,
    v: f64,
    b_max: f64,
    c_min: f64,
    b_exact: Option<String>,
    c_exact: Option<String>,
}

#[derive(Serialize)]
struct ClassnoRow {
    delta: i64,
    delta0: i64,
    conductor: String,
    h_forms: u64,
    h_delta0: Option<u64>,
    kronecker_h: Option<String>,
    hurwitz_sum: u64,
}

#[derive(Serialize)]
struct DeuringRow {
    q: u64,
    t: i64,
    delta: String,
    delta0: i64,
    conductor: String,
    predicted: String,
    census: String,
    equal: bool,
}

impl From<&DeuringReport> for DeuringRow {
    fn from(r: &DeuringReport) -> Self {
        DeuringRow {
            q: r.q,
            t: r.t,
            delta: r.discriminant.delta.to_string(),
            delta0: r.discriminant.delta0,
            conductor: r.discriminant.conductor.to_string(),
            predicted: rational_pair(&r.predicted),
            census: rational_pair(&r.census),
            equal: r.equal,
        }
    }
}

#[derive(Serialize)]
struct SelftestRow {
    name: String,
    passed: bool,
    detail: String,
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // later calls would fail only if a pool already exists; ignore that case
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let mut out = Output::open(cli)?;
    let mut failure = None;
    match &cli.command {
        Command::Moments { g, n_max, lambda } => {
            let rows = reports::moment_rows(*g, *n_max, lambda.as_ref())?;
            let meta = metadata_line(Some(*g), None, "exact multiplicities");
            out.rows(&meta, &rows, &reports::MOMENT_HEADERS)?;
        }
        Command::Density { g, step, tol, samples } => {
            let sample = if *g <= 4 {
                density_profile(*g, *step, *tol)?
            } else {
                density_profile_monte_carlo(*g, *step, *samples, cli.seed)?
            };
            let method = match sample.method {
                ksrefine::weyl::DensityMethod::Quadrature => "quadrature",
                ksrefine::weyl::DensityMethod::MonteCarlo => "monte-carlo",
            };
            let meta = metadata_line(Some(*g), None, &format!("probability density ({method})"));
            out.rows(&meta, &reports::density_rows(&sample)?, &reports::DENSITY_HEADERS)?;
        }
        Command::FitNulim {
            g,
            degree,
            check_to,
            ..
        } => {
            let fit = nu_lim_fit(*g, *degree)?;
            let top = (*check_to).max(*degree);
            let mut rows = Vec::new();
            for n in (1..=top).step_by(2) {
                let target: BigInt = BigInt::from(ksrefine::multiplicities::b_n(*g, n)?) * -2;
                let moment = fit.moment(n as u32);
                rows.push(FitRow {
                    n,
                    coefficient: fit.coefficients.get(n / 2).map(rational_pair),
                    equal: moment == Rational::from_integer(target.clone()),
                    fitted_moment: rational_pair(&moment),
                    minus_two_b_n: target.to_string(),
                });
            }
            let meta = metadata_line(Some(*g), None, &format!("P(tau)*phi(tau), degree {degree}"));
            out.rows(
                &meta,
                &rows,
                &["n", "coefficient", "fitted_moment", "minus_two_b_n", "equal"],
            )?;
        }
        Command::CensusHyp { g, q, budget } => {
            out.histogram(&hyperelliptic_census(*g, *q, &census_config(cli, *budget))?)?;
        }
        Command::CensusEll { q, method, budget } => {
            let method = match method {
                MethodArg::Direct => EllipticMethod::Direct,
                MethodArg::Orbit => EllipticMethod::OrbitReduced,
            };
            out.histogram(&elliptic_census(*q, method, &census_config(cli, *budget))?)?;
        }
        Command::Parity { g, q, budget } => {
            let mut rows = Vec::new();
            for &q in q {
                let p = parity_from_histogram(&hyperelliptic_census(*g, q, &census_config(cli, *budget))?)?;
                rows.push(ParityRow {
                    g: p.g,
                    q: p.q,
                    even_mass: rational_pair(&p.even_mass),
                    odd_mass: rational_pair(&p.odd_mass),
                    r_g: rational_pair(&p.r_g),
                    predicted_even: rational_pair(&p.predicted_even),
                    deviation_f64: p.deviation.to_f64().unwrap_or(f64::NAN),
                    deviation: rational_pair(&p.deviation),
                    envelope_3_over_q: 3.0 / q as f64,
                });
            }
            let meta = metadata_line(Some(*g), None, "mass fraction");
            out.rows(
                &meta,
                &rows,
                &[
                    "g",
                    "q",
                    "even_mass",
                    "odd_mass",
                    "r_g",
                    "predicted_even",
                    "deviation",
                    "deviation_f64",
                    "envelope_3_over_q",
                ],
            )?;
        }
        Command::Bounds { g, eps } => {
            let b = nolimit_bounds(*g, *eps)?;
            let row = BoundsRow {
                g: b.g,
                eps: b.eps,
                v: b.v,
                b_max: b.b_max,
                c_min: b.c_min,
                b_exact: b.exact.as_ref().map(|e| rational_pair(&e.0)),
                c_exact: b.exact.as_ref().map(|e| rational_pair(&e.1)),
            };
            let meta = metadata_line(Some(*g), None, "bound constants");
            out.rows(&meta, &[row], &["g", "eps", "v", "b_max", "c_min", "b_exact", "c_exact"])?;
        }
        Command::Classno { delta } => {
            let d = QuadDiscriminant::new(*delta as i128)?;
            let row = ClassnoRow {
                delta: *delta,
                delta0: d.delta0,
                conductor: d.conductor.to_string(),
                h_forms: class_number(d.delta)?,
                h_delta0: class_number_forms(d.delta0).ok(),
                kronecker_h: kronecker_h(&d).ok().map(|h| rational_pair(&h)),
                hurwitz_sum: hurwitz_sum_by_forms(d.delta)?,
            };
            let meta = metadata_line(None, None, "class numbers");
            out.rows(
                &meta,
                &[row],
                &["delta", "delta0", "conductor", "h_forms", "h_delta0", "kronecker_h", "hurwitz_sum"],
            )?;
        }
        Command::Deuring { q, t } => {
            let hist = elliptic_census(*q, EllipticMethod::OrbitReduced, &census_config(cli, 1_000_000_000))?;
            let reports_list = match t {
                Some(t) => vec![deuring_check(&hist, *t)?],
                None => deuring_all(&hist)?.reports,
            };
            let rows: Vec<DeuringRow> = reports_list.iter().map(DeuringRow::from).collect();
            if let Some(bad) = rows.iter().find(|r| !r.equal) {
                failure = Some(format!("mismatch at q = {}, t = {}", bad.q, bad.t));
            }
            let meta = metadata_line(Some(1), Some(*q), "H(t^2-4q)/2 vs pairs/(q-1)");
            out.rows(
                &meta,
                &rows,
                &["q", "t", "delta", "delta0", "conductor", "predicted", "census", "equal"],
            )?;
        }
        Command::Anomaly { c, delta0, budget } => {
            let c = parse_rational(c)?;
            let budget = AnomalyBudget {
                candidates: *budget,
                census: CensusConfig {
                    threads: cli.threads,
                    ..AnomalyBudget::default().census
                },
                ..Default::default()
            };
            let cert = find_anomalous_trace(&c, *delta0, &budget)?;
            let value = serde_json::to_value(&cert)?;
            match out.format {
                Format::Json => out.json(&value)?,
                Format::Csv => {
                    let meta = metadata_line(Some(1), None, "certificate");
                    let mut rows = Vec::new();
                    flatten("", &value, &mut rows);
                    out.rows(&meta, &rows, &["field", "value"])?;
                }
            }
        }
        Command::Compare {
            source,
            step,
            parity_scale,
        } => {
            let hist = load_histogram(cli, source)?;
            let density = density_for(cli, hist.g, *step)?;
            let rows = reports::emit_comparison(&hist, &density, *parity_scale)?;
            let meta = metadata_line(
                Some(hist.g),
                Some(hist.q),
                reports::comparison_normalization(*parity_scale),
            );
            out.rows(&meta, &rows, &reports::COMPARISON_HEADERS)?;
        }
        Command::Asymmetry { source, step } => {
            let hist = load_histogram(cli, source)?;
            let density = density_for(cli, hist.g, *step)?;
            let rows = reports::emit_asymmetry(&hist, &density)?;
            let meta = metadata_line(Some(hist.g), Some(hist.q), "q*(N(t)-N(-t))/total");
            out.rows(&meta, &rows, &reports::ASYMMETRY_HEADERS)?;
        }
        Command::Selftest => {
            let rows: Vec<SelftestRow> = ksrefine::selftest::run_selftest()
                .into_iter()
                .map(|c| SelftestRow {
                    name: c.name,
                    passed: c.passed,
                    detail: c.detail,
                })
                .collect();
            let failed = rows.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                failure = Some(format!("{failed} selftest check(s) failed"));
            }
            let meta = metadata_line(None, None, "selftest");
            out.rows(&meta, &rows, &["name", "passed", "detail"])?;
        }
    }
    out.finish()?;
    // domain failures found after the report was written
    match failure {
        Some(msg) => bail!(msg),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct FieldRow {
    field: String,
    value: String,
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<FieldRow>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, rows);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_array() || i.is_object()) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), child, rows);
            }
        }
        Value::Array(items) => rows.push(FieldRow {
            field: prefix.into(),
            value: items.iter().map(scalar_text).collect::<Vec<_>>().join(";"),
        }),
        other => rows.push(FieldRow {
            field: prefix.into(),
            value: scalar_text(other),
        }),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print to stdout and succeed; usage errors exit 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

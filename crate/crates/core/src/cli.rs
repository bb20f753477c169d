//! The `orbitgauge` command line.
//!
//! Every scalar crosses this boundary as an exact string. Results go to
//! standard output (or `--out`); failures print one JSON object on standard
//! error and exit with 2 for invalid input, 1 when a required check fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    consistency_check, elldist_report, lower_sinkhole_pair, lower_trunc_vs_all_ellipsoids,
    quasiembed_verify, replay, upper_sinkhole_pair, upper_trunc_vs_ellipsoid,
    upper_trunc_vs_ellipsoid_for, v34_report, BoundCertificate, ConsistencyReport,
    HalfExpSurrogate, SurrogateEntry,
};
use crate::diophantine::{certify_beta, dirichlet_tuple, witness_for_beta, DirichletWitness};
use crate::domains::{parse_domain, DomainSpec, EllipsoidSpec};
use crate::error::{Error, Result};
use crate::numeric::{ExtRational, Rational};
use crate::persistence::{barcode_from_orbits, CertifiedBarcode};
use crate::reeb::{
    corner_period_infimum, ellipsoid_spectrum, orbits_to_csv, sinkhole_spectrum,
    trunc_nontrivial_period_infimum, trunc_orbits, tube_orbits, ReebOrbit,
};

#[derive(Parser, Debug)]
#[command(
    name = "orbitgauge",
    version,
    about = "Certified Reeb-orbit and Banach-Mazur bound engine"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "ORBITGAUGE_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(clap::Args, Debug, Clone)]
pub struct DomainArg {
    /// Domain descriptor as inline JSON.
    #[arg(long, conflicts_with = "input")]
    pub domain: Option<String>,

    /// File holding the domain descriptor.
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed Reeb orbits up to a period cap.
    Spectrum {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long, value_name = "P/Q")]
        cap: Rational,
        /// Largest corner-family iterate listed.
        #[arg(long, default_value_t = 8)]
        ncap: u64,
    },
    /// Certified barcode in one degree.
    Barcode {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long, allow_hyphen_values = true)]
        degree: i64,
        #[arg(long, value_name = "P/Q")]
        window: Rational,
        #[arg(long, default_value_t = 8)]
        ncap: u64,
    },
    /// Dirichlet witness and its certified window of beta values.
    BetaSearch {
        /// Capacities a_1,...,a_{n+1}.
        #[arg(long, value_parser = parse_list)]
        a: RationalList,
        #[arg(long, default_value_t = 1)]
        min_pn: u64,
        /// Certify this beta against the witness found.
        #[arg(long)]
        beta: Option<Rational>,
    },
    /// A single bound certificate.
    Bound {
        #[arg(long, value_enum)]
        kind: BoundKind,
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        beta: Option<Rational>,
        /// Dirichlet witness as JSON; searched for when absent.
        #[arg(long)]
        witness: Option<String>,
        #[arg(long, value_parser = parse_list)]
        eps: Option<RationalList>,
        #[arg(long, value_parser = parse_list)]
        zeta: Option<RationalList>,
    },
    /// Lower and upper bounds between V_3 and V_4.
    V34 {
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long)]
        eps: Rational,
    },
    /// Bounds along a sequence of Dirichlet windows.
    Elldist {
        #[arg(long, value_parser = parse_list, default_value = "1,1")]
        a: RationalList,
        #[arg(long, value_delimiter = ',', default_value = "3,30,300")]
        r: Vec<u64>,
    },
    /// Quasi-isometry check for the sinkhole embedding of two points.
    Quasiembed {
        #[arg(long, value_parser = parse_list)]
        x: RationalList,
        #[arg(long, value_parser = parse_list)]
        y: RationalList,
        /// Surrogate table entries `[{"x","value","log_err"}]` as JSON.
        #[arg(long)]
        surrogate: Option<String>,
        #[arg(long, default_value = "1/1000000")]
        accuracy: Rational,
    },
    /// Replay and cross-check a file of certificates.
    Check {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    /// Truncated ellipsoid against its ambient ellipsoid.
    Coarse,
    /// Every ellipsoid against a truncated ellipsoid.
    Dellu,
    Uppersink,
    Quasicor,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalList(pub Vec<Rational>);

fn parse_list(s: &str) -> std::result::Result<RationalList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<Rational>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(RationalList)
}

fn read_file(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn load_domain(arg: &DomainArg) -> Result<DomainSpec> {
    match (&arg.domain, &arg.input) {
        (Some(text), _) => parse_domain(text),
        (None, Some(path)) => parse_domain(&read_file(path)?),
        (None, None) => Err(Error::InvalidArgument(
            "one of --domain or --in is required".into(),
        )),
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn orbits_for(domain: &DomainSpec, cap: &Rational, ncap: u64) -> Result<Vec<ReebOrbit>> {
    match domain {
        DomainSpec::Ellipsoid(e) => ellipsoid_spectrum(e, cap),
        DomainSpec::Truncated(t) => trunc_orbits(t, cap, ncap),
        DomainSpec::RadialTube(r) => tube_orbits(&r.base, &r.profile, cap, ncap),
        DomainSpec::Sinkhole(s) => sinkhole_spectrum(s, cap),
    }
}

// Corner families past `ncap` are not listed, so their common lower bound
// has to clear the window on its own.
fn check_corner_clearance(domain: &DomainSpec, window: &Rational) -> Result<()> {
    let infimum = match domain {
        DomainSpec::Truncated(t) => Some(trunc_nontrivial_period_infimum(t).value),
        DomainSpec::RadialTube(r) => {
            corner_period_infimum(r.base.capacities(), &r.profile).map(|p| p.value)
        }
        _ => None,
    };
    match infimum {
        Some(p) if p < *window => Err(Error::HypothesisViolated(format!(
            "corner families reach period {p} below window end {window}"
        ))),
        _ => Ok(()),
    }
}

fn barcode_csv(bc: &CertifiedBarcode) -> String {
    let mut out = String::from("degree,birth,cert_end\n");
    for bar in bc.bars() {
        out.push_str(&format!("{},{},{}\n", bc.degree(), bar.birth, bar.cert_end));
    }
    out
}

fn certs_csv(certs: &[&BoundCertificate]) -> String {
    let mut out = String::from("quantity,direction,from_domain,to_domain,value,attained\n");
    for c in certs {
        let q = serde_json::to_value(c.quantity).expect("serializable");
        let d = serde_json::to_value(c.direction).expect("serializable");
        out.push_str(&format!(
            "{},{},\"{}\",\"{}\",{},{}\n",
            q.as_str().unwrap_or_default(),
            d.as_str().unwrap_or_default(),
            c.from_domain,
            c.to_domain,
            c.value,
            c.attained
        ));
    }
    out
}

fn render<T: Serialize>(
    value: &T,
    format: Format,
    csv: impl FnOnce() -> Option<String>,
) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string(value).expect("serializable") + "\n"),
        Format::Pretty => Ok(serde_json::to_string_pretty(value).expect("serializable") + "\n"),
        Format::Csv => csv().ok_or_else(|| {
            Error::InvalidArgument("csv output is not available for this command".into())
        }),
    }
}

#[derive(Serialize)]
struct CheckEntry {
    index: usize,
    rule: Value,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct CheckReport {
    passed: bool,
    replayed: Vec<CheckEntry>,
    consistency: ConsistencyReport,
}

fn load_certificates(text: &str) -> Result<Vec<BoundCertificate>> {
    let v: Value = parse_json(text, "certificate file")?;
    let list = match &v {
        Value::Array(_) => v,
        Value::Object(map) if map.contains_key("certificates") => map["certificates"].clone(),
        Value::Object(_) => Value::Array(vec![v]),
        _ => {
            return Err(Error::Parse(
                "expected a certificate, a list of them, or a report".into(),
            ))
        }
    };
    serde_json::from_value(list).map_err(|e| Error::Parse(format!("certificates: {e}")))
}

/// Runs one parsed command and returns its rendered output.
///
/// `Ok((text, success))`: a `check` that finds a problem still renders its
/// report but is not a success.
pub fn execute(cli: &Cli) -> Result<(String, bool)> {
    let format = cli.format;
    let jobs = cli.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if jobs == 0 {
        return Err(Error::InvalidArgument("--jobs must be positive".into()));
    }
    let text = match &cli.command {
        Command::Spectrum { domain, cap, ncap } => {
            if !cap.is_positive() || *ncap == 0 {
                return Err(Error::InvalidArgument("caps must be positive".into()));
            }
            let d = load_domain(domain)?;
            let orbits = orbits_for(&d, cap, *ncap)?;
            render(&orbits, format, || Some(orbits_to_csv(&orbits)))?
        }
        Command::Barcode {
            domain,
            degree,
            window,
            ncap,
        } => {
            if !window.is_positive() || *ncap == 0 {
                return Err(Error::InvalidArgument(
                    "window and caps must be positive".into(),
                ));
            }
            let d = load_domain(domain)?;
            check_corner_clearance(&d, window)?;
            let orbits = orbits_for(&d, window, *ncap)?;
            let bc = barcode_from_orbits(&orbits, *degree, &ExtRational::Finite(window.clone()))?;
            render(&bc, format, || Some(barcode_csv(&bc)))?
        }
        Command::BetaSearch { a, min_pn, beta } => {
            let base = EllipsoidSpec::new(a.0.clone())?;
            let w = dirichlet_tuple(&base, *min_pn)?;
            let certified = match beta {
                Some(b) => Some(certify_beta(&base, b, &w)?),
                None => None,
            };
            let out = json!({ "witness": w, "certificate": certified });
            render(&out, format, || {
                let p: Vec<String> = w.p.iter().map(|p| p.to_string()).collect();
                Some(format!(
                    "p,window_lo,window_hi\n{},{},{}\n",
                    p.join(" "),
                    w.window.0,
                    w.window.1
                ))
            })?
        }
        Command::Bound {
            kind,
            domain,
            beta,
            witness,
            eps,
            zeta,
        } => {
            let cert = match kind {
                BoundKind::Coarse => match (beta, &domain.domain, &domain.input) {
                    (Some(b), None, None) => upper_trunc_vs_ellipsoid(b)?,
                    _ => match load_domain(domain)? {
                        DomainSpec::Truncated(t) => upper_trunc_vs_ellipsoid_for(&t)?,
                        _ => {
                            return Err(Error::InvalidArgument(
                                "--kind coarse needs --beta or a truncated domain".into(),
                            ))
                        }
                    },
                },
                BoundKind::Dellu => {
                    let DomainSpec::Truncated(t) = load_domain(domain)? else {
                        return Err(Error::InvalidArgument(
                            "--kind dellu needs a truncated domain".into(),
                        ));
                    };
                    let w: DirichletWitness = match witness {
                        Some(text) => parse_json(text, "witness")?,
                        None => witness_for_beta(&t.base, &t.beta)?,
                    };
                    lower_trunc_vs_all_ellipsoids(&t, &w)?
                }
                BoundKind::Uppersink | BoundKind::Quasicor => {
                    let (Some(e), Some(z)) = (eps, zeta) else {
                        return Err(Error::InvalidArgument(
                            "--eps and --zeta are required".into(),
                        ));
                    };
                    if *kind == BoundKind::Uppersink {
                        upper_sinkhole_pair(&e.0, &z.0)?
                    } else {
                        lower_sinkhole_pair(&e.0, &z.0)?
                    }
                }
            };
            render(&cert, format, || Some(certs_csv(&[&cert])))?
        }
        Command::V34 { n, eps } => {
            let r = v34_report(*n, eps)?;
            render(&r, format, || {
                Some(format!(
                    "n,eps,lower,upper_dc,strict\n{},{},{},{},{}\n",
                    r.n, r.eps, r.lower, r.upper_dc, r.strict
                ))
            })?
        }
        Command::Elldist { a, r } => {
            let base = EllipsoidSpec::new(a.0.clone())?;
            let rep = elldist_report(&base, r, jobs)?;
            render(&rep, format, || Some(rep.to_csv()))?
        }
        Command::Quasiembed {
            x,
            y,
            surrogate,
            accuracy,
        } => {
            let table: Vec<SurrogateEntry> = match surrogate {
                Some(text) => parse_json(text, "surrogate")?,
                None => Vec::new(),
            };
            let s = HalfExpSurrogate::new(table, accuracy.clone())?;
            let rep = quasiembed_verify(&x.0, &y.0, &s)?;
            render(&rep, format, || Some(rep.to_csv()))?
        }
        Command::Check { input } => {
            let certs = load_certificates(&read_file(input)?)?;
            let replayed: Vec<CheckEntry> = certs
                .iter()
                .enumerate()
                .map(|(index, c)| {
                    let res = replay(c);
                    CheckEntry {
                        index,
                        rule: serde_json::to_value(c.provenance.rule).expect("serializable"),
                        ok: res.is_ok(),
                        error: res.err().map(|e| e.to_string()),
                    }
                })
                .collect();
            let consistency = consistency_check(&certs);
            let passed = replayed.iter().all(|e| e.ok) && consistency.violations.is_empty();
            let rep = CheckReport {
                passed,
                replayed,
                consistency,
            };
            let text = render(&rep, format, || None)?;
            return Ok((text, passed));
        }
    };
    Ok((text, true))
}

/// Machine-readable description of an error.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    if let Error::InvalidParameter { path, .. } = e {
        v["path"] = json!(path);
    }
    v
}

fn exit_code(e: &Error) -> i32 {
    if e.is_hypothesis() {
        1
    } else {
        2
    }
}

/// Parses `args`, runs the command, writes its output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let v = json!({ "error": "Usage", "message": e.to_string().trim_end() });
            eprintln!("{v}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok((text, passed)) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| e.to_string()),
            };
            if let Err(msg) = written {
                eprintln!("{}", json!({ "error": "Io", "message": msg }));
                return 2;
            }
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

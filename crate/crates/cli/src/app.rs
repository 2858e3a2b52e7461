use crate::document::{canonical_bytes, sha256_hex, VerdictDocument};
use crate::{corpus, parse_json, read_file, CliError};
use afx_core::bratteli::default_precision;
use afx_core::cantor::{
    attracting_clopen_witness, chain_recurrent_set, pseudo_nonwandering, AttractingWitness,
    ChainReport, FiniteDynSystem,
};
use afx_core::crossed::{
    decide_embeddable, fop_check, h_witness_search, spielberg_target, stage_image_check, Budget,
    CrossedError, EmbedProblem, EmbeddabilityVerdict, FopVerdict, HWitness, SpielbergMode,
    SpielbergTarget,
};
use afx_core::json::{self, parse_rational};
use afx_core::linalg::{
    is_nonnegative_vec, is_zero_vec, total_order_extend, verify_farkas, Constraint,
    FarkasCertificate, IntVec, Lattice, OrderCertificate, OrderError, RatCone,
};
use afx_core::verify::{verify_fop_verdict, verify_verdict, verify_witness};
use afx_matrixlab::stabilize::{
    median_defects, stabilize_sweep, standard_run, to_csv, StabilizeResult,
};
use afx_matrixlab::tower::{rohlin_tower, TensorTruncation, TowerIdentities};
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "afx",
    version,
    about = "AF embeddability of crossed products by ℤ, with certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Push depth for positivity and witness search.
    #[arg(long, global = true, default_value_t = 6)]
    pub budget_stages: usize,
    /// Box bound `‖x‖∞` for witness and lattice enumeration.
    #[arg(long, global = true, default_value_t = 4)]
    pub budget_box: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Given,
    Torsion,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide AF embeddability of an embedding problem.
    Decide { input: PathBuf },
    /// Finite orbit property check.
    Fop {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        stage: usize,
        #[arg(long, default_value_t = 12)]
        orbit_bound: usize,
    },
    /// Search for a positive nonzero element of H_α.
    Witness { input: PathBuf },
    /// ε-chain recurrence sweep on a finite dynamical system.
    Chainrec {
        input: PathBuf,
        /// Strictly descending rationals, e.g. `1,1/2,1/4`.
        #[arg(long, value_delimiter = ',', default_value = "1,1/2,1/4,1/8,1/16")]
        epsilons: Vec<String>,
    },
    /// Exact Rohlin tower in a tensor truncation.
    Rohlin {
        #[arg(long)]
        m_prime: usize,
        #[arg(long)]
        k: usize,
        /// Tensor factors preceding `M_{m′}`.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        factors: Vec<usize>,
    },
    /// Stabilization experiment sweep over tower heights.
    Stabilize {
        #[arg(long, value_delimiter = ',', default_value = "5,9,17")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Extend a salient rational cone to a total order.
    OrderExtend { input: PathBuf },
    /// Positive quotient killing a subgroup or the torsion.
    Spielberg {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Given)]
        mode: ModeArg,
    },
    /// List, print or write the example corpus.
    Examples {
        name: Option<String>,
        #[arg(long)]
        size: Option<usize>,
        /// Write every example into the `--out` directory.
        #[arg(long)]
        all: bool,
    },
    /// Re-check the certificate in a verdict document.
    Verify {
        document: PathBuf,
        /// The input the document was produced from.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Certified,
    Unknown,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Certified => 0,
            Status::Unknown => 2,
        }
    }
}

#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub status: Status,
}

#[derive(Serialize, Deserialize)]
struct ChainCertificate {
    report: ChainReport,
    /// One entry per ε; `None` when every point is recurrent.
    attracting: Vec<Option<AttractingWitness>>,
}

#[derive(Serialize, Deserialize)]
struct RohlinCertificate {
    ambient_dim: usize,
    /// Diagonal support of each `e_j` in `M_{m′}`.
    supports: Vec<Vec<usize>>,
    identities: TowerIdentities,
}

#[derive(Serialize, Deserialize)]
struct StabilizeCertificate {
    results: Vec<StabilizeResult>,
    medians: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct ConeMeetsH {
    #[serde(with = "json::int_vec")]
    vector: IntVec,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("certificates serialize")
}

fn tag(v: &Value, key: &str) -> String {
    v.get(key)
        .and_then(Value::as_str)
        .unwrap_or("unknown")
        .to_string()
}

fn budget_from(cli: &Cli, precision: Option<&str>) -> Result<Budget, CliError> {
    let precision = match precision {
        Some(s) => parse_rational(s)
            .filter(|q| q > &BigRational::from_integer(0.into()))
            .ok_or_else(|| {
                CliError::Invalid(format!("AFX_PRECISION={s:?} is not a positive rational"))
            })?,
        None => default_precision(),
    };
    Ok(Budget {
        stages: cli.budget_stages,
        box_bound: cli.budget_box,
        precision,
        ..Budget::default()
    })
}

fn load_problem(path: &Path) -> Result<(EmbedProblem, String), CliError> {
    let bytes = read_file(path)?;
    let p: EmbedProblem = parse_json(&bytes)?;
    p.validate().map_err(CliError::invalid)?;
    Ok((p, sha256_hex(&bytes)))
}

fn parse_epsilons(raw: &[String]) -> Result<Vec<BigRational>, CliError> {
    raw.iter()
        .map(|s| {
            parse_rational(s.trim()).ok_or_else(|| CliError::Invalid(format!("bad epsilon {s:?}")))
        })
        .collect()
}

fn chain_csv(report: &ChainReport) -> String {
    let join = |s: &std::collections::BTreeSet<usize>| {
        s.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
    };
    let mut out = String::from("epsilon,recurrent_count,recurrent_points\n");
    for (eps, set) in report.epsilons.iter().zip(&report.recurrent_sets) {
        out.push_str(&format!(
            "{},{},{}\n",
            json::format_rational(eps),
            set.len(),
            join(set)
        ));
    }
    out.push_str(&format!(
        "intersection,{},{}\n",
        report.intersection.len(),
        join(&report.intersection)
    ));
    out
}

fn tower_certificate(
    m_prime: usize,
    k: usize,
    factors: &[usize],
) -> Result<RohlinCertificate, CliError> {
    let mut all = factors.to_vec();
    all.push(m_prime);
    let trunc = TensorTruncation::new(all).map_err(CliError::invalid)?;
    let tower = rohlin_tower(m_prime, k).map_err(CliError::invalid)?;
    let identities = trunc
        .tower_identities(factors.len(), &tower)
        .map_err(CliError::invalid)?;
    let supports = tower
        .projections
        .iter()
        .map(|e| (0..m_prime).filter(|&i| e[(i, i)] == 1).collect())
        .collect();
    Ok(RohlinCertificate {
        ambient_dim: trunc.ambient_dim(),
        supports,
        identities,
    })
}

fn doc_output(doc: VerdictDocument, status: Status) -> Output {
    Output {
        text: doc.to_pretty(),
        status,
    }
}

/// Run one command. `precision` is the value of `AFX_PRECISION`, if set.
pub fn run(cli: &Cli, precision: Option<&str>) -> Result<Output, CliError> {
    let csv_only = |what: &str| {
        if cli.format == Format::Csv {
            Err(CliError::Invalid(format!("{what} has no CSV form")))
        } else {
            Ok(())
        }
    };
    match &cli.command {
        Command::Decide { input } => {
            csv_only("decide")?;
            let budget = budget_from(cli, precision)?;
            let (p, digest) = load_problem(input)?;
            let verdict = decide_embeddable(&p, &budget).map_err(CliError::invalid)?;
            let cert = to_value(&verdict);
            let status = if verdict.is_certified() {
                Status::Certified
            } else {
                Status::Unknown
            };
            let doc = VerdictDocument::new(
                "decide",
                &tag(&cert, "verdict"),
                cert,
                json!({ "budget": budget }),
                digest,
            );
            Ok(doc_output(doc, status))
        }
        Command::Fop {
            input,
            stage,
            orbit_bound,
        } => {
            csv_only("fop")?;
            let (p, digest) = load_problem(input)?;
            let verdict = fop_check(&p, *stage, *orbit_bound);
            let status = match verdict {
                FopVerdict::Unknown { .. } => Status::Unknown,
                _ => Status::Certified,
            };
            let cert = to_value(&verdict);
            let params = json!({ "stage": stage, "orbit_bound": orbit_bound });
            Ok(doc_output(
                VerdictDocument::new("fop", &tag(&cert, "outcome"), cert, params, digest),
                status,
            ))
        }
        Command::Witness { input } => {
            csv_only("witness")?;
            let (p, digest) = load_problem(input)?;
            let params = json!({ "stages": cli.budget_stages, "box_bound": cli.budget_box });
            let doc = match h_witness_search(&p, cli.budget_stages, cli.budget_box) {
                Some(w) => (
                    VerdictDocument::new("witness", "witness_found", to_value(&w), params, digest),
                    Status::Certified,
                ),
                None => {
                    let report = stage_image_check(&p, cli.budget_box);
                    (
                        VerdictDocument::new(
                            "witness",
                            "no_witness_within_budget",
                            to_value(&report),
                            params,
                            digest,
                        ),
                        Status::Unknown,
                    )
                }
            };
            Ok(doc_output(doc.0, doc.1))
        }
        Command::Chainrec { input, epsilons } => {
            let bytes = read_file(input)?;
            let sys: FiniteDynSystem = parse_json(&bytes)?;
            sys.validate().map_err(CliError::invalid)?;
            let eps = parse_epsilons(epsilons)?;
            let report = pseudo_nonwandering(&sys, &eps).map_err(CliError::invalid)?;
            if cli.format == Format::Csv {
                return Ok(Output {
                    text: chain_csv(&report),
                    status: Status::Certified,
                });
            }
            let attracting = eps
                .iter()
                .map(|e| attracting_clopen_witness(&sys, e))
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::invalid)?;
            let cert = to_value(&ChainCertificate { report, attracting });
            let params =
                json!({ "epsilons": eps.iter().map(json::format_rational).collect::<Vec<_>>() });
            Ok(doc_output(
                VerdictDocument::new("chainrec", "chain_report", cert, params, sha256_hex(&bytes)),
                Status::Certified,
            ))
        }
        Command::Rohlin {
            m_prime,
            k,
            factors,
        } => {
            csv_only("rohlin")?;
            let cert = tower_certificate(*m_prime, *k, factors)?;
            let exact = cert.identities.all();
            let params = json!({ "m_prime": m_prime, "k": k, "factors": factors });
            let digest = sha256_hex(&canonical_bytes(&params));
            let verdict = if exact {
                "tower_exact"
            } else {
                "tower_inexact"
            };
            let status = if exact {
                Status::Certified
            } else {
                Status::Unknown
            };
            Ok(doc_output(
                VerdictDocument::new("rohlin", verdict, to_value(&cert), params, digest),
                status,
            ))
        }
        Command::Stabilize { k, runs, seed } => {
            let results = stabilize_sweep(k, *runs, *seed).map_err(CliError::invalid)?;
            let pass = results.iter().all(|r| r.pass);
            let status = if pass {
                Status::Certified
            } else {
                Status::Unknown
            };
            if cli.format == Format::Csv {
                return Ok(Output {
                    text: to_csv(&results),
                    status,
                });
            }
            let medians = median_defects(&results);
            let params = json!({ "k": k, "runs": runs, "seed": seed });
            let digest = sha256_hex(&canonical_bytes(&params));
            let verdict = if pass {
                "within_bound"
            } else {
                "bound_exceeded"
            };
            Ok(doc_output(
                VerdictDocument::new(
                    "stabilize",
                    verdict,
                    to_value(&StabilizeCertificate { results, medians }),
                    params,
                    digest,
                ),
                status,
            ))
        }
        Command::OrderExtend { input } => {
            csv_only("order-extend")?;
            let bytes = read_file(input)?;
            let cone: RatCone = parse_json(&bytes)?;
            let (verdict, cert) = match total_order_extend(&cone) {
                Ok(order) => ("total_order", to_value(&order)),
                Err(OrderError::NotSalient(f)) => ("not_salient", to_value(&f)),
                Err(e) => return Err(CliError::invalid(e)),
            };
            Ok(doc_output(
                VerdictDocument::new(
                    "order-extend",
                    verdict,
                    cert,
                    Value::Null,
                    sha256_hex(&bytes),
                ),
                Status::Certified,
            ))
        }
        Command::Spielberg { input, mode } => {
            csv_only("spielberg")?;
            let (p, digest) = load_problem(input)?;
            let m = match mode {
                ModeArg::Given => SpielbergMode::Given,
                ModeArg::Torsion => SpielbergMode::Torsion,
            };
            let (verdict, cert) = match spielberg_target(&p, p.subgroup.as_ref(), m) {
                Ok(t) => ("quotient_target", to_value(&t)),
                Err(CrossedError::ConeMeetsH(vector)) => {
                    ("cone_meets_h", to_value(&ConeMeetsH { vector }))
                }
                Err(e) => return Err(CliError::invalid(e)),
            };
            Ok(doc_output(
                VerdictDocument::new("spielberg", verdict, cert, json!({ "mode": mode }), digest),
                Status::Certified,
            ))
        }
        Command::Examples { name, size, all } => examples(cli, name.as_deref(), *size, *all),
        Command::Verify { document, input } => {
            csv_only("verify")?;
            verify(document, input.as_deref())
        }
    }
}

fn example_text(name: &str, size: Option<usize>) -> Result<String, CliError> {
    if let Some(text) = corpus::file(name) {
        return Ok(text.to_string());
    }
    match corpus::generated(name, size) {
        Some(sys) => {
            let sys = sys.map_err(CliError::invalid)?;
            let mut s = serde_json::to_string_pretty(&sys).expect("systems serialize");
            s.push('\n');
            Ok(s)
        }
        None => Err(CliError::Invalid(format!("unknown example {name:?}"))),
    }
}

fn examples(
    cli: &Cli,
    name: Option<&str>,
    size: Option<usize>,
    all: bool,
) -> Result<Output, CliError> {
    if all {
        let dir = cli
            .out
            .as_ref()
            .ok_or_else(|| CliError::Invalid("--all needs --out DIR".into()))?;
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        let mut written = String::new();
        for n in corpus::names() {
            let path = dir.join(format!("{n}.json"));
            std::fs::write(&path, example_text(n, None)?).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            written.push_str(&format!("{}\n", path.display()));
        }
        return Ok(Output {
            text: written,
            status: Status::Certified,
        });
    }
    let text = match name {
        Some(n) => example_text(n, size)?,
        None => corpus::names().iter().map(|n| format!("{n}\n")).collect(),
    };
    Ok(Output {
        text,
        status: Status::Certified,
    })
}

fn fail(msg: impl Into<String>) -> CliError {
    CliError::VerifyFailed(msg.into())
}

fn cert_as<T: serde::de::DeserializeOwned>(doc: &VerdictDocument) -> Result<T, CliError> {
    serde_json::from_value(doc.certificate.clone())
        .map_err(|e| fail(format!("certificate does not parse: {e}")))
}

/// Replay the certificate checks of `doc` against its input.
pub fn verify(doc_path: &Path, input: Option<&Path>) -> Result<Output, CliError> {
    let doc: VerdictDocument = parse_json(&read_file(doc_path)?)?;
    let parameter_driven = matches!(doc.kind.as_str(), "rohlin" | "stabilize");
    let bytes = match input {
        Some(path) => read_file(path)?,
        None if parameter_driven => canonical_bytes(&doc.parameters),
        None => {
            return Err(CliError::Invalid(format!(
                "verifying a {} document needs --input",
                doc.kind
            )))
        }
    };
    let actual = sha256_hex(&bytes);
    if actual != doc.input_digest {
        return Err(CliError::DigestMismatch {
            expected: doc.input_digest.clone(),
            actual,
        });
    }
    let problem = || -> Result<EmbedProblem, CliError> { parse_json(&bytes) };
    let checked = match doc.kind.as_str() {
        "decide" => {
            let v: EmbeddabilityVerdict = cert_as(&doc)?;
            verify_verdict(&problem()?, &v).map_err(|e| fail(e.0))?;
            if tag(&doc.certificate, "verdict") != doc.verdict {
                return Err(fail("verdict label disagrees with the certificate"));
            }
            "embeddability certificate"
        }
        "fop" => {
            let v: FopVerdict = cert_as(&doc)?;
            verify_fop_verdict(&problem()?, &v).map_err(|e| fail(e.0))?;
            "orbit certificate"
        }
        "witness" => {
            if doc.verdict == "witness_found" {
                let w: HWitness = cert_as(&doc)?;
                verify_witness(&problem()?, &w).map_err(|e| fail(e.0))?;
                "positive element of H_α"
            } else {
                "nothing certified"
            }
        }
        "chainrec" => {
            let sys: FiniteDynSystem = parse_json(&bytes)?;
            sys.validate().map_err(CliError::invalid)?;
            let c: ChainCertificate = cert_as(&doc)?;
            let r = &c.report;
            if r.epsilons.len() != r.recurrent_sets.len() || c.attracting.len() != r.epsilons.len()
            {
                return Err(fail("ε list and result lists differ in length"));
            }
            for ((eps, set), witness) in r.epsilons.iter().zip(&r.recurrent_sets).zip(&c.attracting)
            {
                let recomputed = chain_recurrent_set(&sys, eps).map_err(CliError::invalid)?;
                if &recomputed != set {
                    return Err(fail(format!(
                        "recurrent set at ε = {}",
                        json::format_rational(eps)
                    )));
                }
                match witness {
                    Some(w) if !w.verify(&sys, eps) => return Err(fail("attracting witness")),
                    None if set.len() != sys.len() => {
                        return Err(fail("missing attracting witness"))
                    }
                    _ => {}
                }
            }
            let inter = r.recurrent_sets.iter().skip(1).fold(
                r.recurrent_sets.first().cloned().unwrap_or_default(),
                |a, b| a.intersection(b).copied().collect(),
            );
            if inter != r.intersection {
                return Err(fail("intersection"));
            }
            "chain recurrence"
        }
        "rohlin" => {
            let p = &doc.parameters;
            let get = |k: &str| p.get(k).and_then(Value::as_u64).map(|x| x as usize);
            let (Some(m_prime), Some(k)) = (get("m_prime"), get("k")) else {
                return Err(fail("parameters"));
            };
            let factors: Vec<usize> =
                serde_json::from_value(p.get("factors").cloned().unwrap_or(Value::Null))
                    .map_err(|_| fail("factors"))?;
            let cert = tower_certificate(m_prime, k, &factors)?;
            let stored: RohlinCertificate = cert_as(&doc)?;
            if !cert.identities.all() || to_value(&cert) != to_value(&stored) {
                return Err(fail("tower identities"));
            }
            "exact tower identities"
        }
        "stabilize" => {
            let c: StabilizeCertificate = cert_as(&doc)?;
            for r in &c.results {
                let seed = r.seed.ok_or_else(|| fail("run without a seed"))?;
                let again = standard_run(r.k, seed).map_err(CliError::invalid)?;
                let pass = again.defect <= again.bound;
                if (again.defect - r.defect).abs() > 1e-9 || pass != r.pass {
                    return Err(fail(format!(
                        "k = {}, seed {seed}: re-measured defect {}",
                        r.k, again.defect
                    )));
                }
            }
            "re-measured defects"
        }
        "order-extend" => {
            let cone: RatCone = parse_json(&bytes)?;
            if doc.verdict == "total_order" {
                let order: OrderCertificate = cert_as(&doc)?;
                if !order.verify(&cone) {
                    return Err(fail("order does not contain the cone"));
                }
            } else {
                let f: FarkasCertificate = cert_as(&doc)?;
                let cs: Vec<Constraint> = cone
                    .generators
                    .iter()
                    .map(|g| Constraint::ge(g.clone(), BigRational::from_integer(1.into())))
                    .collect();
                if !verify_farkas(cone.ambient_dim, &cs, &f) {
                    return Err(fail("Farkas multipliers"));
                }
            }
            "order certificate"
        }
        "spielberg" => {
            let p = problem()?;
            if doc.verdict == "quotient_target" {
                let t: SpielbergTarget = cert_as(&doc)?;
                if !t.verify(&p) {
                    return Err(fail("quotient map"));
                }
            } else {
                let c: ConeMeetsH = cert_as(&doc)?;
                let (d, d0) = p.orthant_model().ok_or_else(|| fail("presentation"))?;
                let mode: ModeArg = serde_json::from_value(
                    doc.parameters.get("mode").cloned().unwrap_or(Value::Null),
                )
                .map_err(|_| fail("mode"))?;
                let h_alpha = Lattice::column_span(&d0);
                let killed = match mode {
                    ModeArg::Given => Lattice::from_generators(
                        d,
                        &p.subgroup
                            .as_ref()
                            .map(|s| s.generators.clone())
                            .unwrap_or_default(),
                    ),
                    ModeArg::Torsion => h_alpha.saturation(),
                };
                let kernel = h_alpha.sum(&killed).saturation();
                let v = &c.vector;
                if v.len() != d || is_zero_vec(v) || !is_nonnegative_vec(v) || !kernel.contains(v) {
                    return Err(fail("cone vector"));
                }
            }
            "quotient certificate"
        }
        other => {
            return Err(CliError::Invalid(format!(
                "unknown document kind {other:?}"
            )))
        }
    };
    let report =
        json!({ "kind": doc.kind, "verdict": doc.verdict, "verified": true, "checked": checked });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    Ok(Output {
        text,
        status: Status::Certified,
    })
}

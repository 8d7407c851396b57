//! Command-line front end. Each command returns an exit code and its output
//! instead of printing, so the binary stays thin and tests can call it.
//!
//! Exit codes: 0 verified, 2 refuted (or not invertible), 3 inconclusive
//! (or not converged), 1 operational error.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::norm_p_omega;
use crate::analysis::{certify, check_diff_norm, pipeline, suggest_exponents, worst, HolderCertificate};
use crate::config::{RunConfig, SweepEntry};
use crate::error::{Error, Result};
use crate::inversion::{neumann_invert, Asymptotic, InversionReport};
use crate::weights::{
    build_auxiliary, check_growth_condition, check_summability_with_margin, check_weight_axioms, AuxMode,
    ConditionReport, Status, Weight,
};

/// Version tag in the first column of every CSV row.
pub const CSV_SCHEMA: &str = "normctl-bounds/1";

/// Columns of the bound comparison CSV.
pub const CSV_COLUMNS: [&str; 15] = [
    "schema",
    "weight",
    "p",
    "theta",
    "c",
    "element",
    "status",
    "nu",
    "actual",
    "product",
    "ln_product",
    "asymptotic",
    "ln_asymptotic",
    "ordering",
    "terms",
];

#[derive(Debug, Parser)]
#[command(name = "normctl", version, about = "Norm-controlled inversion in weighted group algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weight axioms, growth condition and summability.
    VerifyWeight(Common),
    /// Differential-norm certificate (C, theta) and a random-element check.
    EstimateTheta(Common),
    /// Invert the configured elements and evaluate both bounds.
    Invert(Common),
    /// Actual norm against both bounds over a weight sweep.
    BoundCompare(Common),
    /// Ball growth of the configured group.
    Growth {
        #[command(flatten)]
        common: Common,
        /// Largest radius.
        #[arg(long, default_value_t = 20)]
        nmax: u32,
    },
    /// All stages end to end.
    Pipeline(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Print JSON instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Write CSV here (bound-compare).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trunc: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub kmax: Option<u32>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trunc {
            cfg.numeric.trunc = t;
        }
        if let Some(t) = self.tol {
            cfg.numeric.tol = t;
        }
        if let Some(k) = self.kmax {
            cfg.numeric.k_max = k;
        }
        if let Some(p) = &self.csv {
            cfg.output.csv = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Verified => 0,
        Status::Refuted => 2,
        Status::Inconclusive => 3,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            }
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::VerifyWeight(c) => cmd_verify_weight(c),
        Command::EstimateTheta(c) => cmd_estimate_theta(c),
        Command::Invert(c) => cmd_invert(c),
        Command::BoundCompare(c) => cmd_bound_compare(c),
        Command::Growth { common, nmax } => cmd_growth(common, *nmax),
        Command::Pipeline(c) => cmd_pipeline(c),
    };
    match result {
        Ok(o) => o,
        Err(e) => Outcome {
            code: 1,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Prints JSON or the table and writes the JSON to `output.json` if set.
fn finish(cfg: &RunConfig, common: &Common, code: i32, report: &Value, table: String) -> Result<Outcome> {
    let text = to_json(report)?;
    if let Some(path) = &cfg.output.json {
        std::fs::write(path, &text)?;
    }
    Ok(Outcome {
        code,
        stdout: if common.json { text } else { table },
        stderr: String::new(),
    })
}

fn condition_row(out: &mut String, rep: &ConditionReport) {
    let _ = writeln!(out, "{:<20} {:?}", rep.condition, rep.status);
    for n in &rep.notes {
        let _ = writeln!(out, "  note: {n}");
    }
}

fn cmd_verify_weight(common: &Common) -> Result<Outcome> {
    let cfg = common.load()?;
    let model = cfg.model()?;
    let w = cfg.weight_on(&model)?;
    let num = &cfg.numeric;
    let mut reports = vec![check_weight_axioms(
        &w,
        num.axiom_radius.min(model.caps().radius),
        num.axiom_samples,
        cfg.seed,
    )?];
    let mut extra = Vec::new();
    match build_auxiliary(&w, cfg.p) {
        Ok(aux) => {
            if aux.mode() == AuxMode::RhoProfile {
                reports.push(check_growth_condition(&w, num.growth_n_max, num.margin)?);
            } else {
                extra.push("growth condition not needed: u = D/w".to_string());
            }
            let exps = match (cfg.s, cfg.r) {
                (Some(s), Some(r)) => Some((s, r)),
                (s, r) => suggest_exponents(&w, cfg.p)
                    .ok()
                    .map(|(s0, r0)| (s.unwrap_or(s0), r.unwrap_or(r0))),
            };
            match exps {
                Some((s, r)) => {
                    reports.push(check_summability_with_margin(&aux, s, r, num.sum_shells, num.margin)?.0);
                }
                None => extra.push("no summability exponents for this weight".into()),
            }
        }
        Err(e @ Error::NoAuxiliaryMode(_)) => extra.push(e.to_string()),
        Err(e) => return Err(e),
    }
    let mut status = reports.iter().fold(Status::Verified, |acc, r| worst(acc, r.status));
    if !reports.iter().any(|r| r.condition == "summability") {
        status = worst(status, Status::Inconclusive);
    }
    let mut table = String::new();
    let _ = writeln!(table, "group {}  weight {}  p {}", model.family(), w.spec(), cfg.p);
    for r in &reports {
        condition_row(&mut table, r);
    }
    for n in &extra {
        let _ = writeln!(table, "note: {n}");
    }
    let _ = writeln!(table, "result {status:?}");
    let report = json!({
        "schema": "normctl-verify-weight/1",
        "group": model.family().to_string(),
        "weight": w.spec(),
        "p": cfg.p,
        "seed": cfg.seed,
        "status": status,
        "reports": reports,
        "notes": extra,
    });
    finish(&cfg, common, exit_code(status), &report, table)
}

fn certificate_outcome(e: Error) -> Result<(Status, String)> {
    match e {
        Error::NoFeasibleTheta(_) | Error::SumInconclusive(_) | Error::NoAuxiliaryMode(_) => {
            Ok((Status::Inconclusive, e.to_string()))
        }
        e => Err(e),
    }
}

fn cmd_estimate_theta(common: &Common) -> Result<Outcome> {
    let cfg = common.load()?;
    let model = cfg.model()?;
    let w = cfg.weight_on(&model)?;
    let num = &cfg.numeric;
    let mut table = String::new();
    let (status, report) = match certify(&w, cfg.p, cfg.s, cfg.r, &num.theta()) {
        Ok(cert) => {
            let diff = check_diff_norm(&cert, &w, cfg.p, num.trials, num.support_radius, cfg.seed)?;
            let status = if diff.passed() { Status::Verified } else { Status::Refuted };
            let _ = writeln!(table, "theta      {:.6}", cert.theta);
            let _ = writeln!(table, "alpha      {:.6}", cert.alpha);
            let _ = writeln!(table, "C_H        {:.6e}", cert.c_holder);
            let _ = writeln!(table, "C          {:.6e}", cert.c);
            let _ = writeln!(table, "s, r       {:.6}, {:.6}", cert.s, cert.r);
            let _ = writeln!(
                table,
                "trials     {} (seed {}), violations {}, max ratio {:.4}",
                diff.trials, diff.seed, diff.violations + diff.holder_violations, diff.max_ratio
            );
            (status, json!({ "certificate": cert, "check": diff }))
        }
        Err(e) => {
            let (status, msg) = certificate_outcome(e)?;
            let _ = writeln!(table, "no certificate: {msg}");
            (status, json!({ "error": msg }))
        }
    };
    let _ = writeln!(table, "result {status:?}");
    let mut report = report;
    report["schema"] = json!("normctl-estimate-theta/1");
    report["status"] = json!(status);
    report["seed"] = json!(cfg.seed);
    finish(&cfg, common, exit_code(status), &report, table)
}

/// The weight whose certificate bounds the inverse.
fn bound_weight(cfg: &RunConfig, w: &Weight) -> Result<Weight> {
    cfg.bound_weight_on(w.model())
}

#[derive(Serialize)]
struct ElementResult {
    name: String,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    /// `‖a⁻¹‖_{p,ω}` for the configured weight when bounds use another.
    #[serde(skip_serializing_if = "Option::is_none")]
    actual_config_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<InversionReport>,
}

fn invert_all(cfg: &RunConfig, w: &Weight, bw: &Weight, p: f64, cert: &HolderCertificate) -> Result<Vec<ElementResult>> {
    let model = w.model();
    let mut out = Vec::new();
    for (name, a) in cfg.load_elements(model)? {
        let r = match neumann_invert(&a, cert, bw, p, &cfg.numeric.inversion()) {
            Ok(rep) => {
                let status = if rep.ordering_holds(1e-9) && rep.chain.iter().all(|s| s.holds) {
                    Status::Verified
                } else {
                    Status::Refuted
                };
                let actual_config_weight = if bw.spec() != w.spec() {
                    Some(norm_p_omega(&rep.inverse, w, p)?)
                } else {
                    None
                };
                ElementResult {
                    name,
                    status,
                    error: None,
                    actual_config_weight,
                    report: Some(rep),
                }
            }
            Err(e @ Error::NotInvertible { .. }) => ElementResult {
                name,
                status: Status::Refuted,
                error: Some(e.to_string()),
                actual_config_weight: None,
                report: None,
            },
            Err(e @ Error::NotConverged { .. }) => ElementResult {
                name,
                status: Status::Inconclusive,
                error: Some(e.to_string()),
                actual_config_weight: None,
                report: None,
            },
            Err(e) => return Err(e),
        };
        out.push(r);
    }
    Ok(out)
}

fn fmt_ln(ln: f64) -> String {
    if !ln.is_finite() {
        "inf".into()
    } else if ln < 700.0 {
        format!("{:.6e}", ln.exp())
    } else {
        format!("exp({ln:.6e})")
    }
}

fn cmd_invert(common: &Common) -> Result<Outcome> {
    let cfg = common.load()?;
    if cfg.elements.is_empty() {
        return Err(Error::Config("invert needs at least one element".into()));
    }
    let model = cfg.model()?;
    let w = cfg.weight_on(&model)?;
    let bw = bound_weight(&cfg, &w)?;
    let mut table = String::new();
    let cert = match certify(&bw, cfg.p, cfg.s, cfg.r, &cfg.numeric.theta()) {
        Ok(c) => c,
        Err(e) => {
            let (status, msg) = certificate_outcome(e)?;
            let _ = writeln!(table, "no certificate: {msg}");
            let report = json!({ "schema": "normctl-invert/1", "status": status, "error": msg });
            return finish(&cfg, common, exit_code(status), &report, table);
        }
    };
    let results = invert_all(&cfg, &w, &bw, cfg.p, &cert)?;
    let status = results.iter().fold(Status::Verified, |acc, r| worst(acc, r.status));
    let _ = writeln!(
        table,
        "group {}  weight {}  bounds from {}  p {}  theta {:.6}  C {:.6e}",
        model.family(),
        w.spec(),
        bw.spec(),
        cfg.p,
        cert.theta,
        cert.c
    );
    for r in &results {
        let _ = writeln!(table, "\n[{}] {:?}", r.name, r.status);
        match &r.report {
            None => {
                let _ = writeln!(table, "  {}", r.error.as_deref().unwrap_or(""));
            }
            Some(rep) => {
                let rows: [(&str, String); 12] = [
                    ("terms", rep.terms.to_string()),
                    ("residual", format!("{:.3e} / {:.3e}", rep.residual.left, rep.residual.right)),
                    ("|a|_A", format!("{:.9}", rep.a_norm_a)),
                    ("|a|_B", format!("[{:.9}, {:.9}]", rep.a_norm_b.lower, rep.a_norm_b.upper)),
                    ("|a^-1|_B", format!("[{:.9}, {:.9}]", rep.inv_norm_b[0], rep.inv_norm_b[1])),
                    ("nu", format!("{:.6}", rep.nu)),
                    ("|c|_B", format!("[{:.9}, {:.9}] via {}", rep.c_norm_b[0], rep.c_norm_b[1], rep.certified_by)),
                    ("actual", format!("{:.12}", rep.actual)),
                    (
                        "actual (config w)",
                        r.actual_config_weight.map_or("-".into(), |v| format!("{v:.12}")),
                    ),
                    ("product", fmt_ln(rep.product.ln_value)),
                    (
                        "asymptotic",
                        match &rep.asymptotic {
                            Asymptotic::NotApplicable { .. } => "not applicable (nu < 2)".into(),
                            Asymptotic::Bound(b) => fmt_ln(b.ln_value),
                        },
                    ),
                    ("inverse support", rep.inverse_support.to_string()),
                ];
                for (k, v) in rows {
                    let _ = writeln!(table, "  {k:<18} {v}");
                }
            }
        }
    }
    let _ = writeln!(table, "\nresult {status:?}");
    let report = json!({
        "schema": "normctl-invert/1",
        "status": status,
        "seed": cfg.seed,
        "weight": w.spec(),
        "bound_weight": bw.spec(),
        "certificate": cert,
        "elements": results,
    });
    finish(&cfg, common, exit_code(status), &report, table)
}

fn na(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.12e}"),
        Some(_) => "inf".into(),
        None => "NA".into(),
    }
}

fn cmd_bound_compare(common: &Common) -> Result<Outcome> {
    let cfg = common.load()?;
    let model = cfg.model()?;
    let sweep = match &cfg.sweep {
        Some(s) => s.clone(),
        None => vec![SweepEntry {
            weight: cfg.bound_weight_on(&model)?.spec().clone(),
            p: None,
        }],
    };
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(CSV_COLUMNS).map_err(csv_err)?;
    let mut status = Status::Verified;
    let mut rows_json = Vec::new();
    for entry in &sweep {
        let w = Weight::new(entry.weight.clone(), model.clone())?;
        let p = entry.p.unwrap_or(cfg.p);
        let cert = match certify(&w, p, cfg.s, cfg.r, &cfg.numeric.theta()) {
            Ok(c) => c,
            Err(e) => {
                let (st, msg) = certificate_outcome(e)?;
                status = worst(status, st);
                rows_json.push(json!({ "weight": w.spec().to_string(), "p": p, "error": msg }));
                continue;
            }
        };
        for r in invert_all(&cfg, &w, &w, p, &cert)? {
            status = worst(status, r.status);
            let rep = r.report.as_ref();
            let asym = rep.and_then(|x| x.asymptotic.bound());
            let record = [
                CSV_SCHEMA.to_string(),
                w.spec().to_string(),
                p.to_string(),
                format!("{:.9}", cert.theta),
                format!("{:.12e}", cert.c),
                r.name.clone(),
                format!("{:?}", r.status).to_lowercase(),
                na(rep.map(|x| x.nu)),
                na(rep.map(|x| x.actual)),
                na(rep.map(|x| x.product.value)),
                na(rep.map(|x| x.product.ln_value)),
                na(asym.map(|b| b.value)),
                na(asym.map(|b| b.ln_value)),
                match rep {
                    Some(x) if x.ordering_holds(1e-9) => "ok".into(),
                    Some(_) => "violated".into(),
                    None => "NA".into(),
                },
                rep.map_or("NA".into(), |x| x.terms.to_string()),
            ];
            wtr.write_record(&record).map_err(csv_err)?;
            rows_json.push(json!({
                "weight": w.spec().to_string(),
                "p": p,
                "theta": cert.theta,
                "c": cert.c,
                "element": r.name,
                "status": r.status,
                "error": r.error,
                "nu": rep.map(|x| x.nu),
                "actual": rep.map(|x| x.actual),
                "ln_product": rep.map(|x| x.product.ln_value),
                "ln_asymptotic": asym.map(|b| b.ln_value),
            }));
        }
    }
    let csv_text = String::from_utf8(wtr.into_inner().map_err(|e| Error::Config(e.to_string()))?)
        .expect("csv output is utf-8");
    let report = json!({
        "schema": "normctl-bound-compare/1",
        "csv_schema": CSV_SCHEMA,
        "status": status,
        "seed": cfg.seed,
        "rows": rows_json,
    });
    let table = match &cfg.output.csv {
        Some(path) => {
            std::fs::write(path, &csv_text)?;
            format!("{} rows written to {}\nresult {status:?}\n", rows_json.len(), path.display())
        }
        None => csv_text,
    };
    finish(&cfg, common, exit_code(status), &report, table)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn cmd_growth(common: &Common, nmax: u32) -> Result<Outcome> {
    let cfg = common.load()?;
    let model = cfg.model()?;
    let g = model.growth_report(nmax)?;
    let mut table = String::new();
    let _ = writeln!(table, "{:>4} {:>12} {:>14}", "n", "shell", "ball");
    for (n, (s, b)) in g.shells.iter().zip(&g.balls).enumerate() {
        let _ = writeln!(table, "{n:>4} {s:>12} {b:>14}");
    }
    let _ = writeln!(
        table,
        "fitted exponent {:.4} over n in [{}, {}]",
        g.fitted_exponent, g.fit_range.0, g.fit_range.1
    );
    let mut report = serde_json::to_value(&g)?;
    report["schema"] = json!("normctl-growth/1");
    finish(&cfg, common, 0, &report, table)
}

fn cmd_pipeline(common: &Common) -> Result<Outcome> {
    let cfg = common.load()?;
    let rep = pipeline(&cfg)?;
    let mut table = String::new();
    if let Some(l) = &rep.label {
        let _ = writeln!(table, "{l}");
    }
    let _ = write!(table, "group {}  weight {}", rep.group, rep.weight);
    if let Some(bw) = &rep.bound_weight {
        let _ = write!(table, "  bounds from {bw}");
    }
    let _ = writeln!(table, "  p {}  seed {}", rep.p, rep.seed);
    for s in &rep.stages {
        let _ = writeln!(table, "{:<14} {:?}", s.name, s.status);
    }
    if let Some(c) = &rep.certificate {
        let _ = writeln!(table, "theta {:.6}  C {:.6e}", c.theta, c.c);
    }
    for e in &rep.elements {
        match &e.report {
            Some(r) => {
                let _ = writeln!(
                    table,
                    "  {:<12} actual {:.9}  product {}  nu {:.4}",
                    e.name,
                    r.actual,
                    fmt_ln(r.product.ln_value),
                    r.nu
                );
            }
            None => {
                let _ = writeln!(table, "  {:<12} {}", e.name, e.error.as_deref().unwrap_or(""));
            }
        }
    }
    match &rep.halted_at {
        Some(stage) => {
            let _ = writeln!(table, "halted at {stage}: {:?}", rep.status);
        }
        None => {
            let _ = writeln!(table, "result {:?}", rep.status);
        }
    }
    finish(&cfg, common, exit_code(rep.status), &serde_json::to_value(&rep)?, table)
}

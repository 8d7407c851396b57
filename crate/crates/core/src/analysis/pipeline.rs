use serde::Serialize;
use serde_json::{json, Value};

use super::{check_diff_norm, estimate_theta_with, suggest_exponents, HolderCertificate};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::inversion::{neumann_invert, InversionReport};
use crate::weights::{
    build_auxiliary, check_growth_condition, check_summability_with_margin, check_weight_axioms, AuxMode, Status,
};

/// Schema tag of [`PipelineReport`].
pub const PIPELINE_SCHEMA: &str = "normctl-pipeline/1";

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub name: String,
    pub status: Status,
    pub detail: Value,
}

/// Outcome of inverting one configured element.
#[derive(Clone, Debug, Serialize)]
pub struct ElementOutcome {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<InversionReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub schema: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub group: String,
    pub weight: String,
    /// Weight used from the growth stage on, when it differs from `weight`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_weight: Option<String>,
    pub p: f64,
    pub seed: u64,
    pub status: Status,
    /// The stage that stopped the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halted_at: Option<String>,
    pub stages: Vec<StageReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<HolderCertificate>,
    pub elements: Vec<ElementOutcome>,
}

impl PipelineReport {
    fn push(&mut self, name: &str, status: Status, detail: Value) -> bool {
        self.stages.push(StageReport {
            name: name.into(),
            status,
            detail,
        });
        if status != Status::Verified {
            self.status = status;
            self.halted_at = Some(name.into());
            return false;
        }
        true
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// `Refuted` dominates `Inconclusive`, which dominates `Verified`.
pub(crate) fn worst(a: Status, b: Status) -> Status {
    use Status::*;
    match (a, b) {
        (Refuted, _) | (_, Refuted) => Refuted,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => Verified,
    }
}

/// A stage that could not produce an answer.
fn inconclusive(e: &Error) -> Option<Value> {
    match e {
        Error::NoAuxiliaryMode(_) | Error::NoFeasibleTheta(_) | Error::SumInconclusive(_) => {
            Some(json!({ "error": e.to_string() }))
        }
        _ => None,
    }
}

/// Runs weight axioms, growth condition, summability, certificate,
/// inequality check, inversion of the configured elements and the bound
/// comparison, stopping at the first stage that is not verified.
///
/// The axioms are checked for the configured weight; later stages use the
/// bounding weight (see [`RunConfig::bound_weight_on`]).
///
/// Operational failures (I/O, invalid input) are returned as errors;
/// mathematical outcomes are recorded in the report.
pub fn pipeline(cfg: &RunConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let model = cfg.model()?;
    let w0 = cfg.weight_on(&model)?;
    let w = cfg.bound_weight_on(&model)?;
    let elements = cfg.load_elements(&model)?;
    let num = &cfg.numeric;
    let p = cfg.p;
    let mut rep = PipelineReport {
        schema: PIPELINE_SCHEMA.into(),
        label: cfg.label.clone(),
        group: model.family().to_string(),
        weight: w0.spec().to_string(),
        bound_weight: (w.spec() != w0.spec()).then(|| w.spec().to_string()),
        p,
        seed: cfg.seed,
        status: Status::Verified,
        halted_at: None,
        stages: Vec::new(),
        certificate: None,
        elements: Vec::new(),
    };

    let radius = num.axiom_radius.min(model.caps().radius);
    let axioms = check_weight_axioms(&w0, radius, num.axiom_samples, cfg.seed)?;
    if !rep.push("axioms", axioms.status, serde_json::to_value(&axioms)?) {
        return Ok(rep);
    }

    let aux = match build_auxiliary(&w, p) {
        Ok(aux) => aux,
        Err(e) => {
            let detail = inconclusive(&e).ok_or(e)?;
            rep.push("growth", Status::Inconclusive, detail);
            return Ok(rep);
        }
    };
    let growth = match aux.mode() {
        AuxMode::RhoProfile => {
            let g = check_growth_condition(&w, num.growth_n_max, num.margin)?;
            (g.status, serde_json::to_value(&g)?)
        }
        AuxMode::WeaklySubadditive { d } => (
            Status::Verified,
            json!({ "path": "weakly_subadditive", "d": d, "note": "u = D/w; the growth condition is not needed" }),
        ),
    };
    if !rep.push("growth", growth.0, growth.1) {
        return Ok(rep);
    }

    let (s, r) = match (cfg.s, cfg.r) {
        (Some(s), Some(r)) => (s, r),
        (s, r) => match suggest_exponents(&w, p) {
            Ok((s0, r0)) => (s.unwrap_or(s0), r.unwrap_or(r0)),
            Err(e) => {
                let detail = inconclusive(&e).ok_or(e)?;
                rep.push("summability", Status::Inconclusive, detail);
                return Ok(rep);
            }
        },
    };
    let (sum, _) = check_summability_with_margin(&aux, s, r, num.sum_shells, num.margin)?;
    if !rep.push("summability", sum.status, serde_json::to_value(&sum)?) {
        return Ok(rep);
    }

    let cert = match estimate_theta_with(&w, &aux, p, s, r, &num.theta()) {
        Ok(c) => c,
        Err(e) => {
            let detail = inconclusive(&e).ok_or(e)?;
            rep.push("certificate", Status::Inconclusive, detail);
            return Ok(rep);
        }
    };
    let ok = rep.push("certificate", Status::Verified, serde_json::to_value(&cert)?);
    rep.certificate = Some(cert.clone());
    if !ok {
        return Ok(rep);
    }

    let diff = check_diff_norm(&cert, &w, p, num.trials, num.support_radius, cfg.seed)?;
    let status = if diff.passed() { Status::Verified } else { Status::Refuted };
    if !rep.push("diff_norm", status, serde_json::to_value(&diff)?) {
        return Ok(rep);
    }

    let opts = num.inversion();
    let mut inv_status = Status::Verified;
    for (name, a) in &elements {
        let (status, error, report) = match neumann_invert(a, &cert, &w, p, &opts) {
            Ok(r) => (Status::Verified, None, Some(r)),
            Err(e @ Error::NotInvertible { .. }) => (Status::Refuted, Some(e.to_string()), None),
            Err(e @ Error::NotConverged { .. }) => (Status::Inconclusive, Some(e.to_string()), None),
            Err(e) => return Err(e),
        };
        inv_status = worst(inv_status, status);
        rep.elements.push(ElementOutcome {
            name: name.clone(),
            status,
            error,
            report,
        });
    }
    let summary: Vec<Value> = rep
        .elements
        .iter()
        .map(|o| json!({ "name": o.name, "status": o.status, "error": o.error }))
        .collect();
    if !rep.push("inversion", inv_status, json!({ "elements": summary })) {
        return Ok(rep);
    }

    let mut rows = Vec::new();
    let mut bounds_status = Status::Verified;
    for o in &rep.elements {
        let r = o.report.as_ref().expect("inverted");
        let holds = r.ordering_holds(1e-9);
        let chain_holds = r.chain.iter().all(|s| s.holds);
        if !holds || !chain_holds {
            bounds_status = Status::Refuted;
        }
        rows.push(json!({
            "name": o.name,
            "actual": r.actual,
            "ln_product": r.product.ln_value,
            "ln_asymptotic": r.asymptotic.bound().map(|b| b.ln_value),
            "nu": r.nu,
            "chain_holds": chain_holds,
            "ordering_holds": holds,
        }));
    }
    rep.push("bounds", bounds_status, json!({ "elements": rows }));
    Ok(rep)
}

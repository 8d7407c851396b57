//! Weights on group models, their auxiliary functions and the checks that
//! decide whether a weight fits the differential-norm machinery.
//!
//! Every weight here depends on an element only through its length
//! `τ(x)` (word length, or chain index for the locally finite group), so the
//! evaluation routines come in two flavours: by element and by length.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::groups::{least_squares_slope, Family, GroupElement, GroupModel, LOCALLY_FINITE_RANK};

/// Default margin for the growth condition and the power-law certificate.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Relative slack for floating-point comparisons of weight values.
const REL_SLACK: f64 = 1e-12;

/// Growth profile `ρ` of a weight `ω(x) = exp(ρ(τ(x)))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `β ln(1 + n)`
    Log { beta: f64 },
    /// `c n^α`
    Power { c: f64, alpha: f64 },
    /// `c n / ln(1 + n)^γ`, with value 0 at `n = 0`
    LogDamped { c: f64, gamma: f64 },
    /// Explicit values `ρ(0), ρ(1), ...`; evaluating past the end is an error.
    Table { values: Vec<f64> },
}

impl Profile {
    pub fn eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return match self {
                Profile::Table { values } => values
                    .first()
                    .copied()
                    .ok_or_else(|| invalid("empty profile table")),
                _ => Ok(0.0),
            };
        }
        let x = n as f64;
        Ok(match self {
            Profile::Log { beta } => beta * x.ln_1p(),
            Profile::Power { c, alpha } => c * x.powf(*alpha),
            Profile::LogDamped { c, gamma } => c * x / x.ln_1p().powf(*gamma),
            Profile::Table { values } => *values.get(n as usize).ok_or_else(|| {
                invalid(format!("profile table has no value for n = {n}"))
            })?,
        })
    }

    /// `lim ρ(2n)/ρ(n)` where it is known in closed form.
    pub fn ratio_limit(&self) -> Option<f64> {
        match self {
            Profile::Log { .. } => Some(1.0),
            Profile::Power { alpha, .. } => Some(2f64.powf(*alpha)),
            Profile::LogDamped { .. } => Some(2.0),
            Profile::Table { .. } => None,
        }
    }
}

/// The sequence `{n_i}` of the locally finite weight
/// `ω = 1 + Σ_i n_i 1_{G_{i+1} \ G_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainSequence {
    /// `n_i = base^i`
    Geometric { base: f64 },
    /// `n_1, n_2, ...` listed explicitly.
    Explicit { values: Vec<f64> },
}

impl ChainSequence {
    /// `n_i` for `i >= 1`.
    pub fn term(&self, i: u32) -> Result<f64> {
        debug_assert!(i >= 1);
        match self {
            ChainSequence::Geometric { base } => Ok(base.powi(i as i32)),
            ChainSequence::Explicit { values } => values
                .get(i as usize - 1)
                .copied()
                .ok_or_else(|| invalid(format!("chain sequence has no term n_{i}"))),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ChainSequence::Geometric { base } if *base > 1.0 => Ok(()),
            ChainSequence::Geometric { base } => {
                Err(invalid(format!("chain base must exceed 1, got {base}")))
            }
            ChainSequence::Explicit { values } => {
                if values.first().is_some_and(|v| *v < 1.0)
                    || values.windows(2).any(|w| w[1] < w[0])
                {
                    Err(invalid("chain sequence must be increasing in [1, inf)"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Weight families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `ω ≡ 1`
    Trivial,
    /// `ω_β(x) = (1 + τ(x))^β`
    Polynomial { beta: f64 },
    /// `σ_{α,C}(x) = exp(C τ(x)^α)`
    SubexpPower { alpha: f64, c: f64 },
    /// `ν_{γ,C}(x) = exp(C τ(x) / ln(1 + τ(x))^γ)`
    SubexpLog { gamma: f64, c: f64 },
    /// `1 + Σ_i n_i 1_{G_{i+1} \ G_i}` on the locally finite group.
    LocallyFinite { n: ChainSequence },
    /// `exp(ρ(τ(x)))` for a user profile. When `d` is given the weight is
    /// declared weakly subadditive with that constant.
    CustomProfile {
        profile: Profile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Trivial => write!(f, "trivial"),
            WeightSpec::Polynomial { beta } => write!(f, "polynomial(beta={beta})"),
            WeightSpec::SubexpPower { alpha, c } => write!(f, "subexp_power(alpha={alpha},c={c})"),
            WeightSpec::SubexpLog { gamma, c } => write!(f, "subexp_log(gamma={gamma},c={c})"),
            WeightSpec::LocallyFinite { .. } => write!(f, "locally_finite"),
            WeightSpec::CustomProfile { .. } => write!(f, "custom_profile"),
        }
    }
}

/// A weight bound to a group model.
#[derive(Clone, Debug)]
pub struct Weight {
    spec: WeightSpec,
    model: Arc<GroupModel>,
}

impl Weight {
    pub fn new(spec: WeightSpec, model: Arc<GroupModel>) -> Result<Self> {
        let locally_finite = model.family() == Family::LocallyFinite;
        let mismatch = || Error::WeightGroupMismatch {
            weight: spec.to_string(),
            group: model.family().to_string(),
        };
        match &spec {
            WeightSpec::Trivial => {}
            WeightSpec::LocallyFinite { n } => {
                if !locally_finite {
                    return Err(mismatch());
                }
                n.validate()?;
            }
            _ if locally_finite => return Err(mismatch()),
            WeightSpec::Polynomial { beta } => positive("beta", *beta)?,
            WeightSpec::SubexpPower { alpha, c } => {
                positive("c", *c)?;
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
                }
            }
            WeightSpec::SubexpLog { gamma, c } => {
                positive("gamma", *gamma)?;
                positive("c", *c)?;
            }
            WeightSpec::CustomProfile { d, .. } => {
                if let Some(d) = d {
                    positive("d", *d)?;
                }
            }
        }
        Ok(Self { spec, model })
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    /// The profile `ρ` with `ω = exp(ρ∘τ)`, for profile families.
    pub fn profile(&self) -> Option<Profile> {
        match &self.spec {
            WeightSpec::Polynomial { beta } => Some(Profile::Log { beta: *beta }),
            WeightSpec::SubexpPower { alpha, c } => Some(Profile::Power { c: *c, alpha: *alpha }),
            WeightSpec::SubexpLog { gamma, c } => Some(Profile::LogDamped { c: *c, gamma: *gamma }),
            WeightSpec::CustomProfile { profile, .. } => Some(profile.clone()),
            WeightSpec::Trivial | WeightSpec::LocallyFinite { .. } => None,
        }
    }

    /// `ln ω` at an element of length `n`.
    pub fn ln_at_length(&self, n: u32) -> Result<f64> {
        match &self.spec {
            WeightSpec::Trivial => Ok(0.0),
            WeightSpec::LocallyFinite { n: seq } => {
                // x ∈ G_{i+1} \ G_i has chain index i+1
                if n >= 2 {
                    Ok(seq.term(n - 1)?.ln_1p())
                } else {
                    Ok(0.0)
                }
            }
            WeightSpec::Polynomial { beta } => Ok(beta * (n as f64).ln_1p()),
            _ => self.profile().unwrap().eval(n as u64),
        }
    }

    pub fn at_length(&self, n: u32) -> Result<f64> {
        self.ln_at_length(n).map(f64::exp)
    }

    /// `ω(x)`.
    pub fn eval(&self, x: &GroupElement) -> Result<f64> {
        self.at_length(self.model.word_length(x)?)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Outcome of a finite-evidence check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Verified,
    Refuted,
    Inconclusive,
}

/// Result record of a weight or summability check.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub status: Status,
    pub evidence: Vec<Evidence>,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Evidence {
    pub label: String,
    pub value: Value,
}

impl ConditionReport {
    fn new(condition: &str) -> Self {
        Self {
            condition: condition.into(),
            status: Status::Inconclusive,
            evidence: Vec::new(),
            params: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn evidence(&mut self, label: &str, value: Value) {
        self.evidence.push(Evidence {
            label: label.into(),
            value,
        });
    }

    fn param(&mut self, name: &str, v: f64) {
        self.params.insert(name.into(), v);
    }

    /// Looks up an evidence entry by label.
    pub fn get(&self, label: &str) -> Option<&Value> {
        self.evidence.iter().find(|e| e.label == label).map(|e| &e.value)
    }
}

/// Checks `ω(e) = 1`, symmetry on `ball(radius)` and submultiplicativity on
/// every pair of `ball(3)` plus `samples` random pairs from `ball(radius)`.
///
/// The locally finite weight is also checked for `ω(st) <= max(ω(s), ω(t))`,
/// and a custom weight with a declared constant `D` for weak subadditivity.
pub fn check_weight_axioms(w: &Weight, radius: u32, samples: usize, seed: u64) -> Result<ConditionReport> {
    let mut rep = ConditionReport::new("weight_axioms");
    rep.param("radius", radius as f64);
    rep.param("samples", samples as f64);
    rep.param("seed", seed as f64);
    let model = w.model();
    let id = model.identity();
    let at_identity = w.eval(&id)?;
    rep.evidence("omega_identity", json!(at_identity));
    let mut failures = Vec::new();
    if at_identity != 1.0 {
        failures.push(format!("omega(e) = {at_identity}"));
    }

    let ball = model.ball(radius)?;
    for x in &ball {
        let (a, b) = (w.eval(x)?, w.eval(&x.inverse())?);
        if a != b {
            failures.push(format!("omega({x}) = {a} but omega({}) = {b}", x.inverse()));
            break;
        }
    }
    rep.evidence("symmetry_checked", json!(ball.len()));

    let small = model.ball(radius.min(3))?;
    let mut pairs: Vec<(GroupElement, GroupElement)> = Vec::with_capacity(small.len().pow(2) + samples);
    for x in &small {
        for y in &small {
            pairs.push((*x, *y));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = ball[rng.gen_range(0..ball.len())];
        let y = ball[rng.gen_range(0..ball.len())];
        pairs.push((x, y));
    }

    let max_rule = matches!(w.spec(), WeightSpec::LocallyFinite { .. });
    let declared_d = match w.spec() {
        WeightSpec::CustomProfile { d, .. } => *d,
        _ => None,
    };
    let mut worst = 0.0f64;
    let mut worst_ws = 0.0f64;
    for (x, y) in &pairs {
        let (wx, wy) = (w.eval(x)?, w.eval(y)?);
        let wxy = w.eval(&x.mul_unchecked(y))?;
        let ratio = wxy / (wx * wy);
        worst = worst.max(ratio);
        if ratio > 1.0 + REL_SLACK && failures.len() < 8 {
            failures.push(format!("submultiplicativity fails at ({x}, {y}): {wxy} > {wx} * {wy}"));
        }
        if max_rule && wxy > wx.max(wy) && failures.len() < 8 {
            failures.push(format!("max rule fails at ({x}, {y})"));
        }
        if let Some(d) = declared_d {
            let r = wxy / (d * (wx + wy));
            worst_ws = worst_ws.max(r);
            if r > 1.0 + REL_SLACK && failures.len() < 8 {
                failures.push(format!("weak subadditivity with D = {d} fails at ({x}, {y})"));
            }
        }
    }
    rep.evidence("pairs_checked", json!(pairs.len()));
    rep.evidence("max_submultiplicative_ratio", json!(worst));
    if declared_d.is_some() {
        rep.evidence("max_weak_subadditivity_ratio", json!(worst_ws));
    }
    rep.status = if failures.is_empty() {
        Status::Verified
    } else {
        rep.notes = failures;
        Status::Refuted
    };
    Ok(rep)
}

/// Which construction of `u` is in use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AuxMode {
    /// `u = D/ω`, hence `σ = D`.
    WeaklySubadditive { d: f64 },
    /// `u(x) = exp(ρ(2τ(x)) - 2ρ(τ(x)))`, hence `σ = exp(ρ(2τ) - ρ(τ))`.
    RhoProfile,
}

/// The function `u` controlling `ω(xy)/(ω(x)ω(y)) <= u(x) + u(y)`, and
/// `σ = ω u`.
#[derive(Clone, Debug)]
pub struct AuxiliaryFunction {
    weight: Weight,
    mode: AuxMode,
    p: f64,
}

impl AuxiliaryFunction {
    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn mode(&self) -> AuxMode {
        self.mode
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `ln u` at length `n`.
    pub fn ln_u_at_length(&self, n: u32) -> Result<f64> {
        match self.mode {
            AuxMode::WeaklySubadditive { d } => Ok(d.ln() - self.weight.ln_at_length(n)?),
            AuxMode::RhoProfile => {
                let rho = self.weight.profile().unwrap();
                Ok(rho.eval(2 * n as u64)? - 2.0 * rho.eval(n as u64)?)
            }
        }
    }

    /// `ln σ` at length `n`.
    pub fn ln_sigma_at_length(&self, n: u32) -> Result<f64> {
        match self.mode {
            AuxMode::WeaklySubadditive { d } => Ok(d.ln()),
            AuxMode::RhoProfile => {
                let rho = self.weight.profile().unwrap();
                Ok(rho.eval(2 * n as u64)? - rho.eval(n as u64)?)
            }
        }
    }

    pub fn u(&self, x: &GroupElement) -> Result<f64> {
        let n = self.weight.model().word_length(x)?;
        self.ln_u_at_length(n).map(f64::exp)
    }

    pub fn sigma(&self, x: &GroupElement) -> Result<f64> {
        let n = self.weight.model().word_length(x)?;
        self.ln_sigma_at_length(n).map(f64::exp)
    }

    pub fn sigma_at_length(&self, n: u32) -> Result<f64> {
        self.ln_sigma_at_length(n).map(f64::exp)
    }
}

/// Picks the construction of `u` for a weight: the locally finite weight is
/// weakly subadditive with `D = 1` (it satisfies `ω(st) <= max`), a custom
/// weight with a declared `D` uses `u = D/ω`, and profile weights use the
/// `ρ`-profile construction.
pub fn build_auxiliary(w: &Weight, p: f64) -> Result<AuxiliaryFunction> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("p must lie in [1, inf), got {p}")));
    }
    let mode = match w.spec() {
        WeightSpec::LocallyFinite { .. } => AuxMode::WeaklySubadditive { d: 1.0 },
        WeightSpec::CustomProfile { d: Some(d), .. } => AuxMode::WeaklySubadditive { d: *d },
        WeightSpec::Trivial => return Err(Error::NoAuxiliaryMode(w.spec().to_string())),
        _ => AuxMode::RhoProfile,
    };
    Ok(AuxiliaryFunction {
        weight: w.clone(),
        mode,
        p,
    })
}

/// How a tail of a shell series was bounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailCertificate {
    /// Shell ratios bounded by `ratio < 1`; tail `<= S_N ratio / (1 - ratio)`.
    Geometric { ratio: f64 },
    /// Raabe statistic `n (S_n / S_{n+1} - 1) >= kappa > 1`; tail
    /// `<= N S_N / (kappa - 1)`.
    PowerLaw { kappa: f64 },
}

/// A series over the group summed shell by shell, with a tail bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesEstimate {
    pub partial: f64,
    pub tail: f64,
    pub total: f64,
    pub shells: u32,
    pub certificate: Option<TailCertificate>,
}

/// Sums `Σ_x u(x)^a ω(x)^b` shell by shell up to `n_max` and classifies the
/// tail.
///
/// The geometric certificate needs the shell ratio to stay below one over
/// the last third of shells without creeping upwards; the power-law
/// certificate needs the Raabe statistic and the log-log slope over the last
/// third to both exceed `1 + margin`. Shell sums that never decrease over
/// the last third refute summability.
pub(crate) fn shell_series(
    aux: &AuxiliaryFunction,
    a: f64,
    b: f64,
    n_max: u32,
    margin: f64,
) -> Result<(Status, SeriesEstimate, Vec<Evidence>)> {
    let model = aux.weight().model();
    let n_max = if model.family() == Family::LocallyFinite {
        n_max.min(LOCALLY_FINITE_RANK)
    } else {
        n_max
    };
    if n_max < 6 {
        return Err(invalid("shell series needs n_max >= 6"));
    }
    let sizes = model.sphere_sizes(n_max)?;
    let mut terms = Vec::with_capacity(sizes.len());
    for (n, size) in sizes.iter().enumerate() {
        if *size == 0.0 {
            terms.push(0.0);
            continue;
        }
        let ln = size.ln() + a * aux.ln_u_at_length(n as u32)? + b * aux.weight().ln_at_length(n as u32)?;
        terms.push(ln.exp());
    }
    let partial: f64 = terms.iter().sum();
    let lo = (n_max - n_max / 3).max(1) as usize;
    let hi = n_max as usize;
    let window = &terms[lo..=hi];
    let mut ev = Vec::new();
    let mut push = |l: &str, v: Value| ev.push(Evidence { label: l.into(), value: v });
    push("last_third", json!([lo, hi]));
    push("last_term", json!(terms[hi]));

    if !partial.is_finite() {
        push("partial_sum", json!(f64::INFINITY));
        let est = SeriesEstimate {
            partial,
            tail: f64::INFINITY,
            total: f64::INFINITY,
            shells: n_max,
            certificate: None,
        };
        return Ok((Status::Refuted, est, ev));
    }
    push("partial_sum", json!(partial));

    let ratios: Vec<f64> = window.windows(2).map(|w| w[1] / w[0]).collect();
    let geo_max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = ratios.len() / 2;
    let first_half_max = ratios[..half.max(1)].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let second_half_max = ratios[half..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    push("max_shell_ratio", json!(geo_max));

    let raabe: Vec<f64> = (lo..hi)
        .map(|n| n as f64 * (terms[n] / terms[n + 1] - 1.0))
        .collect();
    let kappa = raabe.iter().cloned().fold(f64::INFINITY, f64::min);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|&n| terms[n] > 0.0)
        .map(|n| ((n as f64).ln(), terms[n].ln()))
        .unzip();
    let kappa_fit = -least_squares_slope(&xs, &ys);
    push("raabe_min", json!(kappa));
    push("loglog_decay_exponent", json!(kappa_fit));

    let mut est = SeriesEstimate {
        partial,
        tail: f64::INFINITY,
        total: f64::INFINITY,
        shells: n_max,
        certificate: None,
    };
    let last = terms[hi];
    let status = if last == 0.0 {
        // The last shells underflowed; the tail is below the smallest double
        // times the number of remaining shells' growth, i.e. negligible.
        est.tail = 0.0;
        est.certificate = Some(TailCertificate::Geometric { ratio: 0.0 });
        Status::Verified
    } else if geo_max < 1.0 && second_half_max <= first_half_max + 1e-12 {
        est.tail = last * geo_max / (1.0 - geo_max);
        est.certificate = Some(TailCertificate::Geometric { ratio: geo_max });
        Status::Verified
    } else if kappa > 1.0 + margin && kappa_fit > 1.0 + margin {
        est.tail = hi as f64 * last / (kappa - 1.0);
        est.certificate = Some(TailCertificate::PowerLaw { kappa });
        Status::Verified
    } else if ratios.iter().all(|r| *r >= 1.0) {
        Status::Refuted
    } else {
        Status::Inconclusive
    };
    est.total = est.partial + est.tail;
    Ok((status, est, ev))
}

/// Checks `Σ_x u(x)^s ω(x)^r < ∞` from shell sums up to `n_max`.
pub fn check_summability(aux: &AuxiliaryFunction, s: f64, r: f64, n_max: u32) -> Result<(ConditionReport, SeriesEstimate)> {
    check_summability_with_margin(aux, s, r, n_max, DEFAULT_MARGIN)
}

pub fn check_summability_with_margin(
    aux: &AuxiliaryFunction,
    s: f64,
    r: f64,
    n_max: u32,
    margin: f64,
) -> Result<(ConditionReport, SeriesEstimate)> {
    if !(s > 0.0 && r > 0.0) {
        return Err(invalid(format!("summability needs s > 0 and r > 0, got s = {s}, r = {r}")));
    }
    let mut rep = ConditionReport::new("summability");
    rep.param("s", s);
    rep.param("r", r);
    rep.param("p", aux.p());
    rep.param("q", conjugate(aux.p()));
    rep.param("n_max", n_max as f64);
    rep.param("margin", margin);
    let (status, est, ev) = shell_series(aux, s, r, n_max, margin)?;
    rep.status = status;
    rep.evidence = ev;
    rep.evidence("estimate", serde_json::to_value(est)?);
    if status == Status::Verified {
        rep.notes.push(format!("sum <= {:.6e} (partial {:.6e} + tail {:.3e})", est.total, est.partial, est.tail));
    }
    Ok((rep, est))
}

/// The conjugate index `q` with `1/p + 1/q = 1` (`∞` for `p = 1`).
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Checks `limsup ρ(2n)/ρ(n) < 2` from the ratios at `n = 1..=n_max`.
///
/// Verified when both the running maximum over the last third of `n` and the
/// limit extrapolated from dyadic samples (a linear fit in `1/ln n`) stay
/// below `2 - margin`. Refuted when the ratios increase over the last third
/// towards a value above `2 - margin`, or when some ratio exceeds 2 (the
/// profile is then not concave). Otherwise inconclusive.
pub fn check_growth_condition(w: &Weight, n_max: u64, margin: f64) -> Result<ConditionReport> {
    let mut rep = ConditionReport::new("growth_condition");
    rep.param("n_max", n_max as f64);
    rep.param("margin", margin);
    let Some(rho) = w.profile() else {
        rep.notes.push(format!("weight `{}` has no growth profile", w.spec()));
        return Ok(rep);
    };
    if n_max < 8 {
        return Err(invalid("growth condition needs n_max >= 8"));
    }
    let threshold = 2.0 - margin;
    let lo = n_max - n_max / 3;
    let mut running_max = f64::NEG_INFINITY;
    let mut overall_max = f64::NEG_INFINITY;
    let mut first_in_window = None;
    let mut last = 0.0;
    let mut dyadic = Vec::new();
    for n in 1..=n_max {
        let den = rho.eval(n)?;
        if den <= 0.0 {
            continue;
        }
        let ratio = rho.eval(2 * n)? / den;
        overall_max = overall_max.max(ratio);
        if n >= lo {
            running_max = running_max.max(ratio);
            first_in_window.get_or_insert(ratio);
        }
        if n.is_power_of_two() {
            dyadic.push((n, ratio));
        }
        last = ratio;
    }
    let first = first_in_window.unwrap_or(last);
    let increasing = last > first + 1e-12;

    // dyadic samples in the upper third (log scale) feed the extrapolation
    let j_max = dyadic.len();
    let tail: Vec<(u64, f64)> = dyadic[(2 * j_max / 3).min(j_max.saturating_sub(3))..].to_vec();
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().map(|(n, r)| (1.0 / (*n as f64).ln(), *r)).unzip();
    let slope = least_squares_slope(&xs, &ys);
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let extrapolated = if slope.is_finite() { my - slope * mx } else { my };

    rep.evidence("running_max_last_third", json!(running_max));
    rep.evidence("max_ratio", json!(overall_max));
    rep.evidence("trend", json!(if increasing { "increasing" } else { "non_increasing" }));
    rep.evidence("extrapolated_limit", json!(extrapolated));
    if let Some(l) = rho.ratio_limit() {
        rep.evidence("closed_form_limit", json!(l));
    }
    rep.evidence(
        "dyadic_ratios",
        Value::Array(dyadic.iter().map(|(n, r)| json!([n, r])).collect()),
    );

    rep.status = if overall_max > 2.0 + 1e-12 {
        rep.notes.push("rho(2n)/rho(n) exceeds 2: the profile is not concave with rho(0) = 0".into());
        Status::Refuted
    } else if running_max <= threshold && extrapolated <= threshold {
        Status::Verified
    } else if increasing && (running_max > threshold || extrapolated > threshold) {
        Status::Refuted
    } else {
        Status::Inconclusive
    };
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z1() -> Arc<GroupModel> {
        Arc::new(GroupModel::lattice(1).unwrap())
    }

    fn zx(v: i64) -> GroupElement {
        GroupElement::lattice(&[v]).unwrap()
    }

    fn weight(spec: WeightSpec, m: &Arc<GroupModel>) -> Weight {
        Weight::new(spec, m.clone()).unwrap()
    }

    #[test]
    fn weight_eval_examples() {
        let m = z1();
        let w = weight(WeightSpec::Polynomial { beta: 2.0 }, &m);
        assert_relative_eq!(w.eval(&zx(3)).unwrap(), 16.0, max_relative = 1e-14);
        let s = weight(WeightSpec::SubexpPower { alpha: 0.5, c: 1.0 }, &m);
        assert_relative_eq!(s.eval(&zx(4)).unwrap(), 2f64.exp(), max_relative = 1e-14);

        let lf = Arc::new(GroupModel::locally_finite());
        let w = weight(
            WeightSpec::LocallyFinite {
                n: ChainSequence::Geometric { base: 2.0 },
            },
            &lf,
        );
        // an element of G_3 \ G_2 has coordinate 2 set
        let x = GroupElement::dyadic([0, 2]).unwrap();
        assert_relative_eq!(w.eval(&x).unwrap(), 5.0, max_relative = 1e-14);
        assert_eq!(w.eval(&GroupElement::dyadic([0]).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn weight_group_mismatch() {
        let lf = Arc::new(GroupModel::locally_finite());
        assert!(Weight::new(WeightSpec::Polynomial { beta: 1.0 }, lf).is_err());
        let w = Weight::new(
            WeightSpec::LocallyFinite {
                n: ChainSequence::Geometric { base: 2.0 },
            },
            z1(),
        );
        assert!(matches!(w, Err(Error::WeightGroupMismatch { .. })));
    }

    #[test]
    fn axioms_polynomial_and_nu_verified() {
        let m = z1();
        for spec in [
            WeightSpec::Polynomial { beta: 2.0 },
            WeightSpec::SubexpLog { gamma: 1.0, c: 1.0 },
            WeightSpec::SubexpPower { alpha: 0.5, c: 1.0 },
        ] {
            let w = weight(spec.clone(), &m);
            let rep = check_weight_axioms(&w, 10, 200, 1).unwrap();
            assert_eq!(rep.status, Status::Verified, "{spec:?}: {:?}", rep.notes);
            // exhaustive oracle on |a|, |b| <= 10
            for a in -10..=10 {
                for b in -10..=10 {
                    let lhs = w.eval(&zx(a + b)).unwrap();
                    let rhs = w.eval(&zx(a)).unwrap() * w.eval(&zx(b)).unwrap();
                    assert!(lhs <= rhs * (1.0 + 1e-12), "{spec:?} at ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn axioms_refute_convex_profile() {
        let w = weight(
            WeightSpec::CustomProfile {
                profile: Profile::Power { c: 1.0, alpha: 2.0 },
                d: None,
            },
            &z1(),
        );
        let rep = check_weight_axioms(&w, 5, 10, 1).unwrap();
        assert_eq!(rep.status, Status::Refuted);
        // omega(1)^2 = e^2 < omega(2) = e^4
        assert!(w.eval(&zx(1)).unwrap().powi(2) < w.eval(&zx(2)).unwrap());
    }

    #[test]
    fn axioms_locally_finite_max_rule() {
        let lf = Arc::new(GroupModel::locally_finite());
        let w = weight(
            WeightSpec::LocallyFinite {
                n: ChainSequence::Geometric { base: 2.0 },
            },
            &lf,
        );
        let rep = check_weight_axioms(&w, 8, 500, 3).unwrap();
        assert_eq!(rep.status, Status::Verified, "{:?}", rep.notes);
        // weak subadditivity with D = 1 on all pairs of ball(4)
        let ball = lf.ball(4).unwrap();
        for x in &ball {
            for y in &ball {
                let wxy = w.eval(&x.mul_unchecked(y)).unwrap();
                assert!(wxy <= w.eval(x).unwrap() + w.eval(y).unwrap());
            }
        }
    }

    #[test]
    fn declared_d_is_checked() {
        // omega_1 = 1 + |n| is weakly subadditive with D = 1 but not 0.4
        let profile = Profile::Log { beta: 1.0 };
        let ok = weight(WeightSpec::CustomProfile { profile: profile.clone(), d: Some(1.0) }, &z1());
        assert_eq!(check_weight_axioms(&ok, 8, 100, 0).unwrap().status, Status::Verified);
        let bad = weight(WeightSpec::CustomProfile { profile, d: Some(0.4) }, &z1());
        assert_eq!(check_weight_axioms(&bad, 8, 100, 0).unwrap().status, Status::Refuted);
    }

    #[test]
    fn auxiliary_modes() {
        let lf = Arc::new(GroupModel::locally_finite());
        let w = weight(
            WeightSpec::LocallyFinite {
                n: ChainSequence::Geometric { base: 2.0 },
            },
            &lf,
        );
        let aux = build_auxiliary(&w, 2.0).unwrap();
        assert_eq!(aux.mode(), AuxMode::WeaklySubadditive { d: 1.0 });
        let x = GroupElement::dyadic([3]).unwrap();
        assert_relative_eq!(aux.u(&x).unwrap(), 1.0 / w.eval(&x).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(aux.sigma(&x).unwrap(), 1.0, max_relative = 1e-14);

        let m = z1();
        let beta = 1.7;
        let aux = build_auxiliary(&weight(WeightSpec::Polynomial { beta }, &m), 1.0).unwrap();
        assert_eq!(aux.mode(), AuxMode::RhoProfile);
        for n in 0..20i64 {
            let t = n as f64;
            let expect = (1.0 + 2.0 * t).powf(beta) / (1.0 + t).powf(2.0 * beta);
            assert_relative_eq!(aux.u(&zx(n)).unwrap(), expect, max_relative = 1e-12);
        }

        let (alpha, c) = (0.5, 1.3);
        let aux = build_auxiliary(&weight(WeightSpec::SubexpPower { alpha, c }, &m), 2.0).unwrap();
        for n in 0..20i64 {
            let t = n as f64;
            let expect = (-c * (2.0 - 2f64.powf(alpha)) * t.powf(alpha)).exp();
            assert_relative_eq!(aux.u(&zx(n)).unwrap(), expect, max_relative = 1e-12);
        }

        assert!(matches!(
            build_auxiliary(&weight(WeightSpec::Trivial, &m), 1.0),
            Err(Error::NoAuxiliaryMode(_))
        ));
        assert!(build_auxiliary(&weight(WeightSpec::Trivial, &m), 0.5).is_err());
    }

    #[test]
    fn profile_u_and_sigma_bounds() {
        for m in [z1(), Arc::new(GroupModel::lattice(2).unwrap()), Arc::new(GroupModel::heisenberg())] {
            for spec in [
                WeightSpec::Polynomial { beta: 3.0 },
                WeightSpec::SubexpPower { alpha: 0.5, c: 1.0 },
                WeightSpec::SubexpLog { gamma: 1.0, c: 1.0 },
            ] {
                let aux = build_auxiliary(&weight(spec, &m), 2.0).unwrap();
                for x in m.ball(4).unwrap() {
                    assert!(aux.u(&x).unwrap() <= 1.0 + 1e-15);
                    assert!(aux.sigma(&x).unwrap() >= 1.0 - 1e-15);
                }
            }
        }
    }

    #[test]
    fn summability_polynomial_power_law() {
        let aux = build_auxiliary(&weight(WeightSpec::Polynomial { beta: 2.0 }, &z1()), 2.0).unwrap();
        let (rep, est) = check_summability(&aux, 0.9, 0.1, 2000).unwrap();
        assert_eq!(rep.status, Status::Verified, "{rep:?}");
        assert!(matches!(est.certificate, Some(TailCertificate::PowerLaw { .. })));
        // brute-force oracle: direct sum to 10^6 plus an integral tail bound
        let term = |n: f64| {
            let u = (1.0 + 2.0 * n).powi(2) / (1.0 + n).powi(4);
            let shell = if n == 0.0 { 1.0 } else { 2.0 };
            shell * u.powf(0.9) * (1.0 + n).powi(2).powf(0.1)
        };
        let oracle: f64 = (0..1_000_000).map(|n| term(n as f64)).sum();
        assert!(est.total >= oracle * (1.0 - 1e-9), "{} vs {}", est.total, oracle);
        assert!(est.total <= oracle * 1.2);
    }

    #[test]
    fn summability_subexponential() {
        let aux = build_auxiliary(&weight(WeightSpec::SubexpPower { alpha: 0.5, c: 1.0 }, &z1()), 2.0).unwrap();
        let (rep, est) = check_summability(&aux, 1.0, 0.5, 4000).unwrap();
        assert_eq!(rep.status, Status::Verified, "{rep:?}");
        let k = 0.5 - (2.0 - 2f64.sqrt());
        let oracle: f64 = 1.0 + (1..2_000_000).map(|n| 2.0 * (k * (n as f64).sqrt()).exp()).sum::<f64>();
        assert!(est.total >= oracle * (1.0 - 1e-9), "{} vs {oracle}", est.total);
    }

    #[test]
    fn summability_refuted_when_terms_grow() {
        // r > s makes u^s omega^r grow polynomially on Z
        let aux = build_auxiliary(&weight(WeightSpec::Polynomial { beta: 2.0 }, &z1()), 2.0).unwrap();
        let (rep, _) = check_summability(&aux, 0.5, 1.5, 500).unwrap();
        assert_eq!(rep.status, Status::Refuted);
        assert!(check_summability(&aux, 0.0, 1.0, 500).is_err());
    }

    #[test]
    fn summability_locally_finite_geometric() {
        let lf = Arc::new(GroupModel::locally_finite());
        let w = weight(
            WeightSpec::LocallyFinite {
                n: ChainSequence::Geometric { base: 4.0 },
            },
            &lf,
        );
        let aux = build_auxiliary(&w, 2.0).unwrap();
        let (rep, est) = check_summability(&aux, 1.5, 0.25, 64).unwrap();
        assert_eq!(rep.status, Status::Verified);
        assert!(matches!(est.certificate, Some(TailCertificate::Geometric { .. })));
        // oracle: 1 + 1 + sum_{m >= 2} 2^{m-1} (1 + 4^{m-1})^{-1.25}
        let oracle: f64 = 2.0 + (2..200).map(|m| 2f64.powi(m - 1) * (1.0 + 4f64.powi(m - 1)).powf(-1.25)).sum::<f64>();
        assert_relative_eq!(est.total, oracle, max_relative = 1e-9);
    }

    #[test]
    fn growth_condition_discriminates() {
        let m = z1();
        let n_max = 1 << 16;
        let poly = check_growth_condition(&weight(WeightSpec::Polynomial { beta: 2.0 }, &m), n_max, DEFAULT_MARGIN).unwrap();
        assert_eq!(poly.status, Status::Verified);
        let sub = check_growth_condition(&weight(WeightSpec::SubexpPower { alpha: 0.5, c: 1.0 }, &m), n_max, DEFAULT_MARGIN).unwrap();
        assert_eq!(sub.status, Status::Verified);
        let nu = check_growth_condition(&weight(WeightSpec::SubexpLog { gamma: 1.0, c: 1.0 }, &m), n_max, DEFAULT_MARGIN).unwrap();
        assert_eq!(nu.status, Status::Refuted, "{nu:?}");
        let convex = WeightSpec::CustomProfile {
            profile: Profile::Power { c: 1.0, alpha: 2.0 },
            d: None,
        };
        let rep = check_growth_condition(&weight(convex, &m), 64, DEFAULT_MARGIN).unwrap();
        assert_eq!(rep.status, Status::Refuted);
        let trivial = check_growth_condition(&weight(WeightSpec::Trivial, &m), 64, DEFAULT_MARGIN).unwrap();
        assert_eq!(trivial.status, Status::Inconclusive);
    }

    #[test]
    fn table_profile_out_of_range() {
        let p = Profile::Table { values: vec![0.0, 1.0, 1.5] };
        assert_eq!(p.eval(2).unwrap(), 1.5);
        assert!(p.eval(3).is_err());
    }
}

//! Differential-norm certificates `(C, θ)` and empirical checks of the
//! inequalities they rest on.

mod pipeline;

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::algebra::{convolve, norm_1_sigma, norm_p_omega, AlgebraElement};
use crate::error::{invalid, Error, Result};
use crate::groups::{Family, GroupModel};
use crate::weights::{
    build_auxiliary, conjugate, shell_series, AuxMode, AuxiliaryFunction, SeriesEstimate, Status, Weight, WeightSpec, DEFAULT_MARGIN,
};

pub(crate) use pipeline::worst;
pub use pipeline::{pipeline, ElementOutcome, PipelineReport, StageReport, PIPELINE_SCHEMA};

/// Default number of points of the θ grid.
pub const DEFAULT_THETA_GRID: usize = 512;

/// Default number of shells summed for a certificate.
pub const DEFAULT_SUM_SHELLS: u32 = 2000;

/// Slack used when checking certified inequalities on random elements.
pub const CHECK_SLACK: f64 = 1e-9;

/// Which route produced the auxiliary function `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificatePath {
    /// `u = D/ω` for a weakly subadditive weight.
    WeaklySubadditive,
    /// `u = exp(ρ(2τ) - 2ρ(τ))` for a profile weight.
    RhoProfile,
    /// Supplied by hand (bound evaluation only).
    Manual,
}

/// Constants of the inequality `‖f*f‖_{p,ω} <= C ‖f‖_{p,ω}^{1+θ} ‖f‖₂^{1-θ}`.
#[derive(Clone, Debug, Serialize)]
pub struct HolderCertificate {
    pub theta: f64,
    /// Hölder exponent `2p/(p + pθ - 2θ)`.
    pub alpha: f64,
    /// `(Σ u^α ω^{(1-θ)α})^{1/α}`
    pub c_holder: f64,
    /// `2 C_H`
    pub c: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub r: f64,
    pub path: CertificatePath,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum: Option<SeriesEstimate>,
    /// Number of shells on which the sum was evaluated.
    pub verified_radius: u32,
}

impl HolderCertificate {
    /// A certificate with given `θ` and `C`, for evaluating bounds.
    pub fn manual(theta: f64, c: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(invalid(format!("theta must lie in (0,1), got {theta}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("C must be positive, got {c}")));
        }
        Ok(Self {
            theta,
            alpha: f64::NAN,
            c_holder: c / 2.0,
            c,
            p: f64::NAN,
            q: f64::NAN,
            s: f64::NAN,
            r: f64::NAN,
            path: CertificatePath::Manual,
            sum: None,
            verified_radius: 0,
        })
    }

    /// `γ = log₂(1 + θ)`
    pub fn gamma(&self) -> f64 {
        (1.0 + self.theta).log2()
    }
}

/// `α(θ) = 2p / (p + pθ - 2θ)`.
pub fn holder_alpha(p: f64, theta: f64) -> f64 {
    2.0 * p / (p + p * theta - 2.0 * theta)
}

/// The θ grid: geometric in `(0, 1)` from `10^-3` to `10^{-3/n}`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / n as f64)).collect()
}

/// Options for [`estimate_theta_with`].
#[derive(Clone, Copy, Debug)]
pub struct ThetaOptions {
    pub grid: usize,
    pub shells: u32,
    pub margin: f64,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self {
            grid: DEFAULT_THETA_GRID,
            shells: DEFAULT_SUM_SHELLS,
            margin: DEFAULT_MARGIN,
        }
    }
}

pub fn estimate_theta(w: &Weight, aux: &AuxiliaryFunction, p: f64, s: f64, r: f64) -> Result<HolderCertificate> {
    estimate_theta_with(w, aux, p, s, r, &ThetaOptions::default())
}

/// Picks the smallest grid `θ` with `s < α(θ) <= q` and `(1-θ)α(θ) < r`
/// for which `Σ u^α ω^{(1-θ)α}` is certified finite, and returns
/// `C = 2 (Σ ...)^{1/α}`.
pub fn estimate_theta_with(
    w: &Weight,
    aux: &AuxiliaryFunction,
    p: f64,
    s: f64,
    r: f64,
    opts: &ThetaOptions,
) -> Result<HolderCertificate> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p must be at least 1, got {p}")));
    }
    if aux.weight().spec() != w.spec() {
        return Err(invalid("auxiliary function belongs to a different weight"));
    }
    let q = conjugate(p);
    if !(s > 0.0 && s < q) {
        return Err(Error::NoFeasibleTheta(format!("need 0 < s < q = {q}, got s = {s}")));
    }
    if !(r > 0.0) {
        return Err(Error::NoFeasibleTheta(format!("(1-theta) alpha < r is impossible for r = {r}")));
    }
    let feasible: Vec<f64> = theta_grid(opts.grid)
        .into_iter()
        .filter(|&t| {
            let a = holder_alpha(p, t);
            s < a && a <= q * (1.0 + 1e-12) && (1.0 - t) * a < r * (1.0 - 1e-3)
        })
        .collect();
    if feasible.is_empty() {
        return Err(Error::NoFeasibleTheta(format!("p = {p}, s = {s}, r = {r}")));
    }
    let path = match aux.mode() {
        AuxMode::WeaklySubadditive { .. } => CertificatePath::WeaklySubadditive,
        AuxMode::RhoProfile => CertificatePath::RhoProfile,
    };
    let mut last = None;
    for theta in feasible {
        let alpha = holder_alpha(p, theta);
        let (status, est, _) = shell_series(aux, alpha, (1.0 - theta) * alpha, opts.shells, opts.margin)?;
        if status == Status::Verified {
            let c_holder = est.total.powf(1.0 / alpha);
            return Ok(HolderCertificate {
                theta,
                alpha,
                c_holder,
                c: 2.0 * c_holder,
                p,
                q,
                s,
                r,
                path,
                sum: Some(est),
                verified_radius: est.shells,
            });
        }
        last = Some((theta, status));
    }
    let (theta, status) = last.unwrap();
    Err(Error::SumInconclusive(format!(
        "no grid theta gave a certified sum; largest feasible theta = {theta:.6} ended {status:?}"
    )))
}

/// Builds `u`, fills in missing exponents from [`suggest_exponents`] and
/// runs [`estimate_theta_with`].
pub fn certify(
    w: &Weight,
    p: f64,
    s: Option<f64>,
    r: Option<f64>,
    opts: &ThetaOptions,
) -> Result<HolderCertificate> {
    let aux = build_auxiliary(w, p)?;
    let (s, r) = match (s, r) {
        (Some(s), Some(r)) => (s, r),
        _ => {
            let (s0, r0) = suggest_exponents(w, p)?;
            (s.unwrap_or(s0), r.unwrap_or(r0))
        }
    };
    estimate_theta_with(w, &aux, p, s, r, opts)
}

/// Exponents `(s, r)` satisfying the summability condition for the weight
/// family, with `s < q` and, for `p = 1`, `r > 2` (so that some `θ` has
/// `(1-θ)α < r`).
pub fn suggest_exponents(w: &Weight, p: f64) -> Result<(f64, f64)> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p must be at least 1, got {p}")));
    }
    let q = conjugate(p);
    let d = w.model().growth_order();
    let (s, r) = match w.spec() {
        WeightSpec::Trivial => return Err(Error::NoAuxiliaryMode(w.spec().to_string())),
        WeightSpec::Polynomial { beta } => {
            let d = d.unwrap_or(1.0);
            // u ~ n^-β, ω ~ n^β: summable iff β(s - r) > d
            if q.is_finite() {
                let s = 0.95 * q;
                let room = s - d / beta;
                if room <= 0.0 {
                    return Err(Error::NoFeasibleTheta(format!(
                        "beta = {beta} does not exceed d/q = {}",
                        d / q
                    )));
                }
                (s, room / 2.0)
            } else {
                let r = 2.5;
                (r + d / beta + 1.0, r)
            }
        }
        WeightSpec::SubexpPower { alpha, .. } => {
            // u^s ω^r = exp(-(s(2 - 2^α) - r) C n^α)
            let k = 2.0 - 2f64.powf(*alpha);
            if q.is_finite() {
                let s = 0.95 * q;
                (s, s * k / 2.0)
            } else {
                let r = 2.5;
                ((r + 1.0) / k, r)
            }
        }
        WeightSpec::LocallyFinite { n } => {
            // u^s ω^r ≈ n_{m-1}^{r-s} on a shell of size 2^{m-1}
            let growth = match n {
                crate::weights::ChainSequence::Geometric { base } => base.log2(),
                crate::weights::ChainSequence::Explicit { .. } => 1.0,
            };
            if q.is_finite() {
                let s = 0.95 * q;
                let r = s - 1.25 / growth;
                if r <= 0.0 {
                    return Err(Error::NoFeasibleTheta(format!(
                        "chain sequence grows too slowly for q = {q}"
                    )));
                }
                (s, r)
            } else {
                let r = 2.5;
                (r + 2.0 / growth, r)
            }
        }
        WeightSpec::SubexpLog { .. } | WeightSpec::CustomProfile { .. } => {
            if q.is_finite() {
                (0.95 * q, 0.25)
            } else {
                (4.0, 2.5)
            }
        }
    };
    Ok((s, r))
}

/// Coefficient distribution for random elements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientLaw {
    /// Standard complex Gaussian.
    #[default]
    ComplexGaussian,
    /// Standard real Gaussian.
    RealGaussian,
}

/// A random element supported on up to `max_support` points drawn
/// uniformly from `ball(radius)`.
pub fn random_element(
    model: &Arc<GroupModel>,
    radius: u32,
    max_support: usize,
    law: CoefficientLaw,
    rng: &mut ChaCha8Rng,
) -> Result<AlgebraElement> {
    let ball = model.ball(radius)?;
    let k = rng.gen_range(1..=max_support.min(ball.len()).max(1));
    let idx = sample(rng, ball.len(), k);
    let mut terms = Vec::with_capacity(k);
    for i in idx.iter() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = match law {
            CoefficientLaw::ComplexGaussian => rng.sample(StandardNormal),
            CoefficientLaw::RealGaussian => 0.0,
        };
        terms.push((ball[i], Complex64::new(re, im)));
    }
    AlgebraElement::new(model.clone(), terms)
}

/// Outcome of [`check_diff_norm`].
#[derive(Clone, Debug, Serialize)]
pub struct DiffNormReport {
    pub trials: usize,
    pub seed: u64,
    pub support_radius: u32,
    pub theta: f64,
    pub c: f64,
    pub c_holder: f64,
    /// Violations of `‖f*f‖_{p,ω} <= C ‖f‖_{p,ω}^{1+θ} ‖f‖₂^{1-θ}`.
    pub violations: usize,
    /// Largest observed `‖f*f‖_{p,ω} / (‖f‖_{p,ω}^{1+θ} ‖f‖₂^{1-θ})`.
    pub max_ratio: f64,
    /// Violations of `‖f‖_{1,σ} <= C_H ‖f‖₂^{1-θ} ‖f‖_{p,ω}^θ`.
    pub holder_violations: usize,
    pub max_holder_ratio: f64,
    /// Trial index of the first violation, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<usize>,
}

impl DiffNormReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.holder_violations == 0
    }
}

/// Tests the certified inequality and the Hölder step behind it on `trials`
/// random elements supported in `ball(support_radius)`. Trial `i` uses the
/// stream `seed + i`, so a violation can be reproduced on its own.
pub fn check_diff_norm(
    cert: &HolderCertificate,
    w: &Weight,
    p: f64,
    trials: usize,
    support_radius: u32,
    seed: u64,
) -> Result<DiffNormReport> {
    check_diff_norm_with(cert, w, p, trials, support_radius, seed, CoefficientLaw::ComplexGaussian)
}

pub fn check_diff_norm_with(
    cert: &HolderCertificate,
    w: &Weight,
    p: f64,
    trials: usize,
    support_radius: u32,
    seed: u64,
    law: CoefficientLaw,
) -> Result<DiffNormReport> {
    let aux = build_auxiliary(w, p)?;
    let model = w.model();
    let (theta, c, ch) = (cert.theta, cert.c, cert.c_holder);
    let mut rep = DiffNormReport {
        trials,
        seed,
        support_radius,
        theta,
        c,
        c_holder: ch,
        violations: 0,
        max_ratio: 0.0,
        holder_violations: 0,
        max_holder_ratio: 0.0,
        first_violation: None,
    };
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let f = random_element(model, support_radius, 12, law, &mut rng)?;
        let ff = convolve(&f, &f, 0.0)?;
        let a = norm_p_omega(&f, w, p)?;
        let l2 = f.l2();
        let lhs = norm_p_omega(&ff, w, p)?;
        let rhs = a.powf(1.0 + theta) * l2.powf(1.0 - theta);
        rep.max_ratio = rep.max_ratio.max(lhs / rhs);
        if lhs > c * rhs * (1.0 + CHECK_SLACK) + CHECK_SLACK {
            rep.violations += 1;
            rep.first_violation.get_or_insert(i);
        }
        let sigma = norm_1_sigma(&f, &aux)?;
        let holder = l2.powf(1.0 - theta) * a.powf(theta);
        rep.max_holder_ratio = rep.max_holder_ratio.max(sigma / holder);
        if sigma > ch * holder * (1.0 + CHECK_SLACK) + CHECK_SLACK {
            rep.holder_violations += 1;
            rep.first_violation.get_or_insert(i);
        }
    }
    Ok(rep)
}

/// Outcome of [`check_differential_pairs`].
#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub trials: usize,
    pub seed: u64,
    pub support_radius: u32,
    pub violations: usize,
    /// Largest `|f*g|_{p,w} / (|f|_{1,s}|g|_{p,w} + |f|_{p,w}|g|_{1,s})`.
    pub max_ratio: f64,
    pub first_violation: Option<usize>,
}

impl PairReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `|f*g|_{p,w} <= |f|_{1,s}|g|_{p,w} + |f|_{p,w}|g|_{1,s}` with
/// `s = w u` on `trials` random pairs; pair `i` is drawn from seed `seed + i`.
pub fn check_differential_pairs(
    aux: &AuxiliaryFunction,
    trials: usize,
    support_radius: u32,
    seed: u64,
) -> Result<PairReport> {
    let w = aux.weight();
    let p = aux.p();
    let model = w.model();
    let mut rep = PairReport {
        trials,
        seed,
        support_radius,
        violations: 0,
        max_ratio: 0.0,
        first_violation: None,
    };
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let f = random_element(model, support_radius, 12, CoefficientLaw::ComplexGaussian, &mut rng)?;
        let g = random_element(model, support_radius, 12, CoefficientLaw::ComplexGaussian, &mut rng)?;
        let lhs = norm_p_omega(&convolve(&f, &g, 0.0)?, w, p)?;
        let rhs = norm_1_sigma(&f, aux)? * norm_p_omega(&g, w, p)? + norm_p_omega(&f, w, p)? * norm_1_sigma(&g, aux)?;
        rep.max_ratio = rep.max_ratio.max(lhs / rhs);
        if lhs > rhs * (1.0 + CHECK_SLACK) + CHECK_SLACK {
            rep.violations += 1;
            rep.first_violation.get_or_insert(i);
        }
    }
    Ok(rep)
}

/// Outcome of [`necessary_condition_probe`].
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub status: Status,
    pub theta: f64,
    pub c: f64,
    pub n_max: u64,
    /// `max_n ω(2n) / ω(n)^{1+θ}`
    pub max_ratio: f64,
    /// First `n` with `ω(2n) > C ω(n)^{1+θ}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<u64>,
    /// Closed-form `lim ρ(2n)/ρ(n)` when the profile has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_limit: Option<f64>,
    /// `ρ(2n)/ρ(n)` and `1 + θ + ln C / ρ(n)` at dyadic `n`.
    pub rho_trend: Vec<[f64; 3]>,
}

/// Evaluates `ω(2n) <= C ω(n)^{1+θ}` on `ℤ` for `n = 1..=n_max`: the
/// inequality with `f = δ_n`.
pub fn necessary_condition_probe(w: &Weight, cert: &HolderCertificate, n_max: u64) -> Result<ProbeReport> {
    let (theta, c) = (cert.theta, cert.c);
    if w.model().family() != (Family::Lattice { dim: 1 }) {
        return Err(invalid("the probe runs on Z only"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta must lie in (0,1), got {theta}")));
    }
    if n_max > u32::MAX as u64 / 2 {
        return Err(invalid("n_max too large"));
    }
    let ln_c = c.ln();
    let mut max_ln = f64::NEG_INFINITY;
    let mut first_failure = None;
    let mut rho_trend = Vec::new();
    let mut tail = Vec::new();
    for n in 1..=n_max {
        let (r1, r2) = (w.ln_at_length(n as u32)?, w.ln_at_length(2 * n as u32)?);
        let ln_ratio = r2 - (1.0 + theta) * r1;
        max_ln = max_ln.max(ln_ratio);
        if ln_ratio > ln_c + 1e-12 && first_failure.is_none() {
            first_failure = Some(n);
        }
        if n.is_power_of_two() && r1 > 0.0 {
            rho_trend.push([n as f64, r2 / r1, 1.0 + theta + ln_c / r1]);
        }
        if n > n_max - n_max / 3 {
            tail.push(ln_ratio);
        }
    }
    let increasing = tail.len() > 1 && tail[tail.len() - 1] > tail[0] + 1e-12;
    // ρ(2n)/ρ(n) -> L > 1 + θ with ρ unbounded forces the ratio to infinity
    let ratio_limit = w.profile().and_then(|p| p.ratio_limit());
    let status = if first_failure.is_some() || ratio_limit.is_some_and(|l| l > 1.0 + theta + 1e-12) {
        Status::Refuted
    } else if increasing {
        Status::Inconclusive
    } else {
        Status::Verified
    };
    Ok(ProbeReport {
        status,
        theta,
        c,
        n_max,
        max_ratio: max_ln.exp(),
        first_failure,
        ratio_limit,
        rho_trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::ChainSequence;
    use approx::assert_relative_eq;

    fn weight(spec: WeightSpec, m: Arc<GroupModel>) -> Weight {
        Weight::new(spec, m).unwrap()
    }

    #[test]
    fn alpha_identities() {
        for t in [0.01, 0.3, 0.9] {
            assert_relative_eq!(holder_alpha(2.0, t), 2.0, max_relative = 1e-15);
            assert_relative_eq!(holder_alpha(1.0, t), 2.0 / (1.0 - t), max_relative = 1e-14);
        }
        assert_relative_eq!(holder_alpha(3.0, 1.0 - 1e-6), 1.5, max_relative = 1e-5);
        let g = theta_grid(512);
        assert_eq!(g.len(), 512);
        assert!(g[0] > 0.0 && *g.last().unwrap() < 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn certificate_p2_polynomial() {
        let m = Arc::new(GroupModel::lattice(2).unwrap());
        let w = weight(WeightSpec::Polynomial { beta: 3.0 }, m);
        let aux = build_auxiliary(&w, 2.0).unwrap();
        let cert = estimate_theta(&w, &aux, 2.0, 1.0, 10.0).unwrap();
        assert_eq!(cert.alpha, 2.0);
        assert!(cert.s < cert.alpha && (1.0 - cert.theta) * cert.alpha < cert.r);
        // the sum needs 2βθ > d, i.e. θ > 1/3
        assert!(cert.theta > 1.0 / 3.0);
        assert!(cert.c >= 2.0);
    }

    #[test]
    fn certificate_p1_polynomial() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let w = weight(WeightSpec::Polynomial { beta: 2.0 }, m);
        let aux = build_auxiliary(&w, 1.0).unwrap();
        let (s, r) = suggest_exponents(&w, 1.0).unwrap();
        let cert = estimate_theta(&w, &aux, 1.0, s, r).unwrap();
        assert_relative_eq!(cert.alpha, 2.0 / (1.0 - cert.theta), max_relative = 1e-12);
        assert!(cert.alpha > s);
    }

    #[test]
    fn infeasible_inputs() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let w = weight(WeightSpec::Polynomial { beta: 2.0 }, m);
        let aux = build_auxiliary(&w, 2.0).unwrap();
        assert!(matches!(estimate_theta(&w, &aux, 2.0, 1.0, 0.0), Err(Error::NoFeasibleTheta(_))));
        assert!(matches!(estimate_theta(&w, &aux, 2.0, 2.5, 1.0), Err(Error::NoFeasibleTheta(_))));
    }

    #[test]
    fn certificate_locally_finite() {
        let m = Arc::new(GroupModel::locally_finite());
        let w = weight(
            WeightSpec::LocallyFinite {
                n: ChainSequence::Geometric { base: 2.0 },
            },
            m,
        );
        let aux = build_auxiliary(&w, 2.0).unwrap();
        let (s, r) = suggest_exponents(&w, 2.0).unwrap();
        let cert = estimate_theta(&w, &aux, 2.0, s, r).unwrap();
        assert_eq!(cert.path, CertificatePath::WeaklySubadditive);
        let rep = check_diff_norm(&cert, &w, 2.0, 200, 8, 5).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn diff_norm_identity_and_deltas() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let w = weight(WeightSpec::Polynomial { beta: 2.0 }, m.clone());
        let aux = build_auxiliary(&w, 1.0).unwrap();
        let (s, r) = suggest_exponents(&w, 1.0).unwrap();
        let cert = estimate_theta(&w, &aux, 1.0, s, r).unwrap();
        // f = δ_n gives ω(2n)/ω(n)^{1+θ}
        for n in [0i64, 1, 5, 40] {
            let f = AlgebraElement::real(m.clone(), [(crate::groups::GroupElement::lattice(&[n]).unwrap(), 1.0)]).unwrap();
            let ff = convolve(&f, &f, 0.0).unwrap();
            let ratio = norm_p_omega(&ff, &w, 1.0).unwrap() / norm_p_omega(&f, &w, 1.0).unwrap().powf(1.0 + cert.theta);
            let expect = (1.0 + 2.0 * n as f64).powi(2) / (1.0 + n as f64).powf(2.0 * (1.0 + cert.theta));
            assert_relative_eq!(ratio, expect, max_relative = 1e-12);
            assert!(ratio <= cert.c);
        }
        let rep = check_diff_norm(&cert, &w, 1.0, 300, 6, 1).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.max_ratio <= cert.c);
    }

    #[test]
    fn probe_discriminates() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let poly = weight(WeightSpec::Polynomial { beta: 2.0 }, m.clone());
        let rep = necessary_condition_probe(&poly, &HolderCertificate::manual(0.3, 4.0).unwrap(), 10_000).unwrap();
        assert_eq!(rep.status, Status::Verified);
        let nu = weight(WeightSpec::SubexpLog { gamma: 1.0, c: 1.0 }, m.clone());
        let rep = necessary_condition_probe(&nu, &HolderCertificate::manual(0.5, 100.0).unwrap(), 100_000).unwrap();
        assert_eq!(rep.status, Status::Refuted);
        assert!(rep.first_failure.is_some());
        // close to 1 the crossing lies far beyond n_max; the limit decides
        let rep = necessary_condition_probe(&nu, &HolderCertificate::manual(0.95, 100.0).unwrap(), 10_000).unwrap();
        assert_eq!(rep.status, Status::Refuted);
        assert!(rep.first_failure.is_none());
        let mut boundary = HolderCertificate::manual(0.5, 4.0).unwrap();
        boundary.theta = 1.0;
        assert!(necessary_condition_probe(&poly, &boundary, 10).is_err());
        let z2 = Arc::new(GroupModel::lattice(2).unwrap());
        let cert = HolderCertificate::manual(0.5, 4.0).unwrap();
        assert!(necessary_condition_probe(&weight(WeightSpec::Polynomial { beta: 2.0 }, z2), &cert, 10).is_err());
    }

    #[test]
    fn random_elements_are_reproducible() {
        let m = Arc::new(GroupModel::heisenberg());
        let a = random_element(&m, 3, 10, CoefficientLaw::ComplexGaussian, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = random_element(&m, 3, 10, CoefficientLaw::ComplexGaussian, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.terms(), b.terms());
        assert!(a.support().all(|x| m.word_length(x).unwrap() <= 3));
    }
}

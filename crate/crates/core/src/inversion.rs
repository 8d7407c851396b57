//! Constructive inversion through the Neumann series of `c = e - a*a/‖a*a‖_B`
//! and the two norm-controlling bounds: the infinite product and its
//! asymptotic form.

use serde::{Serialize, Serializer};
use serde_json::json;

use crate::algebra::{
    convolve, convolve_capped, hermitian_interval, involute, norm_p_omega, AlgebraElement, NormInterval,
    SpectralOptions, DEFAULT_SUPPORT_CAP,
};
use crate::analysis::HolderCertificate;
use crate::error::{invalid, Error, Result};
use crate::weights::Weight;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_NEUMANN_TERMS: usize = 10_000;
pub const DEFAULT_TRUNC: f64 = 1e-15;
pub const DEFAULT_K_MAX: u32 = 12;
pub const DEFAULT_K_CUT: u32 = 64;

/// Hard limit on the number of product factors (`2^k` stays finite).
pub const PRODUCT_K_LIMIT: u32 = 1000;

/// Largest `k` used by [`dyadic_chain_check`] inside [`neumann_invert`].
pub const CHAIN_CHECK_K: u32 = 6;

/// Which constant multiplies the middle factor of the product bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductVariant {
    /// `C^{((1+θ)^k - 1)/θ}`, as in the statement.
    #[default]
    Stated,
    /// `(2C)^{((1+θ)^k - 1)/θ}`, as displayed inside the proof.
    Doubled,
}

/// Norm data entering the product bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundInputs {
    /// `‖a‖_A`
    pub a_a: f64,
    /// Certified lower end of `‖a‖_B`.
    pub a_b_lower: f64,
    /// Certified upper end of `‖a‖_B`.
    pub a_b_upper: f64,
    /// Certified upper end of `‖a⁻¹‖_B`.
    pub inv_b_upper: f64,
}

impl BoundInputs {
    /// Inputs with `‖a‖_B` known exactly.
    pub fn exact(a_a: f64, a_b: f64, inv_b: f64) -> Self {
        Self {
            a_a,
            a_b_lower: a_b,
            a_b_upper: a_b,
            inv_b_upper: inv_b,
        }
    }
}

/// Evaluated product bound, kept in log form.
#[derive(Clone, Debug, Serialize)]
pub struct ProductBound {
    /// `+∞` when the factors do not decay by `k_cut`.
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub ln_value: f64,
    pub k_cut: u32,
    /// Last factor multiplied: at least `k_cut`, more when the factors are
    /// still growing there.
    pub k_used: u32,
    /// `Σ_{k<=k_used} ln(1 + t_k)`
    pub ln_partial: f64,
    /// Bound on `Σ_{k>k_used} ln(1 + t_k)`.
    #[serde(serialize_with = "finite_or_null")]
    pub ln_tail: f64,
    /// Ratio bound `t_{k+1}/t_k` used for the tail.
    #[serde(serialize_with = "finite_or_null")]
    pub tail_ratio: f64,
    pub variant: ProductVariant,
    /// `max(C, 1)`, doubled for [`ProductVariant::Doubled`].
    pub c_used: f64,
    /// `‖a‖_B` ends after raising the lower end to `1/‖a⁻¹‖_B`.
    pub a_b_lower_used: f64,
    pub a_b_upper_used: f64,
    /// `1 - 1/(‖a‖_B² ‖a⁻¹‖_B²)` at the upper ends.
    pub v: f64,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// `ln(1 + e^x)` without overflow.
fn ln1p_exp(x: f64) -> f64 {
    if x > 36.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// The product bound
///
/// `‖a⁻¹‖_A <= ‖a‖_A/‖a‖_B² · Π_k (1 + (2‖a‖_A²/‖a‖_B²)^{(1+θ)^k} C^{((1+θ)^k-1)/θ} v^{2^k-(1+θ)^k})`
///
/// with `v = 1 - 1/(‖a‖_B²‖a⁻¹‖_B²)` and `0⁰ = 1`. When `‖a‖_A < ‖a‖_B`
/// (possible for `p > 1`) the base `2‖a‖_A²/‖a‖_B²` is replaced by
/// `1 + ‖a‖_A²/‖a‖_B²`. Factors are multiplied
/// in log space up to `k_cut`, and beyond it until `t_k < 1` and
/// consecutive terms shrink; the remainder is then bounded by a geometric series. The value
/// is `+∞` if that does not happen by [`PRODUCT_K_LIMIT`].
pub fn bound_product(
    inputs: &BoundInputs,
    cert: &HolderCertificate,
    k_cut: u32,
    variant: ProductVariant,
) -> Result<ProductBound> {
    let BoundInputs {
        a_a,
        a_b_lower,
        a_b_upper,
        inv_b_upper,
    } = *inputs;
    for (name, v) in [
        ("norm in A", a_a),
        ("lower end of the B norm", a_b_lower),
        ("upper end of the B norm", a_b_upper),
        ("B norm of the inverse", inv_b_upper),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if a_b_lower > a_b_upper {
        return Err(invalid(format!("B-norm interval is empty: [{a_b_lower}, {a_b_upper}]")));
    }
    let theta = cert.theta;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta must lie in (0,1), got {theta}")));
    }
    let lo = a_b_lower.max(1.0 / inv_b_upper);
    let up = a_b_upper;
    if lo > up * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "inconsistent norms: max(|a|_B lower, 1/|a^-1|_B) = {lo} exceeds the upper end of |a|_B = {up}"
        )));
    }
    let up = up.max(lo);
    let mut c = cert.c.max(1.0);
    if variant == ProductVariant::Doubled {
        c *= 2.0;
    }
    let ln_c = c.ln();
    let v = (1.0 - 1.0 / (up * up * inv_b_upper * inv_b_upper)).max(0.0);
    if v >= 1.0 {
        return Err(invalid(format!("v = {v} must be below 1")));
    }
    let ln_v = if v == 0.0 { f64::NEG_INFINITY } else { v.ln() };
    // |c|_A <= 1 + |a|_A^2/|a|_B^2, which is at most 2|a|_A^2/|a|_B^2 only
    // when |a|_B <= |a|_A; for p > 1 that can fail
    let r2 = a_a * a_a / (lo * lo);
    let x = if r2 >= 1.0 { (2.0 * r2).ln() } else { r2.ln_1p() };
    let ln_t = |k: u32| -> f64 {
        let g = (1.0 + theta).powi(k as i32);
        let e = 2f64.powi(k as i32) - g;
        let tv = if e == 0.0 { 0.0 } else { e * ln_v };
        g * x + (g - 1.0) / theta * ln_c + tv
    };
    // ln t_{k+1} - ln t_k = θ(1+θ)^k P + 2^k ln v; once negative it stays
    // negative and decreasing
    let pk = x + ln_c / theta - ln_v;
    let d = |k: u32| theta * (1.0 + theta).powi(k as i32) * pk + 2f64.powi(k as i32) * ln_v;
    let mut ln_partial = 0.0;
    let mut k = 0;
    loop {
        ln_partial += ln1p_exp(ln_t(k));
        let decaying = ln_v == f64::NEG_INFINITY || (d(k) < 0.0 && ln_t(k) < 0.0);
        if k >= k_cut && (decaying || k >= PRODUCT_K_LIMIT) {
            break;
        }
        k += 1;
    }
    let k_used = k;
    let (ln_tail, tail_ratio) = if ln_v == f64::NEG_INFINITY {
        (0.0, 0.0)
    } else if d(k_used) < 0.0 && ln_t(k_used) < 0.0 {
        let q = d(k_used).exp();
        ((ln_t(k_used) + d(k_used) - (-q).ln_1p()).exp(), q)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let ln_value = a_a.ln() - 2.0 * lo.ln() + ln_partial + ln_tail;
    Ok(ProductBound {
        value: ln_value.exp(),
        ln_value,
        k_cut,
        k_used,
        ln_partial,
        ln_tail,
        tail_ratio,
        variant,
        c_used: c,
        a_b_lower_used: lo,
        a_b_upper_used: up,
        v,
    })
}

/// Constants of the asymptotic bound and the intermediate chain value.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticBound {
    pub nu: f64,
    pub theta: f64,
    pub c_used: f64,
    /// `log₂(1 + θ)`
    pub gamma: f64,
    /// `1 - 1/ν²`
    pub v: f64,
    /// `2 C^{1/θ} / (v(1 - v))`
    pub u: f64,
    /// `(1 - γ) γ^{γ/(1-γ)}`
    pub c_tilde: f64,
    /// `log_{2/(1+θ)}(ln u / ln(1/v))`
    pub k0: f64,
    /// Maximiser of `(1+θ)^k ln u + 2^k ln v`.
    pub k_m: f64,
    /// `⌊k₀⌋`
    pub n_split: u64,
    /// `ln` of `‖a‖_A ‖a⁻¹‖_B² (1 + C^{-1/θ} e^F)^{N+1} e^{1/(1-8^{-(1-θ)})}`.
    pub ln_chain: f64,
    /// Constant bounding `ln u / ln(1/v)` by `Ĉ ν² ln ν` for `ν >= 2`.
    pub c_hat: f64,
    /// `e^{1/(1-8^{-(1-θ)})}`
    pub c1: f64,
    pub c2: f64,
    /// `ln(C₁ ‖a‖_A ‖a⁻¹‖_B² exp(C₂ ν^{2γ/(1-γ)} (ln ν)^{(2-γ)/(1-γ)}))`
    pub ln_value: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
}

/// Result of [`asymptotic_bound`].
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Asymptotic {
    /// `ν < 2`
    NotApplicable { nu: f64 },
    Bound(AsymptoticBound),
}

impl Asymptotic {
    pub fn bound(&self) -> Option<&AsymptoticBound> {
        match self {
            Asymptotic::Bound(b) => Some(b),
            Asymptotic::NotApplicable { .. } => None,
        }
    }
}

/// `C₁ ‖a‖_A ‖a⁻¹‖_B² exp(C₂ ν^{2γ/(1-γ)} (ln ν)^{(2-γ)/(1-γ)})` for
/// `ν = ‖a‖_A ‖a⁻¹‖_B >= 2`, with explicit constants.
///
/// The intermediate value `ln_chain` (finite part bounded factor by factor
/// at the maximiser, infinite part by a geometric series) lies between the
/// product bound and the closed form.
pub fn asymptotic_bound(nu: f64, a_a: f64, inv_b: f64, cert: &HolderCertificate) -> Result<Asymptotic> {
    if !(nu > 0.0 && nu.is_finite() && a_a > 0.0 && inv_b > 0.0) {
        return Err(invalid(format!("norms must be positive: nu = {nu}, |a|_A = {a_a}, |a^-1|_B = {inv_b}")));
    }
    if nu < 2.0 {
        return Ok(Asymptotic::NotApplicable { nu });
    }
    let theta = cert.theta;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta must lie in (0,1), got {theta}")));
    }
    let c = cert.c.max(1.0);
    let ln2 = std::f64::consts::LN_2;
    let gamma = (1.0 + theta).log2();
    let e1 = 1.0 / (1.0 - gamma);
    let base = (2.0 / (1.0 + theta)).ln();

    let nu2 = nu * nu;
    let v = 1.0 - 1.0 / nu2;
    // ln(1/v) = ln(1 + 1/(ν² - 1))
    let l = (1.0 / (nu2 - 1.0)).ln_1p();
    let ln_u = ln2 + c.ln() / theta - v.ln() + nu2.ln();
    let r = ln_u / l;
    let c_tilde = (1.0 - gamma) * gamma.powf(gamma * e1);
    let f = c_tilde * r.powf(e1) * l;
    let k0 = r.ln() / base;
    let k_m = (gamma * r).ln() / base;
    let n_split = k0.floor().max(0.0);
    let c_inv = -c.ln() / theta;
    let tail_const = 1.0 / (1.0 - 8f64.powf(-(1.0 - theta)));
    let ln_pref = a_a.ln() + 2.0 * inv_b.ln();
    let ln_chain = ln_pref + (n_split + 1.0) * ln1p_exp(c_inv + f) + tail_const;

    let c_hat = 1.0 / (4.0 * ln2) + 1.0 + c.ln() / (theta * ln2) + 2.0;
    let k = (c_hat.ln() / ln2 + 3.0) / base + 1.0 / ln2;
    let c2 = k * (4.0 * c_tilde / 3.0) * c_hat.powf(e1) + k * ln2.powf(1.0 - e1);
    let c1 = tail_const.exp();
    let ln_nu = nu.ln();
    let ln_value = tail_const + ln_pref + c2 * nu.powf(2.0 * gamma * e1) * ln_nu.powf((2.0 - gamma) * e1);
    Ok(Asymptotic::Bound(AsymptoticBound {
        nu,
        theta,
        c_used: c,
        gamma,
        v,
        u: ln_u.exp(),
        c_tilde,
        k0,
        k_m,
        n_split: n_split as u64,
        ln_chain,
        c_hat,
        c1,
        c2,
        ln_value,
        value: ln_value.exp(),
    }))
}

/// `‖a x - δ_e‖₁` and `‖x a - δ_e‖₁`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    pub left: f64,
    pub right: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

pub fn verify_inverse(a: &AlgebraElement, x: &AlgebraElement) -> Result<Residuals> {
    let e = AlgebraElement::unit(a.model().clone());
    let left = convolve(a, x, 0.0)?.sub(&e)?.l1();
    let right = convolve(x, a, 0.0)?.sub(&e)?.l1();
    Ok(Residuals { left, right })
}

/// One step of the dyadic power chain.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChainStep {
    pub k: u32,
    /// `‖c^(2^k)‖_A`
    pub norm: f64,
    /// `‖c‖_A^{(1+θ)^k} C^{((1+θ)^k-1)/θ} ‖c‖_B^{2^k-(1+θ)^k}`
    pub bound: f64,
    pub holds: bool,
}

/// Checks `‖c^(2^k)‖_A <= ‖c‖_A^{(1+θ)^k} C^{((1+θ)^k-1)/θ} ‖c‖_B^{2^k-(1+θ)^k}`
/// for `k = 0..=k_max`, with `c_b_upper` a certified upper bound of `‖c‖_B`.
pub fn dyadic_chain_check(
    c: &AlgebraElement,
    w: &Weight,
    p: f64,
    cert: &HolderCertificate,
    c_b_upper: f64,
    k_max: u32,
    opts: &SpectralOptions,
) -> Result<Vec<ChainStep>> {
    let theta = cert.theta;
    let ln_c = cert.c.max(1.0).ln();
    let c_a = norm_p_omega(c, w, p)?;
    let mut out = Vec::new();
    let mut g = c.clone();
    for k in 0..=k_max {
        if k > 0 {
            g = match convolve_capped(&g, &g, opts.trunc, opts.cap) {
                Ok(sq) => sq,
                Err(Error::SupportCap { .. } | Error::WorkCap { .. }) => break,
                Err(e) => return Err(e),
            };
        }
        let gk = (1.0 + theta).powi(k as i32);
        let e = 2f64.powi(k as i32) - gk;
        let ln_b = if e == 0.0 { 0.0 } else { e * c_b_upper.ln() };
        let bound = (gk * c_a.ln() + (gk - 1.0) / theta * ln_c + ln_b).exp();
        let norm = norm_p_omega(&g, w, p)?;
        let holds = norm <= bound * (1.0 + 1e-9) + 1e-12;
        out.push(ChainStep { k, norm, bound, holds });
    }
    Ok(out)
}

/// Numerical settings for [`neumann_invert`].
#[derive(Clone, Copy, Debug)]
pub struct InversionOptions {
    /// Stop once `‖c^n‖₁ < tol`.
    pub tol: f64,
    pub n_max: usize,
    /// Coefficient truncation for the Neumann terms and spectral powers.
    pub trunc: f64,
    /// Squarings used for the `B`-norm intervals.
    pub k_max: u32,
    pub k_cut: u32,
    pub cap: usize,
    pub variant: ProductVariant,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            n_max: DEFAULT_NEUMANN_TERMS,
            trunc: DEFAULT_TRUNC,
            k_max: DEFAULT_K_MAX,
            k_cut: DEFAULT_K_CUT,
            cap: DEFAULT_SUPPORT_CAP,
            variant: ProductVariant::Stated,
        }
    }
}

fn serialize_element<S: Serializer>(x: &AlgebraElement, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.to_records().serialize(s)
}

/// Everything produced by one inversion.
#[derive(Clone, Debug, Serialize)]
pub struct InversionReport {
    pub weight: String,
    pub p: f64,
    pub theta: f64,
    pub c: f64,
    #[serde(serialize_with = "serialize_element")]
    pub inverse: AlgebraElement,
    pub inverse_support: usize,
    /// `ℓ¹` budget carried by the computed inverse.
    pub inverse_eps: f64,
    /// `‖a‖_A`
    pub a_norm_a: f64,
    pub a_norm_b: NormInterval,
    /// Certified interval for `‖a⁻¹‖_B`.
    pub inv_norm_b: [f64; 2],
    /// `‖a‖_A · upper end of ‖a⁻¹‖_B`
    pub nu: f64,
    /// Upper end of `‖a*a‖_B` used to normalise.
    pub h_norm_upper: f64,
    /// `‖c‖_B` bounded from `c` itself.
    pub c_norm_b: [f64; 2],
    /// `1 - 1/(‖a⁻¹‖_B² ‖a‖_B²)` evaluated on the interval ends.
    pub c_norm_b_formula: [f64; 2],
    /// Which route certified `‖c‖_B < 1`.
    pub certified_by: String,
    pub product: ProductBound,
    pub asymptotic: Asymptotic,
    /// `‖a⁻¹‖_{p,ω}` of the computed inverse.
    pub actual: f64,
    pub terms: usize,
    /// `‖c^n‖₁` for `n = 1..=terms`; also the residual of the `n`-th partial
    /// sum as an inverse of `e - c`.
    pub term_norms: Vec<f64>,
    pub residual: Residuals,
    pub chain: Vec<ChainStep>,
}

impl InversionReport {
    /// `actual <= product` and, when it applies, `product <= chain <= asymptotic`.
    pub fn ordering_holds(&self, slack: f64) -> bool {
        let ok = self.actual <= self.product.value * (1.0 + slack) + slack;
        match self.asymptotic.bound() {
            Some(b) => ok && self.product.ln_value <= b.ln_chain + slack && b.ln_chain <= b.ln_value + slack,
            None => ok,
        }
    }
}

/// Inverts `a` through `a⁻¹ = (Σ cⁿ) a* / U` with `c = e - a*a/U` and `U`
/// a certified upper bound of `‖a*a‖_B`.
pub fn neumann_invert(
    a: &AlgebraElement,
    cert: &HolderCertificate,
    w: &Weight,
    p: f64,
    opts: &InversionOptions,
) -> Result<InversionReport> {
    if !(opts.tol > 0.0) || opts.n_max == 0 || opts.k_max == 0 || !(opts.trunc >= 0.0) {
        return Err(invalid("tol, n_max and k_max must be positive and trunc nonnegative"));
    }
    if w.model().family() != a.model().family() {
        return Err(Error::FamilyMismatch {
            left: a.model().family().to_string(),
            right: w.model().family().to_string(),
        });
    }
    let model = a.model().clone();
    let sopts = SpectralOptions {
        trunc: opts.trunc,
        cap: opts.cap,
    };
    let e = AlgebraElement::unit(model.clone());
    let a_star = involute(a);
    let h = convolve_capped(&a_star, a, 0.0, opts.cap)?;
    let hi = hermitian_interval(&h, opts.k_max, &sopts)?;
    let u_h = hi.upper;
    if !(u_h > 0.0) {
        return Err(Error::NotInvertible {
            reason: "a is zero".into(),
            diagnostics: json!({ "h_norm_upper": u_h }),
        });
    }
    let hs = h.add(&involute(&h))?.scale_real(0.5);
    let c = e.sub(&hs.scale_real(1.0 / u_h))?;
    let c_l1 = c.l1() + c.eps();
    let ci = hermitian_interval(&c, opts.k_max, &sopts)?;
    let (c_up, certified_by) = if c_l1 <= ci.upper {
        (c_l1, "l1")
    } else {
        (ci.upper, "hermitian_powers")
    };
    let c_lo = ci.lower.min(c_up);
    if !(c_up < 1.0) {
        return Err(Error::NotInvertible {
            reason: "no norm route certifies |c|_B < 1".into(),
            diagnostics: json!({
                "h_norm_upper": u_h,
                "c_l1": c_l1,
                "c_norm_b": [ci.lower, ci.upper],
                "k_reached": ci.k_reached,
            }),
        });
    }

    // Neumann series of b = e - c
    let mut sum = e.clone();
    let mut term = e.clone();
    let mut term_norms = Vec::new();
    let mut converged = c.is_empty();
    while !converged && term_norms.len() < opts.n_max {
        term = convolve_capped(&term, &c, opts.trunc, opts.cap)?;
        let t = term.l1();
        term_norms.push(t);
        sum = sum.add(&term)?;
        converged = t < opts.tol;
    }
    let x = convolve_capped(&sum, &a_star, opts.trunc, opts.cap)?.scale_real(1.0 / u_h);
    let residual = verify_inverse(a, &x)?;
    if !converged {
        let last = *term_norms.last().unwrap_or(&f64::NAN);
        return Err(Error::NotConverged {
            terms: term_norms.len(),
            last_term: last,
            residual: residual.max(),
            diagnostics: json!({
                "c_norm_b": [c_lo, c_up],
                "h_norm_upper": u_h,
                "tol": opts.tol,
            }),
        });
    }

    let a_norm_a = norm_p_omega(a, w, p)?;
    let b_lower = (a.l2() - a.eps()).max(0.0).max(hi.lower.sqrt());
    let a_norm_b = NormInterval {
        lower: b_lower,
        // rounding can put the two ends an ulp apart the wrong way
        upper: (a.l1() + a.eps()).min(hi.upper.sqrt()).max(b_lower),
        method: "hermitian_powers".into(),
        k_reached: hi.k_reached,
        stopped: hi.stopped.clone(),
        lower_sequence: hi.lower_sequence.iter().map(|v| v.sqrt()).collect(),
        upper_sequence: hi.upper_sequence.iter().map(|v| v.sqrt()).collect(),
    };
    // c >= 0, so λ_min(a*a) = U (1 - ‖c‖_B)
    let inv_up = 1.0 / (u_h * (1.0 - c_up)).sqrt();
    let inv_lo = (1.0 / (u_h * (1.0 - c_lo)).sqrt()).max(1.0 / a_norm_b.upper).min(inv_up);
    let formula = |ab: f64, inv: f64| 1.0 - 1.0 / (ab * ab * inv * inv);
    let c_norm_b_formula = [
        formula(a_norm_b.lower, inv_lo).max(0.0),
        formula(a_norm_b.upper, inv_up).max(0.0),
    ];
    let nu = a_norm_a * inv_up;
    let product = bound_product(
        &BoundInputs {
            a_a: a_norm_a,
            a_b_lower: a_norm_b.lower,
            a_b_upper: a_norm_b.upper,
            inv_b_upper: inv_up,
        },
        cert,
        opts.k_cut,
        opts.variant,
    )?;
    let asymptotic = asymptotic_bound(nu, a_norm_a, inv_up, cert)?;
    let chain = dyadic_chain_check(&c, w, p, cert, c_up, CHAIN_CHECK_K, &sopts)?;
    let actual = norm_p_omega(&x, w, p)?;
    Ok(InversionReport {
        weight: w.spec().to_string(),
        p,
        theta: cert.theta,
        c: cert.c,
        inverse_support: x.len(),
        inverse_eps: x.eps(),
        inverse: x,
        a_norm_a,
        a_norm_b,
        inv_norm_b: [inv_lo, inv_up],
        nu,
        h_norm_upper: u_h,
        c_norm_b: [c_lo, c_up],
        c_norm_b_formula,
        certified_by: certified_by.into(),
        product,
        asymptotic,
        actual,
        terms: term_norms.len(),
        term_norms,
        residual,
        chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupModel;
    use crate::weights::WeightSpec;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn real_element(m: &Arc<GroupModel>, terms: &[(&[i64], f64)]) -> Result<AlgebraElement> {
        let mut v = Vec::new();
        for (x, c) in terms {
            v.push((m.decode(x)?, *c));
        }
        AlgebraElement::real(m.clone(), v)
    }

    fn cert(theta: f64, c: f64) -> HolderCertificate {
        HolderCertificate::manual(theta, c).unwrap()
    }

    #[test]
    fn product_degenerate_examples() {
        let b = bound_product(&BoundInputs::exact(1.0, 1.0, 1.0), &cert(0.5, 1.0), 64, ProductVariant::Stated).unwrap();
        assert_relative_eq!(b.value, 3.0, max_relative = 1e-14);
        let b = bound_product(&BoundInputs::exact(2.0, 1.0, 1.0), &cert(0.5, 1.0), 64, ProductVariant::Stated).unwrap();
        assert_relative_eq!(b.value, 18.0, max_relative = 1e-14);
        // C below 1 is clamped
        let b2 = bound_product(&BoundInputs::exact(2.0, 1.0, 1.0), &cert(0.5, 0.3), 64, ProductVariant::Stated).unwrap();
        assert_eq!(b.value, b2.value);
        // |a|_A below |a|_B: t_0 = 1 + 0.25
        let b = bound_product(&BoundInputs::exact(0.5, 1.0, 1.0), &cert(0.5, 1.0), 64, ProductVariant::Stated).unwrap();
        assert_relative_eq!(b.value, 0.5 * 2.25, max_relative = 1e-14);
    }

    #[test]
    fn product_rejects_bad_inputs() {
        let c = cert(0.5, 1.0);
        let bad = BoundInputs {
            a_a: 2.0,
            a_b_lower: 1.5,
            a_b_upper: 1.0,
            inv_b_upper: 1.0,
        };
        assert!(bound_product(&bad, &c, 64, ProductVariant::Stated).is_err());
        assert!(bound_product(&BoundInputs::exact(2.0, 0.0, 1.0), &c, 64, ProductVariant::Stated).is_err());
    }

    #[test]
    fn product_monotone() {
        let c = cert(0.4, 3.0);
        let at = |a_a: f64, inv: f64| {
            bound_product(&BoundInputs::exact(a_a, 1.0, inv), &c, 64, ProductVariant::Stated)
                .unwrap()
                .ln_value
        };
        let mut prev = f64::NEG_INFINITY;
        for inv in [1.0, 1.1, 1.5, 2.0, 3.0, 5.0] {
            let v = at(2.0, inv);
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = f64::NEG_INFINITY;
        for a_a in [1.0, 1.2, 2.0, 4.0, 9.0] {
            let v = at(a_a, 2.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn product_tail_is_negligible_when_far() {
        let c = cert(0.5, 2.0);
        let b = bound_product(&BoundInputs::exact(3.0, 1.0, 2.0), &c, 64, ProductVariant::Stated).unwrap();
        assert!(b.ln_tail.is_finite() && b.ln_tail < 1e-100);
        let d = bound_product(&BoundInputs::exact(3.0, 1.0, 2.0), &c, 64, ProductVariant::Doubled).unwrap();
        assert!(d.ln_value > b.ln_value);
        // a short cut is extended until the ratio test applies
        let short = bound_product(&BoundInputs::exact(3.0, 1.0, 2.0), &c, 2, ProductVariant::Stated).unwrap();
        assert!(short.k_used > 2 && short.value.is_finite());
        assert!((short.ln_value - b.ln_value).abs() < 1e-9 * b.ln_value);
    }

    #[test]
    fn asymptotic_examples() {
        let c = cert(0.5, 1.0);
        assert!(matches!(asymptotic_bound(1.9, 1.9, 1.0, &c).unwrap(), Asymptotic::NotApplicable { .. }));
        let a2 = asymptotic_bound(2.0, 2.0, 1.0, &c).unwrap();
        let b2 = a2.bound().unwrap();
        assert!(b2.value.is_finite() && b2.value > 0.0);
        let p = bound_product(&BoundInputs::exact(2.0, 1.0, 1.0), &c, 64, ProductVariant::Stated).unwrap();
        assert!(p.ln_value <= b2.ln_chain && b2.ln_chain <= b2.ln_value);
        let a4 = asymptotic_bound(4.0, 4.0, 1.0, &c).unwrap();
        assert!(a4.bound().unwrap().ln_value > b2.ln_value);
        assert_relative_eq!(b2.gamma, 1.5f64.log2(), max_relative = 1e-15);
    }

    #[test]
    fn ordering_over_parameter_grid() {
        for theta in [0.05, 0.3, 0.6, 0.95] {
            for cc in [1.0, 2.5, 40.0] {
                let c = cert(theta, cc);
                for a_a in [1.0f64, 1.5, 4.0, 20.0] {
                    for inv in [0.5, 1.0, 2.0, 7.0] {
                        let a_b = (0.8 * a_a).max(1.0 / inv);
                        let nu = a_a * inv;
                        if nu < 2.0 || a_b > a_a {
                            continue;
                        }
                        let p = bound_product(&BoundInputs::exact(a_a, a_b, inv), &c, 64, ProductVariant::Stated).unwrap();
                        let b = asymptotic_bound(nu, a_a, inv, &c).unwrap();
                        let b = b.bound().unwrap();
                        assert!(p.ln_value <= b.ln_chain + 1e-9, "theta {theta} C {cc} a {a_a} inv {inv}");
                        assert!(b.ln_chain <= b.ln_value + 1e-9, "theta {theta} C {cc} a {a_a} inv {inv}");
                    }
                }
            }
        }
    }

    #[test]
    fn verify_inverse_examples() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let e = AlgebraElement::unit(m.clone());
        assert_eq!(verify_inverse(&e, &e).unwrap().max(), 0.0);
        let a = real_element(&m, &[(&[0], 1.0), (&[1], -0.5)]).unwrap();
        let r = verify_inverse(&a, &e).unwrap();
        assert_relative_eq!(r.left, 0.5);
        assert_relative_eq!(r.right, 0.5);
    }

    #[test]
    fn invert_unit_and_geometric() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let w = Weight::new(WeightSpec::Polynomial { beta: 2.0 }, m.clone()).unwrap();
        let c = cert(0.6, 5.0);
        let e = AlgebraElement::unit(m.clone());
        let rep = neumann_invert(&e, &c, &w, 1.0, &InversionOptions::default()).unwrap();
        assert_eq!(rep.inverse.terms(), e.terms());
        assert_eq!(rep.residual.max(), 0.0);
        assert_eq!(rep.terms, 0);

        let a = real_element(&m, &[(&[0], 1.0), (&[1], -0.5)]).unwrap();
        let rep = neumann_invert(&a, &c, &w, 1.0, &InversionOptions::default()).unwrap();
        assert!(rep.residual.max() < 1e-10);
        assert_relative_eq!(rep.actual, 12.0, max_relative = 1e-9);
        assert!(rep.ordering_holds(1e-9));
        assert!(rep.chain.iter().all(|s| s.holds));
        // ‖a⁻¹‖_B = 2 (the symbol 1 - e^{it}/2 has minimum modulus 1/2)
        assert!(rep.inv_norm_b[0] <= 2.0 + 1e-9 && 2.0 <= rep.inv_norm_b[1] + 1e-9);
    }

    #[test]
    fn invert_refuses_boundary_element() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let w = Weight::new(WeightSpec::Polynomial { beta: 1.0 }, m.clone()).unwrap();
        let a = real_element(&m, &[(&[0], 1.0), (&[1], -1.0)]).unwrap();
        let err = neumann_invert(&a, &cert(0.5, 2.0), &w, 1.0, &InversionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotInvertible { .. }));
    }

    #[test]
    fn not_converged_is_reported() {
        let m = Arc::new(GroupModel::lattice(1).unwrap());
        let w = Weight::new(WeightSpec::Polynomial { beta: 1.0 }, m.clone()).unwrap();
        let a = real_element(&m, &[(&[0], 1.0), (&[1], -0.5)]).unwrap();
        let opts = InversionOptions {
            n_max: 5,
            ..Default::default()
        };
        let err = neumann_invert(&a, &cert(0.5, 2.0), &w, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::NotConverged { terms: 5, .. }));
    }
}
